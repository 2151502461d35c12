#pragma once

// Long-format tables behind the oracle-gap and speedup-vs-k figures, one
// observation per row.

#include <optional>
#include <string>
#include <vector>

#include "sdperf/sim.hpp"

namespace sdperf {

// policy,k,batch,speedup,throughput,acceptance_ratio; k empty for non-fixed policies.
inline std::string speedup_long_csv(const SweepResult& s) {
  std::string out = "policy,k,batch,speedup,throughput,acceptance_ratio\n";
  for (const auto& a : s.aggregates) {
    std::string k;
    if (a.policy.rfind("fixed:", 0) == 0) k = a.policy.substr(6);
    out += a.policy + "," + k + "," + std::to_string(a.batch) + "," + format_double(a.speedup) + "," +
           format_double(a.throughput) + "," + format_double(a.acceptance_ratio) + "\n";
  }
  return out;
}

struct OracleGapRow {
  int batch = 1;
  std::string fixed_policy;
  double oracle_speedup = 0.0;
  double fixed_speedup = 0.0;
  double gap = 0.0;  // oracle - fixed
};

// One row per (batch, fixed-k policy), plus a "best" row per batch for the
// fastest fixed k. Empty when the sweep lacks an oracle or any fixed policy.
inline std::vector<OracleGapRow> oracle_gap_rows(const SweepResult& s) {
  std::vector<OracleGapRow> rows;
  std::vector<int> batches;
  for (const auto& a : s.aggregates) {
    if (std::find(batches.begin(), batches.end(), a.batch) == batches.end()) batches.push_back(a.batch);
  }
  for (int batch : batches) {
    std::optional<double> oracle;
    for (const auto& a : s.aggregates) {
      if (a.batch == batch && a.policy == "oracle") oracle = a.speedup;
    }
    if (!oracle) continue;
    std::optional<OracleGapRow> best;
    for (const auto& a : s.aggregates) {
      if (a.batch != batch || a.policy.rfind("fixed:", 0) != 0) continue;
      OracleGapRow row{batch, a.policy, *oracle, a.speedup, *oracle - a.speedup};
      if (!best || row.fixed_speedup > best->fixed_speedup) best = row;
      rows.push_back(row);
    }
    if (best) {
      best->fixed_policy = "best(" + best->fixed_policy + ")";
      rows.push_back(*best);
    }
  }
  return rows;
}

inline std::string oracle_gap_csv(const std::vector<OracleGapRow>& rows) {
  std::string out = "batch,fixed_policy,oracle_speedup,fixed_speedup,gap\n";
  for (const auto& r : rows) {
    out += std::to_string(r.batch) + "," + r.fixed_policy + "," + format_double(r.oracle_speedup) + "," +
           format_double(r.fixed_speedup) + "," + format_double(r.gap) + "\n";
  }
  return out;
}

}  // namespace sdperf
