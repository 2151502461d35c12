#pragma once

// Step-time economics of speculative decoding: the analytic expected-speedup
// formula and a table-driven per-step cost used by the simulator.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdperf/error.hpp"

namespace sdperf {

struct AnalyticParams {
  double alpha = 0.0;  // per-token acceptance rate
  int k = 1;           // proposed length
  double c = 0.0;      // draft / target forward-pass time ratio
};

// sum_{i=0..k} alpha^i / (k c + 1). Equal to (1 - alpha^{k+1}) / ((1 - alpha)(k c + 1))
// for alpha < 1 and finite at alpha = 1.
inline double expected_speedup(const AnalyticParams& p) {
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (p.k < 1) throw ValidationError("k must be >= 1");
  if (!(p.c >= 0.0)) throw ValidationError("c must be non-negative");
  double sum = 0.0;
  double term = 1.0;
  for (int i = 0; i <= p.k; ++i) {
    sum += term;
    term *= p.alpha;
  }
  return sum / (p.k * p.c + 1.0);
}

enum class Regime { memory_bound, compute_bound };

inline const char* to_string(Regime r) {
  return r == Regime::memory_bound ? "memory_bound" : "compute_bound";
}

// One profiled batch size. Target forward time for v verified tokens is
//   memory_bound:  time_s                       (independent of v)
//   compute_bound: time_s + time_per_token_s * v
struct CostPoint {
  int batch = 1;
  double time_s = 0.0;
  double time_per_token_s = 0.0;
};

class CostModel {
 public:
  static constexpr double kDefaultOverhead = 0.08;

  // Dimensionless memory-bound model: T = 1 at every batch size.
  CostModel() : CostModel(Regime::memory_bound, {{1, 1.0, 0.0}}, 0.0, kDefaultOverhead) {}

  CostModel(Regime mode, std::vector<CostPoint> table, double c, double overhead_fraction)
      : mode_(mode), table_(std::move(table)), c_(c), overhead_(overhead_fraction) {
    if (table_.empty()) throw ConfigError("cost model: empty table");
    if (!(c_ >= 0.0)) throw ConfigError("cost model: c must be non-negative");
    if (!(overhead_ >= 0.0)) throw ConfigError("cost model: overhead_fraction must be non-negative");
    for (std::size_t i = 0; i < table_.size(); ++i) {
      const auto& p = table_[i];
      if (p.batch < 1) throw ConfigError("cost model: batch sizes must be positive");
      if (i > 0 && p.batch <= table_[i - 1].batch) {
        throw ConfigError("cost model: table batch sizes must be strictly increasing");
      }
      if (mode_ == Regime::memory_bound) {
        if (!(p.time_s > 0.0)) throw ConfigError("cost model: times must be strictly positive");
        if (p.time_per_token_s != 0.0) {
          throw ConfigError("cost model: memory_bound entries cannot carry a per-token slope");
        }
      } else {
        if (!(p.time_s >= 0.0) || !(p.time_per_token_s >= 0.0) ||
            !(p.time_s + p.time_per_token_s > 0.0)) {
          throw ConfigError("cost model: compute_bound entries need non-negative parts and a positive T(1)");
        }
      }
    }
  }

  static CostModel memory_bound(double step_time_s, double c, double overhead_fraction) {
    return CostModel(Regime::memory_bound, {{1, step_time_s, 0.0}}, c, overhead_fraction);
  }

  Regime mode() const { return mode_; }
  const std::vector<CostPoint>& table() const { return table_; }
  double c() const { return c_; }
  double overhead_fraction() const { return overhead_; }

  CostModel with_c(double c) const { return CostModel(mode_, table_, c, overhead_); }
  CostModel with_overhead(double o) const { return CostModel(mode_, table_, c_, o); }

  // Target forward time for `verified` tokens at `batch`, piecewise-linear in
  // batch between table rows and clamped outside them.
  double target_step_time(int batch, int verified) const {
    if (batch < 1) throw ValidationError("batch must be >= 1");
    if (verified < 1) throw ValidationError("verified must be >= 1");
    if (batch <= table_.front().batch) return at(table_.front(), verified);
    if (batch >= table_.back().batch) return at(table_.back(), verified);
    auto hi = std::upper_bound(table_.begin(), table_.end(), batch,
                               [](int b, const CostPoint& p) { return b < p.batch; });
    auto lo = hi - 1;
    if (lo->batch == batch) return at(*lo, verified);
    const double w = static_cast<double>(batch - lo->batch) / static_cast<double>(hi->batch - lo->batch);
    return (1.0 - w) * at(*lo, verified) + w * at(*hi, verified);
  }

  double unit_time(int batch) const { return target_step_time(batch, 1); }

  // Drafting plus verification, before overhead.
  double raw_step_time(int batch, int drafted, int verified, double c) const {
    if (drafted < 0) throw ValidationError("drafted must be >= 0");
    return static_cast<double>(drafted) * c * unit_time(batch) + target_step_time(batch, verified);
  }

  double raw_step_time(int batch, int drafted, int verified) const {
    return raw_step_time(batch, drafted, verified, c_);
  }

 private:
  double at(const CostPoint& p, int verified) const {
    if (mode_ == Regime::memory_bound) return p.time_s;
    return p.time_s + p.time_per_token_s * static_cast<double>(verified);
  }

  Regime mode_;
  std::vector<CostPoint> table_;
  double c_;
  double overhead_;
};

inline double step_time(const CostModel& model, int batch, int drafted, int verified) {
  return (1.0 + model.overhead_fraction()) * model.raw_step_time(batch, drafted, verified);
}

// JSON config:
//   {"mode": "memory_bound"|"compute_bound", "c": 0.1, "overhead_fraction": 0.08,
//    "table": [{"batch": 1, "time_s": 0.012}, {"batch": 8, "time_per_token_s": 0.002}, ...]}
// For memory_bound rows time_per_token_s is accepted as a synonym of time_s,
// since a baseline step yields exactly one token.
namespace detail {

inline CostModel parse_cost_model_impl(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("cost model: expected a JSON object");
  Regime mode = Regime::memory_bound;
  if (auto it = doc.find("mode"); it != doc.end()) {
    const auto s = it->get<std::string>();
    if (s == "memory_bound") mode = Regime::memory_bound;
    else if (s == "compute_bound") mode = Regime::compute_bound;
    else throw ConfigError("cost model: unknown mode '" + s + "'");
  }
  const double c = doc.value("c", 0.0);
  const double overhead = doc.value("overhead_fraction", CostModel::kDefaultOverhead);
  auto it = doc.find("table");
  if (it == doc.end() || !it->is_array()) throw ConfigError("cost model: missing 'table' array");
  std::vector<CostPoint> table;
  for (const auto& row : *it) {
    if (!row.is_object() || !row.contains("batch")) throw ConfigError("cost model: table rows need 'batch'");
    CostPoint p;
    p.batch = row.at("batch").get<int>();
    const bool has_t = row.contains("time_s");
    const bool has_tpt = row.contains("time_per_token_s");
    if (!has_t && !has_tpt) throw ConfigError("cost model: table row needs time_s or time_per_token_s");
    if (mode == Regime::memory_bound) {
      if (has_t && has_tpt) throw ConfigError("cost model: memory_bound row has both time fields");
      p.time_s = has_t ? row.at("time_s").get<double>() : row.at("time_per_token_s").get<double>();
    } else {
      p.time_s = row.value("time_s", 0.0);
      p.time_per_token_s = row.value("time_per_token_s", 0.0);
    }
    table.push_back(p);
  }
  return CostModel(mode, std::move(table), c, overhead);
}

}  // namespace detail

inline CostModel parse_cost_model(const nlohmann::json& doc) {
  try {
    return detail::parse_cost_model_impl(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cost model: ") + e.what());
  }
}

inline CostModel load_cost_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cost model '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, "cost model '" + path + "': " + e.what());
  }
  return parse_cost_model(doc);
}

inline nlohmann::ordered_json to_json(const CostModel& m) {
  nlohmann::ordered_json doc;
  doc["mode"] = to_string(m.mode());
  doc["c"] = m.c();
  doc["overhead_fraction"] = m.overhead_fraction();
  doc["table"] = nlohmann::ordered_json::array();
  for (const auto& p : m.table()) {
    nlohmann::ordered_json row;
    row["batch"] = p.batch;
    row["time_s"] = p.time_s;
    if (m.mode() == Regime::compute_bound) row["time_per_token_s"] = p.time_per_token_s;
    doc["table"].push_back(row);
  }
  return doc;
}

}  // namespace sdperf
