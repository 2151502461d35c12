#pragma once

// Acceptance traces: data model, JSONL format, synthetic generators and
// position/request/dataset statistics.
//
// A trace stores, for every output position i of one request, m_i: the largest
// number of drafted tokens the target would accept at that position. The bonus
// token is not included, so the generated length at i is g_i = m_i + 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdperf/error.hpp"
#include "sdperf/random.hpp"

namespace sdperf {

inline constexpr int kDefaultProposalCap = 20;

struct AcceptanceTrace {
  std::string request_id;
  std::string dataset;
  std::string method;
  std::string model;
  std::vector<int> positions;

  std::size_t length() const { return positions.size(); }
  int generated_at(std::size_t i) const { return positions[i] + 1; }

  friend bool operator==(const AcceptanceTrace&, const AcceptanceTrace&) = default;
};

// Throws ValidationError naming the request and offending position.
inline void validate_trace(const AcceptanceTrace& t, int proposal_cap) {
  if (t.positions.empty()) {
    throw ValidationError("request '" + t.request_id + "': positions is empty");
  }
  for (std::size_t i = 0; i < t.positions.size(); ++i) {
    const int m = t.positions[i];
    if (m < 0 || m > proposal_cap) {
      throw ValidationError("request '" + t.request_id + "' position " + std::to_string(i) +
                            ": value " + std::to_string(m) + " outside [0, " +
                            std::to_string(proposal_cap) + "]");
    }
  }
}

class TraceSet {
 public:
  TraceSet() = default;

  explicit TraceSet(std::vector<AcceptanceTrace> traces, int proposal_cap = kDefaultProposalCap)
      : traces_(std::move(traces)), proposal_cap_(proposal_cap) {
    if (proposal_cap_ < 1) {
      throw ValidationError("proposal_cap must be positive, got " + std::to_string(proposal_cap_));
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& t : traces_) {
      validate_trace(t, proposal_cap_);
      if (!seen.emplace(t.request_id, t.method).second) {
        throw ValidationError("duplicate (request_id, method): ('" + t.request_id + "', '" +
                              t.method + "')");
      }
    }
  }

  const std::vector<AcceptanceTrace>& traces() const { return traces_; }
  int proposal_cap() const { return proposal_cap_; }
  std::size_t size() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }

  const AcceptanceTrace* find(std::string_view request_id, std::string_view method) const {
    for (const auto& t : traces_) {
      if (t.request_id == request_id && t.method == method) return &t;
    }
    return nullptr;
  }

  // Traces of one method, in file order.
  TraceSet filter_method(std::string_view method) const {
    std::vector<AcceptanceTrace> out;
    for (const auto& t : traces_) {
      if (t.method == method) out.push_back(t);
    }
    return TraceSet(std::move(out), proposal_cap_);
  }

 private:
  std::vector<AcceptanceTrace> traces_;
  int proposal_cap_ = kDefaultProposalCap;
};

// ---------------------------------------------------------------------------
// JSONL format

namespace detail {

inline std::string require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

inline TraceSet parse_traces(std::istream& in) {
  std::vector<AcceptanceTrace> traces;
  std::optional<int> cap;
  std::string text;
  std::size_t line = 0;
  bool seen_record = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(line, "expected a JSON object");

    if (rec.contains("proposal_cap") && !rec.contains("positions")) {
      if (seen_record || cap) throw ParseError(line, "header must be the first line");
      const auto& v = rec["proposal_cap"];
      if (!v.is_number_integer()) throw ParseError(line, "proposal_cap must be an integer");
      cap = v.get<int>();
      continue;
    }

    AcceptanceTrace t;
    t.request_id = detail::require_string(rec, "request_id", line);
    t.dataset = detail::require_string(rec, "dataset", line);
    t.method = detail::require_string(rec, "method", line);
    t.model = detail::require_string(rec, "model", line);
    auto it = rec.find("positions");
    if (it == rec.end() || !it->is_array()) throw ParseError(line, "field 'positions' must be an array");
    t.positions.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw ParseError(line, "positions must contain integers");
      const auto x = v.get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ParseError(line, "position value out of range");
      t.positions.push_back(static_cast<int>(x));
    }
    seen_record = true;
    traces.push_back(std::move(t));
  }
  return TraceSet(std::move(traces), cap.value_or(kDefaultProposalCap));
}

inline TraceSet load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  return parse_traces(in);
}

// Canonical form: header line first, then one record per trace in set order
// with keys request_id, dataset, method, model, positions.
inline std::string serialize_trace(const AcceptanceTrace& t) {
  nlohmann::ordered_json rec;
  rec["request_id"] = t.request_id;
  rec["dataset"] = t.dataset;
  rec["method"] = t.method;
  rec["model"] = t.model;
  rec["positions"] = t.positions;
  return rec.dump();
}

inline std::string serialize_traces(const TraceSet& set) {
  std::string out = "{\"proposal_cap\":" + std::to_string(set.proposal_cap()) + "}\n";
  for (const auto& t : set.traces()) {
    out += serialize_trace(t);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct SyntheticSpec {
  double alpha = 0.0;
  int cap = kDefaultProposalCap;
  std::size_t length = 1;
  std::uint64_t seed = 0;
};

struct TraceLabels {
  std::string request_id = "synthetic-0";
  std::string dataset = "synthetic";
  std::string method = "geometric";
  std::string model = "synthetic";
};

inline void validate(const SyntheticSpec& s) {
  if (!(s.alpha >= 0.0 && s.alpha < 1.0)) throw ValidationError("alpha must lie in [0, 1)");
  if (s.cap < 1) throw ValidationError("cap must be >= 1");
  if (s.length < 1) throw ValidationError("length must be >= 1");
}

// Each m_i counts consecutive Bernoulli(alpha) successes, stopping at cap.
inline AcceptanceTrace generate_synthetic(const SyntheticSpec& spec, TraceLabels labels = {}) {
  validate(spec);
  Rng rng(spec.seed);
  AcceptanceTrace t{std::move(labels.request_id), std::move(labels.dataset),
                    std::move(labels.method), std::move(labels.model), {}};
  t.positions.resize(spec.length);
  for (auto& m : t.positions) {
    int run = 0;
    while (run < spec.cap && rng.bernoulli(spec.alpha)) ++run;
    m = run;
  }
  return t;
}

// P(m = j) for j = 0..cap under the truncated geometric law above.
inline std::vector<double> truncated_geometric_pmf(double alpha, int cap) {
  std::vector<double> pmf(static_cast<std::size_t>(cap) + 1);
  double tail = 1.0;  // alpha^j
  for (int j = 0; j < cap; ++j) {
    pmf[j] = tail * (1.0 - alpha);
    tail *= alpha;
  }
  pmf[cap] = tail;
  return pmf;
}

// Heavy-tailed copy bursts over a geometric background, the acceptance shape
// of prompt-lookup drafting on edit-style workloads. A burst of length s that
// starts at position i contributes m_{i+j} = s - j for j < s, so that the
// acceptable span shrinks by one per position as the copied region is used up.
struct BurstySpec {
  // defaults resemble n-gram drafting on a code-editing workload
  double burst_rate = 0.08;       // probability a burst starts at a free position
  double tail_index = 1.3;        // Pareto shape of the burst length
  int min_burst = 12;
  double background_alpha = 0.2;  // geometric acceptance outside bursts
  int cap = kDefaultProposalCap;
  std::size_t length = 512;
  std::uint64_t seed = 0;
};

inline void validate(const BurstySpec& s) {
  if (!(s.burst_rate >= 0.0 && s.burst_rate <= 1.0)) throw ValidationError("burst_rate must lie in [0, 1]");
  if (!(s.tail_index > 0.0)) throw ValidationError("tail_index must be positive");
  if (s.min_burst < 1) throw ValidationError("min_burst must be >= 1");
  if (!(s.background_alpha >= 0.0 && s.background_alpha < 1.0)) {
    throw ValidationError("background_alpha must lie in [0, 1)");
  }
  if (s.cap < 1) throw ValidationError("cap must be >= 1");
  if (s.length < 1) throw ValidationError("length must be >= 1");
}

inline AcceptanceTrace generate_bursty(const BurstySpec& spec, TraceLabels labels = {}) {
  validate(spec);
  Rng rng(spec.seed);
  AcceptanceTrace t{std::move(labels.request_id), std::move(labels.dataset),
                    std::move(labels.method), std::move(labels.model), {}};
  t.positions.resize(spec.length);
  long remaining = 0;  // acceptable span left in the current burst
  for (auto& m : t.positions) {
    if (remaining <= 0 && rng.bernoulli(spec.burst_rate)) {
      const double s = spec.min_burst * std::pow(rng.uniform_open_low(), -1.0 / spec.tail_index);
      remaining = static_cast<long>(std::min(s, 1e9));
    }
    int background = 0;
    while (background < spec.cap && rng.bernoulli(spec.background_alpha)) ++background;
    const int burst = static_cast<int>(std::min<long>(remaining, spec.cap));
    m = std::max(burst, background);
    if (remaining > 0) --remaining;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Statistics

enum class BinMode { relative, absolute };

struct StatsOptions {
  // relative: number of equal-width bins over position / trace length.
  // absolute: bin width in positions.
  int position_bins = 10;
  BinMode mode = BinMode::relative;
  std::vector<std::string> methods;  // empty = every method present
};

struct BinStat {
  int bin = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RequestMean {
  std::string request_id;
  std::string dataset;
  double mean_generated = 0.0;
};

struct Percentiles {
  double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0;
};

struct DatasetSummary {
  std::string dataset;
  std::size_t requests = 0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single request
};

struct MethodStats {
  std::string method;
  std::vector<BinStat> bins;
  std::vector<RequestMean> requests;
  Percentiles request_percentiles;
  std::vector<DatasetSummary> datasets;
};

struct TraceStats {
  std::vector<MethodStats> methods;
  std::vector<std::string> warnings;
};

// Linear interpolation between closest ranks; q in [0, 1]. Input must be sorted.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline int position_bin(std::size_t i, std::size_t length, const StatsOptions& opt) {
  if (opt.mode == BinMode::absolute) return static_cast<int>(i / static_cast<std::size_t>(opt.position_bins));
  return static_cast<int>((i * static_cast<std::size_t>(opt.position_bins)) / length);
}

inline TraceStats trace_stats(const TraceSet& set, const StatsOptions& opt = {}) {
  if (set.empty()) throw ValidationError("trace_stats: empty trace set");
  if (opt.position_bins < 1) throw ValidationError("position_bins must be >= 1");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const AcceptanceTrace*>> groups;
  for (const auto& t : set.traces()) {
    auto [it, inserted] = groups.try_emplace(t.method);
    if (inserted) order.push_back(t.method);
    it->second.push_back(&t);
  }

  TraceStats out;
  std::vector<std::string> wanted = opt.methods.empty() ? order : opt.methods;
  for (const auto& method : wanted) {
    auto g = groups.find(method);
    if (g == groups.end() || g->second.empty()) {
      out.warnings.push_back("method '" + method + "' has no traces; omitted");
      continue;
    }
    MethodStats ms;
    ms.method = method;

    struct Acc {
      std::size_t n = 0;
      double sum = 0.0;
      double sumsq = 0.0;
    };
    std::map<int, Acc> bins;
    std::map<std::string, std::vector<double>> by_dataset;
    std::vector<std::string> dataset_order;
    for (const AcceptanceTrace* t : g->second) {
      double total = 0.0;
      for (std::size_t i = 0; i < t->length(); ++i) {
        const double gi = t->generated_at(i);
        auto& a = bins[position_bin(i, t->length(), opt)];
        ++a.n;
        a.sum += gi;
        a.sumsq += gi * gi;
        total += gi;
      }
      const double mean = total / static_cast<double>(t->length());
      ms.requests.push_back({t->request_id, t->dataset, mean});
      auto [it, inserted] = by_dataset.try_emplace(t->dataset);
      if (inserted) dataset_order.push_back(t->dataset);
      it->second.push_back(mean);
    }

    for (const auto& [bin, a] : bins) {
      BinStat b;
      b.bin = bin;
      b.count = a.n;
      b.mean = a.sum / static_cast<double>(a.n);
      double sem = 0.0;
      if (a.n > 1) {
        const double var =
            std::max(0.0, (a.sumsq - a.sum * b.mean) / static_cast<double>(a.n - 1));
        sem = std::sqrt(var / static_cast<double>(a.n));
      }
      b.ci_low = b.mean - 1.96 * sem;
      b.ci_high = b.mean + 1.96 * sem;
      ms.bins.push_back(b);
    }

    std::vector<double> means;
    for (const auto& r : ms.requests) means.push_back(r.mean_generated);
    std::sort(means.begin(), means.end());
    ms.request_percentiles = {percentile_sorted(means, 0.05), percentile_sorted(means, 0.25),
                              percentile_sorted(means, 0.50), percentile_sorted(means, 0.75),
                              percentile_sorted(means, 0.95)};

    for (const auto& ds : dataset_order) {
      auto v = by_dataset[ds];
      std::sort(v.begin(), v.end());
      DatasetSummary d;
      d.dataset = ds;
      d.requests = v.size();
      double sum = 0.0;
      for (double x : v) sum += x;
      d.mean = sum / static_cast<double>(v.size());
      d.median = percentile_sorted(v, 0.5);
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - d.mean) * (x - d.mean);
        d.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
      ms.datasets.push_back(d);
    }
    out.methods.push_back(std::move(ms));
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string stats_bins_csv(const TraceStats& s) {
  std::string out = "method,bin,mean,ci_low,ci_high\n";
  for (const auto& m : s.methods) {
    for (const auto& b : m.bins) {
      out += m.method + "," + std::to_string(b.bin) + "," + format_double(b.mean) + "," +
             format_double(b.ci_low) + "," + format_double(b.ci_high) + "\n";
    }
  }
  return out;
}

inline nlohmann::ordered_json stats_summary_json(const TraceStats& s) {
  nlohmann::ordered_json doc;
  doc["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : s.methods) {
    nlohmann::ordered_json jm;
    jm["method"] = m.method;
    jm["requests"] = nlohmann::ordered_json::array();
    for (const auto& r : m.requests) {
      jm["requests"].push_back(
          {{"request_id", r.request_id}, {"dataset", r.dataset}, {"mean_generated", r.mean_generated}});
    }
    const auto& p = m.request_percentiles;
    jm["request_percentiles"] = {{"p5", p.p5}, {"p25", p.p25}, {"p50", p.p50}, {"p75", p.p75}, {"p95", p.p95}};
    jm["datasets"] = nlohmann::ordered_json::array();
    for (const auto& d : m.datasets) {
      jm["datasets"].push_back({{"dataset", d.dataset},
                                {"requests", d.requests},
                                {"mean", d.mean},
                                {"median", d.median},
                                {"std", d.std}});
    }
    doc["methods"].push_back(std::move(jm));
  }
  doc["warnings"] = s.warnings;
  return doc;
}

}  // namespace sdperf
