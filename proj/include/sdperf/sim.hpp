#pragma once

// Trace-driven replay of speculative decoding under a proposed-length policy.
//
// The cursor starts at position 0. Each step proposes p tokens, accepts
// a = min(m_i, p), emits g = a + 1 tokens and jumps to i + g, where m_{i+g}
// is read as recorded. Traces measured one position at a time are therefore
// replayed with a positional-skip approximation.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sdperf/cost_model.hpp"
#include "sdperf/error.hpp"
#include "sdperf/trace.hpp"

namespace sdperf {

namespace policy {

struct NoSD {};

struct FixedK {
  int k = 3;
};

// Proposes exactly the acceptable length at every step.
struct OracleK {};

// Per position, follows whichever of the primary and secondary traces accepts
// more; the winner's draft ratio is charged. Ties go to the cheaper drafter,
// then to the primary.
struct OracleCombine {
  std::shared_ptr<const AcceptanceTrace> secondary;
  double c_secondary = 0.0;
};

}  // namespace policy

using Policy = std::variant<policy::NoSD, policy::FixedK, policy::OracleK, policy::OracleCombine>;

inline std::string policy_name(const Policy& p) {
  struct {
    std::string operator()(const policy::NoSD&) const { return "nosd"; }
    std::string operator()(const policy::FixedK& f) const { return "fixed:" + std::to_string(f.k); }
    std::string operator()(const policy::OracleK&) const { return "oracle"; }
    std::string operator()(const policy::OracleCombine& c) const {
      return "combine:" + (c.secondary ? c.secondary->method : std::string("?"));
    }
  } v;
  return std::visit(v, p);
}

struct SimOptions {
  // When false, oracle steps draft for free (c = 0 on oracle and combine steps).
  bool charge_oracle_drafts = true;
};

struct SimReport {
  std::size_t steps = 0;
  std::size_t generated_tokens = 0;
  std::size_t drafted_tokens = 0;
  std::size_t accepted_tokens = 0;
  double wall_time = 0.0;
  double baseline_time = 0.0;
  double throughput = 0.0;
  double speedup_vs_baseline = 0.0;
  double acceptance_ratio = 0.0;  // accepted / drafted; 0 when nothing was drafted
};

inline SimReport simulate(const AcceptanceTrace& trace, const Policy& policy, const CostModel& cost,
                          int batch, const SimOptions& opt = {}) {
  if (trace.positions.empty()) throw ValidationError("simulate: empty trace '" + trace.request_id + "'");
  if (batch < 1) throw ValidationError("simulate: batch must be >= 1");
  if (const auto* f = std::get_if<policy::FixedK>(&policy); f && f->k < 1) {
    throw ValidationError("simulate: FixedK requires k >= 1");
  }
  const auto* combine = std::get_if<policy::OracleCombine>(&policy);
  if (combine) {
    if (!combine->secondary) throw AlignmentError("simulate: OracleCombine without a secondary trace");
    if (combine->secondary->length() != trace.length()) {
      throw AlignmentError("simulate: request '" + trace.request_id + "' has " +
                           std::to_string(trace.length()) + " positions but secondary trace has " +
                           std::to_string(combine->secondary->length()));
    }
    if (!(combine->c_secondary >= 0.0)) throw ValidationError("simulate: c_secondary must be >= 0");
  }

  const std::size_t length = trace.length();
  const double c = cost.c();
  SimReport r;
  // Raw (pre-overhead) time; overhead scales baseline and SD alike.
  double raw = 0.0;
  std::size_t i = 0;
  while (i < length) {
    const std::size_t remaining = length - i;
    const int m = trace.positions[i];
    int proposed = 0;
    int charged = 0;
    int accepted = 0;
    double step_c = c;

    if (std::holds_alternative<policy::NoSD>(policy)) {
      // plain decoding step
    } else if (const auto* f = std::get_if<policy::FixedK>(&policy)) {
      proposed = charged = f->k;
      accepted = std::min<int>(std::min(m, f->k), static_cast<int>(remaining - 1));
    } else {
      int acceptable = m;
      if (combine) {
        const int other = combine->secondary->positions[i];
        const bool take_secondary =
            other > m || (other == m && combine->c_secondary < c);
        if (take_secondary) {
          acceptable = other;
          step_c = combine->c_secondary;
        }
      }
      proposed = accepted = std::min<int>(acceptable, static_cast<int>(remaining - 1));
      charged = opt.charge_oracle_drafts ? proposed : 0;
    }

    raw += cost.raw_step_time(batch, charged, proposed + 1, step_c);
    ++r.steps;
    r.drafted_tokens += static_cast<std::size_t>(proposed);
    r.accepted_tokens += static_cast<std::size_t>(accepted);
    r.generated_tokens += static_cast<std::size_t>(accepted) + 1;
    i += static_cast<std::size_t>(accepted) + 1;
  }

  const double scale = 1.0 + cost.overhead_fraction();
  const double baseline_raw = static_cast<double>(length) * cost.raw_step_time(batch, 0, 1);
  r.wall_time = scale * raw;
  r.baseline_time = scale * baseline_raw;
  r.throughput = static_cast<double>(r.generated_tokens) / r.wall_time;
  r.speedup_vs_baseline = baseline_raw / raw;
  r.acceptance_ratio =
      r.drafted_tokens ? static_cast<double>(r.accepted_tokens) / static_cast<double>(r.drafted_tokens) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps over a trace set

// Policy as named on the command line; combine partners are resolved per
// request from a trace pool. Grammar: nosd | oracle | fixed:K | combine:METHOD[:C]
struct PolicySpec {
  enum class Kind { no_sd, fixed_k, oracle_k, oracle_combine };
  Kind kind = Kind::no_sd;
  int k = 0;
  std::string secondary_method;
  double c_secondary = 0.0;

  std::string name() const {
    switch (kind) {
      case Kind::no_sd: return "nosd";
      case Kind::fixed_k: return "fixed:" + std::to_string(k);
      case Kind::oracle_k: return "oracle";
      case Kind::oracle_combine: return "combine:" + secondary_method;
    }
    return "?";
  }
};

inline PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec s;
  if (text == "nosd") return s;
  if (text == "oracle") {
    s.kind = PolicySpec::Kind::oracle_k;
    return s;
  }
  if (text.rfind("fixed:", 0) == 0) {
    s.kind = PolicySpec::Kind::fixed_k;
    try {
      std::size_t used = 0;
      s.k = std::stoi(text.substr(6), &used);
      if (used != text.size() - 6) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("policy '" + text + "': k must be an integer");
    }
    if (s.k < 1) throw ValidationError("policy '" + text + "': k must be >= 1");
    return s;
  }
  if (text.rfind("combine:", 0) == 0) {
    s.kind = PolicySpec::Kind::oracle_combine;
    const std::string rest = text.substr(8);
    const auto colon = rest.find(':');
    s.secondary_method = rest.substr(0, colon);
    if (colon != std::string::npos) {
      try {
        s.c_secondary = std::stod(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw ValidationError("policy '" + text + "': bad secondary draft ratio");
      }
    }
    if (s.secondary_method.empty()) throw ValidationError("policy '" + text + "': missing method");
    if (!(s.c_secondary >= 0.0)) throw ValidationError("policy '" + text + "': c must be >= 0");
    return s;
  }
  throw ValidationError("unknown policy '" + text + "'");
}

inline Policy resolve_policy(const PolicySpec& spec, const AcceptanceTrace& trace, const TraceSet& pool) {
  switch (spec.kind) {
    case PolicySpec::Kind::no_sd: return policy::NoSD{};
    case PolicySpec::Kind::fixed_k: return policy::FixedK{spec.k};
    case PolicySpec::Kind::oracle_k: return policy::OracleK{};
    case PolicySpec::Kind::oracle_combine: {
      const AcceptanceTrace* partner = pool.find(trace.request_id, spec.secondary_method);
      if (!partner) {
        throw AlignmentError("request '" + trace.request_id + "' has no '" + spec.secondary_method +
                             "' trace to combine with");
      }
      return policy::OracleCombine{std::make_shared<const AcceptanceTrace>(*partner), spec.c_secondary};
    }
  }
  throw ValidationError("unresolvable policy");
}

struct CellReport {
  std::string request_id;
  std::string method;
  std::string policy;
  int batch = 1;
  SimReport report;
};

struct AggregateReport {
  std::string policy;
  int batch = 1;
  std::size_t traces = 0;
  std::size_t generated_tokens = 0;
  double wall_time = 0.0;
  double baseline_time = 0.0;
  double throughput = 0.0;            // sum generated / sum wall time
  double speedup = 0.0;               // sum baseline time / sum wall time
  double acceptance_ratio = 0.0;      // sum accepted / sum drafted
};

struct SweepResult {
  std::vector<CellReport> cells;            // policy-major, then batch, then trace order
  std::vector<AggregateReport> aggregates;  // policy-major, then batch
};

struct SweepOptions {
  SimOptions sim;
  unsigned threads = 1;
};

inline SweepResult sweep(const TraceSet& set, const std::vector<PolicySpec>& policies, const CostModel& cost,
                         const std::vector<int>& batches, const SweepOptions& opt = {},
                         const TraceSet* partner_pool = nullptr) {
  if (set.empty()) throw ValidationError("sweep: empty trace set");
  if (policies.empty()) throw ValidationError("sweep: no policies");
  if (batches.empty()) throw ValidationError("sweep: no batch sizes");
  const TraceSet& pool = partner_pool ? *partner_pool : set;
  const auto& traces = set.traces();

  // Resolve up front so alignment errors surface before any work.
  std::vector<std::vector<Policy>> resolved(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (const auto& t : traces) resolved[p].push_back(resolve_policy(policies[p], t, pool));
  }

  SweepResult out;
  const std::size_t n = traces.size();
  out.cells.resize(policies.size() * batches.size() * n);
  auto run_cell = [&](std::size_t idx) {
    const std::size_t t = idx % n;
    const std::size_t b = (idx / n) % batches.size();
    const std::size_t p = idx / (n * batches.size());
    auto& cell = out.cells[idx];
    cell.request_id = traces[t].request_id;
    cell.method = traces[t].method;
    cell.policy = policies[p].name();
    cell.batch = batches[b];
    cell.report = simulate(traces[t], resolved[p][t], cost, batches[b], opt.sim);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(out.cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < out.cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool_threads;
      for (unsigned w = 0; w < workers; ++w) {
        pool_threads.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < out.cells.size(); i += workers) run_cell(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t b = 0; b < batches.size(); ++b) {
      AggregateReport agg;
      agg.policy = policies[p].name();
      agg.batch = batches[b];
      std::size_t drafted = 0, accepted = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const auto& r = out.cells[(p * batches.size() + b) * n + t].report;
        ++agg.traces;
        agg.generated_tokens += r.generated_tokens;
        agg.wall_time += r.wall_time;
        agg.baseline_time += r.baseline_time;
        drafted += r.drafted_tokens;
        accepted += r.accepted_tokens;
      }
      agg.throughput = static_cast<double>(agg.generated_tokens) / agg.wall_time;
      agg.speedup = agg.baseline_time / agg.wall_time;
      agg.acceptance_ratio = drafted ? static_cast<double>(accepted) / static_cast<double>(drafted) : 0.0;
      out.aggregates.push_back(agg);
    }
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::string out = "policy,batch,throughput,speedup,acceptance_ratio\n";
  for (const auto& a : s.aggregates) {
    out += a.policy + "," + std::to_string(a.batch) + "," + format_double(a.throughput) + "," +
           format_double(a.speedup) + "," + format_double(a.acceptance_ratio) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json to_json(const SimReport& r) {
  return {{"steps", r.steps},
          {"generated_tokens", r.generated_tokens},
          {"drafted_tokens", r.drafted_tokens},
          {"accepted_tokens", r.accepted_tokens},
          {"wall_time", r.wall_time},
          {"baseline_time", r.baseline_time},
          {"throughput", r.throughput},
          {"speedup", r.speedup_vs_baseline},
          {"acceptance_ratio", r.acceptance_ratio}};
}

inline nlohmann::ordered_json sweep_json(const SweepResult& s) {
  nlohmann::ordered_json doc;
  doc["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : s.aggregates) {
    doc["aggregates"].push_back({{"policy", a.policy},
                                 {"batch", a.batch},
                                 {"traces", a.traces},
                                 {"generated_tokens", a.generated_tokens},
                                 {"wall_time", a.wall_time},
                                 {"baseline_time", a.baseline_time},
                                 {"throughput", a.throughput},
                                 {"speedup", a.speedup},
                                 {"acceptance_ratio", a.acceptance_ratio}});
  }
  doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : s.cells) {
    nlohmann::ordered_json row = {{"request_id", c.request_id},
                                  {"method", c.method},
                                  {"policy", c.policy},
                                  {"batch", c.batch}};
    const auto report = to_json(c.report);
    for (auto& [k, v] : report.items()) row[k] = v;
    doc["cells"].push_back(std::move(row));
  }
  return doc;
}

}  // namespace sdperf
