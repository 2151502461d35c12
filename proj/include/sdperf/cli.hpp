#pragma once

// Command-line front end: trace gen|stats, sim sweep, mem report, draft trace,
// overlap analyze. Exit codes: 0 success, 1 validation or I/O error, 2 usage.

#include <cctype>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdperf/cost_model.hpp"
#include "sdperf/drafter.hpp"
#include "sdperf/io.hpp"
#include "sdperf/memory.hpp"
#include "sdperf/overlap.hpp"
#include "sdperf/plotdata.hpp"
#include "sdperf/sim.hpp"
#include "sdperf/trace.hpp"

namespace sdperf::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 1234;

struct GlobalOptions {
  std::string out = "sdperf-out";
  std::string format = "both";
  std::uint64_t seed = kDefaultSeed;
  bool quiet = false;

  bool csv() const { return format != "json"; }
  bool json() const { return format != "csv"; }
};

// Collects a command's outputs and commits them together with a manifest
// that records inputs (path, size, FNV-1a), flags, seed and toolkit version.
class OutputSet {
 public:
  OutputSet(std::string command, std::filesystem::path dir, const GlobalOptions& g)
      : command_(std::move(command)), dir_(std::move(dir)) {
    manifest_["toolkit"] = "sdperf";
    manifest_["version"] = kVersion;
    manifest_["command"] = command_;
    manifest_["seed"] = g.seed;
    manifest_["format"] = g.format;
    manifest_["flags"] = nlohmann::ordered_json::object();
    manifest_["inputs"] = nlohmann::ordered_json::array();
  }

  template <typename T>
  void flag(const std::string& name, const T& value) {
    manifest_["flags"][name] = value;
  }

  void input(const std::string& path) {
    const std::string bytes = io::read_file(path);
    manifest_["inputs"].push_back({{"path", path}, {"bytes", bytes.size()}, {"fnv1a", io::hex64(io::fnv1a(bytes))}});
  }

  void add(const std::filesystem::path& path, std::string content) { files_.emplace_back(path, std::move(content)); }
  void add(const std::string& name, std::string content) { add(dir_ / name, std::move(content)); }

  void commit(const std::string& manifest_name) {
    manifest_["outputs"] = nlohmann::ordered_json::array();
    for (const auto& [path, content] : files_) {
      manifest_["outputs"].push_back({{"path", path.filename().string()},
                                      {"bytes", content.size()},
                                      {"fnv1a", io::hex64(io::fnv1a(content))}});
    }
    for (const auto& [path, content] : files_) io::write_atomic(path, content);
    const auto mpath = files_.empty() ? dir_ / manifest_name : files_.front().first.parent_path() / manifest_name;
    io::write_atomic(mpath, manifest_.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::filesystem::path dir_;
  nlohmann::ordered_json manifest_;
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

inline std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError(std::string("bad ") + what + " list '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
  return out;
}

inline std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Prompt files: JSONL of {"request_id", "prompt_tokens"}, a single JSON array,
// or whitespace/comma separated integers.
inline std::vector<std::pair<std::string, TokenSequence>> read_prompts(const std::string& path) {
  const std::string text = io::read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ValidationError("prompt file '" + path + "' is empty");
  std::vector<std::pair<std::string, TokenSequence>> prompts;
  if (text[first] == '{') {
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto rec = nlohmann::json::parse(line);
        prompts.emplace_back(rec.at("request_id").get<std::string>(), rec.at("prompt_tokens").get<TokenSequence>());
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(n, "prompt file '" + path + "': " + e.what());
      }
    }
  } else if (text[first] == '[') {
    try {
      prompts.emplace_back("prompt-0", nlohmann::json::parse(text).get<TokenSequence>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, "prompt file '" + path + "': " + e.what());
    }
  } else {
    TokenSequence tokens;
    std::string cleaned = text;
    for (char& ch : cleaned) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream in(cleaned);
    std::string word;
    while (in >> word) {
      if (word.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError(0, "prompt file '" + path + "': token '" + word + "' is not a non-negative integer");
      }
      tokens.push_back(static_cast<Token>(std::stoul(word)));
    }
    prompts.emplace_back("prompt-0", std::move(tokens));
  }
  for (const auto& [id, p] : prompts) {
    if (p.empty()) throw ValidationError("prompt '" + id + "' is empty");
  }
  return prompts;
}

struct TraceGenArgs {
  std::string kind = "geometric";
  double alpha = 0.5;
  int cap = kDefaultProposalCap;
  std::size_t length = 512;
  std::size_t count = 1;
  std::string method = "synthetic";
  std::string dataset = "synthetic";
  std::string model = "synthetic";
  BurstySpec bursty;
};

struct TraceStatsArgs {
  std::string traces;
  int bins = 10;
  bool absolute = false;
  std::vector<std::string> methods;
};

struct SweepArgs {
  std::string traces;
  std::string cost;
  std::string policies = "nosd,fixed:1,fixed:3,fixed:5,oracle";
  std::string batches = "1";
  std::string method;
  bool free_oracle_drafts = false;
  unsigned threads = 1;
};

struct MemArgs {
  std::string specs;
  std::vector<std::string> deployments;
  int bytes_per_param = 2;
  int bytes_per_element = 2;
};

struct DraftArgs {
  std::string target = "copy-edit";
  std::string prompt_file;
  std::string mode = "probe";
  int nmin = 3;
  int nmax = 7;
  int k = 3;
  int cap = kDefaultProposalCap;
  std::size_t max_tokens = 512;
  bool prompt_only = false;
  std::uint32_t edit_every = 16;
  std::uint32_t vocab = 32000;
  int order = 2;
  std::size_t period = 8;
};

struct OverlapArgs {
  std::string pairs;
  int n = 4;
  std::string reports_a;
  std::string reports_b;
  std::string policy_a;
  std::string policy_b;
  bool precision_only = false;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::mix(seed ^ detail::mix(index + 1));
}

inline void cmd_trace_gen(const GlobalOptions& g, const TraceGenArgs& a, std::ostream& out) {
  if (a.count < 1) throw ValidationError("--count must be >= 1");
  std::vector<AcceptanceTrace> traces;
  for (std::size_t i = 0; i < a.count; ++i) {
    TraceLabels labels{a.method + "-" + std::to_string(i), a.dataset, a.method, a.model};
    const std::uint64_t seed = derive_seed(g.seed, i);
    if (a.kind == "geometric") {
      traces.push_back(generate_synthetic({a.alpha, a.cap, a.length, seed}, labels));
    } else {
      BurstySpec b = a.bursty;
      b.cap = a.cap;
      b.length = a.length;
      b.seed = seed;
      traces.push_back(generate_bursty(b, labels));
    }
  }
  const TraceSet set(std::move(traces), a.cap);
  OutputSet outputs("trace gen", g.out, g);
  outputs.flag("kind", a.kind);
  outputs.flag("alpha", a.alpha);
  outputs.flag("cap", a.cap);
  outputs.flag("length", a.length);
  outputs.flag("count", a.count);
  outputs.flag("method", a.method);
  outputs.flag("dataset", a.dataset);
  outputs.flag("model", a.model);
  if (a.kind == "bursty") {
    outputs.flag("burst_rate", a.bursty.burst_rate);
    outputs.flag("tail_index", a.bursty.tail_index);
    outputs.flag("min_burst", a.bursty.min_burst);
    outputs.flag("background_alpha", a.bursty.background_alpha);
  }
  outputs.add(std::string("traces.jsonl"), serialize_traces(set));
  outputs.commit("traces.manifest.json");
  if (!g.quiet) out << "wrote " << set.size() << " traces to " << (std::filesystem::path(g.out) / "traces.jsonl").string() << "\n";
}

inline void cmd_trace_stats(const GlobalOptions& g, const TraceStatsArgs& a, std::ostream& out) {
  const TraceSet set = load_traces(a.traces);
  StatsOptions opt;
  opt.position_bins = a.bins;
  opt.mode = a.absolute ? BinMode::absolute : BinMode::relative;
  opt.methods = a.methods;
  const TraceStats stats = trace_stats(set, opt);
  OutputSet outputs("trace stats", g.out, g);
  outputs.input(a.traces);
  outputs.flag("bins", a.bins);
  outputs.flag("absolute", a.absolute);
  outputs.flag("methods", a.methods);
  if (g.csv()) outputs.add(std::string("stats.csv"), stats_bins_csv(stats));
  if (g.json()) outputs.add(std::string("stats.json"), stats_summary_json(stats).dump(2) + "\n");
  outputs.commit("stats.manifest.json");
  if (!g.quiet) {
    for (const auto& w : stats.warnings) out << "warning: " << w << "\n";
    for (const auto& m : stats.methods) {
      out << m.method << ": " << m.requests.size() << " requests, median per-request generated length "
          << format_double(m.request_percentiles.p50) << "\n";
    }
  }
}

inline void cmd_sim_sweep(const GlobalOptions& g, const SweepArgs& a, std::ostream& out) {
  const TraceSet all = load_traces(a.traces);
  const TraceSet primary = a.method.empty() ? all : all.filter_method(a.method);
  if (primary.empty()) throw ValidationError("no traces for method '" + a.method + "'");
  const CostModel cost = a.cost.empty() ? CostModel() : load_cost_model(a.cost);
  std::vector<PolicySpec> policies;
  for (const auto& p : split_csv(a.policies)) policies.push_back(parse_policy_spec(p));
  if (policies.empty()) throw ValidationError("no policies given");
  const auto batches = parse_int_list(a.batches, "batch");
  SweepOptions opt;
  opt.sim.charge_oracle_drafts = !a.free_oracle_drafts;
  opt.threads = a.threads;
  const SweepResult result = sweep(primary, policies, cost, batches, opt, &all);

  OutputSet outputs("sim sweep", g.out, g);
  outputs.input(a.traces);
  if (!a.cost.empty()) outputs.input(a.cost);
  outputs.flag("policies", a.policies);
  outputs.flag("batches", batches);
  outputs.flag("method", a.method);
  outputs.flag("free_oracle_drafts", a.free_oracle_drafts);
  if (g.csv()) {
    outputs.add(std::string("sweep.csv"), sweep_csv(result));
    outputs.add(std::string("plot_speedup.csv"), speedup_long_csv(result));
    const auto gap = oracle_gap_rows(result);
    if (!gap.empty()) outputs.add(std::string("plot_oracle_gap.csv"), oracle_gap_csv(gap));
  }
  if (g.json()) {
    auto doc = sweep_json(result);
    nlohmann::ordered_json wrapped;
    wrapped["cost_model"] = to_json(cost);
    for (auto& [k, v] : doc.items()) wrapped[k] = v;
    outputs.add(std::string("sweep.json"), wrapped.dump(2) + "\n");
  }
  outputs.commit("sweep.manifest.json");
  if (!g.quiet) out << sweep_csv(result);
}

inline void cmd_mem_report(const GlobalOptions& g, const MemArgs& a, std::ostream& out) {
  const ModelRegistry reg = a.specs.empty() ? builtin_registry() : load_registry(a.specs);
  std::vector<DeploymentRef> deployments;
  for (const auto& d : a.deployments) deployments.push_back(parse_deployment(d));
  if (a.deployments.empty()) deployments = builtin_deployments();
  const auto rows = memory_report(reg, deployments, a.bytes_per_param, a.bytes_per_element);
  const std::string table = memory_table_text(rows);

  OutputSet outputs("mem report", g.out, g);
  if (!a.specs.empty()) outputs.input(a.specs);
  outputs.flag("deployments", a.deployments);
  outputs.flag("bytes_per_param", a.bytes_per_param);
  outputs.flag("bytes_per_element", a.bytes_per_element);
  outputs.add(std::string("memory.txt"), table);
  if (g.csv()) outputs.add(std::string("memory.csv"), memory_csv(rows));
  if (g.json()) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      doc.push_back({{"label", r.label},
                     {"target", r.target},
                     {"drafter", r.drafter},
                     {"static_gib", r.static_gib},
                     {"per_token_kib", r.per_token_kib},
                     {"static_overhead_pct", r.static_overhead_pct},
                     {"per_token_ratio", r.per_token_ratio}});
    }
    outputs.add(std::string("memory.json"), doc.dump(2) + "\n");
  }
  outputs.commit("memory.manifest.json");
  if (!g.quiet) out << table;
}

inline ToyTarget make_target(const DraftArgs& a, const TokenSequence& prompt, std::uint64_t seed) {
  const std::size_t n = prompt.size();
  if (a.target == "copy") return targets::copy(n);
  if (a.target == "copy-edit") return targets::copy_edit(n, a.edit_every, seed, a.vocab);
  if (a.target == "periodic") {
    TokenSequence pattern(prompt.begin(), prompt.begin() + static_cast<std::ptrdiff_t>(std::min(a.period, n)));
    return targets::periodic(n, std::move(pattern), a.max_tokens);
  }
  if (a.target == "automaton") return targets::automaton(n, a.order, a.vocab, seed, a.max_tokens);
  if (a.target == "fresh") return targets::fresh(n, a.vocab, a.max_tokens, seed);
  throw ValidationError("unknown target '" + a.target + "'");
}

inline void cmd_draft_trace(const GlobalOptions& g, const DraftArgs& a, std::ostream& out) {
  LookupConfig cfg{a.nmin, a.nmax, a.k, a.prompt_only};
  validate(cfg);
  if (a.cap < 1) throw ValidationError("--cap must be >= 1");
  if (a.max_tokens < 1) throw ValidationError("--max-tokens must be >= 1");
  const auto prompts = read_prompts(a.prompt_file);

  std::vector<AcceptanceTrace> traces;
  std::string pairs;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& [id, prompt] = prompts[i];
    const ToyTarget target = make_target(a, prompt, derive_seed(g.seed, i));
    AcceptanceTrace t = a.mode == "decode" ? sd_decode(prompt, target, cfg, a.max_tokens, id).trace
                                           : max_acceptance_probe(prompt, target, cfg, a.cap, a.max_tokens, id);
    traces.push_back(std::move(t));
    nlohmann::ordered_json rec;
    rec["request_id"] = id;
    rec["prompt_tokens"] = prompt;
    rec["output_tokens"] = greedy_decode(prompt, target, a.max_tokens);
    pairs += rec.dump() + "\n";
  }
  const TraceSet set(std::move(traces), a.mode == "decode" ? a.k : a.cap);

  std::filesystem::path file = g.out;
  if (file.extension() != ".jsonl") file /= "traces.jsonl";
  auto pairs_file = file;
  pairs_file.replace_filename(file.stem().string() + ".pairs.jsonl");

  OutputSet outputs("draft trace", file.parent_path(), g);
  outputs.input(a.prompt_file);
  outputs.flag("target", a.target);
  outputs.flag("mode", a.mode);
  outputs.flag("nmin", a.nmin);
  outputs.flag("nmax", a.nmax);
  outputs.flag("k", a.k);
  outputs.flag("cap", a.cap);
  outputs.flag("max_tokens", a.max_tokens);
  outputs.flag("prompt_only", a.prompt_only);
  outputs.add(file, serialize_traces(set));
  outputs.add(pairs_file, pairs);
  outputs.commit(file.stem().string() + ".manifest.json");
  if (!g.quiet) out << "wrote " << set.size() << " traces to " << file.string() << "\n";
}

inline void cmd_overlap_analyze(const GlobalOptions& g, const OverlapArgs& a, std::ostream& out) {
  if (a.n < 1) throw ValidationError("--n must be >= 1");
  if (a.reports_a.empty() != a.reports_b.empty()) {
    throw ValidationError("--reports-a and --reports-b must be given together");
  }
  const auto pairs = load_pairs(a.pairs);
  std::vector<OverlapRecord> records;
  for (const auto& p : pairs) records.push_back(overlap_record(p, a.n, a.precision_only));

  OutputSet outputs("overlap analyze", g.out, g);
  outputs.input(a.pairs);
  outputs.flag("n", a.n);
  outputs.flag("precision_only", a.precision_only);
  std::vector<HeatCell> cells;
  if (!a.reports_a.empty()) {
    outputs.input(a.reports_a);
    outputs.input(a.reports_b);
    outputs.flag("policy_a", a.policy_a);
    outputs.flag("policy_b", a.policy_b);
    auto pick = [](const std::string& p) { return p.empty() ? std::optional<std::string>{} : std::optional{p}; };
    cells = bucketed_speedup(records, load_speedups(a.reports_a, pick(a.policy_a)),
                             load_speedups(a.reports_b, pick(a.policy_b)));
  }
  if (g.csv()) {
    outputs.add(std::string("overlap.csv"), overlap_csv(records));
    if (!cells.empty()) outputs.add(std::string("heatmap.csv"), heatmap_csv(cells));
  }
  if (g.json()) {
    nlohmann::ordered_json doc;
    doc["records"] = nlohmann::ordered_json::array();
    for (const auto& r : records) {
      doc["records"].push_back({{"request_id", r.request_id}, {"n", r.n}, {"bleu", r.bleu}, {"bucket", bucket_label(r.bucket)}});
    }
    doc["heatmap"] = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
      nlohmann::ordered_json row = {{"bucket", bucket_label(c.bucket)}, {"batch", c.batch}, {"count", c.count}};
      row["rel_speedup_pct"] = c.rel_speedup_pct ? nlohmann::ordered_json(*c.rel_speedup_pct) : nlohmann::ordered_json();
      doc["heatmap"].push_back(std::move(row));
    }
    outputs.add(std::string("overlap.json"), doc.dump(2) + "\n");
  }
  outputs.commit("overlap.manifest.json");
  if (!g.quiet) out << (cells.empty() ? overlap_csv(records) : heatmap_csv(cells));
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speculative-decoding performance modeling toolkit", "sdperf"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--out", g.out, "Output directory (draft trace also accepts a .jsonl file path)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_option("--seed", g.seed, "Random seed recorded in every manifest");
  app.add_flag("--quiet", g.quiet, "Suppress console summaries");

  // trace
  auto* trace = app.add_subcommand("trace", "Generate or summarise acceptance traces")->fallthrough();
  trace->require_subcommand(1);
  TraceGenArgs gen;
  auto* gen_cmd = trace->add_subcommand("gen", "Generate synthetic traces")->fallthrough();
  gen_cmd->add_option("--kind", gen.kind)->check(CLI::IsMember({"geometric", "bursty"}));
  gen_cmd->add_option("--alpha", gen.alpha, "Per-token acceptance probability (geometric)");
  gen_cmd->add_option("--cap", gen.cap, "Proposal cap");
  gen_cmd->add_option("--length", gen.length, "Positions per trace");
  gen_cmd->add_option("--count", gen.count, "Number of traces");
  gen_cmd->add_option("--method", gen.method);
  gen_cmd->add_option("--dataset", gen.dataset);
  gen_cmd->add_option("--model", gen.model);
  gen_cmd->add_option("--burst-rate", gen.bursty.burst_rate);
  gen_cmd->add_option("--tail-index", gen.bursty.tail_index);
  gen_cmd->add_option("--min-burst", gen.bursty.min_burst);
  gen_cmd->add_option("--background-alpha", gen.bursty.background_alpha);

  TraceStatsArgs stats;
  auto* stats_cmd = trace->add_subcommand("stats", "Position, request and dataset statistics")->fallthrough();
  stats_cmd->add_option("--traces", stats.traces)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--bins", stats.bins, "Relative bins, or bin width with --absolute");
  stats_cmd->add_flag("--absolute", stats.absolute, "Bin by absolute position");
  stats_cmd->add_option("--method", stats.methods, "Restrict to methods (repeatable)");

  // sim
  auto* sim = app.add_subcommand("sim", "Trace-driven simulation")->fallthrough();
  sim->require_subcommand(1);
  SweepArgs sw;
  auto* sweep_cmd = sim->add_subcommand("sweep", "Simulate policies x batch sizes over a trace set")->fallthrough();
  sweep_cmd->add_option("--traces", sw.traces)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--cost", sw.cost, "Cost model JSON (default: memory-bound, T=1, c=0)")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--policies", sw.policies, "nosd, oracle, fixed:K, combine:METHOD[:C]");
  sweep_cmd->add_option("--batches", sw.batches, "Comma-separated batch sizes");
  sweep_cmd->add_option("--method", sw.method, "Simulate only traces of this method");
  sweep_cmd->add_flag("--free-oracle-drafts", sw.free_oracle_drafts, "Do not charge drafting on oracle steps");
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads");

  // mem
  auto* mem = app.add_subcommand("mem", "Memory accounting")->fallthrough();
  mem->require_subcommand(1);
  MemArgs ma;
  auto* report_cmd = mem->add_subcommand("report", "Static and per-token memory table")->fallthrough();
  report_cmd->add_option("--specs", ma.specs, "Model registry JSON (default: built in)")->check(CLI::ExistingFile);
  report_cmd->add_option("--deployment", ma.deployments, "target=NAME[,drafter=NAME][,label=TEXT] (repeatable)");
  report_cmd->add_option("--bytes-per-param", ma.bytes_per_param)->check(CLI::IsMember({1, 2, 4}));
  report_cmd->add_option("--bytes-per-element", ma.bytes_per_element)->check(CLI::IsMember({1, 2, 4}));

  // draft
  auto* draft = app.add_subcommand("draft", "Prompt-lookup drafting against toy targets")->fallthrough();
  draft->require_subcommand(1);
  DraftArgs da;
  auto* dtrace_cmd = draft->add_subcommand("trace", "Produce acceptance traces from prompts")->fallthrough();
  dtrace_cmd->add_option("--target", da.target)
      ->check(CLI::IsMember({"copy", "copy-edit", "periodic", "automaton", "fresh"}));
  dtrace_cmd->add_option("--prompt-file", da.prompt_file)->required()->check(CLI::ExistingFile);
  dtrace_cmd->add_option("--mode", da.mode, "probe: max acceptance per position; decode: accepted per SD step")
      ->check(CLI::IsMember({"probe", "decode"}));
  dtrace_cmd->add_option("--nmin", da.nmin);
  dtrace_cmd->add_option("--nmax", da.nmax);
  dtrace_cmd->add_option("--k", da.k, "Tokens proposed per step (decode mode)");
  dtrace_cmd->add_option("--cap", da.cap, "Proposal cap (probe mode)");
  dtrace_cmd->add_option("--max-tokens", da.max_tokens);
  dtrace_cmd->add_flag("--prompt-only", da.prompt_only, "Match against the prompt only");
  dtrace_cmd->add_option("--edit-every", da.edit_every, "copy-edit: mean spacing of substitutions");
  dtrace_cmd->add_option("--vocab", da.vocab, "Vocabulary size for generated tokens");
  dtrace_cmd->add_option("--order", da.order, "automaton: context order");
  dtrace_cmd->add_option("--period", da.period, "periodic: pattern length taken from the prompt");

  // overlap
  auto* overlap = app.add_subcommand("overlap", "Prompt/output overlap analysis")->fallthrough();
  overlap->require_subcommand(1);
  OverlapArgs oa;
  auto* analyze_cmd = overlap->add_subcommand("analyze", "BLEU-n buckets and relative speedup heatmap")->fallthrough();
  analyze_cmd->add_option("--pairs", oa.pairs)->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--n", oa.n, "BLEU order");
  analyze_cmd->add_option("--reports-a", oa.reports_a, "Sweep JSON for method A")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--reports-b", oa.reports_b, "Sweep JSON for method B")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--policy-a", oa.policy_a, "Policy to read from report A");
  analyze_cmd->add_option("--policy-b", oa.policy_b, "Policy to read from report B");
  analyze_cmd->add_flag("--precision-only", oa.precision_only, "Use raw n-gram precision instead of BLEU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) cmd_trace_gen(g, gen, out);
    else if (stats_cmd->parsed()) cmd_trace_stats(g, stats, out);
    else if (sweep_cmd->parsed()) cmd_sim_sweep(g, sw, out);
    else if (report_cmd->parsed()) cmd_mem_report(g, ma, out);
    else if (dtrace_cmd->parsed()) cmd_draft_trace(g, da, out);
    else if (analyze_cmd->parsed()) cmd_overlap_analyze(g, oa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sdperf::cli
