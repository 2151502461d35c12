#pragma once

// Prompt/output overlap (BLEU-n over token ids) and the per-bucket relative
// speedup of one drafting method over another.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdperf/drafter.hpp"
#include "sdperf/error.hpp"
#include "sdperf/trace.hpp"

namespace sdperf {

namespace detail {

// Clipped matches and total candidate n-grams of one order. Both sides are
// sorted as n-gram views and merged, so counting is O(L log L) per order.
inline std::pair<std::size_t, std::size_t> clipped_ngram_counts(std::span<const Token> reference,
                                                                std::span<const Token> candidate, std::size_t n) {
  if (n == 0 || candidate.size() < n) return {0, 0};
  auto less = [n](const Token* a, const Token* b) { return std::lexicographical_compare(a, a + n, b, b + n); };
  // scratch reused across calls; corpus scoring calls this per order per request
  thread_local std::vector<const Token*> ref, cand;
  auto grams = [&](std::span<const Token> s, std::vector<const Token*>& g) {
    g.clear();
    for (std::size_t i = 0; i + n <= s.size(); ++i) g.push_back(s.data() + i);
    std::sort(g.begin(), g.end(), less);
  };
  grams(reference, ref);
  grams(candidate, cand);
  std::size_t matched = 0;
  std::size_t i = 0, j = 0;
  while (i < cand.size()) {
    std::size_t i_end = i + 1;
    while (i_end < cand.size() && !less(cand[i], cand[i_end])) ++i_end;
    while (j < ref.size() && less(ref[j], cand[i])) ++j;
    std::size_t j_end = j;
    while (j_end < ref.size() && !less(cand[i], ref[j_end])) ++j_end;
    matched += std::min(i_end - i, j_end - j);
    i = i_end;
    j = j_end;
  }
  return {matched, candidate.size() - n + 1};
}

}  // namespace detail

// Modified (clipped) precision of order n; 0 when the candidate has no n-grams.
inline double ngram_precision(std::span<const Token> reference, std::span<const Token> candidate, int n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  const auto [matched, total] = detail::clipped_ngram_counts(reference, candidate, static_cast<std::size_t>(n));
  return total ? static_cast<double>(matched) / static_cast<double>(total) : 0.0;
}

// Geometric mean of clipped precisions 1..n times the brevity penalty
// min(1, exp(1 - |ref| / |cand|)). Zero when either side is empty, the
// candidate is shorter than n, or any precision is zero.
inline double bleu_n(std::span<const Token> reference, std::span<const Token> candidate, int n) {
  if (n < 1) throw ValidationError("BLEU order must be >= 1");
  if (reference.empty() || candidate.empty()) return 0.0;
  if (candidate.size() < static_cast<std::size_t>(n)) return 0.0;
  double log_sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double p = ngram_precision(reference, candidate, i);
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double ratio = static_cast<double>(reference.size()) / static_cast<double>(candidate.size());
  const double bp = std::min(1.0, std::exp(1.0 - ratio));
  return std::min(1.0, bp * std::exp(log_sum / n));
}

inline constexpr int kBucketCount = 5;
inline constexpr std::array<double, kBucketCount - 1> kBucketEdges = {0.2, 0.4, 0.6, 0.8};

// [0,0.2) [0.2,0.4) [0.4,0.6) [0.6,0.8) [0.8,1.0]
inline int overlap_bucket(double score) {
  if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("overlap score outside [0, 1]");
  int b = 0;
  for (double edge : kBucketEdges) {
    if (score >= edge) ++b;
  }
  return b;
}

inline std::string bucket_label(int bucket) {
  static const char* labels[kBucketCount] = {"0.0-0.2", "0.2-0.4", "0.4-0.6", "0.6-0.8", "0.8-1.0"};
  return labels[bucket];
}

struct OverlapRecord {
  std::string request_id;
  double bleu = 0.0;
  int n = 4;
  int bucket = 0;
};

struct PromptOutputPair {
  std::string request_id;
  TokenSequence prompt;
  TokenSequence output;
};

// Prompt is the reference and the generated output the candidate.
inline OverlapRecord overlap_record(const PromptOutputPair& pair, int n = 4, bool precision_only = false) {
  OverlapRecord r;
  r.request_id = pair.request_id;
  r.n = n;
  r.bleu = precision_only ? ngram_precision(pair.prompt, pair.output, n) : bleu_n(pair.prompt, pair.output, n);
  r.bucket = overlap_bucket(r.bleu);
  return r;
}

inline std::vector<PromptOutputPair> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs file '" + path + "'");
  std::vector<PromptOutputPair> pairs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(text);
      PromptOutputPair p;
      p.request_id = rec.at("request_id").get<std::string>();
      p.prompt = rec.at("prompt_tokens").get<TokenSequence>();
      p.output = rec.at("output_tokens").get<TokenSequence>();
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  return pairs;
}

// request_id -> batch -> speedup
using SpeedupTable = std::map<std::string, std::map<int, double>>;

// Reads the per-request cells of a sweep report. With `policy` set only that
// policy's cells are kept; otherwise each (request, batch) must be unique.
inline SpeedupTable speedups_from_sweep_json(const nlohmann::json& doc, const std::optional<std::string>& policy = {}) {
  SpeedupTable table;
  if (!doc.is_object() || !doc.contains("cells") || !doc["cells"].is_array()) {
    throw ParseError(0, "sweep report: missing 'cells' array");
  }
  try {
    for (const auto& cell : doc["cells"]) {
      if (policy && cell.at("policy").get<std::string>() != *policy) continue;
      const auto id = cell.at("request_id").get<std::string>();
      const int batch = cell.at("batch").get<int>();
      const double s = cell.at("speedup").get<double>();
      if (!table[id].emplace(batch, s).second) {
        throw ValidationError("sweep report: several cells for request '" + id + "' at batch " +
                              std::to_string(batch) + "; select a policy");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("sweep report: ") + e.what());
  }
  return table;
}

inline SpeedupTable load_speedups(const std::string& path, const std::optional<std::string>& policy = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report '" + path + "'");
  try {
    return speedups_from_sweep_json(nlohmann::json::parse(in), policy);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "report '" + path + "': " + e.what());
  }
}

struct HeatCell {
  int bucket = 0;
  int batch = 1;
  std::size_t count = 0;
  std::optional<double> rel_speedup_pct;  // absent for an empty bucket
};

// Per (bucket, batch): mean over requests of 100 * (S_a / S_b - 1).
inline std::vector<HeatCell> bucketed_speedup(const std::vector<OverlapRecord>& records, const SpeedupTable& a,
                                              const SpeedupTable& b) {
  std::vector<int> batches;
  for (const auto& r : records) {
    auto ia = a.find(r.request_id);
    auto ib = b.find(r.request_id);
    if (ia == a.end() || ib == b.end()) {
      throw AlignmentError("request '" + r.request_id + "' missing from a speedup report");
    }
    if (ia->second.size() != ib->second.size()) {
      throw AlignmentError("request '" + r.request_id + "' has different batch sets in the two reports");
    }
    for (const auto& [batch, s] : ia->second) {
      if (!ib->second.count(batch)) {
        throw AlignmentError("request '" + r.request_id + "' lacks batch " + std::to_string(batch) + " in report b");
      }
      if (std::find(batches.begin(), batches.end(), batch) == batches.end()) batches.push_back(batch);
    }
  }
  std::sort(batches.begin(), batches.end());

  std::vector<HeatCell> cells;
  for (int bucket = 0; bucket < kBucketCount; ++bucket) {
    for (int batch : batches) {
      HeatCell cell{bucket, batch, 0, std::nullopt};
      double sum = 0.0;
      for (const auto& r : records) {
        if (r.bucket != bucket) continue;
        const auto& sa = a.at(r.request_id);
        auto it = sa.find(batch);
        if (it == sa.end()) continue;
        sum += 100.0 * (it->second / b.at(r.request_id).at(batch) - 1.0);
        ++cell.count;
      }
      if (cell.count) cell.rel_speedup_pct = sum / static_cast<double>(cell.count);
      cells.push_back(cell);
    }
  }
  return cells;
}

inline std::string heatmap_csv(const std::vector<HeatCell>& cells) {
  std::string out = "bucket,batch,count,rel_speedup_pct\n";
  for (const auto& c : cells) {
    out += bucket_label(c.bucket) + "," + std::to_string(c.batch) + "," + std::to_string(c.count) + "," +
           (c.rel_speedup_pct ? format_double(*c.rel_speedup_pct) : std::string()) + "\n";
  }
  return out;
}

inline std::string overlap_csv(const std::vector<OverlapRecord>& records) {
  std::string out = "request_id,n,bleu,bucket\n";
  for (const auto& r : records) {
    out += r.request_id + "," + std::to_string(r.n) + "," + format_double(r.bleu) + "," + bucket_label(r.bucket) + "\n";
  }
  return out;
}

}  // namespace sdperf
