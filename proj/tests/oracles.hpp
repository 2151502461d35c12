#pragma once

// Independent reference computations used as test oracles. Nothing here calls
// into the code path it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

// Closed form of the expected speedup, valid for alpha < 1.
inline double closed_form_speedup(double alpha, int k, double c) {
  return (1.0 - std::pow(alpha, k + 1)) / ((1.0 - alpha) * (k * c + 1.0));
}

// Same closed form in 50-digit arithmetic, accurate right up to alpha -> 1.
inline double closed_form_speedup_hp(double alpha, int k, double c) {
  using big = boost::multiprecision::cpp_bin_float_50;
  const big a(alpha);
  const big num = 1 - boost::multiprecision::pow(a, k + 1);
  const big den = (1 - a) * (big(k) * big(c) + 1);
  return static_cast<double>(num / den);
}

// Monte-Carlo: each step drafts k tokens at cost k*c, verifies at unit cost and
// accepts the run of Bernoulli(alpha) successes (at most k) plus one bonus token.
inline double monte_carlo_speedup(double alpha, int k, double c, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double tokens = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    int a = 0;
    while (a < k && u(gen) < alpha) ++a;
    tokens += a + 1;
  }
  return tokens / (static_cast<double>(steps) * (k * c + 1.0));
}

// Mean of min(Geometric, cap) by explicit enumeration of its pmf.
inline double truncated_geometric_mean(double alpha, int cap) {
  double mean = 0.0;
  for (int m = 0; m <= cap; ++m) {
    const double p = m < cap ? std::pow(alpha, m) * (1.0 - alpha) : std::pow(alpha, cap);
    mean += m * p;
  }
  return mean;
}

enum class Kind { nosd, fixed, oracle, combine };

struct Walk {
  std::size_t steps = 0;
  double time = 0.0;
  double baseline = 0.0;
  double speedup() const { return baseline / time; }
};

// Step walker for memory-bound T = 1 and zero overhead, written directly from
// the replay rules.
inline Walk walk(const std::vector<int>& m, Kind kind, int k = 0, double c = 0.0,
                 const std::vector<int>* other = nullptr, double c_other = 0.0) {
  Walk w;
  w.baseline = static_cast<double>(m.size());
  std::size_t pos = 0;
  while (pos < m.size()) {
    const int left = static_cast<int>(m.size() - pos);
    int drafts_paid = 0;
    double ratio = c;
    int gain = 1;
    if (kind == Kind::fixed) {
      drafts_paid = k;
      gain = std::min({m[pos], k, left - 1}) + 1;
    } else if (kind == Kind::oracle) {
      gain = std::min(m[pos], left - 1) + 1;
      drafts_paid = gain - 1;
    } else if (kind == Kind::combine) {
      int best = m[pos];
      if ((*other)[pos] > best || ((*other)[pos] == best && c_other < c)) {
        best = (*other)[pos];
        ratio = c_other;
      }
      gain = std::min(best, left - 1) + 1;
      drafts_paid = gain - 1;
    }
    w.time += 1.0 + drafts_paid * ratio;
    ++w.steps;
    pos += static_cast<std::size_t>(gain);
  }
  return w;
}

// Scans every (n, start) pair, keeps those whose window equals the length-n
// suffix, ends no later than the suffix start and has a continuation token
// below `limit`; picks the largest n, then the largest start.
inline std::vector<std::uint32_t> exhaustive_propose(const std::vector<std::uint32_t>& ctx, int n_min, int n_max,
                                                     int k, std::size_t limit) {
  const std::size_t len = ctx.size();
  limit = std::min(limit, len);
  std::optional<std::pair<int, std::size_t>> best;
  for (int n = n_min; n <= n_max; ++n) {
    if (static_cast<std::size_t>(n) > len) continue;
    for (std::size_t j = 0; j + n <= len; ++j) {
      if (j + 2 * n > len) continue;
      if (j + n >= limit) continue;
      bool same = true;
      for (int q = 0; q < n; ++q) same = same && ctx[j + q] == ctx[len - n + q];
      if (!same) continue;
      if (!best || n > best->first || (n == best->first && j > best->second)) best = {{n, j}};
    }
  }
  if (!best) return {};
  std::vector<std::uint32_t> out;
  for (std::size_t i = best->second + best->first; i < limit && out.size() < static_cast<std::size_t>(k); ++i) {
    out.push_back(ctx[i]);
  }
  return out;
}

inline bool same_window(const std::uint32_t* a, const std::uint32_t* b, std::size_t n) {
  for (std::size_t q = 0; q < n; ++q) {
    if (a[q] != b[q]) return false;
  }
  return true;
}

inline std::size_t count_window(const std::vector<std::uint32_t>& seq, const std::uint32_t* gram, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) c += same_window(seq.data() + i, gram, n);
  return c;
}

// Clipped matches for order n by per-window recounting: each distinct window
// is counted at its first occurrence in the candidate.
inline std::pair<std::size_t, std::size_t> brute_clipped(const std::vector<std::uint32_t>& ref,
                                                         const std::vector<std::uint32_t>& cand, std::size_t n) {
  if (cand.size() < n) return {0, 0};
  std::size_t matched = 0;
  for (std::size_t i = 0; i + n <= cand.size(); ++i) {
    const std::uint32_t* gram = cand.data() + i;
    bool first = true;
    for (std::size_t j = 0; j < i && first; ++j) first = !same_window(cand.data() + j, gram, n);
    if (first) matched += std::min(count_window(cand, gram, n), count_window(ref, gram, n));
  }
  return {matched, cand.size() - n + 1};
}

inline double brute_bleu(const std::vector<std::uint32_t>& ref, const std::vector<std::uint32_t>& cand, int n) {
  if (ref.empty() || cand.empty() || cand.size() < static_cast<std::size_t>(n)) return 0.0;
  double prod = 1.0;
  for (int i = 1; i <= n; ++i) {
    const auto [hit, total] = brute_clipped(ref, cand, static_cast<std::size_t>(i));
    if (hit == 0) return 0.0;
    prod *= static_cast<double>(hit) / static_cast<double>(total);
  }
  double bp = 1.0;
  if (cand.size() < ref.size()) bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  return bp * std::pow(prod, 1.0 / n);
}

// numpy's default ("linear") percentile, q in [0, 100].
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double rank = q / 100.0 * static_cast<double>(v.size() - 1);
  const double lo = std::floor(rank);
  const double hi = std::ceil(rank);
  const double a = v[static_cast<std::size_t>(lo)];
  const double b = v[static_cast<std::size_t>(hi)];
  return a + (b - a) * (rank - lo);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Two-pass sample standard deviation.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace oracle
