#pragma once

// Prompt-lookup (n-gram) drafting against a deterministic toy target, with
// greedy speculative decoding and a per-position max-acceptance probe that
// produce acceptance traces.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdperf/error.hpp"
#include "sdperf/random.hpp"
#include "sdperf/trace.hpp"

namespace sdperf {

using Token = std::uint32_t;
using TokenSequence = std::vector<Token>;

struct LookupConfig {
  int n_min = 3;
  int n_max = 7;
  int k = 3;
  // Restrict matches (and the copied continuation) to the prompt.
  bool prompt_only = false;
};

inline void validate(const LookupConfig& cfg) {
  if (cfg.n_min < 1 || cfg.n_max < cfg.n_min) throw ValidationError("lookup config needs 1 <= n_min <= n_max");
  if (cfg.k < 1) throw ValidationError("lookup config needs k >= 1");
}

// Longest n first (n_max down to n_min); for each n, the most recent earlier
// occurrence of the length-n suffix that ends before the suffix begins. Returns
// up to k tokens that follow the occurrence, fewer if the searchable region
// ends. prompt_len bounds the searchable region when cfg.prompt_only is set.
inline TokenSequence propose(std::span<const Token> context, const LookupConfig& cfg,
                             std::size_t prompt_len = static_cast<std::size_t>(-1)) {
  validate(cfg);
  const std::size_t len = context.size();
  const std::size_t limit = cfg.prompt_only ? std::min(prompt_len, len) : len;
  for (int n = cfg.n_max; n >= cfg.n_min; --n) {
    const auto nn = static_cast<std::size_t>(n);
    if (2 * nn > len) continue;
    const auto suffix = context.subspan(len - nn);
    // occurrence [j, j + n) must satisfy j + n <= len - n and leave at least one
    // continuation token inside the searchable region
    const std::size_t last_end = std::min(len - nn, limit - (limit > 0 ? 1 : 0));
    if (last_end < nn) continue;
    for (std::size_t j = last_end - nn + 1; j-- > 0;) {
      if (std::equal(suffix.begin(), suffix.end(), context.begin() + static_cast<std::ptrdiff_t>(j))) {
        const std::size_t start = j + nn;
        const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), limit - start);
        return TokenSequence(context.begin() + static_cast<std::ptrdiff_t>(start),
                             context.begin() + static_cast<std::ptrdiff_t>(start + count));
      }
    }
  }
  return {};
}

// Deterministic next-token rule over the full context, standing in for greedy
// (temperature 0) decoding of a target model.
class ToyTarget {
 public:
  using Rule = std::function<Token(std::span<const Token>)>;

  ToyTarget(std::string name, Rule rule, Token eos) : name_(std::move(name)), rule_(std::move(rule)), eos_(eos) {}

  Token next(std::span<const Token> context) const { return rule_(context); }
  Token eos() const { return eos_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Rule rule_;
  Token eos_;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

namespace targets {

// Repeats the prompt verbatim, then eos.
inline ToyTarget copy(std::size_t prompt_len, Token eos = 0) {
  return ToyTarget(
      "copy",
      [prompt_len, eos](std::span<const Token> ctx) -> Token {
        const std::size_t t = ctx.size() - prompt_len;
        return t < prompt_len ? ctx[t] : eos;
      },
      eos);
}

// Repeats the prompt, substituting roughly one token in `edit_every` with a
// seeded replacement drawn from [1, vocab), then eos.
inline ToyTarget copy_edit(std::size_t prompt_len, std::uint32_t edit_every, std::uint64_t seed,
                           Token vocab, Token eos = 0) {
  if (edit_every < 1 || vocab < 2) throw ValidationError("copy_edit needs edit_every >= 1 and vocab >= 2");
  return ToyTarget(
      "copy-edit",
      [=](std::span<const Token> ctx) -> Token {
        const std::size_t t = ctx.size() - prompt_len;
        if (t >= prompt_len) return eos;
        const std::uint64_t h = detail::mix(seed ^ detail::mix(t));
        if (h % edit_every == 0) return static_cast<Token>(1 + (h >> 32) % (vocab - 1));
        return ctx[t];
      },
      eos);
}

// Emits pattern[t % |pattern|] for output index t < length, then eos.
inline ToyTarget periodic(std::size_t prompt_len, TokenSequence pattern, std::size_t length, Token eos = 0) {
  if (pattern.empty()) throw ValidationError("periodic target needs a non-empty pattern");
  return ToyTarget(
      "periodic",
      [prompt_len, pattern = std::move(pattern), length, eos](std::span<const Token> ctx) -> Token {
        const std::size_t t = ctx.size() - prompt_len;
        return t < length ? pattern[t % pattern.size()] : eos;
      },
      eos);
}

// Seeded lookup table keyed by the last `order` tokens, values in [0, vocab).
// Cycles through its state space, so it repeats n-grams at a rate set by vocab.
inline ToyTarget automaton(std::size_t prompt_len, int order, Token vocab, std::uint64_t seed, std::size_t length,
                           Token eos = 0) {
  if (order < 1 || vocab < 1) throw ValidationError("automaton needs order >= 1 and vocab >= 1");
  return ToyTarget(
      "automaton",
      [=](std::span<const Token> ctx) -> Token {
        if (ctx.size() - prompt_len >= length) return eos;
        std::uint64_t h = seed;
        const std::size_t from = ctx.size() > static_cast<std::size_t>(order) ? ctx.size() - order : 0;
        for (std::size_t i = from; i < ctx.size(); ++i) h = detail::mix(h ^ ctx[i]);
        return static_cast<Token>(h % vocab);
      },
      eos);
}

// Position-keyed table of distinct tokens at or above `base`: never repeats a
// token, so no n-gram ever recurs as long as the prompt stays below `base`.
// (a t + seed) mod 2^30 with odd a is a bijection, which keeps outputs distinct.
inline ToyTarget fresh(std::size_t prompt_len, Token base, std::size_t length, std::uint64_t seed, Token eos = 0) {
  return ToyTarget(
      "fresh",
      [=](std::span<const Token> ctx) -> Token {
        const std::size_t t = ctx.size() - prompt_len;
        if (t >= length) return eos;
        const std::uint64_t slot = (t * 2654435761ULL + seed) & ((1ULL << 30) - 1);
        return base + static_cast<Token>(slot);
      },
      eos);
}

}  // namespace targets

// Plain greedy decoding: append target tokens until eos (inclusive) or max_tokens.
inline TokenSequence greedy_decode(const TokenSequence& prompt, const ToyTarget& target, std::size_t max_tokens) {
  TokenSequence ctx = prompt;
  TokenSequence out;
  while (out.size() < max_tokens) {
    const Token t = target.next(ctx);
    ctx.push_back(t);
    out.push_back(t);
    if (t == target.eos()) break;
  }
  return out;
}

struct DecodeResult {
  TokenSequence output;
  AcceptanceTrace trace;  // accepted draft tokens per step
};

inline TraceLabels drafter_labels(std::string request_id, const ToyTarget& target) {
  return {std::move(request_id), "toy", "ngram", target.name()};
}

// Greedy speculative decoding with prompt lookup: accept the longest draft
// prefix that matches the target, then append the target's own next token.
inline DecodeResult sd_decode(const TokenSequence& prompt, const ToyTarget& target, const LookupConfig& cfg,
                              std::size_t max_tokens, std::string request_id = "toy-0") {
  validate(cfg);
  if (max_tokens < 1) throw ValidationError("sd_decode: max_tokens must be >= 1");
  auto labels = drafter_labels(std::move(request_id), target);
  DecodeResult r;
  r.trace = {labels.request_id, labels.dataset, labels.method, labels.model, {}};
  TokenSequence ctx = prompt;
  bool done = false;
  while (!done && r.output.size() < max_tokens) {
    const TokenSequence draft = propose(ctx, cfg, prompt.size());
    int accepted = 0;
    for (Token d : draft) {
      if (r.output.size() >= max_tokens) break;
      const Token t = target.next(ctx);
      if (t != d) break;
      ctx.push_back(t);
      r.output.push_back(t);
      ++accepted;
      if (t == target.eos()) {
        done = true;
        break;
      }
    }
    if (!done && r.output.size() < max_tokens) {
      const Token bonus = target.next(ctx);
      ctx.push_back(bonus);
      r.output.push_back(bonus);
      done = bonus == target.eos();
    }
    r.trace.positions.push_back(accepted);
  }
  return r;
}

// At every output position, propose up to `cap` tokens, record the longest
// prefix the target accepts, then advance by exactly one greedy token.
inline AcceptanceTrace max_acceptance_probe(const TokenSequence& prompt, const ToyTarget& target,
                                            const LookupConfig& cfg, int cap, std::size_t max_tokens,
                                            std::string request_id = "toy-0") {
  if (cap < 1) throw ValidationError("max_acceptance_probe: cap must be >= 1");
  LookupConfig probe_cfg = cfg;
  probe_cfg.k = cap;
  validate(probe_cfg);
  auto labels = drafter_labels(std::move(request_id), target);
  AcceptanceTrace trace{labels.request_id, labels.dataset, labels.method, labels.model, {}};
  TokenSequence ctx = prompt;
  for (std::size_t produced = 0; produced < max_tokens; ++produced) {
    const TokenSequence draft = propose(ctx, probe_cfg, prompt.size());
    const std::size_t base = ctx.size();
    int m = 0;
    for (Token d : draft) {
      const Token t = target.next(ctx);
      if (t != d) break;
      ++m;
      if (t == target.eos()) break;
      ctx.push_back(t);
    }
    ctx.resize(base);
    trace.positions.push_back(m);
    const Token t = target.next(ctx);
    ctx.push_back(t);
    if (t == target.eos()) break;
  }
  return trace;
}

}  // namespace sdperf
