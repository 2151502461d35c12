#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdperf/drafter.hpp"
#include "sdperf/sim.hpp"

using namespace sdperf;

namespace {

constexpr Token A = 1, B = 2, C = 3, D = 4, X = 7, Y = 8;

TokenSequence random_tokens(Rng& rng, std::size_t len, Token lo, Token hi) {
  TokenSequence s(len);
  for (auto& t : s) t = lo + static_cast<Token>(rng.below(hi - lo));
  return s;
}

// Distinct, eos-free tokens so the copy target's n-grams are unique in the prompt.
TokenSequence distinct_prompt(std::size_t len) {
  TokenSequence s(len);
  for (std::size_t i = 0; i < len; ++i) s[i] = static_cast<Token>(100 + 3 * i);
  return s;
}

bool is_contiguous_span(const TokenSequence& ctx, const TokenSequence& part) {
  if (part.empty()) return true;
  return std::search(ctx.begin(), ctx.end(), part.begin(), part.end()) != ctx.end();
}

ToyTarget random_target(Rng& rng, std::size_t prompt_len) {
  const std::size_t length = 1 + rng.below(200);
  switch (rng.below(5)) {
    case 0: return targets::copy(prompt_len);
    case 1: return targets::copy_edit(prompt_len, 1 + static_cast<std::uint32_t>(rng.below(12)), rng.raw(), 6);
    case 2: {
      auto pattern = random_tokens(rng, 1 + rng.below(9), 1, 6);
      return targets::periodic(prompt_len, pattern, length);
    }
    case 3:
      return targets::automaton(prompt_len, 1 + static_cast<int>(rng.below(3)), 2 + static_cast<Token>(rng.below(6)),
                                rng.raw(), length);
    default: return targets::fresh(prompt_len, 1000, length, rng.raw());
  }
}

LookupConfig random_config(Rng& rng) {
  LookupConfig cfg;
  cfg.n_min = 1 + static_cast<int>(rng.below(4));
  cfg.n_max = cfg.n_min + static_cast<int>(rng.below(5));
  cfg.k = 1 + static_cast<int>(rng.below(8));
  cfg.prompt_only = rng.bernoulli(0.25);
  return cfg;
}

}  // namespace

TEST(Propose, SuffixMatchExample) {
  const TokenSequence ctx = {A, B, C, D, A, B};
  EXPECT_EQ(propose(ctx, {2, 3, 3}), (TokenSequence{C, D, A}));
}

TEST(Propose, NoRepeatGivesNothing) {
  const TokenSequence ctx = {A, B, C};
  EXPECT_TRUE(propose(ctx, {1, 3, 3}).empty());
}

TEST(Propose, AlternatingContextStopsAtContextEnd) {
  // [Y,X,Y] last occurs at index 1 without overlapping the suffix; four
  // tokens follow it before the context ends.
  const TokenSequence ctx = {X, Y, X, Y, X, Y, X, Y};
  EXPECT_EQ(propose(ctx, {3, 3, 5}), (TokenSequence{X, Y, X, Y}));
  EXPECT_EQ(propose(ctx, {1, 3, 5}), (TokenSequence{X, Y, X, Y}));
}

TEST(Propose, PromptOnlyRestrictsSearch) {
  const TokenSequence prompt = {5, 6, 7, 8};
  TokenSequence ctx = prompt;
  for (Token t : {5, 6, 7, 9, 5, 6, 7}) ctx.push_back(t);
  LookupConfig cfg{3, 3, 3, false};
  EXPECT_EQ(propose(ctx, cfg, prompt.size()), (TokenSequence{9, 5, 6}));
  cfg.prompt_only = true;
  EXPECT_EQ(propose(ctx, cfg, prompt.size()), (TokenSequence{8}));
  EXPECT_TRUE(propose(ctx, cfg, 3).empty());
}

TEST(Propose, RejectsBadConfig) {
  const TokenSequence ctx = {A, B};
  EXPECT_THROW(propose(ctx, {0, 3, 3}), ValidationError);
  EXPECT_THROW(propose(ctx, {4, 3, 3}), ValidationError);
  EXPECT_THROW(propose(ctx, {1, 3, 0}), ValidationError);
}

TEST(Propose, MatchesExhaustiveSearch) {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto ctx = random_tokens(rng, rng.below(40), 1, 1 + static_cast<Token>(1 + rng.below(4)));
    const auto cfg = random_config(rng);
    const std::size_t prompt_len = rng.below(ctx.size() + 2);
    const std::size_t limit = cfg.prompt_only ? std::min(prompt_len, ctx.size()) : ctx.size();
    const auto got = propose(ctx, cfg, prompt_len);
    const auto want = oracle::exhaustive_propose(ctx, cfg.n_min, cfg.n_max, cfg.k, limit);
    ASSERT_EQ(got, want) << "case " << i;
    ASSERT_LE(got.size(), static_cast<std::size_t>(cfg.k));
    ASSERT_TRUE(is_contiguous_span(ctx, got));
  }
}

TEST(SdDecode, CopyTargetLocksOn) {
  const auto prompt = distinct_prompt(30);
  const auto target = targets::copy(prompt.size());
  const auto r = sd_decode(prompt, target, {3, 7, 5}, 1000);
  EXPECT_EQ(r.output, greedy_decode(prompt, target, 1000));
  ASSERT_EQ(r.output.size(), 31u);
  // first step sees only the prompt, whose suffix never recurs
  ASSERT_GE(r.trace.positions.size(), 3u);
  EXPECT_EQ(r.trace.positions[0], 0);
  // every full step after warm-up accepts all five drafts
  std::size_t produced = 1;
  for (std::size_t s = 1; s < r.trace.positions.size(); ++s) {
    if (produced >= 3 && produced + 5 < prompt.size()) {
      EXPECT_EQ(r.trace.positions[s], 5) << "step " << s;
    }
    produced += static_cast<std::size_t>(r.trace.positions[s]) + 1;
  }
}

TEST(SdDecode, SingleDraftStepsEmitOneOrTwo) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto prompt = random_tokens(rng, 1 + rng.below(40), 1, 5);
    const auto target = random_target(rng, prompt.size());
    const auto r = sd_decode(prompt, target, {1, 4, 1}, 300);
    for (int m : r.trace.positions) EXPECT_TRUE(m == 0 || m == 1);
  }
}

TEST(SdDecode, NoRepetitionMeansNoAcceptance) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto prompt = random_tokens(rng, 5 + rng.below(60), 1, 50);
    const auto target = targets::fresh(prompt.size(), 1000, 150, rng.raw());
    const auto r = sd_decode(prompt, target, {3, 7, 3}, 500);
    EXPECT_EQ(r.output, greedy_decode(prompt, target, 500));
    for (int m : r.trace.positions) EXPECT_EQ(m, 0);
    const auto probe = max_acceptance_probe(prompt, target, {3, 7, 3}, 20, 500);
    for (int m : probe.positions) EXPECT_EQ(m, 0);
  }
}

TEST(SdDecode, LosslessOnRandomCombinations) {
  Rng rng(31337);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto prompt = random_tokens(rng, 1 + rng.below(48), 0, 1 + static_cast<Token>(1 + rng.below(6)));
    const auto target = random_target(rng, prompt.size());
    const auto cfg = random_config(rng);
    const std::size_t max_tokens = 1 + rng.below(250);
    const auto r = sd_decode(prompt, target, cfg, max_tokens);
    if (r.output != greedy_decode(prompt, target, max_tokens)) ++mismatches;
    std::size_t accepted = 0;
    for (int m : r.trace.positions) {
      ASSERT_GE(m, 0);
      ASSERT_LE(m, cfg.k);
      accepted += static_cast<std::size_t>(m);
    }
    ASSERT_GE(r.output.size(), accepted);
    ASSERT_LE(r.output.size(), accepted + r.trace.positions.size());
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Probe, CopyTargetReachesCap) {
  const auto prompt = distinct_prompt(200);
  const auto target = targets::copy(prompt.size());
  const auto trace = max_acceptance_probe(prompt, target, {3, 7, 3}, 20, 1000);
  ASSERT_EQ(trace.positions.size(), 201u);
  for (std::size_t t = 3; t + 20 < prompt.size(); ++t) EXPECT_EQ(trace.positions[t], 20) << "t=" << t;
  EXPECT_NO_THROW(validate_trace(trace, 20));
  const auto r = simulate(trace, policy::OracleK{}, CostModel(), 1);
  EXPECT_EQ(r.acceptance_ratio, 1.0);
  EXPECT_EQ(trace.method, "ngram");
  EXPECT_EQ(trace.model, "copy");
}

TEST(Probe, NeverExceedsCap) {
  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto prompt = random_tokens(rng, 1 + rng.below(40), 1, 4);
    const auto target = random_target(rng, prompt.size());
    const int cap = 1 + static_cast<int>(rng.below(20));
    const auto trace = max_acceptance_probe(prompt, target, random_config(rng), cap, 200);
    EXPECT_NO_THROW(validate_trace(trace, cap));
    EXPECT_EQ(trace.positions.size(), greedy_decode(prompt, target, 200).size());
  }
}

TEST(Targets, Deterministic) {
  const TokenSequence prompt = {3, 1, 4, 1, 5, 9, 2, 6};
  for (int rep = 0; rep < 2; ++rep) {
    EXPECT_EQ(greedy_decode(prompt, targets::copy_edit(prompt.size(), 3, 99, 16), 100),
              greedy_decode(prompt, targets::copy_edit(prompt.size(), 3, 99, 16), 100));
    EXPECT_EQ(greedy_decode(prompt, targets::automaton(prompt.size(), 2, 5, 4, 60), 100),
              greedy_decode(prompt, targets::automaton(prompt.size(), 2, 5, 4, 60), 100));
  }
  const auto copy = greedy_decode(prompt, targets::copy(prompt.size()), 100);
  ASSERT_EQ(copy.size(), prompt.size() + 1);
  EXPECT_TRUE(std::equal(prompt.begin(), prompt.end(), copy.begin()));
  EXPECT_EQ(copy.back(), 0u);
}
