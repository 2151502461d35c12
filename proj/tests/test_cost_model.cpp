#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdperf/cost_model.hpp"
#include "sdperf/random.hpp"

using namespace sdperf;

TEST(ExpectedSpeedup, MatchesMonteCarlo) {
  // 70B draft-model setting: c = 12.5%, alpha = 75%, k = 3.
  const double analytic = expected_speedup({0.75, 3, 0.125});
  const double mc = oracle::monte_carlo_speedup(0.75, 3, 0.125, 10'000'000, 17);
  EXPECT_NEAR(analytic, 1.98863636363636, 1e-12);
  EXPECT_NEAR(mc / analytic, 1.0, 1e-3);
}

TEST(ExpectedSpeedup, Endpoints) {
  EXPECT_DOUBLE_EQ(expected_speedup({0.0, 3, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(expected_speedup({1.0, 3, 0.0}), 4.0);
  EXPECT_DOUBLE_EQ(expected_speedup({1.0, 5, 0.2}), 6.0 / 2.0);
}

TEST(ExpectedSpeedup, AgreesWithClosedForm) {
  Rng rng(1);
  for (int i = 0; i < 20000; ++i) {
    const double alpha = rng.uniform() * (1.0 - 1e-9);
    const int k = 1 + static_cast<int>(rng.below(20));
    const double c = rng.uniform() * 2.0;
    const double a = expected_speedup({alpha, k, c});
    const double b = oracle::closed_form_speedup_hp(alpha, k, c);
    EXPECT_NEAR(a / b, 1.0, 1e-12) << alpha << " " << k << " " << c;
  }
  for (double alpha : {0.0, 0.5, 0.99, 1.0 - 1e-6, 1.0 - 1e-9}) {
    for (int k : {1, 3, 8, 20}) {
      const double b = oracle::closed_form_speedup_hp(alpha, k, 0.125);
      EXPECT_NEAR(expected_speedup({alpha, k, 0.125}) / b, 1.0, 1e-12) << alpha << " " << k;
    }
  }
  // double-precision closed form is fine away from 1
  EXPECT_NEAR(oracle::closed_form_speedup(0.75, 3, 0.125), expected_speedup({0.75, 3, 0.125}), 1e-14);
}

TEST(ExpectedSpeedup, Monotonicity) {
  for (int k = 1; k <= 8; ++k) {
    for (double c : {0.0, 0.05, 0.125, 0.375}) {
      double prev = 0.0;
      for (int i = 0; i <= 100; ++i) {
        const double s = expected_speedup({i / 100.0, k, c});
        EXPECT_GE(s, prev);
        prev = s;
      }
    }
    for (double alpha : {0.0, 0.5, 0.9, 1.0}) {
      double prev = 1e300;
      for (int i = 0; i <= 50; ++i) {
        const double s = expected_speedup({alpha, k, i / 50.0});
        EXPECT_LE(s, prev);
        prev = s;
      }
    }
  }
}

TEST(ExpectedSpeedup, BoundedByKPlusOne) {
  for (int k = 1; k <= 12; ++k) {
    for (int i = 0; i < 100; ++i) EXPECT_LT(expected_speedup({i / 100.0, k, 0.0}), k + 1.0);
    EXPECT_DOUBLE_EQ(expected_speedup({1.0, k, 0.0}), k + 1.0);
  }
}

TEST(ExpectedSpeedup, RejectsOutOfRange) {
  EXPECT_THROW(expected_speedup({1.1, 3, 0.0}), ValidationError);
  EXPECT_THROW(expected_speedup({0.5, 0, 0.0}), ValidationError);
  EXPECT_THROW(expected_speedup({0.5, 3, -0.1}), ValidationError);
}

TEST(StepTime, MemoryBoundExample) {
  const auto model = CostModel::memory_bound(0.010, 0.1, 0.0);
  EXPECT_NEAR(step_time(model, 1, 3, 4), 0.013, 1e-15);
  EXPECT_DOUBLE_EQ(step_time(model, 1, 0, 1), 0.010);
  EXPECT_DOUBLE_EQ(step_time(model, 64, 0, 1), 0.010);
}

TEST(StepTime, ComputeBoundExample) {
  const CostModel model(Regime::compute_bound, {{1, 0.0, 0.002}}, 0.125, 0.05);
  // 1.05 * (3 * 0.125 * 2ms + 4 * 2ms)
  const double expected = 1.05 * (3 * 0.125 * 0.002 + 4 * 0.002);
  EXPECT_NEAR(step_time(model, 1, 3, 4), expected, 1e-15);
  EXPECT_NEAR(step_time(model, 1, 3, 4), 0.0091875, 1e-12);
}

TEST(StepTime, BaselineIdentityAtTableRows) {
  const CostModel model(Regime::memory_bound, {{1, 0.011, 0}, {8, 0.013, 0}, {64, 0.021, 0}}, 0.3, 0.0);
  EXPECT_EQ(step_time(model, 1, 0, 1), 0.011);
  EXPECT_EQ(step_time(model, 8, 0, 1), 0.013);
  EXPECT_EQ(step_time(model, 64, 0, 1), 0.021);
}

TEST(StepTime, InterpolatesAndClamps) {
  const CostModel model(Regime::memory_bound, {{4, 1.0, 0}, {12, 3.0, 0}}, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(model.unit_time(1), 1.0);
  EXPECT_DOUBLE_EQ(model.unit_time(8), 2.0);
  EXPECT_DOUBLE_EQ(model.unit_time(6), 1.5);
  EXPECT_DOUBLE_EQ(model.unit_time(100), 3.0);
}

TEST(StepTime, RegimeShapes) {
  const CostModel mem(Regime::memory_bound, {{1, 2.0, 0}}, 0.0, 0.0);
  const CostModel comp(Regime::compute_bound, {{1, 1.0, 0.5}, {16, 0.5, 2.0}}, 0.0, 0.0);
  for (int b : {1, 3, 16, 40}) {
    double prev = 0.0;
    for (int v = 1; v <= 21; ++v) {
      EXPECT_EQ(mem.target_step_time(b, v), mem.target_step_time(b, 1));
      const double t = comp.target_step_time(b, v);
      EXPECT_GE(t, prev);
      if (v >= 3) {
        // linear in v: constant second difference
        const double d2 = t - 2 * comp.target_step_time(b, v - 1) + comp.target_step_time(b, v - 2);
        EXPECT_NEAR(d2, 0.0, 1e-12);
      }
      prev = t;
    }
  }
}

TEST(StepTime, OverheadIsMultiplicative) {
  const CostModel base(Regime::compute_bound, {{1, 0.5, 0.25}}, 0.2, 0.0);
  for (double o : {0.0, 0.017, 0.08, 0.12}) {
    EXPECT_NEAR(step_time(base.with_overhead(o), 1, 4, 5), (1 + o) * step_time(base, 1, 4, 5), 1e-15);
  }
}

TEST(StepTime, PreconditionsAndConfigErrors) {
  const CostModel model;
  EXPECT_THROW(step_time(model, 1, 0, 0), ValidationError);
  EXPECT_THROW(step_time(model, 0, 0, 1), ValidationError);
  EXPECT_THROW(step_time(model, 1, -1, 1), ValidationError);
  EXPECT_THROW(CostModel(Regime::memory_bound, {}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(CostModel(Regime::memory_bound, {{4, 1.0, 0}, {4, 2.0, 0}}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(CostModel(Regime::memory_bound, {{1, 0.0, 0}}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(CostModel(Regime::compute_bound, {{1, 0.0, 0.0}}, 0.0, 0.0), ConfigError);
  EXPECT_THROW(CostModel(Regime::memory_bound, {{1, 1.0, 0}}, -1.0, 0.0), ConfigError);
}

TEST(CostConfig, ParsesBothRowStyles) {
  const auto mem = parse_cost_model(nlohmann::json::parse(
      R"({"mode":"memory_bound","c":0.1,"table":[{"batch":1,"time_per_token_s":0.01},{"batch":8,"time_s":0.02}]})"));
  EXPECT_EQ(mem.mode(), Regime::memory_bound);
  EXPECT_DOUBLE_EQ(mem.overhead_fraction(), 0.08);
  EXPECT_DOUBLE_EQ(mem.unit_time(8), 0.02);
  EXPECT_DOUBLE_EQ(mem.unit_time(1), 0.01);

  const auto comp = parse_cost_model(nlohmann::json::parse(
      R"({"mode":"compute_bound","c":0.125,"overhead_fraction":0.05,"table":[{"batch":1,"time_per_token_s":0.002}]})"));
  EXPECT_NEAR(step_time(comp, 1, 3, 4), 0.0091875, 1e-12);

  const auto round = parse_cost_model(nlohmann::json::parse(to_json(comp).dump()));
  EXPECT_EQ(step_time(round, 1, 3, 4), step_time(comp, 1, 3, 4));
}

TEST(CostConfig, Errors) {
  EXPECT_THROW(parse_cost_model(nlohmann::json::parse(R"({"mode":"warp","table":[{"batch":1,"time_s":1}]})")),
               ConfigError);
  EXPECT_THROW(parse_cost_model(nlohmann::json::parse(R"({"table":[]})")), ConfigError);
  EXPECT_THROW(parse_cost_model(nlohmann::json::parse(R"({"c":0.1})")), ConfigError);
  EXPECT_THROW(parse_cost_model(nlohmann::json::parse(R"({"table":[{"batch":1}]})")), ConfigError);
  EXPECT_THROW(parse_cost_model(nlohmann::json::parse(R"({"table":[{"batch":"one","time_s":1}]})")), ConfigError);
}
