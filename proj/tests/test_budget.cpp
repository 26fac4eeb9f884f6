#include <gtest/gtest.h>

#include <cmath>

#include "divsel/budget.h"
#include "divsel/error.h"
#include "divsel/rng.h"

using namespace divsel;

namespace {

CostConstants sample_constants() {
  CostConstants c;
  c.c_ann = 2e-3;
  c.c_bm25 = 1e-4;
  c.c_sim = 5e-6;
  c.c_delta = 3e-5;
  c.c_sum = 2e-4;
  c.c_fmt = 1e-4;
  c.r_tok = 500;
  return c;
}

}  // namespace

TEST(Model, TokenThroughputOnly) {
  CostConstants c;
  c.r_tok = 100;
  ModelInputs in;
  in.prompt_tokens = 300;
  in.generated_tokens = 100;
  const LatencyReport r = model_latency(c, in);
  EXPECT_DOUBLE_EQ(r.t_llm, 4.0);
  EXPECT_DOUBLE_EQ(r.t_ann + r.t_div + r.t_prompt, 0.0);
  EXPECT_DOUBLE_EQ(r.total(), 4.0);
}

TEST(Model, LinearityAndLogN) {
  const CostConstants c = sample_constants();
  ModelInputs in;
  in.memory_size = 1000;
  in.pool_size = 64;
  in.k = 4;
  const LatencyReport a = model_latency(c, in);
  in.pool_size = 128;
  const LatencyReport b = model_latency(c, in);
  EXPECT_NEAR(b.t_div - c.c_delta * 4, 2 * (a.t_div - c.c_delta * 4), 1e-15);
  in.memory_size = 4000;
  const LatencyReport n4 = model_latency(c, in);
  EXPECT_NEAR(n4.t_ann - b.t_ann, c.c_ann * std::log(4.0), 1e-15);
  EXPECT_LE(b.t_div, c.c_sim * 128 * 4 + c.c_delta * 4 + 1e-15);
  c.validate();
  CostConstants bad = c;
  bad.r_tok = 0;
  EXPECT_THROW(model_latency(bad, in), ConfigError);
  in.memory_size = 0;
  EXPECT_THROW(model_latency(c, in), ConfigError);
}

TEST(Model, ConstantsJsonRoundTrip) {
  const CostConstants c = sample_constants();
  const CostConstants back = CostConstants::parse(c.to_json());
  EXPECT_EQ(back.c_sim, c.c_sim);
  EXPECT_EQ(back.r_tok, c.r_tok);
  EXPECT_THROW(CostConstants::parse("{\"c_ann\": 1}"), ConfigError);
  EXPECT_THROW(CostConstants::parse("[]"), ConfigError);
}

TEST(Control, NoOpWhenUnderBudget) {
  const CostConstants c = sample_constants();
  ModelInputs in;
  in.pool_size = 128;
  in.k = 6;
  const BudgetDecision d = budget_control(c, in, 1, 100.0, 200, 15);
  EXPECT_EQ(d.pool_size, 128u);
  EXPECT_EQ(d.k, 6u);
  EXPECT_EQ(d.iterations, 0u);
  EXPECT_FALSE(d.over_budget);
}

TEST(Control, HalvesLWhenSimilarityDominates) {
  CostConstants c;
  c.c_sim = 1e-3;
  c.r_tok = 1e12;
  ModelInputs in;
  in.pool_size = 256;
  in.k = 8;
  const double t = model_latency(c, in).total();
  const BudgetDecision d = budget_control(c, in, 2, t / 2, 0, 0);
  EXPECT_LE(d.pool_size, 128u);
  EXPECT_EQ(d.k, 8u);
  EXPECT_EQ(d.label_cap, 2u);
  EXPECT_LE(d.modeled.total(), t / 2);
}

TEST(Control, FloorFlagsOverBudget) {
  CostConstants c;
  c.r_tok = 1;
  ModelInputs in;
  in.pool_size = 100;
  in.k = 5;
  const BudgetDecision d = budget_control(c, in, 1, 1.0, 500, 10);
  EXPECT_TRUE(d.over_budget);
  EXPECT_EQ(d.k, 1u);
  EXPECT_EQ(d.pool_size, 1u);
}

TEST(Control, TerminatesWithinBoundAndNeverGrows) {
  Rng rng(41);
  for (int t = 0; t < 500; ++t) {
    CostConstants c = sample_constants();
    c.r_tok = rng.uniform(10, 5000);
    ModelInputs in;
    in.memory_size = 1 + rng.below(100000);
    in.k = 1 + rng.below(10);
    in.pool_size = in.k + rng.below(300);
    in.turns = rng.below(30);
    const double budget = rng.uniform(0.01, 3.0);
    const BudgetDecision d = budget_control(c, in, 1, budget, rng.below(400), rng.below(30));
    EXPECT_LE(static_cast<double>(d.iterations), std::log2(static_cast<double>(in.pool_size)) + in.k);
    EXPECT_LE(d.pool_size, in.pool_size);
    EXPECT_LE(d.k, in.k);
    EXPECT_GE(d.pool_size, d.k);
    if (!d.over_budget) EXPECT_LE(d.modeled.total(), budget);
  }
}

TEST(Objective, Examples) {
  EXPECT_DOUBLE_EQ(scalarized_objective(0.8, 1.0, 1.0, 0.5), 0.8);
  EXPECT_NEAR(scalarized_objective(0.8, 2.0, 1.0, 0.5), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(scalarized_objective(0.8, 0.2, 1.0, 0.5), 0.8);
  EXPECT_THROW(scalarized_objective(0.8, 1.0, 0.0, 0.5), ConfigError);
  EXPECT_THROW(scalarized_objective(0.8, 1.0, 1.0, 0.0), ConfigError);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(0, 5), dt = rng.uniform(0, 1), a = rng.uniform();
    EXPECT_GE(scalarized_objective(a, t, 1.0, 0.7), scalarized_objective(a, t + dt, 1.0, 0.7));
    EXPECT_GT(scalarized_objective(a + 0.01, t, 1.0, 0.7), scalarized_objective(a, t, 1.0, 0.7));
  }
}

// Reports generated from known constants must be fitted back exactly.
TEST(Calibrate, RecoversGeneratingConstants) {
  const CostConstants truth = sample_constants();
  Rng rng(5);
  std::vector<LatencyReport> reports;
  for (int i = 0; i < 40; ++i) {
    ModelInputs in;
    in.memory_size = 10 + rng.below(100000);
    in.query_terms = rng.below(20);
    in.pool_size = 16 + rng.below(256);
    in.k = 1 + rng.below(10);
    in.turns = rng.below(30);
    in.prompt_tokens = 100 + rng.below(900);
    in.generated_tokens = rng.below(10);
    LatencyReport r = model_latency(truth, in);
    r.kind = ReportKind::kMeasured;
    reports.push_back(r);
  }
  const CostConstants fit = calibrate(reports);
  EXPECT_NEAR(fit.c_ann, truth.c_ann, 1e-12);
  EXPECT_NEAR(fit.c_bm25, truth.c_bm25, 1e-12);
  EXPECT_NEAR(fit.c_sim, truth.c_sim, 1e-12);
  EXPECT_NEAR(fit.c_delta, truth.c_delta, 1e-12);
  EXPECT_NEAR(fit.c_sum, truth.c_sum, 1e-12);
  EXPECT_NEAR(fit.c_fmt, truth.c_fmt, 1e-12);
  EXPECT_NEAR(fit.r_tok, truth.r_tok, 1e-6);

  for (auto& r : reports) r.t_llm = 0.0;
  EXPECT_EQ(calibrate(reports).r_tok, kUnmeasuredThroughput);
  reports[0].kind = ReportKind::kModeled;
  EXPECT_THROW(calibrate(reports), ConfigError);
  EXPECT_THROW(calibrate({}), ConfigError);
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2}, 50), 2.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50), 2.5);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, 90), 10.0);
  EXPECT_DOUBLE_EQ(percentile({7}, 90), 7.0);
  EXPECT_THROW(percentile({}, 50), ConfigError);
}
