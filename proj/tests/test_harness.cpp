#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "divsel/error.h"
#include "divsel/harness.h"
#include "divsel/metrics.h"
#include "divsel/synth.h"

using namespace divsel;

namespace {

SynthSpec small_spec(double ambiguity, std::size_t turns = 6) {
  SynthSpec s;
  s.labels = 12;
  s.per_label = 10;
  s.instances = 30;
  s.dim = 16;
  s.history_turns = turns;
  s.ambiguity = ambiguity;
  s.seed = 11;
  return s;
}

struct Fixture {
  explicit Fixture(double ambiguity, std::size_t turns = 6)
      : corpus(synth_corpus(small_spec(ambiguity, turns))),
        memory(Memory::build(corpus.memory)),
        weights(EncoderWeights::defaults(memory.dim())),
        verifiers(make_verifier_factory(VerifierSpec{})) {}

  SynthCorpus corpus;
  Memory memory;
  EncoderWeights weights;
  VerifierFactory verifiers;
};

PipelineConfig small_config(Method m) {
  PipelineConfig p;
  p.method = m;
  p.selection.k = 3;
  p.retrieval.pool_size = 40;
  return p;
}

}  // namespace

TEST(Metrics, JgaExamples) {
  const std::vector<std::string> pred{"Book_Flight", " weather ", "greet"};
  const std::vector<std::string> gold{"book_flight", "weather", "goodbye"};
  EXPECT_NEAR(jga(pred, gold), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(jga(std::vector<std::string>{"a"}, gold), ConfigError);
  EXPECT_THROW(jga(std::vector<std::string>{}, std::vector<std::string>{}), ConfigError);
}

TEST(Metrics, AgaExamplesAndSkipRule) {
  const std::vector<SlotMap> gold{{{"hotel-area", "north"}, {"hotel-stars", "4"}},
                                  {{"hotel-area", "north"}, {"hotel-day", "not_mentioned"}},
                                  {{"hotel-day", "not_mentioned"}}};
  const std::vector<SlotMap> pred{{{"hotel-area", "north"}, {"hotel-stars", "3"}},
                                  {{"hotel-area", "North"}},
                                  {}};
  EXPECT_NEAR(aga(pred, gold), 0.75, 1e-15);
  const std::vector<SlotMap> one_gold{gold[0]};
  const std::vector<SlotMap> one_pred{pred[0]};
  EXPECT_NEAR(aga(one_pred, one_gold), 0.5, 1e-15);
  const std::vector<SlotMap> skipped{gold[2]};
  EXPECT_THROW(aga(std::vector<SlotMap>{{}}, skipped), ConfigError);
  EXPECT_THROW(aga(one_pred, gold), ConfigError);
}

TEST(Metrics, CanonicalStateRoundTrip) {
  const SlotMap s{{"Train-Day", " Monday"}, {"hotel-area", "north"}};
  const std::string c = canonical_state(s);
  EXPECT_EQ(c, "hotel-area=north;train-day=monday");
  EXPECT_EQ(canonical_state(parse_state(c)), c);
  EXPECT_EQ(canonical_state({}), "");
  EXPECT_THROW(parse_state("hotel-area"), ConfigError);
}

TEST(Metrics, MeanAndSampleStd) {
  const std::vector<double> v{0.5, 0.7, 0.9};
  EXPECT_NEAR(mean(v), 0.7, 1e-15);
  EXPECT_NEAR(sample_std(v), 0.2, 1e-15);
  EXPECT_EQ(sample_std(std::vector<double>{0.4}), 0.0);
}

TEST(Corpus, RoundTripAndErrors) {
  const SynthCorpus c = synth_corpus(small_spec(0.5));
  std::stringstream a;
  write_corpus(a, c.instances);
  const auto back = read_corpus(a);
  ASSERT_EQ(back.size(), c.instances.size());
  std::stringstream b;
  write_corpus(b, back);
  EXPECT_EQ(a.str(), b.str());

  std::stringstream slots(
      R"({"id":"x","turns":[],"current":"hi","current_embedding":[1,0],"gold":{"b":"Two","a":"one"}})"
      "\n");
  EXPECT_EQ(read_corpus(slots).at(0).gold, "a=one;b=two");

  std::stringstream bad("\n{\"id\":\"x\"}\n");
  try {
    read_corpus(bad);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Synth, DeterministicBytes) {
  auto bytes = [](std::uint64_t seed) {
    SynthSpec s = small_spec(0.6);
    s.seed = seed;
    const SynthCorpus c = synth_corpus(s);
    std::stringstream out;
    write_records(out, c.memory);
    write_corpus(out, c.instances);
    return out.str();
  };
  EXPECT_EQ(bytes(3), bytes(3));
  EXPECT_NE(bytes(3), bytes(4));
}

TEST(Pipeline, UnambiguousQueriesAreCoveredByTopk) {
  const Fixture f(0.0);
  const RunSummary s =
      evaluate(f.corpus.instances, f.memory, small_config(Method::kTopk), f.verifiers, f.weights, true);
  EXPECT_GE(s.coverage, 0.95);
  EXPECT_EQ(s.violations, 0u);
}

TEST(Pipeline, DiversityRecoversAmbiguousGold) {
  const Fixture f(1.0);
  std::size_t wins = 0;
  for (const auto& inst : f.corpus.instances) {
    auto v1 = f.verifiers(inst, 1);
    auto v2 = f.verifiers(inst, 1);
    const auto ldra = run_pipeline(inst, small_config(Method::kLdra), f.memory, *v1, f.weights);
    const auto topk = run_pipeline(inst, small_config(Method::kTopk), f.memory, *v2, f.weights);
    EXPECT_TRUE(ldra.violations.empty());
    if (ldra.prediction == inst.gold && topk.prediction != inst.gold) ++wins;
  }
  EXPECT_GT(wins, 0u);
}

TEST(Pipeline, ZeroShotAndStageTags) {
  const Fixture f(0.5);
  EvalInstance inst = f.corpus.instances.front();
  inst.dialogue.turns.clear();
  auto v = f.verifiers(inst, 1);
  const auto r = run_pipeline(inst, small_config(Method::kLdra), f.memory, *v, f.weights);
  EXPECT_EQ(r.prompt.summary_turns, 0u);
  EXPECT_FALSE(r.prediction.empty());

  inst.dialogue.current_embedding.push_back(0.0);
  try {
    run_pipeline(inst, small_config(Method::kLdra), f.memory, *v, f.weights);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "encode");
  }
}

TEST(Pipeline, DeterministicRuns) {
  const Fixture f(0.6);
  for (Method m : {Method::kLdra, Method::kRandom, Method::kTopkRandAdd, Method::kMmr}) {
    PipelineConfig p = small_config(m);
    const auto a = evaluate(f.corpus.instances, f.memory, p, f.verifiers, f.weights, true);
    const auto b = evaluate(f.corpus.instances, f.memory, p, f.verifiers, f.weights, true);
    const std::vector<RunSummary> ra{a}, rb{b};
    EXPECT_EQ(run_report(ra, false), run_report(rb, false)) << to_string(m);
  }
}

TEST(Pipeline, CoverageBridgeUnderMock) {
  const Fixture f(0.6);
  for (Method m : {Method::kLdra, Method::kTopk, Method::kFps}) {
    const auto s = evaluate(f.corpus.instances, f.memory, small_config(m), f.verifiers, f.weights, true);
    EXPECT_EQ(s.violations, 0u);
    EXPECT_DOUBLE_EQ(s.accuracy, s.coverage);
  }
}

TEST(Config, ParseRoundTripHash) {
  const ExperimentConfig d = ExperimentConfig::parse("{}");
  EXPECT_EQ(d.pipeline.selection.k, 6u);
  EXPECT_EQ(d.seeds.size(), 3u);
  const ExperimentConfig c = ExperimentConfig::parse(
      R"({"method":"topk","selection":{"alpha":0.25,"k":4},"fairness":{"shuffle_seed":9},"seeds":[5]})");
  EXPECT_EQ(c.pipeline.method, Method::kTopk);
  EXPECT_EQ(c.pipeline.selection.alpha, 0.25);
  EXPECT_EQ(*c.fairness.shuffle_seed, 9u);
  EXPECT_EQ(ExperimentConfig::parse(c.to_json()).to_json(), c.to_json());
  EXPECT_EQ(ExperimentConfig::parse(c.to_json()).hash(), c.hash());
  EXPECT_NE(c.hash(), d.hash());
  EXPECT_THROW(ExperimentConfig::parse(R"({"selection":{"alhpa":1}})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"seeds":[]})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(R"({"fairness":{"token_targets":[300,200]}})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[1]"), ConfigError);
}

TEST(Sweep, RowsMatchPerSeedEvaluation) {
  const Fixture f(0.6);
  ExperimentConfig cfg;
  cfg.pipeline = small_config(Method::kLdra);
  cfg.seeds = {1, 2};
  SweepGrid grid;
  grid.ks = {1, 3};
  grid.alphas = {0.0, 1.0};
  const auto rows = sweep(f.corpus.instances, f.memory, cfg, grid, f.verifiers, f.weights);
  ASSERT_EQ(rows.size(), 2u * 2u * 2u);
  for (const auto& row : rows) {
    ASSERT_EQ(row.accuracies.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      PipelineConfig p = cfg.pipeline;
      p.method = row.method;
      p.selection.k = row.k;
      p.selection.alpha = row.alpha;
      p.seed = cfg.seeds[i];
      const auto s = evaluate(f.corpus.instances, f.memory, p, f.verifiers, f.weights, true);
      EXPECT_DOUBLE_EQ(row.accuracies[i], s.accuracy);
    }
    EXPECT_NEAR(row.mean_accuracy, (row.accuracies[0] + row.accuracies[1]) / 2, 1e-15);
    EXPECT_NEAR(row.std_accuracy, std::abs(row.accuracies[0] - row.accuracies[1]) / std::sqrt(2.0),
                1e-15);
  }
  EXPECT_EQ(sweep_report(rows),
            sweep_report(sweep(f.corpus.instances, f.memory, cfg, grid, f.verifiers, f.weights)));
}

TEST(Grid, SinglePointMatchesEvaluate) {
  const Fixture f(0.6);
  ExperimentConfig cfg;
  cfg.pipeline = small_config(Method::kLdra);
  GridSpec g;
  g.alphas = {0.5};
  g.taus = {0.2};
  g.caps = {1};
  g.pool_sizes = {40};
  g.ks = {3};
  g.lambda_vecs = {0.6};
  g.mus = {0.05};
  CostConstants costs;
  costs.c_sim = 1e-4;
  costs.r_tok = 1000;
  const GridResult r =
      grid_search(f.corpus.instances, f.memory, cfg, g, costs, 10.0, 1.0, f.verifiers, f.weights);
  ASSERT_EQ(r.evaluated.size(), 1u);
  PipelineConfig p = cfg.pipeline;
  p.selection.alpha = 0.5;
  p.selection.tau = 0.2;
  p.selection.mu = 0.05;
  p.seed = cfg.seeds.front();
  const auto s = evaluate(f.corpus.instances, f.memory, p, f.verifiers, f.weights, true);
  EXPECT_DOUBLE_EQ(r.evaluated[0].accuracy, s.accuracy);
  EXPECT_DOUBLE_EQ(r.evaluated[0].objective, s.accuracy);
  EXPECT_EQ(grid_report(r).size(), 2u);
}

TEST(Grid, HeavyPenaltyPicksCheapestPool) {
  const Fixture f(0.6);
  ExperimentConfig cfg;
  cfg.pipeline = small_config(Method::kLdra);
  GridSpec g;
  g.alphas = {0.5};
  g.taus = {0.2};
  g.caps = {1};
  g.pool_sizes = {40, 20, 10};
  g.ks = {3};
  g.lambda_vecs = {0.6};
  g.mus = {0.05};
  EXPECT_EQ(g.size(), 3u);
  CostConstants costs;
  costs.c_sim = 1.0;
  costs.r_tok = kUnmeasuredThroughput;
  const GridResult r =
      grid_search(f.corpus.instances, f.memory, cfg, g, costs, 1.0, 1e6, f.verifiers, f.weights);
  EXPECT_EQ(r.evaluated[r.best].config.retrieval.pool_size, 10u);
  g.ks.clear();
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Fairness, TokensMatchAcrossArms) {
  const Fixture f(0.6, 24);
  ExperimentConfig cfg;
  cfg.pipeline = small_config(Method::kLdra);
  cfg.fairness.token_targets = {260, 330};
  const FairnessReport rep = fairness_suite(f.corpus.instances, f.memory, cfg, f.verifiers, f.weights);
  ASSERT_EQ(rep.targets.size(), 2u);
  EXPECT_TRUE(rep.ok());
  for (const auto& t : rep.targets) {
    ASSERT_FALSE(t.skipped) << t.reason;
    ASSERT_EQ(t.arms.size(), 5u);
    EXPECT_LE(t.max_deviation, kFairnessTolerance);
    EXPECT_DOUBLE_EQ(t.arms[3].accuracy, t.arms[0].accuracy);
    for (const auto& a : t.arms) EXPECT_EQ(a.violations, 0u) << a.name;
  }
  EXPECT_EQ(fairness_report(rep).size(),
            fairness_report(fairness_suite(f.corpus.instances, f.memory, cfg, f.verifiers, f.weights))
                .size());
}
