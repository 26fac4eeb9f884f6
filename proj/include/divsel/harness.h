#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/budget.h"
#include "divsel/corpus.h"
#include "divsel/pipeline.h"

namespace divsel {

struct FairnessConfig {
  std::optional<std::uint64_t> shuffle_seed;
  bool prefix_replace = false;
  std::vector<std::size_t> token_targets{260, 285, 310, 330, 360};
};

struct VerifierSpec {
  std::string kind = "mock";  // "mock" or "endpoint"
  double margin = 4.0;
  std::string url;
  std::string token_env = "DIVSEL_VERIFIER_TOKEN";
  int timeout_ms = 30000;
};

struct ExperimentConfig {
  PipelineConfig pipeline;
  FairnessConfig fairness;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  VerifierSpec verifier;

  void validate() const;
  // JSON object; every key is optional and unknown keys are rejected.
  static ExperimentConfig parse(const std::string& json_text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  std::uint64_t hash() const;
};

using VerifierFactory =
    std::function<std::unique_ptr<Verifier>(const EvalInstance&, std::uint64_t seed)>;
VerifierFactory make_verifier_factory(const VerifierSpec& spec);

struct InstanceRow {
  std::string id;
  std::string gold;
  std::string prediction;
  bool correct = false;
  bool covered = false;
  std::size_t prompt_tokens = 0;
  std::size_t exemplars = 0;
  std::size_t candidates = 0;
  double g = 0.0;
  double dtext = 0.0;
  double r = 0.0;
  std::string stop;
  std::vector<std::string> violations;
  LatencyReport latency;
};

struct RunSummary {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<InstanceRow> rows;
  double accuracy = 0.0;  // exact match, i.e. JGA over instances
  double coverage = 0.0;
  std::optional<double> aga;  // when golds are slot states
  double mean_r = 0.0;
  std::size_t violations = 0;
};

// Retrieved query and pool per instance, reusable across configs that share
// lambda_vec and do not need a larger pool.
struct PoolCache {
  std::vector<Retrieved> entries;
};
PoolCache build_pool_cache(std::span<const EvalInstance> instances, const RetrievalConfig& cfg,
                           const Memory& memory, const EncoderWeights& weights);

// With audit_bridge, rows whose correctness differs from gold coverage are
// flagged (exact under the mock verifier).
RunSummary evaluate(std::span<const EvalInstance> instances, const Memory& memory,
                    const PipelineConfig& cfg, const VerifierFactory& verifiers,
                    const EncoderWeights& weights, bool audit_bridge,
                    const PoolCache* cache = nullptr);

inline constexpr double kFairnessTolerance = 0.02;

struct FairnessArm {
  std::string name;
  double accuracy = 0.0;
  double coverage = 0.0;
  double mean_tokens = 0.0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  std::size_t violations = 0;
};

struct FairnessTarget {
  std::size_t target = 0;
  bool skipped = false;
  std::string reason;
  std::vector<FairnessArm> arms;
  double max_deviation = 0.0;  // max over instances of (max - min) / max tokens
  bool within_tolerance() const { return skipped || max_deviation <= kFairnessTolerance; }
};

struct FairnessReport {
  std::vector<FairnessTarget> targets;
  bool ok() const;
};

// Arms ldra, topk, topk_rand_add, ldra+shuffle and ldra+prefix_replace at
// every token target, all with the summary grown to fill the target.
FairnessReport fairness_suite(std::span<const EvalInstance> instances, const Memory& memory,
                              const ExperimentConfig& cfg, const VerifierFactory& verifiers,
                              const EncoderWeights& weights);

struct SweepGrid {
  std::vector<std::size_t> ks{1, 3, 5, 7, 10};
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<Method> methods{Method::kLdra, Method::kTopk};
};

struct SweepRow {
  Method method = Method::kLdra;
  std::size_t k = 0;
  double alpha = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // per seed
  std::vector<double> mean_rs;     // per seed
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_r = 0.0;
  std::size_t violations = 0;
};

std::vector<SweepRow> sweep(std::span<const EvalInstance> instances, const Memory& memory,
                            const ExperimentConfig& cfg, const SweepGrid& grid,
                            const VerifierFactory& verifiers, const EncoderWeights& weights);

struct GridSpec {
  std::vector<double> alphas{0.2, 0.5, 0.8};
  std::vector<double> taus{0.2, 0.4, 0.6};
  std::vector<std::size_t> caps{1, 2};
  std::vector<std::size_t> pool_sizes{64, 128, 256};
  std::vector<std::size_t> ks{4, 6, 8};
  std::vector<double> lambda_vecs{0.4, 0.6, 0.8};
  std::vector<double> mus{0.0, 0.1, 0.2};

  std::size_t size() const;
  void validate() const;
};

struct GridPoint {
  PipelineConfig config;
  double accuracy = 0.0;
  double mean_latency = 0.0;  // modeled, mean over instances
  double objective = 0.0;
  std::size_t violations = 0;
};

struct GridResult {
  std::vector<GridPoint> evaluated;  // grid enumeration order
  std::size_t best = 0;              // index into evaluated
};

// Maximizes accuracy - lambda_penalty * max(0, E[t] / B - 1) over the grid
// using the first seed of cfg; ties keep the earliest point.
GridResult grid_search(std::span<const EvalInstance> instances, const Memory& memory,
                       const ExperimentConfig& cfg, const GridSpec& grid,
                       const CostConstants& costs, double budget, double lambda_penalty,
                       const VerifierFactory& verifiers, const EncoderWeights& weights);

// Report lines (one JSON object each). Measured timings appear only when
// `timings` is set, so default reports are byte-identical across reruns.
std::string header_line(const ExperimentConfig& cfg, std::string_view command);
std::vector<std::string> run_report(std::span<const RunSummary> runs, bool timings);
std::vector<std::string> fairness_report(const FairnessReport& report);
std::vector<std::string> sweep_report(std::span<const SweepRow> rows);
std::vector<std::string> grid_report(const GridResult& result);

}  // namespace divsel
