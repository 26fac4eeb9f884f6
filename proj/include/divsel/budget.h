#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace divsel {

// Stage cost coefficients (seconds per unit) and decode throughput.
struct CostConstants {
  double c_ann = 0.0;    // per ln N
  double c_bm25 = 0.0;   // per query term
  double c_sim = 0.0;    // per similarity (L * K of them)
  double c_delta = 0.0;  // per greedy step
  double c_sum = 0.0;    // per history turn
  double c_fmt = 0.0;    // per rendered exemplar
  double r_tok = 1.0;    // tokens per second

  void validate() const;

  // Flat JSON object with the seven keys above.
  static CostConstants load(const std::filesystem::path& path);
  static CostConstants parse(const std::string& json_text);
  std::string to_json() const;
};

struct LatencyCounters {
  std::size_t similarity_ops = 0;  // greedy similarity computations
  std::size_t verifier_calls = 0;
  std::size_t prompt_tokens = 0;   // |prompt|
  std::size_t generated_tokens = 0;
  std::size_t turns = 0;           // |C|
  std::size_t query_terms = 0;
  std::size_t pool_size = 0;       // L actually used
  std::size_t selected = 0;        // K actually used
  std::size_t memory_size = 0;     // N
};

enum class ReportKind { kModeled, kMeasured };

// Either modeled or measured, never a mix.
struct LatencyReport {
  ReportKind kind = ReportKind::kModeled;
  double t_ann = 0.0;
  double t_div = 0.0;
  double t_prompt = 0.0;
  double t_llm = 0.0;
  double budget = 0.0;  // B; 0 when not set
  LatencyCounters counters;

  double total() const { return t_ann + t_div + t_prompt + t_llm; }
  bool within_budget() const { return budget <= 0.0 || total() <= budget; }
};

struct ModelInputs {
  std::size_t memory_size = 1;  // N
  std::size_t query_terms = 0;
  std::size_t pool_size = 0;    // L
  std::size_t k = 0;
  std::size_t turns = 0;
  std::size_t prompt_tokens = 0;
  std::size_t generated_tokens = 0;
};

// t_ann = c_ann ln N + c_bm25 terms; t_div = c_sim L K + c_delta K;
// t_prompt = c_sum |C| + c_fmt K; t_llm = (|prompt| + T_gen) / r_tok.
LatencyReport model_latency(const CostConstants& c, const ModelInputs& in, double budget = 0.0);

struct BudgetDecision {
  std::size_t pool_size = 0;
  std::size_t k = 0;
  std::size_t label_cap = 0;  // passed through untouched
  bool over_budget = false;   // floor reached and still over B
  std::size_t iterations = 0;
  LatencyReport modeled;
};

// Shrinks (L, K) until the modeled total fits B: halve L (floor K) first,
// then decrement K (floor 1) with L following K down. Prompt tokens are
// re-estimated as base + tokens_per_exemplar * K.
BudgetDecision budget_control(const CostConstants& c, ModelInputs in, std::size_t label_cap,
                              double budget, std::size_t base_prompt_tokens,
                              std::size_t tokens_per_exemplar);

// Acc - lambda * max(0, t / B - 1).
double scalarized_objective(double accuracy, double t_total, double budget, double lambda_penalty);

// Least-squares fit of the stage constants to measured reports, one stage at
// a time (two regressors each, no intercept). Negative fits are clamped to 0.
// If no throughput can be inferred (e.g. an in-process verifier), r_tok is
// set to kUnmeasuredThroughput.
CostConstants calibrate(std::span<const LatencyReport> measured);
inline constexpr double kUnmeasuredThroughput = 1e12;

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

}  // namespace divsel
