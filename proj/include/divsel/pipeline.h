#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/budget.h"
#include "divsel/corpus.h"
#include "divsel/encoder.h"
#include "divsel/memory.h"
#include "divsel/prompt.h"
#include "divsel/retrieval.h"
#include "divsel/selection.h"
#include "divsel/verifier.h"

namespace divsel {

enum class Method { kLdra, kTopk, kMmr, kFps, kRandom, kTopkRandAdd };

const char* to_string(Method m);
// Accepts "ldra", "topk", "mmr", "fps", "random", "topk_rand_add".
Method parse_method(std::string_view name);

struct PipelineConfig {
  Method method = Method::kLdra;
  SelectionConfig selection;
  RetrievalConfig retrieval;
  BudgetConfig budget;
  double mmr_lambda = 0.5;
  std::size_t shortlist = 3;
  double tau_c = 1.0;
  std::uint64_t seed = 1;
  // Exemplar order is permuted with a stream derived from this seed.
  std::optional<std::uint64_t> shuffle_seed;
  // The first ceil(K/2) exemplars are swapped for random same-label ones.
  bool prefix_replace = false;
  std::string instruction = kDefaultInstruction;

  void validate() const;
};

struct PipelineResult {
  std::string prediction;
  EncodedQuery query;
  Pool pool;
  SelectedSet selection;
  std::vector<PromptExemplar> exemplars;  // handed to compose, before permutation
  Prompt prompt;
  VerifierOutput verdict;
  bool gold_covered = false;  // gold label in the verifier's candidate set
  LatencyReport latency;      // measured
  std::vector<std::string> violations;
};

// encode -> retrieve -> select -> compose -> candidate labels -> verify.
// Stage failures are rethrown as StageError tagged with the stage name.
PipelineResult run_pipeline(const EvalInstance& instance, const PipelineConfig& cfg,
                            const Memory& memory, Verifier& verifier,
                            const EncoderWeights& weights);

// Same, reusing an encoded query and a pool retrieved with the same lambda_vec
// and a pool size >= cfg.retrieval.pool_size. The pool is cut to its prefix.
PipelineResult run_from_pool(const EvalInstance& instance, const PipelineConfig& cfg,
                             const Memory& memory, Verifier& verifier, EncodedQuery query,
                             Pool pool);

// Encode and retrieve only.
struct Retrieved {
  EncodedQuery query;
  Pool pool;
};
Retrieved retrieve_for(const EvalInstance& instance, const RetrievalConfig& cfg,
                       const Memory& memory, const EncoderWeights& weights);

}  // namespace divsel
