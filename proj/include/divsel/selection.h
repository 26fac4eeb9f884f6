#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsel/retrieval.h"
#include "divsel/vec.h"

namespace divsel {

struct SelectionConfig {
  double alpha = 0.5;         // weight of label diversity G in R
  std::size_t k = 6;          // exemplars to select
  double tau = 0.4;           // minimum s(z_n, e_i)
  std::size_t label_cap = 1;  // U
  double mu = 0.05;           // relevance prior on the marginal gain

  void validate() const;
};

// G(S) = 1 - sum_k p_k^2. Throws ConfigError on an empty multiset.
double label_diversity(std::span<const std::string> labels);

// D(S) = 1 - mean pairwise similarity, with similarities clamped at 0 from
// below so D stays in [0, 1]. A singleton has D = 1.
double text_diversity(std::span<const Vec> embeddings);

// alpha * g + (1 - alpha) * d. Throws ConfigError for alpha outside [0, 1].
double r_score(double g, double dtext, double alpha);

// max(0, cosine(a, b)), the pairwise term used inside D.
double clamped_similarity(std::span<const double> a, std::span<const double> b);

// Running label counts and pairwise-similarity sum of a set, enough to
// evaluate G, D and their increments in O(1).
class DiversityState {
 public:
  std::size_t size() const { return size_; }
  std::size_t count(std::string_view label) const;
  const std::map<std::string, std::size_t, std::less<>>& label_counts() const { return counts_; }
  std::uint64_t sum_sq_counts() const { return sum_sq_; }
  // Sum over unordered member pairs of clamped similarity.
  double pair_similarity_sum() const { return pair_sum_; }
  // Mean pairwise similarity; 0 for sets smaller than 2.
  double mean_pairwise_sim() const;

  // Empty set: G = 0, D = 0, so R = 0. Singleton: G = 0, D = 1.
  double g() const;
  double dtext() const;
  double r(double alpha) const { return r_score(g(), dtext(), alpha); }

  // incoming_a = sum over current members of clamped s(e_new, e_j).
  void add(const std::string& label, double incoming_a);

 private:
  std::map<std::string, std::size_t, std::less<>> counts_;
  std::uint64_t sum_sq_ = 0;
  std::size_t size_ = 0;
  double pair_sum_ = 0.0;
};

// G(S + i) - G(S) via 1 - (sum n_k^2 + 2 n_{y_i} + 1) / (m + 1)^2.
double delta_label_diversity(const DiversityState& set, std::string_view incoming_label);

// D(S + i) - D(S) via mean_sim(S + i) = (C(m,2) mean_sim(S) + A) / C(m+1,2).
double delta_text_diversity(const DiversityState& set, double incoming_a);

enum class StopReason {
  kComplete,          // reached K
  kCapLimited,        // remaining threshold-feasible items all hit the label cap
  kThresholdLimited,  // remaining items all fall below tau
  kPoolExhausted,
};

const char* to_string(StopReason r);

struct SelectionStep {
  std::size_t pool_index = 0;
  std::string id;
  double delta_g = 0.0;
  double delta_d = 0.0;
  double delta_r = 0.0;
  double adjusted_gain = 0.0;  // delta_r + mu * s(z_n, e_i)
  double g = 0.0;
  double dtext = 0.0;
  double r = 0.0;
};

struct SelectedSet {
  std::vector<std::size_t> members;  // pool indices, selection order
  DiversityState state;
  double alpha = 0.5;
  std::vector<SelectionStep> steps;  // greedy only
  StopReason stop = StopReason::kComplete;
  std::size_t similarity_ops = 0;
  // A_i for every pool item, against the final members (greedy only).
  std::vector<double> running_sims;

  double g() const { return state.g(); }
  double dtext() const { return state.dtext(); }
  double r() const { return state.r(alpha); }
  std::size_t size() const { return members.size(); }
  bool infeasible() const { return members.empty(); }
  // "tau" or "U" when the selection stopped on a constraint, else "".
  std::string binding_constraint() const;

  std::vector<std::string> ids(const Pool& pool) const;
  std::vector<std::string> labels(const Pool& pool) const;
};

// Greedy maximization of R under tau and U. Each step adds the feasible
// candidate with the largest delta_r + mu * s(z_n, e_i); ties go to higher
// relevance, then smaller id. Running sums A_i are updated once per pick, so
// similarity_ops <= |pool| * K.
SelectedSet greedy_select(const Pool& pool, const SelectionConfig& cfg);

// Exhaustive arg max of R over feasible subsets of size
// min(K, largest feasible size). Ties go to the lexicographically smallest
// sorted id list. Throws ConfigError when C(|pool|, K) exceeds kBruteForceLimit.
SelectedSet brute_force_select(const Pool& pool, const SelectionConfig& cfg);
inline constexpr double kBruteForceLimit = 1e6;

// Maximal marginal relevance:
//   lambda * s(z_n, e_i) - (1 - lambda) * max_{j in S} s(e_i, e_j).
SelectedSet mmr_select(const Pool& pool, std::size_t k, double lambda_mmr, double alpha = 0.5);

// Farthest-point traversal with distance 1 - cosine, seeded at the most
// relevant candidate.
SelectedSet fps_select(const Pool& pool, std::size_t k, double alpha = 0.5);

// First k candidates by relevance.
SelectedSet topk_select(const Pool& pool, std::size_t k, double alpha = 0.5);

// Uniform sample of k candidates without replacement.
SelectedSet random_select(const Pool& pool, std::size_t k, std::uint64_t seed, double alpha = 0.5);

// Rebuilds the diversity bookkeeping of `members` from scratch.
SelectedSet make_selected_set(const Pool& pool, std::vector<std::size_t> members, double alpha);

}  // namespace divsel
