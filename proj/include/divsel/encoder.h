#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divsel/vec.h"

namespace divsel {

// One past exchange: user utterance and the agent reply that followed.
struct Turn {
  std::string user;
  std::string agent;
  Vec user_embedding;   // h_t
  Vec agent_embedding;  // g_t
};

struct DialogueContext {
  std::vector<Turn> turns;  // oldest first
  std::string current;
  Vec current_embedding;

  std::size_t dim() const { return current_embedding.size(); }
};

// Cross-attention weights for the context encoder.
//
// Defaults (identity query/key, zero value projections) reduce the encoder to
// LN(e(q_n)), i.e. the current utterance alone.
struct EncoderWeights {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Matrix w_v_prime;
  double recency_lambda = 0.0;  // lambda >= 0 in kappa(t, n) = -lambda (n - t)
  double recency_weight = 0.0;  // rho >= 0
  double ln_epsilon = 1e-5;

  static EncoderWeights defaults(std::size_t dim);

  std::size_t dim() const { return w_q.dim; }
  // Throws ConfigError on mismatched matrix sizes or negative lambda/rho.
  void validate() const;

  // "DIVSEL-ENC", u32 version, u32 d, four d*d row-major matrices, lambda, rho.
  void save(const std::filesystem::path& path) const;
  static EncoderWeights load(const std::filesystem::path& path);

  static constexpr std::uint32_t kFormatVersion = 1;
};

struct EncodedQuery {
  Vec z;                     // context-aware query vector
  std::vector<double> beta;  // attention over past user turns
  std::vector<double> gamma; // attention over past agent turns
};

// z_n = LN(e(q_n) + W_v sum_t beta_t h_t + W_v' sum_t gamma_t g_t), where
// beta and gamma are softmaxes of (W_q e(q_n))^T (W_k x_t) / sqrt(d) plus the
// recency bias rho * kappa(t, n). Empty history leaves both sums zero.
// Throws DimensionError on size mismatch or non-finite embeddings.
EncodedQuery encode_context(const DialogueContext& ctx, const EncoderWeights& w);

// Layer normalization without affine parameters (population variance).
Vec layer_norm(std::span<const double> x, double eps);

std::vector<double> softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// Losses, evaluated as pure functions.

struct EmbeddingPair {
  Vec u;
  Vec v;
  bool same_label = false;
};

// Sum over pairs of (1 - s)_+ for same-label pairs and (s - m)_+ otherwise.
// Requires 0 < margin < 1.
double metric_loss(std::span<const EmbeddingPair> pairs, double margin);

// Cross-entropy of softmax(student) against softmax(teacher / tau_c).
// Both maps must carry the same label set; tau_c > 0.
double distill_loss(const std::map<std::string, double>& teacher_logodds, double tau_c,
                    const std::map<std::string, double>& student_logits);

// A scalar function of a flat parameter vector with an analytic gradient.
class DifferentiableObjective {
 public:
  virtual ~DifferentiableObjective() = default;
  virtual std::size_t size() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual Vec gradient(std::span<const double> x) const = 0;
  // Distance from x to the nearest non-differentiable point, measured in the
  // hinge argument. Smooth objectives return +inf.
  virtual double kink_distance(std::span<const double>) const {
    return std::numeric_limits<double>::infinity();
  }
};

// metric_loss over pairs whose embeddings are packed as
// [u_0, v_0, u_1, v_1, ...], each of dimension `dim`.
class MetricLossObjective final : public DifferentiableObjective {
 public:
  MetricLossObjective(std::vector<bool> same_label, std::size_t dim, double margin);

  static std::vector<double> pack(std::span<const EmbeddingPair> pairs);

  std::size_t size() const override { return same_.size() * 2 * dim_; }
  double value(std::span<const double> x) const override;
  Vec gradient(std::span<const double> x) const override;
  double kink_distance(std::span<const double> x) const override;

 private:
  std::vector<bool> same_;
  std::size_t dim_;
  double margin_;
};

// distill_loss as a function of the student logits (label order as in the
// teacher map); the teacher side is fixed at construction.
class DistillObjective final : public DifferentiableObjective {
 public:
  DistillObjective(const std::map<std::string, double>& teacher_logodds, double tau_c);

  std::size_t size() const override { return target_.size(); }
  double value(std::span<const double> student) const override;
  Vec gradient(std::span<const double> student) const override;

 private:
  std::vector<double> target_;
};

struct GradientCheck {
  double max_relative_error = 0.0;
  bool non_smooth = false;  // point within reach of a hinge kink; not checked
  std::size_t coordinates = 0;
};

// Central differences against the analytic gradient. Relative error per
// coordinate is |a - n| / max(|a|, |n|, 1e-6). Requires h in [1e-6, 1e-3].
GradientCheck finite_difference_check(const DifferentiableObjective& f,
                                      std::span<const double> point, double h);

}  // namespace divsel
