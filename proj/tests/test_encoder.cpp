#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "divsel/encoder.h"
#include "divsel/error.h"
#include "gen.h"

using namespace divsel;

namespace {

Matrix random_matrix(Rng& rng, std::size_t d, double scale) {
  Matrix m = Matrix::zeros(d);
  for (auto& x : m.data) x = scale * rng.normal();
  return m;
}

DialogueContext random_context(Rng& rng, std::size_t d, std::size_t turns) {
  DialogueContext ctx;
  ctx.current = "now";
  ctx.current_embedding = gen::random_unit(rng, d);
  for (std::size_t t = 0; t < turns; ++t)
    ctx.turns.push_back({"u", "a", gen::random_unit(rng, d), gen::random_unit(rng, d)});
  return ctx;
}

// Direct transcription of the attention encoder, no shared helpers.
Vec encoder_oracle(const DialogueContext& ctx, const EncoderWeights& w) {
  const std::size_t d = w.dim(), n = ctx.turns.size();
  auto mul = [&](const Matrix& m, const Vec& v) {
    Vec o(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) o[r] += m.data[r * d + c] * v[c];
    return o;
  };
  Vec x = ctx.current_embedding;
  if (n) {
    const Vec q = mul(w.w_q, ctx.current_embedding);
    for (int side = 0; side < 2; ++side) {
      std::vector<double> logits;
      for (std::size_t t = 0; t < n; ++t) {
        const Vec& h = side == 0 ? ctx.turns[t].user_embedding : ctx.turns[t].agent_embedding;
        const Vec k = mul(w.w_k, h);
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) s += q[i] * k[i];
        // turns are 1..n-1 relative to the current turn n
        logits.push_back(s / std::sqrt(double(d)) - w.recency_weight * w.recency_lambda * double(n - t));
      }
      double mx = logits[0], z = 0;
      for (double l : logits) mx = std::max(mx, l);
      for (double l : logits) z += std::exp(l - mx);
      Vec ctxsum(d, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double a = std::exp(logits[t] - mx) / z;
        const Vec& h = side == 0 ? ctx.turns[t].user_embedding : ctx.turns[t].agent_embedding;
        for (std::size_t i = 0; i < d; ++i) ctxsum[i] += a * h[i];
      }
      const Vec v = mul(side == 0 ? w.w_v : w.w_v_prime, ctxsum);
      for (std::size_t i = 0; i < d; ++i) x[i] += v[i];
    }
  }
  double m = 0, var = 0;
  for (double v : x) m += v;
  m /= double(d);
  for (double v : x) var += (v - m) * (v - m);
  var /= double(d);
  for (double& v : x) v = (v - m) / std::sqrt(var + w.ln_epsilon);
  return x;
}

}  // namespace

TEST(Encoder, DefaultWeightsReduceToCurrentUtterance) {
  Rng rng(1);
  const auto ctx = random_context(rng, 12, 5);
  const auto w = EncoderWeights::defaults(12);
  const EncodedQuery z = encode_context(ctx, w);
  const Vec ln = layer_norm(ctx.current_embedding, 1e-5);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(z.z[i], ln[i], 1e-12);
}

TEST(Encoder, MatchesOracleWithRandomWeights) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 4 + rng.below(8);
    const auto ctx = random_context(rng, d, rng.below(7));
    EncoderWeights w = EncoderWeights::defaults(d);
    w.w_q = random_matrix(rng, d, 0.7);
    w.w_k = random_matrix(rng, d, 0.7);
    w.w_v = random_matrix(rng, d, 0.3);
    w.w_v_prime = random_matrix(rng, d, 0.3);
    w.recency_lambda = rng.uniform();
    w.recency_weight = rng.uniform(0, 2);
    const EncodedQuery got = encode_context(ctx, w);
    const Vec want = encoder_oracle(ctx, w);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(got.z[i], want[i], 1e-10);
    if (!ctx.turns.empty()) {
      double sb = 0, sg = 0;
      for (double b : got.beta) sb += b;
      for (double g : got.gamma) sg += g;
      EXPECT_NEAR(sb, 1.0, 1e-12);
      EXPECT_NEAR(sg, 1.0, 1e-12);
    }
  }
}

TEST(Encoder, StrongRecencyAttendsToLastTurn) {
  Rng rng(3);
  const auto ctx = random_context(rng, 8, 6);
  EncoderWeights w = EncoderWeights::defaults(8);
  w.recency_lambda = 5.0;
  w.recency_weight = 10.0;
  const EncodedQuery z = encode_context(ctx, w);
  EXPECT_GT(z.beta.back(), 0.999);
}

TEST(Encoder, EmptyHistoryAndErrors) {
  Rng rng(4);
  auto ctx = random_context(rng, 6, 0);
  EXPECT_NO_THROW(encode_context(ctx, EncoderWeights::defaults(6)));
  EXPECT_THROW(encode_context(ctx, EncoderWeights::defaults(5)), DimensionError);
  ctx.current_embedding[0] = std::nan("");
  EXPECT_THROW(encode_context(ctx, EncoderWeights::defaults(6)), DimensionError);
  EncoderWeights bad = EncoderWeights::defaults(6);
  bad.recency_lambda = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Encoder, WeightsRoundTrip) {
  Rng rng(5);
  EncoderWeights w = EncoderWeights::defaults(5);
  w.w_v = random_matrix(rng, 5, 1.0);
  w.recency_lambda = 0.25;
  w.recency_weight = 1.5;
  const auto path = std::filesystem::temp_directory_path() / ("divsel_enc_" + std::to_string(::getpid()));
  w.save(path);
  const EncoderWeights back = EncoderWeights::load(path);
  EXPECT_EQ(back.w_v.data, w.w_v.data);
  EXPECT_EQ(back.recency_lambda, 0.25);
  EXPECT_EQ(back.recency_weight, 1.5);
  std::filesystem::remove(path);
}

TEST(Encoder, SoftmaxAndLayerNorm) {
  const auto p = softmax(std::vector<double>{1000.0, 1000.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  const Vec ln = layer_norm(Vec{1, 2, 3}, 0.0);
  EXPECT_NEAR(ln[0] + ln[1] + ln[2], 0.0, 1e-15);
  EXPECT_NEAR(ln[2], std::sqrt(1.5), 1e-12);
}

TEST(Losses, MetricLossExamples) {
  const std::vector<EmbeddingPair> same = {{{1, 0}, {1, 0}, true}};
  EXPECT_NEAR(metric_loss(same, 0.5), 0.0, 1e-15);
  const std::vector<EmbeddingPair> orth = {{{1, 0}, {0, 1}, true}};
  EXPECT_NEAR(metric_loss(orth, 0.5), 1.0, 1e-15);
  const std::vector<EmbeddingPair> neg = {{{1, 0}, {1, 0}, false}};
  EXPECT_NEAR(metric_loss(neg, 0.5), 0.5, 1e-15);
  EXPECT_THROW(metric_loss(neg, 1.0), ConfigError);
}

TEST(Losses, DistillLossExamples) {
  const std::map<std::string, double> t = {{"a", 0.0}, {"b", 0.0}};
  EXPECT_NEAR(distill_loss(t, 1.0, t), std::log(2.0), 1e-12);
  const std::map<std::string, double> other = {{"a", 0.0}, {"c", 0.0}};
  EXPECT_THROW(distill_loss(t, 1.0, other), ConfigError);
  EXPECT_THROW(distill_loss(t, 0.0, t), ConfigError);
}

TEST(GradientCheck, MetricLossAtRandomPoints) {
  Rng rng(6);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 50; ++trial) {
    std::vector<EmbeddingPair> pairs;
    std::vector<bool> same;
    for (int p = 0; p < 3; ++p) {
      const bool s = rng.uniform() < 0.5;
      pairs.push_back({gen::random_unit(rng, 5), gen::random_unit(rng, 5), s});
      same.push_back(s);
    }
    const MetricLossObjective f(same, 5, 0.3);
    const auto x = MetricLossObjective::pack(pairs);
    EXPECT_NEAR(f.value(x), metric_loss(pairs, 0.3), 1e-12);
    const GradientCheck g = finite_difference_check(f, x, 1e-5);
    if (g.non_smooth) continue;
    ++checked;
    EXPECT_LE(g.max_relative_error, 1e-4);
  }
  EXPECT_GE(checked, 50);
}

TEST(GradientCheck, KinkIsReportedNotChecked) {
  const std::vector<bool> same = {false};
  const MetricLossObjective f(same, 2, 0.5);
  const double c = 0.5, s = std::sqrt(1 - c * c);
  const std::vector<double> x = {1, 0, c, s};  // cosine exactly at the margin
  EXPECT_TRUE(finite_difference_check(f, x, 1e-5).non_smooth);
  EXPECT_THROW(finite_difference_check(f, x, 1e-2), ConfigError);
}

TEST(GradientCheck, WrongGradientIsCaught) {
  struct Bad : DifferentiableObjective {
    std::size_t size() const override { return 2; }
    double value(std::span<const double> x) const override { return x[0] * x[0] + x[1]; }
    Vec gradient(std::span<const double> x) const override { return {x[0], 1.0}; }
  } bad;
  EXPECT_GT(finite_difference_check(bad, std::vector<double>{1.0, 2.0}, 1e-5).max_relative_error, 0.4);
}
