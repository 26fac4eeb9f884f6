#include "divsel/encoder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "divsel/error.h"

namespace divsel {
namespace {

constexpr std::string_view kMagic = "DIVSEL-ENC";

void check_vec(const Vec& v, std::size_t d, const char* what) {
  if (v.size() != d)
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(v.size()) +
                         " != " + std::to_string(d));
  if (!all_finite(v)) throw DimensionError(std::string(what) + ": non-finite entry");
}

// Attention over one history stream (user or agent turns).
std::vector<double> attend(const Vec& query_proj, const std::vector<const Vec*>& keys,
                           const EncoderWeights& w) {
  const std::size_t n = keys.size() + 1;  // current turn index
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.dim()));
  std::vector<double> logits(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t t = i + 1;
    const double kappa = -w.recency_lambda * static_cast<double>(n - t);
    logits[i] = dot(query_proj, w.w_k.apply(*keys[i])) * scale + w.recency_weight * kappa;
  }
  return softmax(logits);
}

double hinge(double x) { return x > 0.0 ? x : 0.0; }

// s(u, v) and its gradients with respect to u and v.
struct CosineGrad {
  double s;
  Vec du;
  Vec dv;
};

CosineGrad cosine_with_grad(std::span<const double> u, std::span<const double> v) {
  const double nu = l2_norm(u), nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw DimensionError("cosine: zero vector");
  const double s = dot(u, v) / (nu * nv);
  CosineGrad g{s, Vec(u.size()), Vec(v.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.du[i] = v[i] / (nu * nv) - s * u[i] / (nu * nu);
    g.dv[i] = u[i] / (nu * nv) - s * v[i] / (nv * nv);
  }
  return g;
}

double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

}  // namespace

EncoderWeights EncoderWeights::defaults(std::size_t dim) {
  EncoderWeights w;
  w.w_q = Matrix::identity(dim);
  w.w_k = Matrix::identity(dim);
  w.w_v = Matrix::zeros(dim);
  w.w_v_prime = Matrix::zeros(dim);
  return w;
}

void EncoderWeights::validate() const {
  const std::size_t d = w_q.dim;
  if (d == 0) throw ConfigError("encoder weights have dimension 0");
  for (const Matrix* m : {&w_q, &w_k, &w_v, &w_v_prime})
    if (m->dim != d || m->data.size() != d * d)
      throw ConfigError("encoder weight matrices must all be " + std::to_string(d) + "x" +
                        std::to_string(d));
  if (!(recency_lambda >= 0.0)) throw ConfigError("recency lambda must be >= 0");
  if (!(recency_weight >= 0.0)) throw ConfigError("recency weight rho must be >= 0");
  if (!(ln_epsilon > 0.0)) throw ConfigError("layer-norm epsilon must be > 0");
}

void EncoderWeights::save(const std::filesystem::path& path) const {
  validate();
  static_assert(std::endian::native == std::endian::little);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  out.write(kMagic.data(), kMagic.size());
  put(kFormatVersion);
  put(static_cast<std::uint32_t>(dim()));
  for (const Matrix* m : {&w_q, &w_k, &w_v, &w_v_prime})
    for (double x : m->data) put(x);
  put(recency_lambda);
  put(recency_weight);
  if (!out) throw FormatError("write failed for " + path.string());
}

EncoderWeights EncoderWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open encoder weights " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto take = [&](auto& v) {
    if (data.size() - pos < sizeof(v)) throw FormatError(path.string() + ": truncated");
    std::memcpy(&v, data.data() + pos, sizeof(v));
    pos += sizeof(v);
  };
  if (data.compare(0, kMagic.size(), kMagic) != 0)
    throw FormatError(path.string() + ": missing DIVSEL-ENC header");
  pos = kMagic.size();
  std::uint32_t version = 0, d = 0;
  take(version);
  if (version != kFormatVersion)
    throw VersionError(path.string() + ": format version " + std::to_string(version) +
                       ", reader expects " + std::to_string(kFormatVersion));
  take(d);
  if (d == 0 || d > 65536) throw FormatError(path.string() + ": bad dimension");
  EncoderWeights w;
  for (Matrix* m : {&w.w_q, &w.w_k, &w.w_v, &w.w_v_prime}) {
    *m = Matrix::zeros(d);
    for (double& x : m->data) take(x);
  }
  take(w.recency_lambda);
  take(w.recency_weight);
  if (pos != data.size()) throw FormatError(path.string() + ": trailing bytes");
  w.validate();
  return w;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

Vec layer_norm(std::span<const double> x, double eps) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv;
  return out;
}

EncodedQuery encode_context(const DialogueContext& ctx, const EncoderWeights& w) {
  w.validate();
  const std::size_t d = w.dim();
  check_vec(ctx.current_embedding, d, "current utterance embedding");
  std::vector<const Vec*> users, agents;
  for (std::size_t t = 0; t < ctx.turns.size(); ++t) {
    check_vec(ctx.turns[t].user_embedding, d, "user turn embedding");
    check_vec(ctx.turns[t].agent_embedding, d, "agent turn embedding");
    users.push_back(&ctx.turns[t].user_embedding);
    agents.push_back(&ctx.turns[t].agent_embedding);
  }

  EncodedQuery out;
  Vec x = ctx.current_embedding;
  if (!ctx.turns.empty()) {
    const Vec q = w.w_q.apply(ctx.current_embedding);
    out.beta = attend(q, users, w);
    out.gamma = attend(q, agents, w);
    Vec hist_user(d, 0.0), hist_agent(d, 0.0);
    for (std::size_t t = 0; t < ctx.turns.size(); ++t)
      for (std::size_t i = 0; i < d; ++i) {
        hist_user[i] += out.beta[t] * (*users[t])[i];
        hist_agent[i] += out.gamma[t] * (*agents[t])[i];
      }
    const Vec vu = w.w_v.apply(hist_user);
    const Vec va = w.w_v_prime.apply(hist_agent);
    for (std::size_t i = 0; i < d; ++i) x[i] += vu[i] + va[i];
  }
  out.z = layer_norm(x, w.ln_epsilon);
  return out;
}

double metric_loss(std::span<const EmbeddingPair> pairs, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("metric loss margin must lie in (0, 1)");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double s = cosine(p.u, p.v);
    total += p.same_label ? hinge(1.0 - s) : hinge(s - margin);
  }
  return total;
}

double distill_loss(const std::map<std::string, double>& teacher_logodds, double tau_c,
                    const std::map<std::string, double>& student_logits) {
  if (teacher_logodds.size() != student_logits.size() ||
      !std::equal(teacher_logodds.begin(), teacher_logodds.end(), student_logits.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; }))
    throw ConfigError("distill loss: teacher and student label sets differ");
  DistillObjective obj(teacher_logodds, tau_c);
  std::vector<double> z;
  for (const auto& [label, v] : student_logits) z.push_back(v);
  return obj.value(z);
}

MetricLossObjective::MetricLossObjective(std::vector<bool> same_label, std::size_t dim,
                                         double margin)
    : same_(std::move(same_label)), dim_(dim), margin_(margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("metric loss margin must lie in (0, 1)");
}

std::vector<double> MetricLossObjective::pack(std::span<const EmbeddingPair> pairs) {
  std::vector<double> x;
  for (const auto& p : pairs) {
    x.insert(x.end(), p.u.begin(), p.u.end());
    x.insert(x.end(), p.v.begin(), p.v.end());
  }
  return x;
}

double MetricLossObjective::value(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t p = 0; p < same_.size(); ++p) {
    const double s = cosine(x.subspan(2 * p * dim_, dim_), x.subspan((2 * p + 1) * dim_, dim_));
    total += same_[p] ? hinge(1.0 - s) : hinge(s - margin_);
  }
  return total;
}

Vec MetricLossObjective::gradient(std::span<const double> x) const {
  Vec g(x.size(), 0.0);
  for (std::size_t p = 0; p < same_.size(); ++p) {
    const std::size_t ou = 2 * p * dim_, ov = (2 * p + 1) * dim_;
    const auto cg = cosine_with_grad(x.subspan(ou, dim_), x.subspan(ov, dim_));
    double coeff = 0.0;
    if (same_[p]) {
      if (1.0 - cg.s > 0.0) coeff = -1.0;
    } else if (cg.s - margin_ > 0.0) {
      coeff = 1.0;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      g[ou + i] += coeff * cg.du[i];
      g[ov + i] += coeff * cg.dv[i];
    }
  }
  return g;
}

double MetricLossObjective::kink_distance(std::span<const double> x) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < same_.size(); ++p) {
    const double s = cosine(x.subspan(2 * p * dim_, dim_), x.subspan((2 * p + 1) * dim_, dim_));
    best = std::min(best, std::abs(same_[p] ? 1.0 - s : s - margin_));
  }
  return best;
}

DistillObjective::DistillObjective(const std::map<std::string, double>& teacher_logodds,
                                   double tau_c) {
  if (!(tau_c > 0.0)) throw ConfigError("calibration temperature must be > 0");
  if (teacher_logodds.empty()) throw ConfigError("distill loss: empty label set");
  std::vector<double> scaled;
  for (const auto& [label, v] : teacher_logodds) scaled.push_back(v / tau_c);
  target_ = softmax(scaled);
}

double DistillObjective::value(std::span<const double> student) const {
  const double lse = log_sum_exp(student);
  double loss = 0.0;
  for (std::size_t i = 0; i < target_.size(); ++i) loss -= target_[i] * (student[i] - lse);
  return loss;
}

Vec DistillObjective::gradient(std::span<const double> student) const {
  Vec q = softmax(student);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] -= target_[i];
  return q;
}

GradientCheck finite_difference_check(const DifferentiableObjective& f,
                                      std::span<const double> point, double h) {
  if (!(h >= 1e-6 && h <= 1e-3)) throw ConfigError("finite-difference step must lie in [1e-6, 1e-3]");
  if (point.size() != f.size()) throw DimensionError("gradient check: point has wrong size");
  GradientCheck out;
  // A step of h moves a cosine by O(h / |u|); stay well clear of the hinge.
  if (f.kink_distance(point) <= 10.0 * h) {
    out.non_smooth = true;
    return out;
  }
  const Vec analytic = f.gradient(point);
  Vec x(point.begin(), point.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f.value(x);
    x[i] = orig - h;
    const double fm = f.value(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw Error("gradient check: non-finite loss at perturbed point, coordinate " +
                  std::to_string(i));
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic[i] - numeric) / denom);
    ++out.coordinates;
  }
  return out;
}

}  // namespace divsel
