#include "divsel/selection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "divsel/error.h"
#include "divsel/rng.h"

namespace divsel {
namespace {

double pairs(std::size_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

std::vector<Vec> unit_embeddings(const Pool& pool) {
  std::vector<Vec> out;
  out.reserve(pool.size());
  for (const auto& c : pool) out.push_back(normalized(c.embedding));
  return out;
}

// Candidate a beats b on (gain, relevance, id).
bool beats(double gain_a, const Candidate& a, double gain_b, const Candidate& b) {
  if (gain_a != gain_b) return gain_a > gain_b;
  if (a.relevance != b.relevance) return a.relevance > b.relevance;
  return a.id < b.id;
}

std::vector<std::size_t> relevance_order(const Pool& pool) {
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].relevance != pool[b].relevance) return pool[a].relevance > pool[b].relevance;
    return pool[a].id < pool[b].id;
  });
  return idx;
}

void require_pool(const Pool& pool) {
  if (pool.empty()) throw ConfigError("selection over an empty pool");
}

}  // namespace

void SelectionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (k < 1) throw ConfigError("K must be >= 1");
  if (label_cap < 1) throw ConfigError("label cap U must be >= 1");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
}

double label_diversity(std::span<const std::string> labels) {
  if (labels.empty()) throw ConfigError("label diversity of an empty set");
  std::map<std::string_view, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  const double n = static_cast<double>(labels.size());
  double c = 0.0;
  for (const auto& [label, k] : counts) {
    const double p = static_cast<double>(k) / n;
    c += p * p;
  }
  return 1.0 - c;
}

double clamped_similarity(std::span<const double> a, std::span<const double> b) {
  return std::max(0.0, cosine(a, b));
}

double text_diversity(std::span<const Vec> embeddings) {
  if (embeddings.empty()) throw ConfigError("text diversity of an empty set");
  for (const auto& e : embeddings)
    if (l2_norm(e) == 0.0) throw DimensionError("text diversity: zero vector");
  if (embeddings.size() == 1) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    for (std::size_t j = i + 1; j < embeddings.size(); ++j)
      total += clamped_similarity(embeddings[i], embeddings[j]);
  return 1.0 - total / pairs(embeddings.size());
}

double r_score(double g, double dtext, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return alpha * g + (1.0 - alpha) * dtext;
}

std::size_t DiversityState::count(std::string_view label) const {
  auto it = counts_.find(label);
  return it == counts_.end() ? 0 : it->second;
}

double DiversityState::mean_pairwise_sim() const {
  return size_ < 2 ? 0.0 : pair_sum_ / pairs(size_);
}

double DiversityState::g() const {
  if (size_ == 0) return 0.0;
  const double m = static_cast<double>(size_);
  return 1.0 - static_cast<double>(sum_sq_) / (m * m);
}

double DiversityState::dtext() const {
  if (size_ == 0) return 0.0;
  return 1.0 - mean_pairwise_sim();
}

void DiversityState::add(const std::string& label, double incoming_a) {
  auto& n = counts_[label];
  sum_sq_ += 2 * n + 1;
  ++n;
  pair_sum_ += incoming_a;
  ++size_;
}

double delta_label_diversity(const DiversityState& set, std::string_view incoming_label) {
  const double m1 = static_cast<double>(set.size() + 1);
  const double n_y = static_cast<double>(set.count(incoming_label));
  const double after =
      1.0 - (static_cast<double>(set.sum_sq_counts()) + 2.0 * n_y + 1.0) / (m1 * m1);
  return after - set.g();
}

double delta_text_diversity(const DiversityState& set, double incoming_a) {
  const std::size_t m = set.size();
  if (m == 0) return 1.0;  // D goes from 0 (empty) to 1 (singleton)
  const double mean_after = (pairs(m) * set.mean_pairwise_sim() + incoming_a) / pairs(m + 1);
  return (1.0 - mean_after) - set.dtext();
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kComplete: return "complete";
    case StopReason::kCapLimited: return "cap-limited";
    case StopReason::kThresholdLimited: return "threshold-limited";
    case StopReason::kPoolExhausted: return "pool-exhausted";
  }
  return "?";
}

std::string SelectedSet::binding_constraint() const {
  switch (stop) {
    case StopReason::kCapLimited: return "U";
    case StopReason::kThresholdLimited: return "tau";
    default: return "";
  }
}

std::vector<std::string> SelectedSet::ids(const Pool& pool) const {
  std::vector<std::string> out;
  for (auto i : members) out.push_back(pool[i].id);
  return out;
}

std::vector<std::string> SelectedSet::labels(const Pool& pool) const {
  std::vector<std::string> out;
  for (auto i : members) out.push_back(pool[i].label);
  return out;
}

SelectedSet make_selected_set(const Pool& pool, std::vector<std::size_t> members, double alpha) {
  SelectedSet s;
  s.alpha = alpha;
  s.members = std::move(members);
  for (std::size_t a = 0; a < s.members.size(); ++a) {
    double incoming = 0.0;
    for (std::size_t b = 0; b < a; ++b)
      incoming += clamped_similarity(pool[s.members[a]].embedding, pool[s.members[b]].embedding);
    s.state.add(pool[s.members[a]].label, incoming);
  }
  return s;
}

SelectedSet greedy_select(const Pool& pool, const SelectionConfig& cfg) {
  cfg.validate();
  SelectedSet out;
  out.alpha = cfg.alpha;
  out.running_sims.assign(pool.size(), 0.0);
  const std::vector<Vec> unit = unit_embeddings(pool);
  std::vector<char> chosen(pool.size(), 0);
  std::vector<char> eligible(pool.size(), 0);
  for (std::size_t i = 0; i < pool.size(); ++i) eligible[i] = pool[i].vec_score >= cfg.tau;

  while (out.members.size() < cfg.k) {
    std::size_t best = pool.size();
    double best_gain = 0.0, best_dg = 0.0, best_dd = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (chosen[i] || !eligible[i]) continue;
      if (out.state.count(pool[i].label) >= cfg.label_cap) continue;
      const double dg = delta_label_diversity(out.state, pool[i].label);
      const double dd = delta_text_diversity(out.state, out.running_sims[i]);
      const double gain = cfg.alpha * dg + (1.0 - cfg.alpha) * dd + cfg.mu * pool[i].vec_score;
      if (best == pool.size() || beats(gain, pool[i], best_gain, pool[best])) {
        best = i;
        best_gain = gain;
        best_dg = dg;
        best_dd = dd;
      }
    }

    if (best == pool.size()) {
      bool any_eligible = false, any_left = false;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (chosen[i]) continue;
        any_left = true;
        any_eligible = any_eligible || eligible[i];
      }
      out.stop = any_eligible ? StopReason::kCapLimited
                 : any_left   ? StopReason::kThresholdLimited
                              : StopReason::kPoolExhausted;
      return out;
    }

    chosen[best] = 1;
    out.state.add(pool[best].label, out.running_sims[best]);
    out.members.push_back(best);
    SelectionStep step;
    step.pool_index = best;
    step.id = pool[best].id;
    step.delta_g = best_dg;
    step.delta_d = best_dd;
    step.delta_r = cfg.alpha * best_dg + (1.0 - cfg.alpha) * best_dd;
    step.adjusted_gain = best_gain;
    step.g = out.state.g();
    step.dtext = out.state.dtext();
    step.r = out.state.r(cfg.alpha);
    out.steps.push_back(std::move(step));

    if (out.members.size() == cfg.k) break;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (chosen[j] || !eligible[j]) continue;
      out.running_sims[j] += std::max(0.0, dot(unit[j], unit[best]));
      ++out.similarity_ops;
    }
  }
  out.stop = StopReason::kComplete;
  return out;
}

SelectedSet brute_force_select(const Pool& pool, const SelectionConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> eligible;
  std::map<std::string, std::size_t> per_label;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].vec_score >= cfg.tau) {
      eligible.push_back(i);
      ++per_label[pool[i].label];
    }
  std::size_t max_feasible = 0;
  for (const auto& [label, n] : per_label) max_feasible += std::min(n, cfg.label_cap);
  const std::size_t k = std::min(cfg.k, max_feasible);

  // C(|pool|, K) guard, computed in floating point to avoid overflow.
  double combos = 1.0;
  for (std::size_t i = 0; i < std::min(cfg.k, pool.size()); ++i)
    combos = combos * static_cast<double>(pool.size() - i) / static_cast<double>(i + 1);
  if (combos > kBruteForceLimit)
    throw ConfigError("brute-force selection guard: C(" + std::to_string(pool.size()) + ", " +
                      std::to_string(cfg.k) + ") exceeds 1e6");

  if (k == 0) {
    SelectedSet out;
    out.alpha = cfg.alpha;
    out.stop = eligible.empty() && !pool.empty() ? StopReason::kThresholdLimited
                                                 : StopReason::kPoolExhausted;
    return out;
  }

  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);  // positions into `eligible`
  std::vector<std::size_t> best;
  std::vector<std::string> best_ids;
  double best_r = -std::numeric_limits<double>::infinity();
  std::vector<std::string> labels(k);
  std::vector<Vec> embs(k);
  while (true) {
    std::map<std::string_view, std::size_t> counts;
    bool ok = true;
    for (std::size_t a = 0; a < k && ok; ++a) ok = ++counts[pool[eligible[pick[a]]].label] <= cfg.label_cap;
    if (ok) {
      for (std::size_t a = 0; a < k; ++a) {
        labels[a] = pool[eligible[pick[a]]].label;
        embs[a] = pool[eligible[pick[a]]].embedding;
      }
      const double r = r_score(label_diversity(labels), text_diversity(embs), cfg.alpha);
      std::vector<std::string> ids;
      for (auto p : pick) ids.push_back(pool[eligible[p]].id);
      std::sort(ids.begin(), ids.end());
      if (r > best_r || (r == best_r && ids < best_ids)) {
        best_r = r;
        best_ids = std::move(ids);
        best.clear();
        for (auto p : pick) best.push_back(eligible[p]);
      }
    }
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == eligible.size() - k + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }

  SelectedSet out = make_selected_set(pool, std::move(best), cfg.alpha);
  out.stop = k == cfg.k ? StopReason::kComplete : StopReason::kCapLimited;
  return out;
}

SelectedSet mmr_select(const Pool& pool, std::size_t k, double lambda_mmr, double alpha) {
  require_pool(pool);
  if (!(lambda_mmr >= 0.0 && lambda_mmr <= 1.0)) throw ConfigError("MMR lambda must lie in [0, 1]");
  const std::vector<Vec> unit = unit_embeddings(pool);
  std::vector<char> chosen(pool.size(), 0);
  std::vector<double> max_sim(pool.size(), 0.0);
  std::vector<std::size_t> members;
  std::size_t ops = 0;
  k = std::min(k, pool.size());
  while (members.size() < k) {
    std::size_t best = pool.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (chosen[i]) continue;
      // The first pick is the most similar item whatever lambda is.
      const double score = members.empty()
                               ? pool[i].vec_score
                               : lambda_mmr * pool[i].vec_score - (1.0 - lambda_mmr) * max_sim[i];
      if (best == pool.size() || score > best_score ||
          (score == best_score && pool[i].id < pool[best].id)) {
        best = i;
        best_score = score;
      }
    }
    chosen[best] = 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (chosen[i]) continue;
      const double s = dot(unit[i], unit[best]);
      max_sim[i] = members.empty() ? s : std::max(max_sim[i], s);
      ++ops;
    }
    members.push_back(best);
  }
  SelectedSet out = make_selected_set(pool, std::move(members), alpha);
  out.similarity_ops = ops;
  return out;
}

SelectedSet fps_select(const Pool& pool, std::size_t k, double alpha) {
  require_pool(pool);
  const std::vector<Vec> unit = unit_embeddings(pool);
  std::vector<char> chosen(pool.size(), 0);
  std::vector<double> min_dist(pool.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> members;
  std::size_t ops = 0;
  k = std::min(k, pool.size());
  std::size_t next = relevance_order(pool).front();
  while (true) {
    chosen[next] = 1;
    members.push_back(next);
    if (members.size() == k) break;
    std::size_t best = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (chosen[i]) continue;
      min_dist[i] = std::min(min_dist[i], 1.0 - dot(unit[i], unit[next]));
      ++ops;
      if (best == pool.size() || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && pool[i].id < pool[best].id))
        best = i;
    }
    next = best;
  }
  SelectedSet out = make_selected_set(pool, std::move(members), alpha);
  out.similarity_ops = ops;
  return out;
}

SelectedSet topk_select(const Pool& pool, std::size_t k, double alpha) {
  require_pool(pool);
  auto order = relevance_order(pool);
  order.resize(std::min(k, order.size()));
  return make_selected_set(pool, std::move(order), alpha);
}

SelectedSet random_select(const Pool& pool, std::size_t k, std::uint64_t seed, double alpha) {
  require_pool(pool);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  k = std::min(k, idx.size());
  // Partial Fisher-Yates: the first k slots are the sample, in draw order.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return make_selected_set(pool, std::move(idx), alpha);
}

}  // namespace divsel
