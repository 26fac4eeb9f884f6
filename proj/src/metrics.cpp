#include "divsel/metrics.h"

#include <cmath>
#include <numeric>

#include "divsel/error.h"
#include "divsel/text.h"

namespace divsel {

std::string canonical_state(const SlotMap& state) {
  SlotMap norm;
  for (const auto& [k, v] : state) norm[normalize_label(k)] = normalize_label(v);
  std::string out;
  for (const auto& [k, v] : norm) {
    if (!out.empty()) out += ';';
    out += k + '=' + v;
  }
  return out;
}

SlotMap parse_state(std::string_view canonical) {
  SlotMap out;
  std::size_t from = 0;
  while (from <= canonical.size()) {
    auto end = canonical.find(';', from);
    if (end == std::string_view::npos) end = canonical.size();
    const std::string entry = trim(canonical.substr(from, end - from));
    if (!entry.empty()) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw ConfigError("state entry without '=': " + entry);
      out[normalize_label(entry.substr(0, eq))] = normalize_label(entry.substr(eq + 1));
    }
    from = end + 1;
  }
  return out;
}

double jga(std::span<const std::string> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size())
    throw ConfigError("jga: " + std::to_string(predictions.size()) + " predictions for " +
                      std::to_string(golds.size()) + " golds");
  if (golds.empty()) throw ConfigError("jga: no turns");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i)
    hits += normalize_label(predictions[i]) == normalize_label(golds[i]);
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

double aga(std::span<const SlotMap> predicted, std::span<const SlotMap> gold) {
  if (predicted.size() != gold.size()) throw ConfigError("aga: turn count mismatch");
  double sum = 0.0;
  std::size_t turns = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    std::size_t active = 0, correct = 0;
    for (const auto& [slot, value] : gold[t]) {
      const std::string g = normalize_label(value);
      if (g == kNotMentioned) continue;
      ++active;
      auto it = predicted[t].find(slot);
      if (it != predicted[t].end() && normalize_label(it->second) == g) ++correct;
    }
    if (active == 0) continue;
    sum += static_cast<double>(correct) / static_cast<double>(active);
    ++turns;
  }
  if (turns == 0) throw ConfigError("aga: no turn has an active gold slot");
  return sum / static_cast<double>(turns);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ConfigError("mean of an empty set");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace divsel
