#include "divsel/synth.h"

#include <cmath>
#include <set>

#include "divsel/error.h"
#include "divsel/rng.h"
#include "divsel/vec.h"

namespace divsel {
namespace {

constexpr const char* kFillers[] = {
    "please", "i",     "want",  "to",    "the",    "a",     "for",   "my",    "can",   "you",
    "help",   "with",  "need",  "some",  "about",  "this",  "that",  "would", "like",  "now",
    "today",  "there", "again", "just",  "maybe",  "really", "also", "thanks", "okay", "so"};
constexpr std::size_t kFillerCount = std::size(kFillers);

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr const char* kNuclei[] = {"a", "e", "i", "o", "u"};

std::string pseudo_word(Rng& rng) {
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kNuclei[rng.below(std::size(kNuclei))];
  }
  return w;
}

Vec zero_mean_unit(Rng& rng, std::size_t d) {
  for (;;) {
    Vec v(d);
    double m = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      m += x;
    }
    m /= static_cast<double>(d);
    for (auto& x : v) x -= m;
    if (l2_norm(v) > 1e-8) return normalized(v);
  }
}

Vec mix(std::initializer_list<std::pair<double, const Vec*>> parts) {
  Vec out((*parts.begin()).second->size(), 0.0);
  for (const auto& [w, v] : parts)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*v)[i];
  return normalized(out);
}

std::string join_words(std::vector<std::string> words, Rng& rng) {
  rng.shuffle(words);
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::vector<std::string> fillers(Rng& rng, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(kFillers[rng.below(kFillerCount)]);
  return out;
}

std::string pad(std::size_t i, std::size_t width) {
  std::string s = std::to_string(i);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

void SynthSpec::validate() const {
  if (labels < 2) throw ConfigError("synthetic corpus needs at least 2 labels");
  if (per_label < 1 || instances < 1) throw ConfigError("synthetic corpus sizes must be positive");
  if (dim < 3) throw ConfigError("synthetic embedding dimension must be >= 3");
  if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) throw ConfigError("ambiguity must lie in [0, 1]");
  if (!(exemplar_noise >= 0.0)) throw ConfigError("exemplar noise must be >= 0");
}

std::string synth_label(std::size_t i, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n - 1).size());
  return "intent_" + pad(i, width);
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x5e7));
  const std::size_t d = spec.dim;

  std::vector<Vec> centers;
  std::vector<std::vector<std::string>> vocab(spec.labels);
  std::set<std::string> taken(std::begin(kFillers), std::end(kFillers));
  for (std::size_t l = 0; l < spec.labels; ++l) {
    centers.push_back(zero_mean_unit(rng, d));
    while (vocab[l].size() < 3) {
      std::string w = pseudo_word(rng);
      if (taken.insert(w).second) vocab[l].push_back(std::move(w));
    }
  }
  auto label_words = [&](std::size_t l, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[l][rng.below(vocab[l].size())]);
    return out;
  };

  SynthCorpus out;
  const std::size_t total = spec.labels * spec.per_label;
  const std::size_t id_width = std::to_string(total).size();
  for (std::size_t l = 0; l < spec.labels; ++l) {
    for (std::size_t j = 0; j < spec.per_label; ++j) {
      const Vec u = zero_mean_unit(rng, d);
      ExemplarRecord r;
      r.id = "e" + pad(l * spec.per_label + j, id_width);
      r.label = synth_label(l, spec.labels);
      auto words = label_words(l, 2);
      const auto fill = fillers(rng, 4);
      words.insert(words.end(), fill.begin(), fill.end());
      r.text = join_words(std::move(words), rng);
      r.embedding = mix({{1.0, &centers[l]}, {spec.exemplar_noise, &u}});
      out.memory.push_back(std::move(r));
    }
  }

  const std::size_t q_width = std::to_string(spec.instances).size();
  for (std::size_t q = 0; q < spec.instances; ++q) {
    EvalInstance inst;
    inst.id = "q" + pad(q, q_width);
    const std::size_t g = rng.below(spec.labels);
    inst.gold = synth_label(g, spec.labels);
    const bool amb = rng.uniform() < spec.ambiguity;
    const Vec u = zero_mean_unit(rng, d);
    std::vector<std::string> words;
    if (amb) {
      std::size_t h = rng.below(spec.labels - 1);
      if (h >= g) ++h;
      inst.dialogue.current_embedding = mix({{0.8, &centers[h]}, {0.5, &centers[g]}, {0.2, &u}});
      words = label_words(h, 2);
      const auto gw = label_words(g, 1);
      words.insert(words.end(), gw.begin(), gw.end());
      const auto fill = fillers(rng, 3);
      words.insert(words.end(), fill.begin(), fill.end());
      out.distractor.push_back(synth_label(h, spec.labels));
    } else {
      inst.dialogue.current_embedding = mix({{1.0, &centers[g]}, {0.3, &u}});
      words = label_words(g, 2);
      const auto fill = fillers(rng, 4);
      words.insert(words.end(), fill.begin(), fill.end());
      out.distractor.emplace_back();
    }
    inst.dialogue.current = join_words(std::move(words), rng);
    out.ambiguous.push_back(amb);

    for (std::size_t t = 0; t < spec.history_turns; ++t) {
      Turn turn;
      const std::size_t topic = rng.below(spec.labels);
      auto uw = label_words(topic, 1);
      const auto fill = fillers(rng, 7);
      uw.insert(uw.end(), fill.begin(), fill.end());
      turn.user = join_words(std::move(uw), rng);
      turn.agent = join_words(fillers(rng, 8), rng);
      const Vec un = zero_mean_unit(rng, d);
      turn.user_embedding = mix({{1.0, &centers[topic]}, {spec.exemplar_noise, &un}});
      turn.agent_embedding = zero_mean_unit(rng, d);
      inst.dialogue.turns.push_back(std::move(turn));
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace divsel
