#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "divsel/corpus.h"
#include "divsel/memory.h"

namespace divsel {

// Clustered synthetic intent corpus. Each label owns a random unit center;
// exemplars are normalize(center + noise * u) for random unit u. A query is
// either close to its gold center, or (with probability `ambiguity`) closer to
// a distractor center than to the gold one. All vectors have zero mean, so
// layer normalization only rescales them.
struct SynthSpec {
  std::size_t labels = 50;
  std::size_t per_label = 20;
  std::size_t instances = 200;
  std::size_t dim = 64;
  std::size_t history_turns = 24;
  double ambiguity = 0.6;
  double exemplar_noise = 0.25;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthCorpus {
  std::vector<ExemplarRecord> memory;
  std::vector<EvalInstance> instances;
  std::vector<bool> ambiguous;          // per instance
  std::vector<std::string> distractor;  // per instance; empty if not ambiguous
};

SynthCorpus synth_corpus(const SynthSpec& spec);

// "intent_07" style name for label index i out of n.
std::string synth_label(std::size_t i, std::size_t n);

}  // namespace divsel
