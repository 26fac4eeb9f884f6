#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace divsel {

// Seeded generator with platform-independent derived distributions.
//
// std::mt19937_64 output is fully specified by the standard, but
// std::uniform_int_distribution and friends are not, so the bounded and
// real-valued draws are implemented here to keep corpora and random
// selections byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seed for (run seed, key).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace divsel
