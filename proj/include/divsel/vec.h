#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace divsel {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Returns v / |v|. Throws DimensionError on a zero or non-finite vector.
Vec normalized(std::span<const double> v);

// s(u, v) = <u, v> / (|u| |v|). Throws on zero vectors or unequal dimension.
double cosine(std::span<const double> u, std::span<const double> v);

// Cosine for vectors already known to be unit length.
inline double unit_cosine(std::span<const double> u, std::span<const double> v) {
  return dot(u, v);
}

bool all_finite(std::span<const double> v);

// Row-major square matrix.
struct Matrix {
  std::size_t dim = 0;
  std::vector<double> data;

  static Matrix zeros(std::size_t d) { return {d, std::vector<double>(d * d, 0.0)}; }
  static Matrix identity(std::size_t d);

  double operator()(std::size_t r, std::size_t c) const { return data[r * dim + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * dim + c]; }

  Vec apply(std::span<const double> v) const;
  bool is_zero() const;
};

}  // namespace divsel
