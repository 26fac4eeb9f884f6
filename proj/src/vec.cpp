#include "divsel/vec.h"

#include <cmath>

#include "divsel/error.h"

namespace divsel {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Vec normalized(std::span<const double> v) {
  if (!all_finite(v)) throw DimensionError("vector has non-finite entries");
  const double n = l2_norm(v);
  if (n == 0.0) throw DimensionError("cannot normalize a zero vector");
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  const double nu = l2_norm(u), nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw DimensionError("cosine: zero vector");
  double s = dot(u, v) / (nu * nv);
  // Rounding can push |s| a hair past 1.
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return s;
}

Matrix Matrix::identity(std::size_t d) {
  Matrix m = zeros(d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Vec Matrix::apply(std::span<const double> v) const {
  Vec out(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += data[r * dim + c] * v[c];
    out[r] = acc;
  }
  return out;
}

bool Matrix::is_zero() const {
  for (double x : data)
    if (x != 0.0) return false;
  return true;
}

}  // namespace divsel
