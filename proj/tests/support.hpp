#pragma once

// Seeded generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "bcast/bcast.hpp"

namespace bcast::testing {

inline Shape random_shape(Rng& rng, std::size_t order, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::vector<std::size_t> d(order);
  for (auto& v : d) v = len(rng);
  return Shape(std::move(d));
}

/// Two broadcast-compatible shapes: per mode the pair is (n, n), (1, n),
/// (n, 1) or (1, 1). The second may have lower order (trailing ones dropped).
inline std::pair<Shape, Shape> random_compatible_pair(Rng& rng, std::size_t max_order,
                                                      std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> ord(1, max_order);
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> kind(0, 3);
  const std::size_t n = ord(rng);
  std::vector<std::size_t> a(n), b(n);
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t l = len(rng);
    switch (kind(rng)) {
      case 0: a[m] = b[m] = l; break;
      case 1: a[m] = 1, b[m] = l; break;
      case 2: a[m] = l, b[m] = 1; break;
      default: a[m] = b[m] = 1; break;
    }
  }
  if (std::bernoulli_distribution(0.3)(rng)) {
    while (b.size() > 1 && b.back() == 1) b.pop_back();
  }
  return {Shape(std::move(a)), Shape(std::move(b))};
}

/// Entries drawn away from zero so the tensor is a valid divisor.
inline Tensor random_nonzero(const Shape& s, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution neg(0.5);
  std::vector<double> v(s.numel());
  for (auto& e : v) e = neg(rng) ? -mag(rng) : mag(rng);
  return Tensor(s, std::move(v));
}

/// Column-major multi-index of a linear offset.
inline std::vector<std::size_t> unravel(std::size_t lin, const Shape& s) {
  std::vector<std::size_t> idx(s.order());
  for (std::size_t n = 0; n < s.order(); ++n) {
    idx[n] = lin % s[n];
    lin /= s[n];
  }
  return idx;
}

inline std::size_t ravel(const std::vector<std::size_t>& idx, const Shape& s) {
  std::size_t lin = 0, stride = 1;
  for (std::size_t n = 0; n < s.order(); ++n) {
    lin += (n < idx.size() ? idx[n] : 0) * stride;
    stride *= s[n];
  }
  return lin;
}

/// Element of x at a multi-index of a (possibly larger) broadcast space:
/// length-one modes of x always read index 0.
inline double broadcast_read(const Tensor& x, const std::vector<std::size_t>& idx) {
  const Shape s = x.shape().padded(idx.size());
  std::vector<std::size_t> j(idx.size());
  for (std::size_t n = 0; n < idx.size(); ++n) j[n] = s[n] == 1 ? 0 : idx[n];
  return x[ravel(j, s)];
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double relative_residual(const Tensor& y, const Tensor& est) {
  return std::sqrt(residual_objective(y, est) / squared_norm(y));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace bcast::testing
