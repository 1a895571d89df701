#pragma once

// The broadcast operator family: product, sum, difference and division
// after replicating length-one modes, plus the reductions used with them
// (marginalization, mode sums, Frobenius norm).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bcast/tensor.hpp"

namespace bcast {

enum class BroadcastOp { product, sum, difference, division };

inline const char* to_string(BroadcastOp op) {
  switch (op) {
    case BroadcastOp::product: return "product";
    case BroadcastOp::sum: return "sum";
    case BroadcastOp::difference: return "difference";
    case BroadcastOp::division: return "division";
  }
  return "?";
}

namespace detail {

template <class F>
Tensor broadcast_binary(const Tensor& x, const Tensor& y, F&& op) {
  const Shape out = broadcast_shape(x.shape(), y.shape());
  const auto sx = view_strides(x.shape(), out);
  const auto sy = view_strides(y.shape(), out);
  const auto a = x.data();
  const auto b = y.data();
  std::vector<double> v(out.numel());
  strided_walk(out, sx, sy, [&](std::size_t lin, std::size_t i, std::size_t j) {
    v[lin] = op(a[i], b[j]);
  });
  return Tensor(out, std::move(v));
}

}  // namespace detail

/// bc(x, size(y)) (op) bc(y, size(x)), computed without materializing the
/// replicated operands. Throws broadcast_error on incompatible shapes and
/// division_error if `y` has a zero element under division.
inline Tensor broadcast_apply(BroadcastOp op, const Tensor& x, const Tensor& y) {
  switch (op) {
    case BroadcastOp::product:
      return detail::broadcast_binary(x, y, [](double a, double b) { return a * b; });
    case BroadcastOp::sum:
      return detail::broadcast_binary(x, y, [](double a, double b) { return a + b; });
    case BroadcastOp::difference:
      return detail::broadcast_binary(x, y, [](double a, double b) { return a - b; });
    case BroadcastOp::division:
      broadcast_shape(x.shape(), y.shape());
      for (std::size_t i = 0; i < y.numel(); ++i) {
        if (y[i] == 0.0) {
          throw division_error("broadcast division: divisor has a zero element at linear index " +
                               std::to_string(i + 1));
        }
      }
      return detail::broadcast_binary(x, y, [](double a, double b) { return a / b; });
  }
  throw error("broadcast_apply: unknown operator");
}

inline Tensor product(const Tensor& x, const Tensor& y) {
  return broadcast_apply(BroadcastOp::product, x, y);
}
inline Tensor sum(const Tensor& x, const Tensor& y) {
  return broadcast_apply(BroadcastOp::sum, x, y);
}
inline Tensor difference(const Tensor& x, const Tensor& y) {
  return broadcast_apply(BroadcastOp::difference, x, y);
}
inline Tensor divide(const Tensor& x, const Tensor& y) {
  return broadcast_apply(BroadcastOp::division, x, y);
}

/// Elementwise product of two tensors of equivalent shape. Unlike product(),
/// this refuses to replicate anything.
inline Tensor hadamard(const Tensor& x, const Tensor& y) {
  if (!equivalent(x.shape(), y.shape())) {
    throw shape_error("hadamard: shapes " + x.shape().str() + " and " + y.shape().str() +
                      " differ");
  }
  return product(x, y);
}

inline Tensor scaled(const Tensor& x, double k) {
  std::vector<double> v(x.values());
  for (double& e : v) e *= k;
  return Tensor(x.shape(), std::move(v));
}

/// Shrinks `x` against a partner of shape `other`: every mode where the
/// partner has length one and `x` does not is replaced by the Frobenius norm
/// of the fiber along it. Output shape is the per-mode minimum.
inline Tensor marginalize(const Tensor& x, const Shape& other) {
  const Shape joint = broadcast_shape(x.shape(), other);
  const Shape px = x.shape().padded(joint.order());
  const Shape po = other.padded(joint.order());
  std::vector<std::size_t> dims(joint.order());
  for (std::size_t n = 0; n < joint.order(); ++n) dims[n] = std::min(px[n], po[n]);
  const Shape out(std::move(dims));
  const auto sin = detail::column_major_strides(px);
  const auto sout = detail::view_strides(out, px);
  std::vector<double> acc(out.numel(), 0.0);
  const auto src = x.data();
  detail::strided_walk(px, sin, sout, [&](std::size_t, std::size_t i, std::size_t o) {
    acc[o] += src[i] * src[i];
  });
  for (double& e : acc) e = std::sqrt(e);
  return Tensor(out, std::move(acc));
}

/// Sums entries along each listed mode, keeping the mode with length one.
/// Each output element accumulates its inputs in column-major order of the
/// input, which fixes the floating-point summation order.
inline Tensor mode_sum(const Tensor& x, const std::vector<std::size_t>& modes) {
  std::vector<std::size_t> dims = x.shape().dims();
  for (std::size_t m : modes) {
    detail::check_mode(m, x.order(), "mode_sum");
    dims[m] = 1;
  }
  const Shape out(std::move(dims));
  if (out == x.shape()) return x;
  const auto sin = detail::column_major_strides(x.shape());
  const auto sout = detail::view_strides(out, x.shape());
  std::vector<double> acc(out.numel(), 0.0);
  const auto src = x.data();
  detail::strided_walk(x.shape(), sin, sout, [&](std::size_t, std::size_t i, std::size_t o) {
    acc[o] += src[i];
  });
  return Tensor(out, std::move(acc));
}

inline double squared_norm(const Tensor& x) {
  double s = 0.0;
  for (double e : x.data()) s += e * e;
  return s;
}

inline double frobenius_norm(const Tensor& x) { return std::sqrt(squared_norm(x)); }

/// ||x (.) y||_F^2 evaluated on the marginalized operands, never forming the
/// broadcast product.
inline double squared_norm_of_product(const Tensor& x, const Tensor& y) {
  return squared_norm(hadamard(marginalize(x, y.shape()), marginalize(y, x.shape())));
}

}  // namespace bcast
