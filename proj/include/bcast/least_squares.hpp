#pragma once

// Closed-form least squares for  min_W || X - W (.) H ||_F^2.
//
// Every entry of W multiplies a disjoint set of entries of X, so the problem
// separates into independent scalar fits. With R the modes along which W is
// replicated (W has length one there, H does not) the minimizer is
//
//   W = P_R(X (.) H) / P_R(H (.) H)
//
// where P_R sums over the modes in R. The same answer is reachable by
// permuting and grouping modes into a canonical third-order problem
// (I x J x K observed, 1 x J x K known, I x J x 1 unknown); both routes are
// exposed and agree bit for bit.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "bcast/broadcast_ops.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

/// Classification of modes for an unknown of shape D against a known factor
/// of shape F (0-based mode indices, each list ascending):
///   L: D_n > 1, F_n == 1   (the known factor is replicated)
///   S: D_n == F_n          (shared; includes D_n == F_n == 1)
///   R: D_n == 1, F_n > 1   (the unknown is replicated, summed out)
struct ModePartition {
  std::vector<std::size_t> L;
  std::vector<std::size_t> S;
  std::vector<std::size_t> R;

  bool operator==(const ModePartition&) const = default;
};

inline ModePartition classify_modes(const Shape& w_shape, const Shape& h_shape) {
  if (!broadcast_compatible(w_shape, h_shape)) {
    throw broadcast_error("classify_modes: shapes " + w_shape.str() + " and " + h_shape.str() +
                          " are not broadcast compatible");
  }
  auto [d, f] = normalize_orders(w_shape, h_shape);
  ModePartition p;
  for (std::size_t n = 0; n < d.order(); ++n) {
    if (d[n] == f[n]) {
      p.S.push_back(n);
    } else if (f[n] == 1) {
      p.L.push_back(n);
    } else {
      p.R.push_back(n);
    }
  }
  return p;
}

/// How a vanishing denominator P_R(H (.) H) is handled.
struct DenominatorGuard {
  enum class Kind { strict, clamp, ridge };
  Kind kind = Kind::strict;
  double value = 0.0;

  static DenominatorGuard strict() { return {}; }
  static DenominatorGuard clamp(double floor) { return {Kind::clamp, floor}; }
  static DenominatorGuard ridge(double lambda) { return {Kind::ridge, lambda}; }
};

namespace detail {

inline void check_ls_problem(const Shape& observed, const Shape& known, const Shape& unknown) {
  if (!broadcast_compatible(unknown, known)) {
    throw broadcast_error("least squares: unknown shape " + unknown.str() +
                          " and known shape " + known.str() + " are not broadcast compatible");
  }
  const Shape joint = broadcast_shape(unknown, known);
  if (!equivalent(joint, observed)) {
    throw shape_error("least squares: observed shape " + observed.str() +
                      " does not match the broadcast of unknown " + unknown.str() + " and known " +
                      known.str() + " (" + joint.str() + ")");
  }
}

inline Tensor guarded_quotient(const Tensor& num, Tensor den, DenominatorGuard guard) {
  for (std::size_t i = 0; i < den.numel(); ++i) {
    double& d = den[i];
    switch (guard.kind) {
      case DenominatorGuard::Kind::strict: break;
      case DenominatorGuard::Kind::clamp: d = std::max(d, guard.value); break;
      case DenominatorGuard::Kind::ridge: d += guard.value; break;
    }
    if (d == 0.0) {
      throw singular_error("least squares: known factor has an all-zero fiber over the summed "
                           "modes (denominator entry " + std::to_string(i + 1) + " is zero)");
    }
  }
  return divide(num, den);
}

}  // namespace detail

/// Direct closed form P_R(X (.) H) / P_R(H (.) H) with a configurable
/// denominator guard. Returns a tensor of shape `w_shape`.
inline Tensor ls_solve_guarded(const Tensor& x, const Tensor& h, const Shape& w_shape,
                               DenominatorGuard guard) {
  detail::check_ls_problem(x.shape(), h.shape(), w_shape);
  const ModePartition part = classify_modes(w_shape, h.shape());
  const Tensor num = mode_sum(product(x, h), part.R);
  Tensor den = mode_sum(product(h, h), part.R);
  Tensor w = detail::guarded_quotient(num, std::move(den), guard);
  return std::move(w).reshaped(w_shape);
}

/// Canonical third-order problem: y is I x J x K, z is 1 x J x K, the
/// returned minimizer is I x J x 1. Throws singular_error when some fiber
/// z(1, j, :) is identically zero.
inline Tensor ls_solve_third_order(const Tensor& y, const Tensor& z) {
  if (y.order() > 3 || z.order() > 3) {
    throw shape_error("ls_solve_third_order: expected third-order operands, got " +
                      y.shape().str() + " and " + z.shape().str());
  }
  const Shape ys = y.shape().padded(3);
  const Shape zs = z.shape().padded(3);
  if (zs[0] != 1 || zs[1] != ys[1] || zs[2] != ys[2]) {
    throw shape_error("ls_solve_third_order: known factor must be 1x" + std::to_string(ys[1]) +
                      "x" + std::to_string(ys[2]) + ", got " + z.shape().str());
  }
  const Tensor num = mode_sum(product(y, z), {2});
  Tensor den = mode_sum(product(z, z), {2});
  return detail::guarded_quotient(num, std::move(den), DenominatorGuard::strict())
      .reshaped(Shape{ys[0], ys[1], 1});
}

/// General N-th order minimizer of || x - W (.) h ||_F^2 over W of shape
/// `w_shape`, via the direct closed form.
inline Tensor ls_solve_general(const Tensor& x, const Tensor& h, const Shape& w_shape) {
  return ls_solve_guarded(x, h, w_shape, DenominatorGuard::strict());
}

/// Ridge variant: lambda is added to every denominator entry.
inline Tensor ls_solve_general_ridge(const Tensor& x, const Tensor& h, const Shape& w_shape,
                                     double lambda) {
  return ls_solve_guarded(x, h, w_shape, DenominatorGuard::ridge(lambda));
}

/// Same minimizer as ls_solve_general(), computed by the reduction route:
/// permute modes to (L, S, R) order, group them into I x J x K, solve the
/// third-order problem and undo the grouping and permutation.
inline Tensor ls_solve_general_reduced(const Tensor& x, const Tensor& h, const Shape& w_shape) {
  detail::check_ls_problem(x.shape(), h.shape(), w_shape);
  auto [w, hs] = normalize_orders(w_shape, h.shape());
  const std::size_t order = w.order();
  const ModePartition part = classify_modes(w, hs);

  std::vector<std::size_t> perm;
  perm.insert(perm.end(), part.L.begin(), part.L.end());
  perm.insert(perm.end(), part.S.begin(), part.S.end());
  perm.insert(perm.end(), part.R.begin(), part.R.end());

  std::size_t rows = 1, shared = 1, summed = 1;
  for (std::size_t n : part.L) rows *= w[n];
  for (std::size_t n : part.S) shared *= w[n];
  for (std::size_t n : part.R) summed *= hs[n];

  const Tensor xp = permute(x.reshaped(x.shape().padded(order)), perm);
  const Tensor hp = permute(h.reshaped(hs), perm);
  const Tensor y3 = xp.reshaped(Shape{rows, shared, summed});
  const Tensor z3 = hp.reshaped(Shape{1, shared, summed});
  const Tensor a3 = ls_solve_third_order(y3, z3);

  std::vector<std::size_t> wdims(order);
  for (std::size_t p = 0; p < order; ++p) wdims[p] = w[perm[p]];
  const Tensor wp = a3.reshaped(Shape(std::move(wdims)));
  return permute(wp, inverse_permutation(perm)).reshaped(w_shape);
}

}  // namespace bcast
