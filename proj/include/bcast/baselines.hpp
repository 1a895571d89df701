#pragma once

// Conventional low-rank baselines for third-order tensors: CP by alternating
// least squares and Tucker by higher-order orthogonal iteration (HOOI).
// Factor matrices are stored as order-2 column-major tensors so they share
// the BTF file format with everything else; the dense linear algebra runs
// through Eigen.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string>
#include <utility>

#include "bcast/broadcast_ops.hpp"
#include "bcast/decomposition.hpp"
#include "bcast/random.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

/// Y ~ sum_r U1(:,r) o U2(:,r) o U3(:,r); U1 is I x R, U2 J x R, U3 K x R.
struct CPModel {
  Tensor U1;
  Tensor U2;
  Tensor U3;

  std::size_t rank() const { return U1.dim(1); }
};

/// Y ~ G x1 U1 x2 U2 x3 U3 with orthonormal factor columns.
struct TuckerModel {
  Tensor core;  // r1 x r2 x r3
  Tensor U1;    // I x r1
  Tensor U2;    // J x r2
  Tensor U3;    // K x r3
};

struct CPFit {
  CPModel model;
  FitTrace trace;
};

struct TuckerFit {
  TuckerModel model;
  FitTrace trace;
};

inline std::size_t param_count(const CPModel& m) {
  return m.U1.numel() + m.U2.numel() + m.U3.numel();
}

inline std::size_t param_count(const TuckerModel& m) {
  return m.core.numel() + m.U1.numel() + m.U2.numel() + m.U3.numel();
}

namespace detail {

using Matrix = Eigen::MatrixXd;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

inline ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                        static_cast<Eigen::Index>(t.numel() / t.dim(0)));
}

inline Tensor from_matrix(const Matrix& m) {
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto cols = static_cast<std::size_t>(m.cols());
  return Tensor(Shape{rows, cols}, std::vector<double>(m.data(), m.data() + m.size()));
}

/// Column-wise Kronecker product; row a + rows(A) * b holds A(a,:) .* B(b,:).
inline Matrix khatri_rao(const Matrix& b, const Matrix& a) {
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out.col(r).segment(j * a.rows(), a.rows()) = a.col(r) * b(j, r);
    }
  }
  return out;
}

/// Leading `r` left singular vectors of m (orthonormal, I x r).
inline Matrix leading_left_singular_vectors(const Matrix& m, std::size_t r) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
}

inline Tensor cp_full(const Matrix& u1, const Matrix& u2, const Matrix& u3) {
  const Matrix y1 = u1 * khatri_rao(u3, u2).transpose();
  return Tensor(Shape{static_cast<std::size_t>(u1.rows()), static_cast<std::size_t>(u2.rows()),
                      static_cast<std::size_t>(u3.rows())},
                std::vector<double>(y1.data(), y1.data() + y1.size()));
}

/// Solves U * gram = mttkrp for U. Falls back to a ridge-regularized LDLT when
/// the Gram matrix is numerically singular.
inline Matrix solve_normal_equations(const Matrix& gram, const Matrix& mttkrp, double ridge) {
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
    return llt.solve(mttkrp.transpose()).transpose();
  }
  const Matrix reg = gram + ridge * Matrix::Identity(gram.rows(), gram.cols());
  Eigen::LDLT<Matrix> ldlt(reg);
  return ldlt.solve(mttkrp.transpose()).transpose();
}

}  // namespace detail

/// x x_n M: multiplies every mode-n fiber by M, so mode n gets length rows(M).
inline Tensor mode_product(const Tensor& x, const Eigen::MatrixXd& m, std::size_t mode) {
  const Shape xs = x.shape().padded(mode + 1);
  if (static_cast<std::size_t>(m.cols()) != xs[mode]) {
    throw shape_error("mode_product: matrix has " + std::to_string(m.cols()) +
                      " columns, mode " + std::to_string(mode + 1) + " of " + xs.str() +
                      " has length " + std::to_string(xs[mode]));
  }
  const Tensor xu = unfold(x.reshaped(xs), mode);
  const Eigen::MatrixXd prod = m * detail::as_matrix(xu);
  std::vector<std::size_t> dims = xs.dims();
  dims[mode] = static_cast<std::size_t>(m.rows());
  return fold(detail::from_matrix(prod), mode, Shape(std::move(dims)));
}

inline Tensor reconstruct(const CPModel& m) {
  return detail::cp_full(detail::as_matrix(m.U1), detail::as_matrix(m.U2),
                         detail::as_matrix(m.U3));
}

inline Tensor reconstruct(const TuckerModel& m) {
  Tensor t = mode_product(m.core, detail::as_matrix(m.U1), 0);
  t = mode_product(t, detail::as_matrix(m.U2), 1);
  return mode_product(t, detail::as_matrix(m.U3), 2);
}

/// CP-ALS from random normal factors (seeded by cfg.seed). Each sweep solves
/// for U1, U2, U3 in turn from the Khatri-Rao normal equations.
inline CPFit cp_als(const Tensor& y, std::size_t rank, const FitConfig& cfg) {
  cfg.validate();
  detail::check_third_order(y, "cp_als");
  if (rank < 1) throw error("cp_als: rank must be >= 1");
  const Shape ys = y.shape().padded(3);
  const Tensor yt = y.reshaped(ys);

  Rng rng(cfg.seed);
  std::array<detail::Matrix, 3> u;
  for (std::size_t n = 0; n < 3; ++n) {
    u[n] = detail::as_matrix(random_normal(Shape{ys[n], rank}, rng));
  }
  const std::array<Tensor, 3> unfolded{unfold(yt, 0), unfold(yt, 1), unfold(yt, 2)};

  CPFit fit;
  const double scale = squared_norm(yt);
  double prev = residual_objective(yt, detail::cp_full(u[0], u[1], u[2]));
  fit.trace.initial_objective = prev;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t n = 0; n < 3; ++n) {
      // The remaining modes in increasing order, the lower one varying fastest.
      const std::size_t lo = n == 0 ? 1 : 0;
      const std::size_t hi = n == 2 ? 1 : 2;
      const detail::Matrix gram =
          (u[lo].transpose() * u[lo]).cwiseProduct(u[hi].transpose() * u[hi]);
      const detail::Matrix mttkrp =
          detail::as_matrix(unfolded[n]) * detail::khatri_rao(u[hi], u[lo]);
      u[n] = detail::solve_normal_equations(gram, mttkrp, cfg.denom_epsilon);
      fit.trace.objective_per_update.push_back(
          residual_objective(yt, detail::cp_full(u[0], u[1], u[2])));
    }
    const double cur = fit.trace.objective_per_update.back();
    fit.trace.objective_per_iter.push_back(cur);
    fit.trace.iterations_run = it;
    if (detail::fit_converged(prev, cur, cfg.rel_tol, scale)) {
      fit.trace.converged = true;
      break;
    }
    prev = cur;
  }
  fit.model = CPModel{detail::from_matrix(u[0]), detail::from_matrix(u[1]),
                      detail::from_matrix(u[2])};
  return fit;
}

/// Tucker fit by HOOI with HOSVD initialization. ranks[n] must lie in
/// [1, I_n]. Factors keep orthonormal columns; the core is y projected onto
/// them.
inline TuckerFit tucker_hooi(const Tensor& y, std::array<std::size_t, 3> ranks,
                             const FitConfig& cfg) {
  cfg.validate();
  detail::check_third_order(y, "tucker_hooi");
  const Shape ys = y.shape().padded(3);
  const Tensor yt = y.reshaped(ys);
  for (std::size_t n = 0; n < 3; ++n) {
    if (ranks[n] < 1 || ranks[n] > ys[n]) {
      throw shape_error("tucker_hooi: rank " + std::to_string(ranks[n]) + " for mode " +
                        std::to_string(n + 1) + " must lie in [1, " + std::to_string(ys[n]) + "]");
    }
  }

  std::array<detail::Matrix, 3> u;
  for (std::size_t n = 0; n < 3; ++n) {
    u[n] = detail::leading_left_singular_vectors(detail::as_matrix(unfold(yt, n)), ranks[n]);
  }
  auto project = [&](const Tensor& t, std::size_t skip) {
    Tensor z = t;
    for (std::size_t m = 0; m < 3; ++m) {
      if (m != skip) z = mode_product(z, u[m].transpose(), m);
    }
    return z;
  };
  auto current_model = [&] {
    return TuckerModel{project(yt, 3), detail::from_matrix(u[0]), detail::from_matrix(u[1]),
                       detail::from_matrix(u[2])};
  };

  TuckerFit fit;
  const double scale = squared_norm(yt);
  double prev = residual_objective(yt, reconstruct(current_model()));
  fit.trace.initial_objective = prev;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t n = 0; n < 3; ++n) {
      const Tensor z = project(yt, n);
      u[n] = detail::leading_left_singular_vectors(detail::as_matrix(unfold(z, n)), ranks[n]);
      fit.trace.objective_per_update.push_back(residual_objective(yt, reconstruct(current_model())));
    }
    const double cur = fit.trace.objective_per_update.back();
    fit.trace.objective_per_iter.push_back(cur);
    fit.trace.iterations_run = it;
    if (detail::fit_converged(prev, cur, cfg.rel_tol, scale)) {
      fit.trace.converged = true;
      break;
    }
    prev = cur;
  }
  fit.model = current_model();
  return fit;
}

}  // namespace bcast
