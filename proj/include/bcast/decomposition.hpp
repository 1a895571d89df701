#pragma once

// Broadcast decomposition (BD) of a third-order tensor,
//
//   Y ~ A (.) B (.) C,   A: I x J x 1,  B: I x 1 x K,  C: 1 x J x K,
//
// i.e. y_ijk ~ a_ij * b_ik * c_jk, fitted by alternating least squares, and
// the sum-of-BDs model  Y ~ sum_r A_r (.) B_r (.) C_r  fitted by
// hierarchical ALS (each term refitted against the residual of the others).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bcast/broadcast_ops.hpp"
#include "bcast/least_squares.hpp"
#include "bcast/random.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

/// One BD term. Shapes: A is I x J x 1, B is I x 1 x K, C is 1 x J x K.
struct BDFactors {
  Tensor A;
  Tensor B;
  Tensor C;

  std::size_t dim_i() const { return A.dim(0); }
  std::size_t dim_j() const { return A.dim(1); }
  std::size_t dim_k() const { return B.dim(2); }

  void validate() const {
    const std::size_t i = dim_i(), j = dim_j(), k = dim_k();
    if (!equivalent(A.shape(), Shape{i, j, 1}) || !equivalent(B.shape(), Shape{i, 1, k}) ||
        !equivalent(C.shape(), Shape{1, j, k})) {
      throw shape_error("BD factors: expected IxJx1, Ix1xK, 1xJxK; got " + A.shape().str() +
                        ", " + B.shape().str() + ", " + C.shape().str());
    }
  }
};

enum class Factor { A, B, C };

/// Starting point of the BD fits.
///   structured: log-magnitude additive fit plus sign synchronization
///               (exact for a noiseless single term), deterministic.
///   random:     i.i.d. standard normal factors drawn with the fit seed.
enum class BDInit { structured, random };

struct FitConfig {
  int max_iters = 500;
  double rel_tol = 1e-9;
  std::uint64_t seed = 0;
  double denom_epsilon = 1e-12;
  BDInit bd_init = BDInit::structured;  // ignored by the CP and Tucker baselines

  void validate() const {
    if (max_iters < 1) throw error("fit config: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw error("fit config: rel_tol must be > 0");
    if (!(denom_epsilon >= 0.0)) throw error("fit config: denom_epsilon must be >= 0");
  }
};

/// Objective history of a fit. Objectives are ||Y - model||_F^2.
struct FitTrace {
  double initial_objective = 0.0;
  std::vector<double> objective_per_iter;    // after each full sweep
  std::vector<double> objective_per_update;  // after each single-factor update
  int iterations_run = 0;
  bool converged = false;
};

struct BDFit {
  BDFactors factors;
  FitTrace trace;
};

struct SumBDFit {
  std::vector<BDFactors> terms;
  FitTrace trace;
};

inline Tensor reconstruct(const BDFactors& f) {
  f.validate();
  return product(product(f.A, f.B), f.C);
}

inline Tensor reconstruct(const std::vector<BDFactors>& terms) {
  if (terms.empty()) throw error("reconstruct: no terms");
  Tensor model = reconstruct(terms.front());
  for (std::size_t r = 1; r < terms.size(); ++r) model = sum(model, reconstruct(terms[r]));
  return model;
}

inline std::size_t param_count(const BDFactors& f) {
  return f.A.numel() + f.B.numel() + f.C.numel();
}

/// R * (IJ + IK + JK) for a sum of R terms.
inline std::size_t param_count(const std::vector<BDFactors>& terms) {
  std::size_t n = 0;
  for (const auto& t : terms) n += param_count(t);
  return n;
}

inline BDFactors random_bd_factors(std::size_t i, std::size_t j, std::size_t k, Rng& rng) {
  BDFactors f;
  f.A = random_normal(Shape{i, j, 1}, rng);
  f.B = random_normal(Shape{i, 1, k}, rng);
  f.C = random_normal(Shape{1, j, k}, rng);
  return f;
}

namespace detail {

inline bool fit_converged(double prev, double cur, double rel_tol, double scale) {
  if (cur <= 1e-28 * scale) return true;
  return std::abs(prev - cur) <= rel_tol * prev;
}

inline void check_third_order(const Tensor& y, const char* what) {
  if (y.shape().trimmed().order() > 3) {
    throw shape_error(std::string(what) + ": expected a third-order tensor, got " +
                      y.shape().str());
  }
}

}  // namespace detail

/// Deterministic single-term initialization from the data.
///
/// Magnitudes: log|y_ijk| = alpha_ij + beta_ik + gamma_jk is an additive
/// model, and its least-squares fit is the two-way-margin projection
///   alpha = m_ij,  beta = m_ik - m_i,  gamma = m_jk - m_j - m_k + m
/// (m_* are means of log|y| over the missing indices).
///
/// Signs: sign(y_ijk) = s_ij t_ik u_jk. u is read off the heaviest i-slice,
/// each slice's (s_i, t_i) is seeded from its heaviest row, and the three sign
/// patterns are then refined by |y|-weighted majority votes.
inline BDFactors structured_bd_init(const Tensor& y_in) {
  detail::check_third_order(y_in, "structured_bd_init");
  const Shape shape = y_in.shape().padded(3);
  const Tensor y = y_in.reshaped(shape);
  const std::size_t I = shape[0], J = shape[1], K = shape[2];
  const auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return i + I * (j + J * k); };

  double amax = 0.0;
  for (double v : y.data()) amax = std::max(amax, std::abs(v));
  const double floor = amax > 0.0 ? amax * 1e-12 : 1.0;

  std::vector<double> logmag(y.numel()), weight(y.numel()), sgn(y.numel());
  for (std::size_t n = 0; n < y.numel(); ++n) {
    weight[n] = std::abs(y[n]);
    logmag[n] = std::log(std::max(weight[n], floor));
    sgn[n] = y[n] < 0.0 ? -1.0 : 1.0;
  }
  const Tensor lt(shape, logmag);
  const auto mean = [&](std::vector<std::size_t> modes) {
    std::size_t count = 1;
    for (std::size_t m : modes) count *= shape[m];
    return scaled(mode_sum(lt, modes), 1.0 / static_cast<double>(count));
  };
  const Tensor alpha = mean({2});
  const Tensor beta = difference(mean({1}), mean({1, 2}));
  const Tensor gamma =
      sum(difference(difference(mean({0}), mean({0, 2})), mean({0, 1})), mean({0, 1, 2}));

  const auto vote = [](double t) { return t < 0.0 ? -1.0 : 1.0; };
  std::vector<double> s(I * J, 1.0), t(I * K, 1.0), u(J * K, 1.0);

  std::size_t ref = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < I; ++i) {
    double w = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < J; ++j) w += weight[at(i, j, k)];
    if (w > best) best = w, ref = i;
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) u[j + J * k] = sgn[at(ref, j, k)];

  const auto update_s = [&](std::size_t i) {
    for (std::size_t j = 0; j < J; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        acc += weight[at(i, j, k)] * sgn[at(i, j, k)] * t[i + I * k] * u[j + J * k];
      s[i + I * j] = vote(acc);
    }
  };
  const auto update_t = [&](std::size_t i) {
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < J; ++j)
        acc += weight[at(i, j, k)] * sgn[at(i, j, k)] * s[i + I * j] * u[j + J * k];
      t[i + I * k] = vote(acc);
    }
  };
  const auto update_u = [&] {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < J; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < I; ++i)
          acc += weight[at(i, j, k)] * sgn[at(i, j, k)] * s[i + I * j] * t[i + I * k];
        u[j + J * k] = vote(acc);
      }
  };

  for (std::size_t i = 0; i < I; ++i) {
    std::size_t heavy = 0;
    double hw = -1.0;
    for (std::size_t j = 0; j < J; ++j) {
      double w = 0.0;
      for (std::size_t k = 0; k < K; ++k) w += weight[at(i, j, k)];
      if (w > hw) hw = w, heavy = j;
    }
    for (std::size_t k = 0; k < K; ++k) t[i + I * k] = sgn[at(i, heavy, k)] * u[heavy + J * k];
    for (int round = 0; round < 10; ++round) {
      update_s(i);
      update_t(i);
    }
  }
  for (int round = 0; round < 20; ++round) {
    const auto before = std::make_tuple(s, t, u);
    update_u();
    for (std::size_t i = 0; i < I; ++i) {
      update_s(i);
      update_t(i);
    }
    if (std::make_tuple(s, t, u) == before) break;
  }

  std::vector<double> a(I * J), b(I * K), c(J * K);
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = s[n] * std::exp(alpha[n]);
  for (std::size_t n = 0; n < b.size(); ++n) b[n] = t[n] * std::exp(beta[n]);
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = u[n] * std::exp(gamma[n]);
  return BDFactors{Tensor(Shape{I, J, 1}, std::move(a)), Tensor(Shape{I, 1, K}, std::move(b)),
                   Tensor(Shape{1, J, K}, std::move(c))};
}

/// ||y - model||_F^2, summed in column-major order.
inline double residual_objective(const Tensor& y, const Tensor& model) {
  if (!equivalent(y.shape(), model.shape())) {
    throw shape_error("objective: shapes " + y.shape().str() + " and " + model.shape().str() +
                      " differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double d = y[i] - model[i];
    s += d * d;
  }
  return s;
}

/// Replaces one factor by its exact least-squares update given the other two.
/// The summed mode is the singleton mode of the updated factor (3 for A,
/// 2 for B, 1 for C). Denominators are clamped below at `eps`; with eps == 0
/// a vanishing denominator throws singular_error.
inline BDFactors bd_update_factor(const Tensor& y, const BDFactors& f, Factor which, double eps) {
  f.validate();
  if (!(eps >= 0.0)) throw error("bd_update_factor: eps must be >= 0");
  const auto guard = DenominatorGuard::clamp(eps);
  BDFactors out = f;
  switch (which) {
    case Factor::A: out.A = ls_solve_guarded(y, product(f.B, f.C), f.A.shape(), guard); break;
    case Factor::B: out.B = ls_solve_guarded(y, product(f.A, f.C), f.B.shape(), guard); break;
    case Factor::C: out.C = ls_solve_guarded(y, product(f.A, f.B), f.C.shape(), guard); break;
  }
  return out;
}

/// ALS for a single BD term starting from `init`. Each sweep updates A, B,
/// then C; the fit stops when the relative objective change of a sweep drops
/// to cfg.rel_tol or after cfg.max_iters sweeps.
inline BDFit bd_als(const Tensor& y, const FitConfig& cfg, BDFactors init) {
  cfg.validate();
  detail::check_third_order(y, "bd_als");
  init.validate();
  const Shape ys = y.shape().padded(3);
  if (!equivalent(ys, Shape{init.dim_i(), init.dim_j(), init.dim_k()})) {
    throw shape_error("bd_als: factors do not match tensor shape " + y.shape().str());
  }

  BDFit fit{std::move(init), {}};
  const double scale = squared_norm(y);
  double prev = residual_objective(y, reconstruct(fit.factors));
  fit.trace.initial_objective = prev;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (Factor which : {Factor::A, Factor::B, Factor::C}) {
      fit.factors = bd_update_factor(y, fit.factors, which, cfg.denom_epsilon);
      fit.trace.objective_per_update.push_back(residual_objective(y, reconstruct(fit.factors)));
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
  return fit;
}

/// ALS from the initialization selected by cfg.bd_init. The random start
/// draws A, then B, then C from a generator seeded with cfg.seed.
inline BDFit bd_als(const Tensor& y, const FitConfig& cfg) {
  detail::check_third_order(y, "bd_als");
  if (cfg.bd_init == BDInit::structured) return bd_als(y, cfg, structured_bd_init(y));
  const Shape ys = y.shape().padded(3);
  Rng rng(cfg.seed);
  return bd_als(y, cfg, random_bd_factors(ys[0], ys[1], ys[2], rng));
}

/// Hierarchical ALS for the sum of BDs starting from `init`. Each cycle
/// visits the terms in order; term k gets one ALS sweep against
/// Y_k = Y - sum_{r != k} term_r. The running model sum is updated
/// incrementally and rebuilt from scratch every 50 cycles.
inline SumBDFit sum_bd_hals(const Tensor& y, const FitConfig& cfg, std::vector<BDFactors> init) {
  cfg.validate();
  detail::check_third_order(y, "sum_bd_hals");
  if (init.empty()) throw error("sum_bd_hals: R must be >= 1");
  const Shape ys = y.shape().padded(3);
  for (auto& t : init) {
    t.validate();
    if (!equivalent(ys, Shape{t.dim_i(), t.dim_j(), t.dim_k()})) {
      throw shape_error("sum_bd_hals: factors do not match tensor shape " + y.shape().str());
    }
  }

  SumBDFit fit{std::move(init), {}};
  const double scale = squared_norm(y);
  Tensor model = reconstruct(fit.terms);
  double prev = residual_objective(y, model);
  fit.trace.initial_objective = prev;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (auto& term : fit.terms) {
      const Tensor others = difference(model, reconstruct(term));
      const Tensor yk = difference(y, others);
      for (Factor which : {Factor::A, Factor::B, Factor::C}) {
        term = bd_update_factor(yk, term, which, cfg.denom_epsilon);
        fit.trace.objective_per_update.push_back(residual_objective(yk, reconstruct(term)));
      }
      model = sum(others, reconstruct(term));
    }
    if (it % 50 == 0) model = reconstruct(fit.terms);
    const double cur = residual_objective(y, model);
    fit.trace.objective_per_iter.push_back(cur);
    fit.trace.iterations_run = it;
    if (detail::fit_converged(prev, cur, cfg.rel_tol, scale)) {
      fit.trace.converged = true;
      break;
    }
    prev = cur;
  }
  return fit;
}

/// HALS from the initialization selected by cfg.bd_init. R = 1 starts exactly
/// where bd_als does:
///   structured: term r is structured_bd_init of Y minus the terms before it.
///   random:     A_r, B_r, C_r are drawn in sequence from one generator
///               seeded with cfg.seed.
inline SumBDFit sum_bd_hals(const Tensor& y, std::size_t rank, const FitConfig& cfg) {
  detail::check_third_order(y, "sum_bd_hals");
  if (rank < 1) throw error("sum_bd_hals: R must be >= 1");
  const Shape ys = y.shape().padded(3);
  std::vector<BDFactors> init;
  if (cfg.bd_init == BDInit::structured) {
    Tensor rest = y.reshaped(ys);
    for (std::size_t r = 0; r < rank; ++r) {
      init.push_back(structured_bd_init(rest));
      if (r + 1 < rank) rest = difference(rest, reconstruct(init.back()));
    }
  } else {
    Rng rng(cfg.seed);
    for (std::size_t r = 0; r < rank; ++r) {
      init.push_back(random_bd_factors(ys[0], ys[1], ys[2], rng));
    }
  }
  return sum_bd_hals(y, cfg, std::move(init));
}

/// 10 log10(||reference||^2 / ||reference - estimate||^2) in dB; +infinity
/// when the estimate is exact.
inline double snr_db(const Tensor& reference, const Tensor& estimate) {
  if (!equivalent(reference.shape(), estimate.shape())) {
    throw shape_error("snr: shapes " + reference.shape().str() + " and " +
                      estimate.shape().str() + " differ");
  }
  const double signal = squared_norm(reference);
  if (signal == 0.0) throw error("snr: reference tensor is zero");
  const double noise = residual_objective(reference, estimate);
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace bcast
