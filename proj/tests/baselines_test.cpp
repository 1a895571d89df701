#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "support.hpp"

using namespace bcast;
using bcast::testing::median;
using bcast::testing::relative_residual;

namespace {

Eigen::MatrixXd as_eigen(const Tensor& m) {
  return Eigen::Map<const Eigen::MatrixXd>(m.data().data(), m.dim(0), m.numel() / m.dim(0));
}

double orthonormality_defect(const Tensor& u) {
  const Eigen::MatrixXd m = as_eigen(u);
  return (m.transpose() * m - Eigen::MatrixXd::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

void expect_non_increasing(const FitTrace& tr) {
  double prev = tr.initial_objective;
  for (double f : tr.objective_per_iter) {
    EXPECT_LE(f, prev + 1e-10);
    prev = f;
  }
}

}  // namespace

TEST(BaselineParamCount, Cp) {
  const CPModel m{Tensor::zeros(Shape{32, 10}), Tensor::zeros(Shape{32, 10}),
                  Tensor::zeros(Shape{32, 10})};
  EXPECT_EQ(param_count(m), 960u);
}

TEST(BaselineParamCount, Tucker) {
  const TuckerModel m{Tensor::zeros(Shape{4, 4, 4}), Tensor::zeros(Shape{32, 4}),
                      Tensor::zeros(Shape{32, 4}), Tensor::zeros(Shape{32, 4})};
  EXPECT_EQ(param_count(m), 448u);
}

TEST(ModeProduct, MatchesUnfoldedMatrixProduct) {
  Rng rng(60);
  const Tensor x = random_normal(Shape{3, 4, 5}, rng);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(2, 4);
  const Tensor y = mode_product(x, m, 1);
  ASSERT_EQ(y.shape(), (Shape{3, 2, 5}));
  const Eigen::MatrixXd expect = m * as_eigen(unfold(x, 1));
  EXPECT_LE((as_eigen(unfold(y, 1)) - expect).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(mode_product(x, m, 0), shape_error);
}

TEST(CpAls, PlantedRankOneRecovery) {
  std::vector<double> rel;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Tensor a = random_normal(Shape{7}, rng);
    const Tensor b = random_normal(Shape{1, 6}, rng);
    const Tensor c = random_normal(Shape{1, 1, 5}, rng);
    const Tensor y = product(product(a, b), c);
    FitConfig cfg;
    cfg.seed = mix_seed(seed, 1);
    const CPFit fit = cp_als(y, 1, cfg);
    rel.push_back(relative_residual(y, reconstruct(fit.model)));
  }
  EXPECT_LT(median(rel), 1e-8);
}

TEST(CpAls, OvercompleteRankTraceNonIncreasing) {
  Rng rng(61);
  const Tensor y = random_normal(Shape{4, 5, 3}, rng);
  FitConfig cfg;
  cfg.max_iters = 200;
  const CPFit fit = cp_als(y, 4, cfg);
  expect_non_increasing(fit.trace);
  double prev = fit.trace.initial_objective;
  for (double f : fit.trace.objective_per_update) {
    EXPECT_LE(f, prev + 1e-10);
    prev = f;
  }
}

TEST(CpAls, ZeroTensorFitsImmediately) {
  const CPFit fit = cp_als(Tensor::zeros(Shape{3, 4, 5}), 2, FitConfig{});
  EXPECT_EQ(fit.trace.iterations_run, 1);
  EXPECT_EQ(fit.trace.objective_per_iter.back(), 0.0);
  EXPECT_EQ(bcast::testing::max_abs(reconstruct(fit.model)), 0.0);
}

TEST(CpAls, RankIJReproducesSmallTensors) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    const Tensor y = random_normal(Shape{4, 4, 4}, rng);
    FitConfig cfg;
    cfg.seed = seed;
    const CPFit fit = cp_als(y, 16, cfg);
    EXPECT_LT(relative_residual(y, reconstruct(fit.model)), 1e-6) << seed;
  }
}

TEST(CpAls, RejectsZeroRank) {
  EXPECT_THROW(cp_als(Tensor::zeros(Shape{2, 2, 2}), 0, FitConfig{}), error);
}

TEST(TuckerHooi, FullRanksAreLossless) {
  Rng rng(62);
  const Tensor y = random_normal(Shape{4, 5, 3}, rng);
  const TuckerFit fit = tucker_hooi(y, {4, 5, 3}, FitConfig{});
  EXPECT_LT(relative_residual(y, reconstruct(fit.model)), 1e-10);
}

TEST(TuckerHooi, PlantedCoreRecovery) {
  Rng rng(63);
  const Tensor core = random_normal(Shape{2, 2, 2}, rng);
  Tensor y = mode_product(core, as_eigen(random_normal(Shape{6, 2}, rng)), 0);
  y = mode_product(y, as_eigen(random_normal(Shape{7, 2}, rng)), 1);
  y = mode_product(y, as_eigen(random_normal(Shape{5, 2}, rng)), 2);
  const TuckerFit fit = tucker_hooi(y, {2, 2, 2}, FitConfig{});
  EXPECT_LT(relative_residual(y, reconstruct(fit.model)), 1e-8);
  EXPECT_EQ(param_count(fit.model), 8u + 12u + 14u + 10u);
}

TEST(TuckerHooi, RankOneOnSeparableTensor) {
  Rng rng(64);
  const Tensor y = product(product(random_normal(Shape{4}, rng), random_normal(Shape{1, 3}, rng)),
                           random_normal(Shape{1, 1, 6}, rng));
  const TuckerFit fit = tucker_hooi(y, {1, 1, 1}, FitConfig{});
  EXPECT_LT(relative_residual(y, reconstruct(fit.model)), 1e-12);
}

TEST(TuckerHooi, OrthonormalFactorsAndMonotoneTrace) {
  Rng rng(65);
  const Tensor y = random_normal(Shape{8, 7, 6}, rng);
  for (int iters = 1; iters <= 6; ++iters) {
    FitConfig cfg;
    cfg.max_iters = iters;
    const TuckerFit fit = tucker_hooi(y, {3, 2, 4}, cfg);
    EXPECT_LT(orthonormality_defect(fit.model.U1), 1e-10);
    EXPECT_LT(orthonormality_defect(fit.model.U2), 1e-10);
    EXPECT_LT(orthonormality_defect(fit.model.U3), 1e-10);
    expect_non_increasing(fit.trace);
  }
}

TEST(TuckerHooi, RankOutOfRange) {
  EXPECT_THROW(tucker_hooi(Tensor::zeros(Shape{3, 3, 3}), {4, 1, 1}, FitConfig{}), shape_error);
  EXPECT_THROW(tucker_hooi(Tensor::zeros(Shape{3, 3, 3}), {1, 0, 1}, FitConfig{}), shape_error);
}
