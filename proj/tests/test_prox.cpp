#include "prox_oracle.hpp"

#include <gtest/gtest.h>

using namespace ppg;
using ppg::support::Gen;

TEST(SoftThreshold, ScalarBranches) {
  EXPECT_EQ(soft_threshold_scalar(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold_scalar(0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold_scalar(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold_scalar(1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold_scalar(-7.5, 0.0), -7.5);
}

TEST(SoftThreshold, VectorExamples) {
  Vec x(2);
  x << 3, 4;
  const Vec u = soft_threshold_vector(x, 1.0);
  EXPECT_NEAR(u(0), 2.4, 1e-15);
  EXPECT_NEAR(u(1), 3.2, 1e-15);
  // radial oracle
  const double t = support::grid_argmin([](double s) { return std::abs(s) + 0.5 * (s - 5) * (s - 5); }, 5, 10);
  EXPECT_NEAR(u(0), t * 0.6, 1e-6);
  EXPECT_EQ(soft_threshold_vector(Vec::Zero(2), 5.0), Vec::Zero(2));
  Vec e1 = Vec::Zero(2);
  e1(0) = 1;
  EXPECT_EQ(soft_threshold_vector(e1, 2.0), Vec::Zero(2));
  EXPECT_EQ(soft_threshold_vector(x, 0.0), x);
}

TEST(SoftThreshold, MatrixExamples) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 3;
  m(1, 1) = 1;
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 2;
  EXPECT_LE((soft_threshold_matrix(m, 1.0) - expect).norm(), 1e-12);

  Gen gen(4);
  const Mat r = gen.mat(4, 3);
  EXPECT_LE((soft_threshold_matrix(r, 0.0) - r).norm(), 1e-10);

  Vec u = gen.vec(4), v = gen.vec(3);
  u.normalize();
  v.normalize();
  const Mat rank1 = u * v.transpose();
  EXPECT_LE((soft_threshold_matrix(rank1, 0.5) - 0.5 * rank1).norm(), 1e-12);
}

TEST(SoftThreshold, MatrixOnDiagonalMatchesScalar) {
  Gen gen(8);
  for (int t = 0; t < 50; ++t) {
    const Vec sig = gen.vec(4, 2.0).cwiseAbs();
    const double lam = gen.uniform(0, 2);
    const Mat out = soft_threshold_matrix(Mat(sig.asDiagonal()), lam);
    for (Index j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(out(j, j)), soft_threshold_scalar(sig(j), lam), 1e-12);
    EXPECT_NEAR((out - Mat(out.diagonal().asDiagonal())).norm(), 0.0, 1e-12);
  }
}

TEST(ProjectInterval, Examples) {
  const Interval unit(0, 1);
  EXPECT_EQ(project_interval(5.0, unit), 1.0);
  EXPECT_EQ(project_interval(-2.0, unit), 0.0);
  EXPECT_EQ(project_interval(0.3, unit), 0.3);
  EXPECT_EQ(project_interval(-1e300, Interval(-kInf, 2)), -1e300);
  EXPECT_THROW(Interval(1, 0), std::invalid_argument);
}

TEST(ProxAffine1d, ZeroFunctionReturnsInput) {
  Gen gen(3);
  const Vec a = gen.vec(5), x0 = gen.vec(5);
  ScalarFn zero = ScalarFn::zero();
  EXPECT_LE((prox_affine_1d(a, zero, x0, 1.3) - x0).norm(), 1e-15);
  zero.prox = nullptr;
  EXPECT_LE((prox_affine_1d(a, zero, x0, 1.3) - x0).norm(), 1e-12 * a.norm());
}

TEST(ProxAffine1d, LinearOnFirstAxis) {
  Vec a = Vec::Zero(3);
  a(0) = 1;
  ScalarFn lin = ScalarFn::linear(1.0);
  lin.prox = nullptr;
  const Vec u = prox_affine_1d(a, lin, Vec::Zero(3), 1.0);
  const double beta = support::grid_argmin([](double b) { return b + 0.5 * b * b; }, 0.0, 10.0);
  EXPECT_NEAR(u(0), beta, 1e-6);
  EXPECT_NEAR(u(0), -1.0, 1e-10);
  EXPECT_EQ(u(1), 0.0);
  EXPECT_EQ(u(2), 0.0);
}

TEST(ProxAffine1d, RejectsZeroDirection) {
  EXPECT_THROW(prox_affine_1d(Vec::Zero(3), ScalarFn::abs(1), Vec::Ones(3), 1.0), std::invalid_argument);
}

TEST(ProxAffine1d, BracketingFailureIsReported) {
  ScalarFn broken;
  broken.value = [](double) { return 0.0; };
  broken.slope = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(prox_scalar(broken, 0.0, 1.0), ConvergenceError);
}

TEST(ProxHinge, Examples) {
  Vec a = Vec::Zero(3);
  a(0) = 1;
  const Vec u = prox_hinge(Vec::Zero(3), a, 1.0, 0.5);
  const double beta = support::grid_argmin([](double b) { return 0.5 * std::max(1 - b, 0.0) + 0.5 * b * b; }, 0, 5);
  EXPECT_NEAR(u(0), beta, 1e-6);
  EXPECT_DOUBLE_EQ(u(0), 0.5);

  Vec x0(3);
  x0 << 2, 1, -1;
  EXPECT_EQ(prox_hinge(x0, a, 1.0, 0.7), x0);
  EXPECT_THROW(prox_hinge(x0, Vec::Zero(3), 1.0, 0.5), std::invalid_argument);
}

TEST(ProxScaledSqNorm, Examples) {
  Gen gen(1);
  const Vec x = gen.vec(3);
  EXPECT_EQ(prox_scaled_sq_norm(x, 0.0, 2.0), x);
  EXPECT_DOUBLE_EQ(prox_scaled_sq_norm(Vec::Constant(1, 2.0), 1.0, 1.0)(0), 1.0);
}

TEST(ProxQuadratic, Examples) {
  Gen gen(5);
  const Vec v = gen.vec(4);
  const CachedQuadraticProx zero(Mat::Zero(3, 4), Vec::Zero(3), 0.7);
  EXPECT_LE((prox_quadratic(zero, v) - v).norm(), 1e-15);
  const CachedQuadraticProx ident(Mat::Identity(4, 4), Vec::Zero(4), 1.0);
  EXPECT_LE((prox_quadratic(ident, v) - v / 2).norm(), 1e-15);

  const Mat A = gen.mat(10, 5);
  const Vec b = gen.vec(10), w = gen.vec(5);
  const CachedQuadraticProx c(A, b, 0.3);
  const Vec u = prox_quadratic(c, w);
  EXPECT_LE(((Mat::Identity(5, 5) + 0.3 * A.transpose() * A) * u - (0.3 * A.transpose() * b + w)).norm(), 1e-9);
  EXPECT_TRUE(c.valid_for(0.3));
  EXPECT_FALSE(c.valid_for(0.31));
}

TEST(ProxQuadratic, FactoryRefactorsForOtherAlpha) {
  Gen gen(6);
  const Mat A = gen.mat(8, 3);
  const Vec b = gen.vec(8), v = gen.vec(3);
  const ProxFn h = prox::least_squares(A, b, 0.5);
  for (double a : {0.5, 0.2, 2.0}) {
    const Vec want = (Mat::Identity(3, 3) + a * A.transpose() * A).ldlt().solve(a * A.transpose() * b + v);
    EXPECT_LE((h.prox(v, a) - want).norm(), 1e-10) << a;
  }
}

TEST(ProxGlm, ZeroFeatureReturnsInput) {
  const Vec x0 = Vec::LinSpaced(4, -1, 1);
  EXPECT_EQ(prox_glm_1d(x0, Vec::Zero(4), 0.7, ScalarFn::logistic(), 1.0), x0);
}

TEST(ProxGlm, LogisticIsLocallyOptimal) {
  Gen gen(7);
  const ScalarFn link = ScalarFn::logistic();
  for (int t = 0; t < 200; ++t) {
    const Vec xi = gen.vec(3), x0 = gen.vec(3, 3.0);
    const double T = t % 2, al = gen.uniform(0.1, 5);
    const Vec u = prox_glm_1d(x0, xi, T, link, al);
    const double beta = (u - x0).dot(xi) / xi.squaredNorm();
    auto obj = [&](double b) {
      const Vec w = x0 + b * xi;
      const double s = xi.dot(w);
      return al * (link.value(s) - T * s) + 0.5 * (w - x0).squaredNorm();
    };
    EXPECT_LE(obj(beta), obj(beta + 1e-4) + 1e-15);
    EXPECT_LE(obj(beta), obj(beta - 1e-4) + 1e-15);
  }
}

TEST(ProxCoupling, ZeroFunctionIsIdentity) {
  Gen gen(9);
  const Block xi = gen.block(3, 4);
  EXPECT_LE((prox_sum_coupling(gen.vec(3), ProxFn::zero(), xi, 0.8) - xi).norm(), 1e-14);
  EXPECT_THROW(prox_sum_coupling(Vec::Zero(3), ProxFn::zero(), xi, 1.0), std::invalid_argument);
  EXPECT_THROW(prox_sum_coupling(Vec::Ones(2), ProxFn::zero(), xi, 1.0), std::invalid_argument);
}

TEST(ProxCoupling, PairFormsMatchDisplayedCorollaries) {
  Gen gen(10);
  for (int t = 0; t < 200; ++t) {
    const ProxFn f = prox::l2_norm(gen.uniform(0.1, 2));
    const Vec x0 = gen.vec(3), y0 = gen.vec(3);
    const double al = gen.uniform(0.1, 2);
    const Vec ps = f.prox(x0 + y0, 2 * al);
    const Vec pd = f.prox(x0 - y0, 2 * al);
    auto [sx, sy] = prox_pair_sum(f, x0, y0, al);
    EXPECT_LE((sx - 0.5 * (x0 - y0 + ps)).norm(), 1e-14);
    EXPECT_LE((sy - 0.5 * (y0 - x0 + ps)).norm(), 1e-14);
    auto [dx, dy] = prox_pair_diff(f, x0, y0, al);
    EXPECT_LE((dx - 0.5 * (x0 + y0 + pd)).norm(), 1e-14);
    EXPECT_LE((dy - 0.5 * (x0 + y0 - pd)).norm(), 1e-14);
  }
}

TEST(ProxCoupling, PairDiffEqualInputsUnchanged) {
  const Vec x = Vec::LinSpaced(3, 0, 2);
  auto [u, v] = prox_pair_diff(prox::l1_norm(0.8), x, x, 1.1);
  EXPECT_EQ(u, x);
  EXPECT_EQ(v, x);
  auto [p, q] = prox_pair_sum(ProxFn::zero(), x, 2 * x, 1.0);
  EXPECT_LE((p - x).norm(), 1e-15);
  EXPECT_LE((q - 2 * x).norm(), 1e-15);
}

TEST(ProxFactories, ZeroLambdaIsIdentity) {
  Gen gen(11);
  const Vec x = gen.vec(5);
  EXPECT_EQ(prox::l1_norm(0).prox(x, 3.0), x);
  EXPECT_EQ(prox::l2_norm(0).prox(x, 3.0), x);
  EXPECT_EQ(prox::sq_norm(0).prox(x, 3.0), x);
  EXPECT_TRUE(prox::l1_norm(0).is_zero);
  EXPECT_THROW(prox::scaled(prox::l1_norm(1), 0.0), std::invalid_argument);
  EXPECT_THROW(prox::hinge(Vec::Zero(2), 1.0), std::invalid_argument);
}

TEST(ProxFactories, AddSqNormMatchesDirectMinimizer) {
  Gen gen(12);
  for (int t = 0; t < 100; ++t) {
    const double lam = gen.uniform(0.01, 2), al = gen.uniform(0.1, 3), c = gen.uniform(0.1, 2);
    const ProxFn h = prox::add_sq_norm(prox::l1_norm(c), lam);
    const Vec x = gen.vec(1, 3);
    const double o = support::grid_argmin(
        [&](double u) { return al * (c * std::abs(u) + 0.5 * lam * u * u) + 0.5 * (u - x(0)) * (u - x(0)); }, x(0), 30);
    EXPECT_NEAR(h.prox(x, al)(0), o, 1e-6);
  }
}

// 200 seeded cases per operator here; the acceptance binary runs 1000.
TEST(ProxOracleSuite, EveryOperatorMatchesBruteForce) {
  const auto stats = support::run_prox_oracle_suite(2024, 200);
  EXPECT_GE(stats.size(), 30u);
  for (const auto& s : stats) {
    EXPECT_LE(s.max_err, support::kOracleTol) << s.name;
    EXPECT_LE(s.max_slack, support::kFirmTol) << s.name;
    EXPECT_EQ(s.cases, 200) << s.name;
  }
}
