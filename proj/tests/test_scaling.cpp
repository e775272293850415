// SPDX-License-Identifier: Apache-2.0
#include "mesp/exact.hpp"
#include "mesp/scaling.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mesp;
using namespace mesp::oracle;

namespace {

Instance make(const MatrixXd& C, int s) { return Instance(C, s); }

MatrixXd random_correlation(int n, std::uint64_t seed) {
  const MatrixXd G = random_pd(n, seed, 3);
  const VectorXd d = G.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd M = d.asDiagonal() * G * d.asDiagonal();
  M.diagonal().setOnes();
  return 0.5 * (M + M.transpose());
}

VectorXd random_direction(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v / v.norm();
}

}  // namespace

TEST(ScaleVectorType, LogRoundTripAndPositivity) {
  const ScaleVector u = ScaleVector::from_log(Eigen::Vector3d(0.1, -2.0, 3.0));
  EXPECT_NEAR((u.log_upsilon() - Eigen::Vector3d(0.1, -2.0, 3.0)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((ScaleVector::uniform(3, 2.0).upsilon() - VectorXd::Constant(3, 2.0)).norm(), 0.0,
              0.0);
  EXPECT_THROW(ScaleVector(Eigen::Vector2d(1.0, 0.0)), MespError);
}

TEST(ParseNames, RoundTrip) {
  for (BoundKind k : {BoundKind::Linx, BoundKind::Ddfact, BoundKind::Bqp, BoundKind::BestOf})
    EXPECT_EQ(parse_bound_kind(to_string(k)), k);
  for (ScalingMode m : {ScalingMode::None, ScalingMode::Gamma, ScalingMode::Upsilon})
    EXPECT_EQ(parse_scaling_mode(to_string(m)), m);
  EXPECT_THROW(parse_bound_kind("nope"), MespError);
}

TEST(ExactScaling, IdentityAndArgmaxInvariance) {
  for (int t = 0; t < 5; ++t) {
    const MatrixXd C = random_pd(8, 10 + t);
    const ExactResult base = brute_force(make(C, 3));
    for (double g : {0.01, 0.5, 7.0}) {
      const ExactResult sc = brute_force(make(g * C, 3));
      EXPECT_NEAR(sc.value - 3 * std::log(g), base.value, 1e-9);
      EXPECT_EQ(sc.subset, base.subset);
    }
  }
}

TEST(OptimizeGamma, NeverWorseThanUnscaled) {
  for (int t = 0; t < 5; ++t) {
    const Instance inst = make(random_pd(8, 20 + t), 3);
    for (BoundKind k : {BoundKind::Linx, BoundKind::Bqp}) {
      const ScaleResult r = optimize_gamma(k, inst);
      EXPECT_LE(r.value, bound_at_gamma(k, inst, 1.0).value + 1e-9);
      EXPECT_GT(r.gamma, 0.0);
      EXPECT_GE(r.value, oracle_optimum(inst.C, 3).value - 1e-7);
    }
  }
}

TEST(OptimizeGamma, RejectsDdfact) {
  EXPECT_THROW(optimize_gamma(BoundKind::Ddfact, make(random_pd(5, 1), 2)), MespError);
}

TEST(OptimizeGamma, ConvexityProbe) {
  for (int t = 0; t < 3; ++t) {
    const Instance inst = make(random_pd(7, 30 + t), 3);
    for (BoundKind k : {BoundKind::Linx, BoundKind::Bqp}) {
      std::vector<double> v;
      for (double lg : {-1.5, -0.5, 0.5, 1.5}) v.push_back(bound_at_gamma(k, inst, std::exp(lg)).value);
      for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_LE(v[i], 0.5 * (v[i - 1] + v[i + 1]) + 1e-6);
    }
  }
}

TEST(OptimizeGamma, ExtremeScalesStayFinite) {
  // Very small and very large entries: the optimal scale compensates.
  const MatrixXd C = random_pd(6, 2);
  for (double f : {1e-4, 1e4}) {
    const ScaleResult r = optimize_gamma(BoundKind::Linx, make(f * C, 2));
    EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_GE(r.value, brute_force(make(f * C, 2)).value - 1e-7);
  }
}

TEST(OptimizeUpsilon, UnitScalingRecoversUnscaled) {
  const Instance inst = make(random_pd(7, 40), 3);
  const VectorXd e = VectorXd::Ones(7);
  EXPECT_NEAR(bound_at_upsilon(BoundKind::Linx, inst, e).value,
              bound_at_gamma(BoundKind::Linx, inst, 1.0).value, 1e-6);
  EXPECT_NEAR(bound_at_upsilon(BoundKind::Ddfact, inst, e).value,
              bound_at_gamma(BoundKind::Ddfact, inst, 1.0).value, 1e-6);
  EXPECT_NEAR(bound_at_upsilon(BoundKind::Bqp, inst, e).value,
              bound_at_gamma(BoundKind::Bqp, inst, 1.0).value, 1e-4);
}

TEST(OptimizeUpsilon, ContainmentChain) {
  for (int t = 0; t < 4; ++t) {
    const Instance inst = make(random_pd(8, 50 + t), 2 + t);
    const double z = oracle_optimum(inst.C, inst.s).value;
    for (BoundKind k : {BoundKind::Linx, BoundKind::Bqp}) {
      const double plain = bound_at_gamma(k, inst, 1.0).value;
      const double o = optimize_gamma(k, inst).value;
      const double g = optimize_upsilon(k, inst).value;
      EXPECT_LE(o, plain + 1e-9);
      EXPECT_LE(g, o + 1e-9);
      EXPECT_GE(g, z - 1e-7);
    }
  }
}

TEST(OptimizeUpsilon, LogUpsilonConvexityProbe) {
  for (int t = 0; t < 3; ++t) {
    const Instance inst = make(random_pd(7, 60 + t), 3);
    const VectorXd dir = random_direction(7, t);
    for (BoundKind k : {BoundKind::Linx, BoundKind::Bqp}) {
      auto at = [&](double step) {
        return bound_at_upsilon(k, inst, (step * dir).array().exp().matrix()).value;
      };
      EXPECT_LE(at(0.0), 0.5 * (at(-0.8) + at(0.8)) + 1e-6);
    }
  }
}

TEST(OptimizeUpsilon, DdfactGradientVanishesAtUnitScaling) {
  // Finite differences of the g-scaled objective in log upsilon at the converged x*.
  for (int t = 0; t < 5; ++t) {
    const Instance inst = make(random_pd(8, 70 + t), 3);
    BoundOptions o;
    o.fact.fw_tol = 1e-9;
    o.fact.dual_tol = 0.0;
    o.fact.max_iter = 20000;
    const BoundResult r = bound_at_gamma(BoundKind::Ddfact, inst, 1.0, o);
    const MatrixXd F = factor_of(inst);
    VectorXd grad(8);
    const double h = 1e-5;
    for (int i = 0; i < 8; ++i) {
      VectorXd up = VectorXd::Ones(8), dn = VectorXd::Ones(8);
      up(i) = std::exp(h);
      dn(i) = std::exp(-h);
      grad(i) = (ddfact_scaled_objective(F, r.x, up, 3) - ddfact_scaled_objective(F, r.x, dn, 3)) /
                (2 * h);
    }
    EXPECT_LE(grad.norm(), 1e-4);
  }
}

TEST(OptimizeUpsilon, AnalyticGradientMatchesDifferences) {
  const Instance inst = make(random_pd(7, 80), 3);
  const VectorXd u = (0.3 * random_direction(7, 1)).array().exp().matrix();
  const BoundResult at = bound_at_upsilon(BoundKind::Linx, inst, u);
  const VectorXd g = upsilon_gradient(BoundKind::Linx, inst, u, at);
  const double h = 1e-5;
  for (int i = 0; i < 7; ++i) {
    VectorXd up = u, dn = u;
    up(i) *= std::exp(h);
    dn(i) *= std::exp(-h);
    const double fd =
        (bound_at_upsilon(BoundKind::Linx, inst, up).value - bound_at_upsilon(BoundKind::Linx, inst, dn).value) /
        (2 * h);
    EXPECT_NEAR(g(i), fd, 1e-4);
  }
}

TEST(Masking, AllOnesMaskIsIdentity) {
  const Instance inst = make(random_pd(6, 5), 3);
  const Instance m = apply_mask(inst, MatrixXd::Ones(6, 6));
  EXPECT_NEAR((m.C - inst.C).norm(), 0.0, 0.0);
}

TEST(Masking, IdentityMaskKeepsDiagonalAndBounds) {
  const MatrixXd C = random_pd(8, 6);
  const Instance m = apply_mask(make(C, 3), MatrixXd::Identity(8, 8));
  EXPECT_NEAR((m.C - MatrixXd(C.diagonal().asDiagonal())).norm(), 0.0, 0.0);
  EXPECT_GE(linx_bound_direct(m).value, oracle_optimum(C, 3).value - 1e-7);
}

TEST(Masking, RandomCorrelationMasksStayValid) {
  for (int t = 0; t < 20; ++t) {
    const int n = 6 + t % 5;
    const int s = 2 + t % (n - 3);
    const MatrixXd C = random_pd(n, 90 + t);
    const double z = oracle_optimum(C, s).value;
    const Instance m = apply_mask(make(C, s), random_correlation(n, 300 + t));
    EXPECT_GE(linx_bound_direct(m).value, z - 1e-7);
    EXPECT_GE(ddfact_bound(m).value, z - 1e-7);
  }
}

TEST(Masking, RejectsNonCorrelationMatrices) {
  MatrixXd M = MatrixXd::Identity(4, 4);
  M(0, 0) = 1.0 + 1e-8;
  EXPECT_THROW(validate_mask(M, 4), MespError);
  MatrixXd N = MatrixXd::Ones(4, 4) * -0.9;
  N.diagonal().setOnes();
  EXPECT_THROW(validate_mask(N, 4), MespError);
  EXPECT_THROW(validate_mask(MatrixXd::Identity(3, 3), 4), MespError);
}

TEST(ComputeBound, BestOfIsMinimumOfKinds) {
  const Instance inst = make(random_pd(8, 7), 3);
  const double linx = compute_bound(BoundKind::Linx, ScalingMode::None, inst).value;
  const double dd = compute_bound(BoundKind::Ddfact, ScalingMode::None, inst).value;
  const double bqp = compute_bound(BoundKind::Bqp, ScalingMode::None, inst).value;
  const BoundResult best = compute_bound(BoundKind::BestOf, ScalingMode::None, inst);
  EXPECT_NEAR(best.value, std::min({linx, dd, bqp}), 1e-12);
  EXPECT_TRUE(best.has_flag("best_of"));
}
