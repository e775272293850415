// SPDX-License-Identifier: Apache-2.0
#include "mesp/bqp_bound.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mesp;
using namespace mesp::oracle;

namespace {

Instance make(const MatrixXd& C, int s) { return Instance(C, s); }

/// Random convex combination of integral lifts: feasible for the lifted relaxation.
LiftedPoint random_feasible_lift(int n, int s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> subsets;
  for_each_subset(n, s, [&](const std::vector<int>& S) { subsets.push_back(S); });
  std::uniform_int_distribution<std::size_t> pick(0, subsets.size() - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  LiftedPoint p{VectorXd::Zero(n), MatrixXd::Zero(n, n)};
  double total = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double a = w(rng);
    const VectorXd x = Subset(subsets[pick(rng)], n).indicator(n);
    p.x += a * x;
    p.X += a * x * x.transpose();
    total += a;
  }
  p.x /= total;
  p.X /= total;
  return p;
}

}  // namespace

TEST(BqpObjective, IntegralLiftEqualsSubmatrixLdet) {
  const MatrixXd C = random_pd(7, 1);
  for_each_subset(7, 3, [&](const std::vector<int>& S) {
    const LiftedPoint p = LiftedPoint::of_subset(Subset(S, 7), 7);
    EXPECT_NEAR(bqp_objective(C, p, 1.0, 3), ldet_eig(sub(C, S)), 1e-9);
  });
}

TEST(BqpObjective, IdentityAtFeasibleInteriorPoint) {
  const int n = 6, s = 2;
  const double p1 = static_cast<double>(s) / n;
  const double p2 = static_cast<double>(s) * (s - 1) / (n * (n - 1.0));
  LiftedPoint p{VectorXd::Constant(n, p1), MatrixXd::Constant(n, n, p2)};
  p.X.diagonal().setConstant(p1);
  EXPECT_LE(lifted_feasibility(p, s).linear_residual, 1e-12);
  EXPECT_GE(lifted_feasibility(p, s).psd_margin, -1e-12);
  const double v = bqp_objective(MatrixXd::Identity(n, n), p, 1.0, s);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.0, 1e-12);  // I o X + Diag(e - x) = I
}

TEST(BqpObjective, NotScaleInvariant) {
  const MatrixXd C = random_pd(6, 3);
  const LiftedPoint p = random_feasible_lift(6, 3, 4);
  const double v1 = bqp_objective(C, p, 1.0, 3);
  const double v2 = bqp_objective(C, p, 2.0, 3);
  EXPECT_GT(std::abs(v2 - v1), 1e-6);
}

TEST(BqpObjective, MatchesDefinition) {
  const MatrixXd C = random_pd(6, 8);
  const LiftedPoint p = random_feasible_lift(6, 2, 9);
  const MatrixXd M = 1.7 * C.cwiseProduct(p.X) +
                     (VectorXd::Ones(6) - p.x).asDiagonal().toDenseMatrix();
  EXPECT_NEAR(bqp_objective(C, p, 1.7, 2), ldet_eig(M) - 2 * std::log(1.7), 1e-10);
}

TEST(LinearConstraints, CountAndCorner) {
  const auto cons = linear_constraints(5, 2);
  ASSERT_EQ(cons.size(), 12u);
  const LinearConstraint& corner = cons.back();
  EXPECT_DOUBLE_EQ(corner.g, 1.0);
  MatrixXd e11 = MatrixXd::Zero(6, 6);
  e11(0, 0) = 1.0;
  EXPECT_NEAR((corner.G - e11).norm(), 0.0, 1e-15);
  for (const auto& c : cons) EXPECT_NEAR((c.G - c.G.transpose()).norm(), 0.0, 1e-15);
}

TEST(LinearConstraints, IntegralLiftSatisfiesAll) {
  const int n = 6, s = 3;
  const auto cons = linear_constraints(n, s);
  for_each_subset(n, s, [&](const std::vector<int>& S) {
    const MatrixXd W = LiftedPoint::of_subset(Subset(S, n), n).W();
    for (const auto& c : cons) EXPECT_NEAR(c.g - (c.G.array() * W.array()).sum(), 0.0, 1e-12);
  });
}

TEST(LinearConstraints, RandomInfeasibleViolatesOne) {
  const int n = 5, s = 2;
  const MatrixXd W = random_pd(n + 1, 3);
  double worst = 0.0;
  for (const auto& c : linear_constraints(n, s))
    worst = std::max(worst, std::abs(c.g - (c.G.array() * W.array()).sum()));
  EXPECT_GT(worst, 1e-3);
}

TEST(LiftedPointType, RoundTrip) {
  const LiftedPoint p = random_feasible_lift(5, 2, 1);
  const LiftedPoint q = LiftedPoint::from_W(p.W());
  EXPECT_NEAR((p.x - q.x).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p.X - q.X).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.W()(0, 0), 1.0);
}

TEST(PsdProjection, Idempotent) {
  const MatrixXd A = random_pd(6, 2) - 1.2 * MatrixXd::Identity(6, 6);
  const MatrixXd P = project_psd(A);
  EXPECT_NEAR((project_psd(P) - P).norm(), 0.0, 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(BqpAdmm, ConvergesAndBoundsOptimum) {
  int converged = 0;
  for (int t = 0; t < 10; ++t) {
    const MatrixXd C = random_pd(8, 40 + t);
    const int s = 2 + t % 5;
    const BoundResult r = bqp_admm(make(C, s));
    EXPECT_FALSE(r.has_flag("unverified"));
    EXPECT_GE(r.value, oracle_optimum(C, s).value - 1e-7);
    if (r.converged) {
      ++converged;
      ASSERT_TRUE(r.X.has_value());
      const LiftedFeasibility f = lifted_feasibility(LiftedPoint{r.x, *r.X}, s);
      EXPECT_LE(f.linear_residual, 1e-5);
    }
  }
  EXPECT_GE(converged, 9);
}

TEST(BqpAdmm, DominatesEveryFeasibleLift) {
  for (int t = 0; t < 5; ++t) {
    const MatrixXd C = random_pd(7, 70 + t);
    const int s = 3;
    const double bound = bqp_admm(make(C, s)).value;
    for (int k = 0; k < 20; ++k) {
      const LiftedPoint p = random_feasible_lift(7, s, 100 * t + k);
      EXPECT_LE(bqp_objective(C, p, 1.0, s), bound + 1e-6);
    }
  }
}

TEST(BqpAdmm, EarlyStopStillValid) {
  const MatrixXd C = random_pd(7, 3);
  BqpOptions o;
  o.max_iter = 30;
  const BoundResult r = bqp_admm(make(C, 3), 1.0, o);
  EXPECT_FALSE(r.converged);
  if (!r.has_flag("unverified")) {
    EXPECT_GE(r.value, oracle_optimum(C, 3).value - 1e-9);
  }
}

TEST(BqpAdmm, GammaScaledStillValid) {
  const MatrixXd C = random_pd(7, 12);
  const double z = oracle_optimum(C, 3).value;
  for (double g : {0.3, 3.0}) EXPECT_GE(bqp_admm(make(C, 3), g).value, z - 1e-7);
}
