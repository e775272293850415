// SPDX-License-Identifier: Apache-2.0
#include "mesp/core.hpp"
#include "mesp/fact_bound.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace mesp;
using mesp::oracle::ldet_eig;
using mesp::oracle::random_pd;
using mesp::oracle::sub;

namespace {

Instance make(const MatrixXd& C, int s) { return Instance(C, s); }

}  // namespace

TEST(LdetSubmatrix, DiagonalCase) {
  const MatrixXd C = VectorXd::LinSpaced(3, 2.0, 4.0).asDiagonal();
  EXPECT_NEAR(ldet_submatrix(C, Subset({0, 2}, 3)), std::log(2.0) + std::log(4.0), 1e-14);
}

TEST(LdetSubmatrix, IdentityIsZero) {
  const MatrixXd I = MatrixXd::Identity(6, 6);
  EXPECT_DOUBLE_EQ(ldet_submatrix(I, Subset({1, 3, 4}, 6)), 0.0);
  EXPECT_DOUBLE_EQ(ldet_submatrix(I, Subset({0, 1, 2, 3, 4, 5}, 6)), 0.0);
}

TEST(LdetSubmatrix, MatchesEigenvalueSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd C = random_pd(5, 100 + trial);
    std::vector<int> idx(5);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(1 + trial % 5);
    EXPECT_NEAR(ldet_submatrix(C, Subset(idx, 5)), ldet_eig(sub(C, Subset(idx, 5).indices())),
                1e-10);
  }
}

TEST(LdetSubmatrix, SingularGivesNegativeInfinity) {
  MatrixXd C = MatrixXd::Ones(3, 3);
  EXPECT_EQ(ldet_submatrix(C, Subset({0, 1}, 3)), kNegInf);
}

TEST(LdetSubmatrix, OffsetIncludedInSubsetValue) {
  Instance inst = make(MatrixXd::Identity(4, 4) * 2.0, 2);
  inst.offset = 1.5;
  EXPECT_NEAR(subset_value(inst, Subset({0, 3}, 4)), 1.5 + 2.0 * std::log(2.0), 1e-14);
}

TEST(LdetSubmatrix, PermutationInvariant) {
  const MatrixXd C = random_pd(7, 3);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  MatrixXd P = MatrixXd::Zero(7, 7);
  for (int i = 0; i < 7; ++i) P(perm[i], i) = 1.0;  // (P^T C P)(a,b) = C(perm[a], perm[b])
  const MatrixXd Cp = P.transpose() * C * P;
  std::vector<int> inv(7);
  for (int i = 0; i < 7; ++i) inv[perm[i]] = i;
  const std::vector<int> S = {0, 2, 5};
  std::vector<int> Sp;
  for (int i : S) Sp.push_back(inv[i]);
  EXPECT_NEAR(ldet_submatrix(C, Subset(S, 7)), ldet_submatrix(Cp, Subset(Sp, 7)), 1e-12);
}

TEST(LdetSubmatrix, FullSetIsSumOfLogEigenvalues) {
  const MatrixXd C = random_pd(6, 9);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
  EXPECT_NEAR(ldet_submatrix(C, Subset({0, 1, 2, 3, 4, 5}, 6)),
              es.eigenvalues().array().log().sum(), 1e-10);
}

TEST(SubsetType, SortsAndConverts) {
  const Subset S({4, 1, 2}, 6);
  EXPECT_EQ(S.indices(), (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(S.one_based(), (std::vector<int>{2, 3, 5}));
  EXPECT_TRUE(S.contains(4));
  EXPECT_FALSE(S.contains(0));
  EXPECT_EQ(S.complement(6).indices(), (std::vector<int>{0, 3, 5}));
  EXPECT_DOUBLE_EQ(S.indicator(6).sum(), 3.0);
}

TEST(SubsetType, RejectsBadIndices) {
  EXPECT_THROW(Subset({1, 1}, 3), MespError);
  EXPECT_THROW(Subset({3}, 3), MespError);
  EXPECT_THROW(Subset({-1}, 3), MespError);
}

TEST(Validate, IndefiniteMatrix) {
  MatrixXd C(2, 2);
  C << 1, 2, 2, 1;
  const ValidationReport r = validate(make(C, 1));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.has(Violation::NotPsd));
}

TEST(Validate, CardinalityMustBeBelowN) {
  const ValidationReport r = validate(make(MatrixXd::Identity(3, 3), 3));
  EXPECT_TRUE(r.has(Violation::Cardinality));
  EXPECT_TRUE(validate(make(MatrixXd::Identity(3, 3), 0)).has(Violation::Cardinality));
}

TEST(Validate, RankBelowCardinality) {
  VectorXd v(3);
  v << 1, 2, 3;
  const ValidationReport r = validate(make(v * v.transpose(), 2));
  EXPECT_TRUE(r.has(Violation::RankDeficient));
  EXPECT_EQ(r.numerical_rank, 1);
}

TEST(Validate, AsymmetricAndNonFinite) {
  MatrixXd C = MatrixXd::Identity(3, 3);
  C(0, 1) = 1e-3;
  EXPECT_TRUE(validate(make(C, 1)).has(Violation::Asymmetric));
  C = MatrixXd::Identity(3, 3);
  C(1, 1) = std::nan("");
  EXPECT_TRUE(validate(make(C, 1)).has(Violation::NotFinite));
  EXPECT_TRUE(validate(make(MatrixXd::Identity(2, 3), 1)).has(Violation::NotSquare));
}

TEST(Validate, ValidInstancePasses) {
  const ValidationReport r = validate(make(random_pd(6, 1), 3));
  EXPECT_TRUE(r.ok()) << r.summary();
  EXPECT_NO_THROW(require_valid(make(random_pd(6, 1), 3)));
  EXPECT_THROW(require_valid(make(MatrixXd::Identity(3, 3), 3)), MespError);
}

TEST(Validate, FactorMismatchReported) {
  Instance inst = make(random_pd(4, 2), 2);
  inst.F = MatrixXd::Identity(4, 4);
  EXPECT_TRUE(validate(inst).has(Violation::FactorMismatch));
  inst.F = MatrixXd::Identity(3, 3);
  EXPECT_TRUE(validate(inst).has(Violation::FactorShape));
}

TEST(Factorize, DiagonalFactor) {
  MatrixXd C = MatrixXd::Zero(2, 2);
  C(0, 0) = 4.0;
  C(1, 1) = 1.0;
  const Instance f = factorize(make(C, 1), 2);
  ASSERT_TRUE(f.F.has_value());
  EXPECT_NEAR((*f.F * f.F->transpose() - C).norm(), 0.0, 1e-12);
  EXPECT_NEAR(f.F->cwiseAbs().maxCoeff(), 2.0, 1e-12);
}

TEST(Factorize, IdentityGivesOrthogonalFactor) {
  const Instance f = factorize(make(MatrixXd::Identity(3, 3), 1), 3);
  EXPECT_NEAR((f.F->transpose() * *f.F - MatrixXd::Identity(3, 3)).norm(), 0.0, 1e-12);
}

TEST(Factorize, LowRankReconstruction) {
  const MatrixXd C = oracle::random_psd_rank(6, 3, 4);
  const Instance f = factorize(make(C, 2), 3);
  EXPECT_EQ(f.F->cols(), 3);
  EXPECT_LE((*f.F * f.F->transpose() - C).norm(), 1e-10 * C.norm());
  EXPECT_TRUE(validate(f).ok()) << validate(f).summary();
}

TEST(Factorize, RejectsKBelowRank) {
  EXPECT_THROW(factorize(make(random_pd(5, 3), 2), 3), MespError);
}

TEST(Factorize, BoundIndependentOfFactor) {
  // Two factors of the same C: eigen factor and a rotated Cholesky-based factor.
  for (int t = 0; t < 5; ++t) {
    const MatrixXd C = random_pd(7, 40 + t);
    Instance a = factorize(make(C, 3));
    Instance b = make(C, 3);
    const MatrixXd L = C.llt().matrixL();
    const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(random_pd(7, 90 + t)).householderQ();
    b.F = L * Q;
    EXPECT_NEAR(ddfact_bound(a).value, ddfact_bound(b).value, 1e-6);
  }
}

TEST(Spectral, SortedAndReconstructs) {
  const MatrixXd C = random_pd(8, 12);
  const SpectralCache sc(C);
  for (int i = 1; i < 8; ++i) EXPECT_GE(sc.values()(i - 1), sc.values()(i));
  EXPECT_LE((sc.reconstruct() - C).norm(), 1e-12 * C.norm());
  EXPECT_EQ(sc.rank(), 8);
}

TEST(LinearAlgebra, PsdProjectionAndSqrt) {
  MatrixXd A(2, 2);
  A << 1, 2, 2, 1;  // eigenvalues 3, -1
  const MatrixXd P = project_psd(A);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 3.0, 1e-12);
  const MatrixXd C = random_pd(5, 8);
  const MatrixXd R = psd_sqrt(C);
  EXPECT_LE((R * R - C).norm(), 1e-10);
}
