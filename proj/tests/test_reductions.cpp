// SPDX-License-Identifier: Apache-2.0
#include "mesp/exact.hpp"
#include "mesp/reductions.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mesp;
using namespace mesp::oracle;

namespace {

Instance make(const MatrixXd& C, int s) { return Instance(C, s); }

MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = normal(rng);
  return A;
}

std::vector<int> complement(const std::vector<int>& S, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!std::count(S.begin(), S.end(), i)) out.push_back(i);
  return out;
}

double ldet_rows(const MatrixXd& A, const std::vector<int>& rows) {
  MatrixXd AS(rows.size(), A.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) AS.row(r) = A.row(rows[r]);
  return ldet_eig(AS.transpose() * AS);
}

/// lambda (I - Q Q^T) for an orthonormal n x m basis Q.
MatrixXd equal_spectrum(int n, int m, double lambda, std::uint64_t seed) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian(n, m, seed));
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, m);
  return lambda * (MatrixXd::Identity(n, n) - Q * Q.transpose());
}

}  // namespace

TEST(Complementary, DiagonalExample) {
  MatrixXd C = MatrixXd::Zero(3, 3);
  C.diagonal() << 2, 3, 4;
  const Instance comp = to_complementary(make(C, 1));
  EXPECT_EQ(comp.s, 2);
  EXPECT_NEAR(comp.offset, std::log(24.0), 1e-12);
  MatrixXd inv = MatrixXd::Zero(3, 3);
  inv.diagonal() << 0.5, 1.0 / 3.0, 0.25;
  EXPECT_NEAR((comp.C - inv).norm(), 0.0, 1e-14);
  EXPECT_NEAR(brute_force(comp).value, std::log(4.0), 1e-12);
}

TEST(Complementary, RoundTripRestoresInstance) {
  const Instance inst = make(random_pd(7, 1), 3);
  const Instance back = to_complementary(to_complementary(inst));
  EXPECT_EQ(back.s, 3);
  EXPECT_NEAR((back.C - inst.C).norm(), 0.0, 1e-10 * inst.C.norm());
  EXPECT_NEAR(back.offset, 0.0, 1e-10);
}

TEST(Complementary, OptimaCorrespond) {
  for (int t = 0; t < 5; ++t) {
    const MatrixXd C = random_pd(9, 10 + t);
    for (int s = 1; s < 9; ++s) {
      const ExactResult a = brute_force(make(C, s));
      const ExactResult b = brute_force(to_complementary(make(C, s)));
      EXPECT_NEAR(a.value, b.value, 1e-9);
      EXPECT_EQ(a.subset.indices(), complement(b.subset.indices(), 9));
    }
  }
}

TEST(Complementary, RejectsSingular) {
  EXPECT_THROW(to_complementary(make(random_psd_rank(5, 3, 1), 2)), MespError);
}

TEST(DoptToMesp, OrthonormalDesignHasZeroOffset) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian(6, 2, 3));
  DoptInstance d;
  d.A = qr.householderQ() * MatrixXd::Identity(6, 2);
  d.s = 3;
  const Instance inst = dopt_to_mesp(d);
  EXPECT_NEAR(inst.offset, 0.0, 1e-12);
  EXPECT_EQ(inst.s, 3);
  EXPECT_EQ(inst.n(), 6);
}

TEST(DoptToMesp, SubsetIdentityExhaustive) {
  for (int n = 4; n <= 7; ++n) {
    DoptInstance d;
    d.A = gaussian(n, 2, 20 + n);
    d.s = 3;
    const Instance inst = dopt_to_mesp(d);
    for_each_subset(n, d.s, [&](const std::vector<int>& S) {
      const double lhs = ldet_rows(d.A, S);
      const double rhs = inst.offset + ldet_eig(sub(inst.C, complement(S, n)));
      if (std::isfinite(lhs)) {
        EXPECT_NEAR(lhs, rhs, 1e-9);
      }
      EXPECT_NEAR(dopt_value(d, Subset(S, n)), lhs, 1e-9);
    });
  }
}

TEST(DoptToMesp, OptimaMatchAndRankDrops) {
  DoptInstance d;
  d.A = gaussian(8, 3, 5);
  d.s = 5;
  const Instance inst = dopt_to_mesp(d);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(inst.C);
  int rank = 0;
  for (int i = 0; i < 8; ++i) rank += es.eigenvalues()(i) > 1e-9;
  EXPECT_EQ(rank, 8 - 3);

  double best = -std::numeric_limits<double>::infinity();
  for_each_subset(8, 5, [&](const std::vector<int>& S) { best = std::max(best, ldet_rows(d.A, S)); });
  const ExactResult r = brute_force(inst);
  EXPECT_NEAR(r.value, best, 1e-9);
  EXPECT_NEAR(dopt_value(d, Subset(complement(r.subset.indices(), 8), 8)), best, 1e-9);
}

TEST(DoptToMesp, ValidationErrors) {
  DoptInstance d;
  d.A = gaussian(5, 2, 1);
  d.A.col(1) = 2.0 * d.A.col(0);
  d.s = 3;
  EXPECT_THROW(dopt_to_mesp(d), MespError);
  d.A = gaussian(5, 3, 2);
  d.s = 2;
  EXPECT_THROW(validate_dopt(d), MespError);
}

TEST(MespToDopt, SingleProjectionColumn) {
  const Eigen::Vector4d p(1.0, -2.0, 0.5, 3.0);
  const MatrixXd C = 2.5 * (MatrixXd::Identity(4, 4) - p * p.transpose() / p.squaredNorm());
  const DoptInstance d = mesp_to_dopt(make(C, 2));
  ASSERT_EQ(d.m(), 1);
  EXPECT_EQ(d.s, 2);
  EXPECT_NEAR(std::abs(d.A.col(0).dot(p.normalized())), 1.0, 1e-12);
  EXPECT_NEAR(d.offset, 2 * std::log(2.5), 1e-12);
}

TEST(MespToDopt, OrthonormalColumnsAndCorrespondence) {
  const int n = 8, m = 3, s = 4;
  const MatrixXd C = equal_spectrum(n, m, 1.7, 9);
  const DoptInstance d = mesp_to_dopt(make(C, s));
  EXPECT_NEAR((d.A.transpose() * d.A - MatrixXd::Identity(m, m)).norm(), 0.0, 1e-10);
  EXPECT_EQ(d.s, n - s);
  for_each_subset(n, s, [&](const std::vector<int>& S) {
    const double z = ldet_eig(sub(C, S));
    if (std::isfinite(z) && z > -20.0) {
      EXPECT_NEAR(z, dopt_value(d, Subset(complement(S, n), n)), 1e-8);
    }
  });
  const ExactResult r = brute_force(make(C, s));
  double best = -std::numeric_limits<double>::infinity();
  for_each_subset(n, n - s, [&](const std::vector<int>& T) {
    best = std::max(best, dopt_value(d, Subset(T, n)));
  });
  EXPECT_NEAR(r.value, best, 1e-9);
}

TEST(MespToDopt, RejectsUnequalSpectrum) {
  EXPECT_THROW(mesp_to_dopt(make(random_psd_rank(6, 4, 2), 2)), MespError);
  EXPECT_THROW(mesp_to_dopt(make(MatrixXd::Identity(4, 4), 2)), MespError);
}

TEST(MespToDdf, ScaledIdentityGivesZeroDesign) {
  const DdfInstance d = mesp_to_ddf(make(3.0 * MatrixXd::Identity(5, 5), 2));
  EXPECT_NEAR(d.A.norm(), 0.0, 1e-12);
  EXPECT_NEAR(d.offset, 2 * std::log(3.0), 1e-12);
  EXPECT_EQ(d.n(), 5);
}

TEST(MespToDdf, SubsetIdentityAndOptima) {
  const MatrixXd C = random_pd(7, 11);
  const DdfInstance d = mesp_to_ddf(make(C, 3));
  EXPECT_EQ(d.n(), 7);
  double best = -std::numeric_limits<double>::infinity();
  for_each_subset(7, 3, [&](const std::vector<int>& S) {
    const double v = ddf_value(d, Subset(S, 7));
    EXPECT_NEAR(v, ldet_eig(sub(C, S)), 1e-9);
    best = std::max(best, v);
  });
  EXPECT_NEAR(best, brute_force(make(C, 3)).value, 1e-9);
}
