// SPDX-License-Identifier: Apache-2.0
#include "mesp/reductions.hpp"

#include <cmath>
#include <string>

namespace mesp {

namespace {

// Flip each column so its first entry of non-negligible magnitude is positive.
void canonical_signs(MatrixXd& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, j)) > 1e-12) {
        if (V(i, j) < 0) V.col(j) *= -1.0;
        break;
      }
    }
  }
}

MatrixXd rows_of(const MatrixXd& A, const Subset& S) {
  MatrixXd out(S.size(), A.cols());
  for (int r = 0; r < S.size(); ++r) out.row(r) = A.row(S.indices()[r]);
  return out;
}

}  // namespace

void validate_dopt(const DoptInstance& d) {
  const int n = d.n();
  const int m = d.m();
  if (m < 1 || n < m) throw MespError(ErrorKind::Validation, "D-Opt: A must be n x m with n >= m >= 1");
  if (d.s < m || d.s > n) {
    throw MespError(ErrorKind::Validation, "D-Opt: cardinality must satisfy m <= s <= n");
  }
  Eigen::JacobiSVD<MatrixXd> svd(d.A);
  const VectorXd& sv = svd.singularValues();
  if (!(sv(m - 1) > tol::kRank * std::max(1.0, sv(0)))) {
    throw MespError(ErrorKind::Validation, "D-Opt: A is rank deficient");
  }
}

double dopt_value(const DoptInstance& d, const Subset& S) {
  const MatrixXd AS = rows_of(d.A, S);
  return d.offset + ldet_pd(AS.transpose() * AS);
}

double ddf_value(const DdfInstance& d, const Subset& S) {
  const MatrixXd AS = rows_of(d.A, S);
  return d.offset + ldet_pd(d.B + AS.transpose() * AS);
}

Instance to_complementary(const Instance& instance) {
  const int n = instance.n();
  SpectralCache spec(instance.C);
  if (!(spec.values()(n - 1) > tol::kSingular * spec.max_abs())) {
    throw MespError(ErrorKind::Numerical, "to_complementary: C is singular");
  }
  Eigen::LLT<MatrixXd> llt(instance.C);
  if (llt.info() != Eigen::Success) {
    throw MespError(ErrorKind::Numerical, "to_complementary: Cholesky failed");
  }
  MatrixXd inv = llt.solve(MatrixXd::Identity(n, n));
  inv = 0.5 * (inv + inv.transpose());
  const double ldet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  Instance out(std::move(inv), n - instance.s, "complement(" + instance.label + ")");
  out.offset = instance.offset + ldet;
  return out;
}

Instance dopt_to_mesp(const DoptInstance& d) {
  validate_dopt(d);
  const int n = d.n();
  Eigen::JacobiSVD<MatrixXd> svd(d.A, Eigen::ComputeThinU);
  const MatrixXd& U = svd.matrixU();
  MatrixXd C = MatrixXd::Identity(n, n) - U * U.transpose();
  C = 0.5 * (C + C.transpose());
  Instance out(std::move(C), n - d.s, "dopt-to-mesp");
  out.offset = d.offset + 2.0 * svd.singularValues().array().log().sum();
  return out;
}

DoptInstance mesp_to_dopt(const Instance& instance, double eq_tol) {
  const int n = instance.n();
  SpectralCache spec(instance.C);
  const double lam1 = spec.values()(0);
  const int r = spec.rank();
  if (!(lam1 > 0.0)) throw MespError(ErrorKind::Validation, "mesp_to_dopt: C has no positive eigenvalue");
  for (int i = 0; i < r; ++i) {
    if (std::abs(spec.values()(i) - lam1) > eq_tol * lam1) {
      throw MespError(ErrorKind::Validation,
                      "mesp_to_dopt: positive eigenvalues are not all equal");
    }
  }
  const int m = n - r;
  if (m < 1) throw MespError(ErrorKind::Validation, "mesp_to_dopt: C has full rank, no design columns");
  if (n - instance.s < m) {
    throw MespError(ErrorKind::Validation,
                    "mesp_to_dopt: needs n - s >= n - rank(C) = " + std::to_string(m));
  }
  // Eigenvectors of I - C/lambda_1 with eigenvalue 1 are the null space of C.
  MatrixXd U = spec.vectors().rightCols(m);
  canonical_signs(U);
  DoptInstance out;
  out.A = std::move(U);
  out.s = n - instance.s;
  out.offset = instance.offset + instance.s * std::log(lam1);
  return out;
}

DdfInstance mesp_to_ddf(const Instance& instance) {
  const int n = instance.n();
  SpectralCache spec(instance.C);
  const double lam_n = spec.values()(n - 1);
  if (!(lam_n > tol::kSingular * spec.max_abs())) {
    throw MespError(ErrorKind::Numerical, "mesp_to_ddf: C is singular");
  }
  MatrixXd shifted = instance.C / lam_n - MatrixXd::Identity(n, n);
  MatrixXd W = psd_sqrt(shifted);
  DdfInstance out;
  out.B = MatrixXd::Identity(n, n);
  out.A = W.transpose();
  out.s = instance.s;
  out.offset = instance.offset + instance.s * std::log(lam_n);
  return out;
}

}  // namespace mesp
