// SPDX-License-Identifier: Apache-2.0
#include "mesp/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mesp {

Subset::Subset(std::vector<int> indices, int n) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= n) {
      throw MespError(ErrorKind::InvalidArgument,
                      "subset index " + std::to_string(indices_[i] + 1) + " out of range 1.." +
                          std::to_string(n));
    }
    if (i > 0 && indices_[i] == indices_[i - 1]) {
      throw MespError(ErrorKind::InvalidArgument,
                      "duplicate subset index " + std::to_string(indices_[i] + 1));
    }
  }
}

bool Subset::contains(int i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

std::vector<int> Subset::one_based() const {
  std::vector<int> out(indices_);
  for (int& i : out) ++i;
  return out;
}

VectorXd Subset::indicator(int n) const {
  VectorXd x = VectorXd::Zero(n);
  for (int i : indices_) x(i) = 1.0;
  return x;
}

Subset Subset::complement(int n) const {
  std::vector<int> rest;
  rest.reserve(n - size());
  for (int i = 0; i < n; ++i) {
    if (!contains(i)) rest.push_back(i);
  }
  return Subset(std::move(rest), n);
}

SpectralCache::SpectralCache(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric);
  if (es.info() != Eigen::Success) {
    throw MespError(ErrorKind::Numerical, "symmetric eigendecomposition failed");
  }
  values_ = es.eigenvalues().reverse();
  vectors_ = es.eigenvectors().rowwise().reverse();
}

double SpectralCache::max_abs() const {
  if (values_.size() == 0) return 0.0;
  return std::max(std::abs(values_(0)), std::abs(values_(values_.size() - 1)));
}

int SpectralCache::rank(double rel) const {
  const double cutoff = rel * max_abs();
  int r = 0;
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_(i) > cutoff) ++r;
  }
  return r;
}

MatrixXd SpectralCache::reconstruct() const {
  return vectors_ * values_.asDiagonal() * vectors_.transpose();
}

bool ValidationReport::has(Violation v) const {
  return std::any_of(violations.begin(), violations.end(),
                     [v](const ValidationIssue& i) { return i.code == v; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].message;
  }
  return os.str();
}

double max_abs_entry(const MatrixXd& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

ValidationReport validate(const Instance& instance) {
  ValidationReport rep;
  const MatrixXd& C = instance.C;
  auto add = [&rep](Violation v, std::string msg) { rep.violations.push_back({v, std::move(msg)}); };

  if (C.rows() != C.cols() || C.rows() == 0) {
    add(Violation::NotSquare, "covariance matrix must be square and nonempty");
    return rep;
  }
  if (!C.allFinite()) {
    add(Violation::NotFinite, "covariance matrix has non-finite entries");
    return rep;
  }
  const int n = instance.n();
  const double scale = std::max(1.0, max_abs_entry(C));
  const double asym = max_abs_entry(C - C.transpose());
  if (asym > tol::kSym * scale) {
    std::ostringstream os;
    os << "matrix not symmetric (max |C-C^T| = " << asym << ")";
    add(Violation::Asymmetric, os.str());
  }
  if (instance.s <= 0 || instance.s >= n) {
    add(Violation::Cardinality, "cardinality s=" + std::to_string(instance.s) +
                                    " must satisfy 0 < s < n=" + std::to_string(n));
  }

  const MatrixXd sym = 0.5 * (C + C.transpose());
  SpectralCache spec(sym);
  const double lam_abs = spec.max_abs();
  const double lam_min = spec.values()(n - 1);
  if (lam_min < -tol::kPsd * lam_abs) {
    std::ostringstream os;
    os << "matrix not positive semidefinite (min eigenvalue " << lam_min << ")";
    add(Violation::NotPsd, os.str());
  }
  rep.numerical_rank = spec.rank();
  if (instance.s > 0 && instance.s <= n && rep.numerical_rank < instance.s) {
    add(Violation::RankDeficient, "rank(C)=" + std::to_string(rep.numerical_rank) +
                                      " < s=" + std::to_string(instance.s));
  }
  if (instance.s > 0 && instance.s <= n && lam_abs > 0) {
    const double cutoff = tol::kRank * lam_abs;
    const double lam_s = spec.values()(instance.s - 1);
    if (lam_s > 0.01 * cutoff && lam_s < 100.0 * cutoff) {
      std::ostringstream os;
      os << "rank decision is borderline: lambda_s=" << lam_s << " vs cutoff " << cutoff;
      rep.warnings.push_back(os.str());
    }
  }

  if (instance.F) {
    const MatrixXd& F = *instance.F;
    if (F.rows() != n) {
      add(Violation::FactorShape, "factor must have n rows");
    } else {
      const double err = (F * F.transpose() - C).norm();
      if (err > tol::kFactor * std::max(1.0, C.norm())) {
        std::ostringstream os;
        os << "factor mismatch ||FF^T - C||_F = " << err;
        add(Violation::FactorMismatch, os.str());
      }
      if (F.cols() < rep.numerical_rank) {
        add(Violation::FactorRank, "factor has fewer columns than rank(C)");
      }
    }
  }
  return rep;
}

void require_valid(const Instance& instance) {
  const auto rep = validate(instance);
  if (!rep.ok()) throw MespError(ErrorKind::Validation, "invalid instance: " + rep.summary());
}

MatrixXd principal(const MatrixXd& A, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  MatrixXd out(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) out(a, b) = A(idx[a], idx[b]);
  }
  return out;
}

namespace {

// In-place Cholesky of a small dense block; -inf on a pivot below the cutoff.
double cholesky_ldet(MatrixXd L) {
  const int k = static_cast<int>(L.rows());
  if (k == 0) return 0.0;
  const double scale = L.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return kNegInf;
  const double cutoff = tol::kSingular * scale;
  double ldet = 0.0;
  for (int j = 0; j < k; ++j) {
    double pivot = L(j, j);
    for (int p = 0; p < j; ++p) pivot -= L(j, p) * L(j, p);
    if (!(pivot > cutoff)) return kNegInf;
    const double root = std::sqrt(pivot);
    L(j, j) = root;
    ldet += std::log(pivot);
    for (int i = j + 1; i < k; ++i) {
      double v = L(i, j);
      for (int p = 0; p < j; ++p) v -= L(i, p) * L(j, p);
      L(i, j) = v / root;
    }
  }
  return ldet;
}

}  // namespace

double ldet_pd(const MatrixXd& A) { return cholesky_ldet(A); }

double ldet_submatrix(const MatrixXd& C, const Subset& S) {
  if (S.empty()) throw MespError(ErrorKind::InvalidArgument, "ldet_submatrix: empty subset");
  for (int i : S.indices()) {
    if (i >= C.rows()) {
      throw MespError(ErrorKind::InvalidArgument,
                      "ldet_submatrix: index " + std::to_string(i + 1) + " out of range");
    }
  }
  return cholesky_ldet(principal(C, S.indices()));
}

double ldet_submatrix(const Instance& instance, const Subset& S) {
  return ldet_submatrix(instance.C, S);
}

double subset_value(const Instance& instance, const Subset& S) {
  return instance.offset + ldet_submatrix(instance.C, S);
}

Instance factorize(const Instance& instance, int k) {
  const int n = instance.n();
  SpectralCache spec(0.5 * (instance.C + instance.C.transpose()));
  const int r = spec.rank();
  if (k < r || k > n) {
    throw MespError(ErrorKind::InvalidArgument,
                    "factorize: k=" + std::to_string(k) + " must satisfy rank(C)=" +
                        std::to_string(r) + " <= k <= n=" + std::to_string(n));
  }
  VectorXd roots = spec.values().head(k).cwiseMax(0.0).cwiseSqrt();
  Instance out = instance;
  out.F = spec.vectors().leftCols(k) * roots.asDiagonal();
  return out;
}

Instance factorize(const Instance& instance) {
  SpectralCache spec(0.5 * (instance.C + instance.C.transpose()));
  return factorize(instance, std::max(1, spec.rank()));
}

MatrixXd factor_of(const Instance& instance) {
  if (instance.F && instance.F->rows() == instance.n()) return *instance.F;
  return *factorize(instance).F;
}

MatrixXd psd_sqrt(const MatrixXd& A) {
  SpectralCache spec(0.5 * (A + A.transpose()));
  VectorXd roots = spec.values().cwiseMax(0.0).cwiseSqrt();
  return spec.vectors() * roots.asDiagonal() * spec.vectors().transpose();
}

MatrixXd project_psd(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()));
  VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace mesp
