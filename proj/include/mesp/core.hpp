// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mesp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Numerical tolerances shared by every solver.
namespace tol {
inline constexpr double kSym = 1e-10;       // relative asymmetry
inline constexpr double kPsd = 1e-8;        // relative negative-eigenvalue slack
inline constexpr double kRank = 1e-9;       // relative eigenvalue cutoff for rank
inline constexpr double kSingular = 1e-12;  // relative Cholesky pivot cutoff
inline constexpr double kFactor = 1e-10;    // relative factor reconstruction error
}  // namespace tol

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorKind { InvalidArgument, Validation, ResourceCap, Numerical, Io };

/// Error type thrown by all library entry points. The kind maps onto CLI exit codes.
class MespError : public std::runtime_error {
 public:
  MespError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Sorted set of distinct 0-based indices. All file and report I/O uses 1-based indices.
class Subset {
 public:
  Subset() = default;
  /// Sorts and validates; throws on duplicates or out-of-range entries.
  Subset(std::vector<int> indices, int n);

  const std::vector<int>& indices() const noexcept { return indices_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(int i) const;
  std::vector<int> one_based() const;
  /// Indicator vector of length n.
  VectorXd indicator(int n) const;
  /// Indices of {0..n-1} not in the subset.
  Subset complement(int n) const;

  friend bool operator==(const Subset& a, const Subset& b) { return a.indices_ == b.indices_; }

 private:
  std::vector<int> indices_;
};

/// Reserved for side constraints A x <= b. Carried through I/O, never used by the bounds.
struct SideConstraints {
  MatrixXd A;
  VectorXd b;
};

/// A MESP instance: maximize ldet C[S,S] over |S| = s. Reported values include `offset`.
struct Instance {
  MatrixXd C;
  int s = 0;
  std::optional<MatrixXd> F;  // C = F F^T when present
  double offset = 0.0;
  std::string label;
  std::optional<SideConstraints> side_constraints;

  Instance() = default;
  Instance(MatrixXd c, int card, std::string lbl = {})
      : C(std::move(c)), s(card), label(std::move(lbl)) {}

  int n() const noexcept { return static_cast<int>(C.rows()); }
};

/// Eigen-decomposition with eigenvalues in non-increasing order.
class SpectralCache {
 public:
  explicit SpectralCache(const MatrixXd& symmetric);

  const VectorXd& values() const noexcept { return values_; }
  const MatrixXd& vectors() const noexcept { return vectors_; }
  double max_abs() const;
  /// Number of eigenvalues above rel * max_abs().
  int rank(double rel = tol::kRank) const;
  MatrixXd reconstruct() const;

 private:
  VectorXd values_;
  MatrixXd vectors_;
};

enum class Violation {
  NotSquare,
  NotFinite,
  Asymmetric,
  NotPsd,
  Cardinality,
  RankDeficient,
  FactorShape,
  FactorMismatch,
  FactorRank,
};

struct ValidationIssue {
  Violation code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> violations;
  /// Non-fatal notes, e.g. a rank decision close to the cutoff.
  std::vector<std::string> warnings;
  int numerical_rank = 0;

  bool ok() const noexcept { return violations.empty(); }
  bool has(Violation v) const;
  std::string summary() const;
};

ValidationReport validate(const Instance& instance);
/// Throws MespError(Validation) with the report summary if validation fails.
void require_valid(const Instance& instance);

/// Log-determinant of C[S,S] by Cholesky; -inf if some pivot falls below the singular cutoff.
double ldet_submatrix(const MatrixXd& C, const Subset& S);
double ldet_submatrix(const Instance& instance, const Subset& S);
/// offset + ldet C[S,S]: the objective value reported by solvers.
double subset_value(const Instance& instance, const Subset& S);

/// Log-determinant of a symmetric matrix via Cholesky, -inf when not numerically PD.
double ldet_pd(const MatrixXd& A);

/// Returns a copy of `instance` carrying F = V_k diag(sqrt(lambda_k)).
Instance factorize(const Instance& instance, int k);
/// Factor with k equal to the numerical rank.
Instance factorize(const Instance& instance);
/// Factor used by the factorization-type bounds: the instance's F if present, else eigen factor.
MatrixXd factor_of(const Instance& instance);

/// Symmetric square-root style factor of a PSD matrix (negative eigenvalues clipped).
MatrixXd psd_sqrt(const MatrixXd& A);
/// Euclidean projection onto the PSD cone.
MatrixXd project_psd(const MatrixXd& A);

/// Principal submatrix A[idx, idx].
MatrixXd principal(const MatrixXd& A, const std::vector<int>& idx);

/// Largest absolute entry; used as the scale for relative tolerances.
double max_abs_entry(const MatrixXd& A);

}  // namespace mesp
