// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mesp {

struct ExactResult {
  /// offset + z(C,s); -inf when no s-subset is numerically nonsingular.
  double value = kNegInf;
  Subset subset;
};

/// Exhaustive enumeration in lexicographic order; ties keep the lexicographically smallest subset.
ExactResult brute_force(const Instance& instance, std::uint64_t cap = 2'000'000);

/// Determinant of the symmetric tridiagonal matrix with diagonal a and off-diagonal b.
double tridiag_det(const std::vector<double>& a, const std::vector<double>& b);

/// True when every entry off the three central diagonals is within the symmetry tolerance.
bool is_tridiagonal(const MatrixXd& C);

/// One cell f(k, l, t) of the dynamic program: best ldet over |S| = t whose last piece is
/// [first, last]. Indices are 0-based.
struct DpCell {
  int first = 0;
  int last = 0;
  int t = 0;
  double value = kNegInf;
  /// Predecessor piece (first, last); -1 when [first, last] is the only piece.
  int prev_first = -1;
  int prev_last = -1;
};

/// Full DP table for a tridiagonal instance, exposed for inspection and tests.
class TridiagonalDp {
 public:
  explicit TridiagonalDp(const Instance& instance);

  int n() const noexcept { return n_; }
  int s() const noexcept { return s_; }
  /// ldet C[[first,last],[first,last]] (-inf if singular).
  double piece_ldet(int first, int last) const;
  /// f(first, last, t); -inf for cells outside the domain.
  const DpCell& cell(int first, int last, int t) const;
  /// Optimal value (without offset) and the maximizing subset.
  double optimum() const noexcept { return best_value_; }
  Subset argmax() const;

 private:
  std::size_t index(int first, int last, int t) const;

  int n_ = 0;
  int s_ = 0;
  std::vector<double> piece_;
  std::vector<DpCell> cells_;
  DpCell empty_;
  double best_value_ = kNegInf;
  int best_first_ = -1;
  int best_last_ = -1;
};

/// Exact solution of a tridiagonal instance via the last-piece dynamic program.
ExactResult solve_tridiagonal(const Instance& instance);

/// Vertex order making the support graph banded (bandwidth 1) if it is a union of paths.
/// perm[p] is the original index placed at position p.
std::optional<std::vector<int>> detect_tridiagonal_permutation(const MatrixXd& C);

/// Symmetric permutation P C P^T with perm[p] = original index at position p.
MatrixXd permute_symmetric(const MatrixXd& C, const std::vector<int>& perm);

/// Solves via the DP when C or C^{-1} admits a tridiagonal symmetric permutation.
std::optional<ExactResult> solve_structured(const Instance& instance);

}  // namespace mesp
