// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations for the tests. Nothing here calls the solvers under test.

#include "mesp/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace mesp::oracle {

inline MatrixXd random_pd(int n, std::uint64_t seed, int extra_cols = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int m = extra_cols > 0 ? extra_cols : 2 * n;
  MatrixXd A(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = normal(rng);
  MatrixXd C = A * A.transpose() / m;
  return 0.5 * (C + C.transpose());
}

inline MatrixXd random_psd_rank(int n, int r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd A(n, r);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = normal(rng);
  MatrixXd C = A * A.transpose();
  return 0.5 * (C + C.transpose());
}

inline MatrixXd random_tridiagonal_pd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> off(-1.0, 1.0), extra(0.05, 1.0);
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) C(i, i + 1) = C(i + 1, i) = off(rng);
  for (int i = 0; i < n; ++i) {
    double d = extra(rng);
    if (i > 0) d += std::abs(C(i, i - 1));
    if (i + 1 < n) d += std::abs(C(i, i + 1));
    C(i, i) = d;
  }
  return C;
}

inline VectorXd random_interior(int n, int s, std::uint64_t seed) {
  // Random point of {0 < x < 1, e'x = s} by rescaling towards the barycenter.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = u(rng);
  d.array() -= d.mean();
  const double c = static_cast<double>(s) / n;
  const double room = std::min(c, 1.0 - c);
  const double scale = 0.9 * room / std::max(1e-12, d.cwiseAbs().maxCoeff());
  return VectorXd::Constant(n, c) + scale * d;
}

/// log det by eigenvalues; -inf when any eigenvalue is below rel * max.
inline double ldet_eig(const MatrixXd& A, double rel = 1e-12) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const VectorXd& v = es.eigenvalues();
  const double top = std::max(1e-300, v.cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (v(i) <= rel * top) return -std::numeric_limits<double>::infinity();
    sum += std::log(v(i));
  }
  return sum;
}

inline MatrixXd sub(const MatrixXd& C, const std::vector<int>& S) {
  MatrixXd M(S.size(), S.size());
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = 0; j < S.size(); ++j) M(i, j) = C(S[i], S[j]);
  return M;
}

/// Calls f on every s-subset of {0..n-1} in lexicographic order.
inline void for_each_subset(int n, int s, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> S(s);
  for (int i = 0; i < s; ++i) S[i] = i;
  while (true) {
    f(S);
    int i = s - 1;
    while (i >= 0 && S[i] == n - s + i) --i;
    if (i < 0) return;
    ++S[i];
    for (int j = i + 1; j < s; ++j) S[j] = S[j - 1] + 1;
  }
}

struct OracleOptimum {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> argmax;  // all optimal subsets within tie_tol
};

/// Exhaustive optimum by eigenvalue log-determinants, keeping every near-tied maximizer.
inline OracleOptimum oracle_optimum(const MatrixXd& C, int s, double tie_tol = 1e-9) {
  std::vector<std::pair<double, std::vector<int>>> all;
  for_each_subset(static_cast<int>(C.rows()), s,
                  [&](const std::vector<int>& S) { all.emplace_back(ldet_eig(sub(C, S)), S); });
  OracleOptimum best;
  for (const auto& [v, S] : all) best.value = std::max(best.value, v);
  for (const auto& [v, S] : all)
    if (v >= best.value - tie_tol) best.argmax.push_back(S);
  return best;
}

inline double central_difference(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

}  // namespace mesp::oracle
