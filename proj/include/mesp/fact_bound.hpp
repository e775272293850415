// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bound.hpp"
#include "mesp/core.hpp"

#include <optional>

namespace mesp {

struct FactOptions {
  double fw_tol = 1e-7;
  double dual_tol = 1e-6;
  int max_iter = 5000;
  /// epsilon applied to the null-space eigenvalues of Theta.
  double eps_rank = 1e-8;
  double fix_safety = 1e-7;
  double shift_backoff = 1e-4;
  /// Starting point; (s/n) e when empty.
  std::optional<VectorXd> x0;
};

/// Split of a non-increasing spectrum: the first `iota` eigenvalues are kept, the rest
/// are replaced by their average `delta` over s - iota slots.
struct GammaEval {
  int iota = 0;
  double delta = 0.0;
  double value = kNegInf;
  VectorXd lambda;
};

/// Unique iota in [0, s) with lambda_iota > (1/(s-iota)) sum_{l>iota} lambda_l >= lambda_{iota+1}.
/// lambda is 0-based here; lambda_0 is treated as +infinity.
int find_iota(const VectorXd& lambda, int s);

/// phi_s of a non-increasing, nonnegative spectrum, optionally shifted: every kept eigenvalue and
/// the tail average enter as log(shift + .). shift = 0 gives the plain Gamma function.
GammaEval gamma_spectrum(const VectorXd& lambda, int s, double shift = 0.0);

/// Gamma_s(X) for symmetric PSD X.
GammaEval gamma_value(const MatrixXd& X, int s);

/// Concave objective  x -> phi_s^shift(lambda(G^T Diag(x) G)) + linear^T x  over the capped
/// simplex. Covers the factorization bound (shift 0), its g-scaled form (G = Diag(sqrt(U)) F,
/// linear = -log U) and the augmented bound (G factors C - shift I).
struct FactorizationProblem {
  MatrixXd G;
  int s = 0;
  double shift = 0.0;
  VectorXd linear;  // empty means zero
  double eps_rank = 1e-8;
};

struct FactorizationEval {
  double value = kNegInf;
  /// Supergradient: diag(G Theta G^T) + linear.
  VectorXd gradient;
  /// diag(G Theta G^T).
  VectorXd d;
  /// Eigenvalues of Theta aligned with `eigenvectors` (non-increasing spectrum of X).
  VectorXd beta;
  MatrixXd eigenvectors;
  GammaEval gamma;
  int rank = 0;
  /// Upper bound on the maximum over the capped simplex from the affine majorant at Theta.
  double majorant_bound = std::numeric_limits<double>::infinity();
};

FactorizationEval evaluate_factorization(const FactorizationProblem& problem, const VectorXd& x);

/// Pairwise (in-face away-step) Frank-Wolfe. `value` is the smallest majorant bound seen,
/// `x` the point that produced it.
BoundResult maximize_factorization(const FactorizationProblem& problem, const FactOptions& options,
                                   const std::string& name);

/// Theta = sum beta_l u_l u_l^T at the point x for factor F.
MatrixXd dual_theta(const VectorXd& x, const MatrixXd& F, int s, double eps_rank = 1e-8);

/// Closed-form (upsilon, nu, tau) completing Theta at x into a feasible dual solution.
DualCertificate dual_certificate(const VectorXd& x, const MatrixXd& F, int s,
                                 double eps_rank = 1e-8);

/// Duality-based fixing: zeta and lb must be in the same frame (both with or without offset).
FixReport variable_fix(double zeta, double lb, const DualCertificate& cert,
                       double fix_safety = 1e-7);

/// Factorization bound (the dual objective of the returned certificate, plus the offset).
BoundResult ddfact_bound(const Instance& instance, const FactOptions& options = {});

/// Factorization bound with the spectral shift lambda = lambda_min(C); requires C PD.
BoundResult augmented_fact_bound(const Instance& instance, const FactOptions& options = {});

/// Objective of the g-scaled factorization bound at fixed x: Gamma_s(sum_i u_i x_i F_i^T F_i)
/// - sum_i x_i log u_i.
double ddfact_scaled_objective(const MatrixXd& F, const VectorXd& x, const VectorXd& upsilon,
                               int s);

/// g-scaled factorization bound.
BoundResult ddfact_scaled_bound(const Instance& instance, const VectorXd& upsilon,
                                const FactOptions& options = {});

}  // namespace mesp
