// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bound.hpp"
#include "mesp/core.hpp"

#include <optional>
#include <vector>

namespace mesp {

/// (x, X) with lifted form W = [[1, x^T], [x, X]].
struct LiftedPoint {
  VectorXd x;
  MatrixXd X;

  MatrixXd W() const;
  static LiftedPoint from_W(const MatrixXd& W);
  /// Integral lift x = 1_S, X = x x^T.
  static LiftedPoint of_subset(const Subset& S, int n);
};

/// Residuals of diag(X) = x, X e = s x, e^T x = s; the PSD gap lambda_min(X - x x^T).
struct LiftedFeasibility {
  double linear_residual = 0.0;
  double psd_margin = 0.0;
};
LiftedFeasibility lifted_feasibility(const LiftedPoint& p, int s);

/// ldet(gamma C o X + Diag(e - x)) - s log gamma; -inf when the argument is not PD.
double bqp_objective(const MatrixXd& C, const LiftedPoint& p, double gamma, int s);

/// g-scaled objective ldet(U C U o X + Diag(e - x)) - 2 sum_i x_i log u_i.
double bqp_objective_scaled(const MatrixXd& C, const LiftedPoint& p, const VectorXd& upsilon);

/// d/d(log gamma) of the o-scaled objective at fixed (x, X).
double bqp_gamma_slope(const MatrixXd& C, const LiftedPoint& p, double gamma, int s);

/// d/d(log upsilon) of the g-scaled objective at fixed (x, X).
VectorXd bqp_upsilon_gradient(const MatrixXd& C, const LiftedPoint& p, const VectorXd& upsilon);

/// g_l - G_l . W = 0 for l = 1..2n+2 (lifted index 0 is the corner entry of W).
struct LinearConstraint {
  MatrixXd G;
  double g = 0.0;
};
std::vector<LinearConstraint> linear_constraints(int n, int s);

struct BqpOptions {
  double admm_tol = 1e-6;
  int max_iter = 20000;
  double rho = 1.0;
  bool adaptive_rho = true;
  /// Iterations between dual-bound evaluations.
  int certify_every = 25;
};

/// Three-block ADMM on W = E (PSD), Z = C~ o W + I. `value` is a Lagrangian dual bound
/// built from the multipliers, so it is valid at any iterate.
BoundResult bqp_admm(const Instance& instance, double gamma = 1.0, const BqpOptions& options = {});

/// BQP bound of Diag(U) C Diag(U) corrected by -2 sum_i x_i log u_i.
BoundResult bqp_admm_scaled(const Instance& instance, const VectorXd& upsilon,
                            const BqpOptions& options = {});

}  // namespace mesp
