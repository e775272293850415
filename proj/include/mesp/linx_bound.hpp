// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bound.hpp"
#include "mesp/core.hpp"

#include <optional>

namespace mesp {

struct LinxOptions {
  double pg_tol = 1e-7;
  double admm_tol = 1e-6;
  int max_iter = 10000;
  double rho = 1.0;
  bool adaptive_rho = true;
  /// Starting point; (s/n) e when empty.
  std::optional<VectorXd> x0;
};

struct LinxEval {
  /// -inf when H is not numerically PD.
  double value = kNegInf;
  VectorXd gradient;
  MatrixXd H;
  MatrixXd Hinv;
};

/// 1/2 (ldet(gamma C Diag(x) C + Diag(e - x)) - s log gamma) and its gradient
/// 1/2 (gamma c_i^T H^{-1} c_i - (H^{-1})_ii).
LinxEval linx_objective(const MatrixXd& C, const VectorXd& x, double gamma, int s);

/// g-scaled objective 1/2 ldet(U C Diag(x) C U + Diag(e - x)) - sum_i x_i log u_i, U = Diag(upsilon).
LinxEval linx_objective_scaled(const MatrixXd& C, const VectorXd& x, const VectorXd& upsilon);

/// d/d(log gamma) of the o-scaled objective at fixed x.
double linx_gamma_slope(const MatrixXd& C, const VectorXd& x, double gamma, int s);

/// d/d(log upsilon) of the g-scaled objective at fixed x.
VectorXd linx_upsilon_gradient(const MatrixXd& C, const VectorXd& x, const VectorXd& upsilon);

/// Spectral projected gradient over the capped simplex.
BoundResult linx_bound_direct(const Instance& instance, double gamma = 1.0,
                              const LinxOptions& options = {});

/// Direct solver on the g-scaled objective.
BoundResult linx_bound_scaled(const Instance& instance, const VectorXd& upsilon,
                              const LinxOptions& options = {});

/// Two-block ADMM on the splitting Z = H(x).
BoundResult linx_admm(const Instance& instance, double gamma = 1.0, double rho = 1.0,
                      const LinxOptions& options = {});

/// Minimizer of -log z + rho/2 (z - mu)^2.
double z_update_eigenvalue(double mu, double rho);

/// Minimizer of -ldet Z + rho/2 ||Z - M||_F^2 over symmetric Z.
MatrixXd z_update(const MatrixXd& M, double rho);

}  // namespace mesp
