// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mesp {

/// Dual solution of the factorization bound (Theta, upsilon, nu, tau) and its objective.
struct DualCertificate {
  MatrixXd Theta;
  VectorXd upsilon;
  VectorXd nu;
  double tau = 0.0;
  /// f(Theta, nu, tau), without the instance offset.
  double objective = 0.0;
  /// objective - Gamma_s at the primal point that produced the certificate.
  double gap = 0.0;
  /// diag(F Theta F^T).
  VectorXd d;
};

/// Output of every bounding routine. `value` is a valid upper bound on offset + z(C,s)
/// unless the "unverified" flag is set.
struct BoundResult {
  std::string bound_name;
  double value = kNegInf;
  /// Objective at the returned relaxation point (no certificate slack added).
  double primal_value = kNegInf;
  VectorXd x;
  std::optional<MatrixXd> X;
  /// Supergradient of the relaxation objective at x.
  VectorXd gradient;
  std::optional<DualCertificate> certificate;
  double gamma = 1.0;
  std::optional<VectorXd> upsilon;
  int iterations = 0;
  bool converged = false;
  /// Final stationarity measure: Frank-Wolfe gap or ADMM residual.
  double residual = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
};

/// Variables forced out (J0) and in (J1) by the duality-based test. 0-based indices.
struct FixReport {
  std::vector<int> fixed_to_zero;
  std::vector<int> fixed_to_one;
  /// Indices where both tests fired; left unfixed.
  std::vector<int> conflicts;
  double gap = 0.0;
};

}  // namespace mesp
