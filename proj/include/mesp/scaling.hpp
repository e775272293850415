// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bound.hpp"
#include "mesp/bqp_bound.hpp"
#include "mesp/core.hpp"
#include "mesp/fact_bound.hpp"
#include "mesp/linx_bound.hpp"

#include <string>

namespace mesp {

enum class BoundKind { Linx, Ddfact, Bqp, BestOf };
enum class ScalingMode { None, Gamma, Upsilon };

BoundKind parse_bound_kind(const std::string& s);
ScalingMode parse_scaling_mode(const std::string& s);
std::string to_string(BoundKind k);
std::string to_string(ScalingMode m);

/// Positive g-scaling vector stored with its logarithm.
class ScaleVector {
 public:
  explicit ScaleVector(VectorXd upsilon);
  static ScaleVector from_log(const VectorXd& log_upsilon);
  static ScaleVector uniform(int n, double gamma);

  const VectorXd& upsilon() const noexcept { return upsilon_; }
  VectorXd log_upsilon() const { return upsilon_.array().log().matrix(); }

 private:
  VectorXd upsilon_;
};

struct ScalingOptions {
  /// Central-difference step in log space, relative to max(1, |log u_i|).
  double fd_step = 1e-5;
  double slope_tol = 1e-6;
  double grad_tol = 1e-4;
  int max_outer_iter = 200;
  /// Envelope gradients at the inner solution; finite differences otherwise.
  bool analytic_gradient = true;
  /// Bracket for log gamma.
  double max_abs_log_gamma = 30.0;
};

/// Settings for every inner solver plus the outer scaling search.
struct BoundOptions {
  FactOptions fact;
  LinxOptions linx;
  BqpOptions bqp;
  ScalingOptions scaling;
};

struct ScaleResult {
  double gamma = 1.0;
  std::optional<VectorXd> upsilon;
  double value = std::numeric_limits<double>::infinity();
  BoundResult bound;
  int evaluations = 0;
};

/// Single bound evaluation at scale gamma (ignored by ddfact).
BoundResult bound_at_gamma(BoundKind kind, const Instance& instance, double gamma,
                           const BoundOptions& options = {});

/// Single g-scaled bound evaluation.
BoundResult bound_at_upsilon(BoundKind kind, const Instance& instance, const VectorXd& upsilon,
                             const BoundOptions& options = {});

/// Minimizes the bound over log gamma (convex); the result never exceeds the gamma = 1 value.
/// Throws InvalidArgument for ddfact, which is scale invariant.
ScaleResult optimize_gamma(BoundKind kind, const Instance& instance,
                           const BoundOptions& options = {});

/// Minimizes the g-scaled bound over log upsilon by L-BFGS, starting from the o-scaled optimum.
ScaleResult optimize_upsilon(BoundKind kind, const Instance& instance,
                             const BoundOptions& options = {});

/// Gradient of the g-scaled bound with respect to log upsilon, at the relaxation point of `at`.
VectorXd upsilon_gradient(BoundKind kind, const Instance& instance, const VectorXd& upsilon,
                          const BoundResult& at);

/// Throws MespError(Validation) unless M is a correlation matrix of matching order.
void validate_mask(const MatrixXd& M, int n);

/// Instance with covariance C o M.
Instance apply_mask(const Instance& instance, const MatrixXd& M);

/// Bound of the requested kind and scaling; BestOf takes the smallest of linx, ddfact and bqp.
BoundResult compute_bound(BoundKind kind, ScalingMode scaling, const Instance& instance,
                          const BoundOptions& options = {});

}  // namespace mesp
