// SPDX-License-Identifier: Apache-2.0
#include "mesp/scaling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>

namespace mesp {

namespace {

struct Sample {
  double t = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

bool better(const BoundResult& a, const BoundResult& b) { return a.value < b.value; }

BoundResult best_of(std::vector<BoundResult> results) {
  auto it = std::min_element(results.begin(), results.end(), better);
  BoundResult out = std::move(*it);
  out.flags.push_back("best_of");
  return out;
}

double gamma_slope(BoundKind kind, const Instance& instance, double gamma, const BoundResult& r) {
  if (kind == BoundKind::Linx) return linx_gamma_slope(instance.C, r.x, gamma, instance.s);
  return bqp_gamma_slope(instance.C, LiftedPoint{r.x, *r.X}, gamma, instance.s);
}

}  // namespace

BoundKind parse_bound_kind(const std::string& s) {
  if (s == "linx") return BoundKind::Linx;
  if (s == "ddfact") return BoundKind::Ddfact;
  if (s == "bqp") return BoundKind::Bqp;
  if (s == "best-of") return BoundKind::BestOf;
  throw MespError(ErrorKind::InvalidArgument, "unknown bound kind '" + s + "'");
}

ScalingMode parse_scaling_mode(const std::string& s) {
  if (s == "none") return ScalingMode::None;
  if (s == "gamma") return ScalingMode::Gamma;
  if (s == "upsilon") return ScalingMode::Upsilon;
  throw MespError(ErrorKind::InvalidArgument, "unknown scaling mode '" + s + "'");
}

std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::Linx:
      return "linx";
    case BoundKind::Ddfact:
      return "ddfact";
    case BoundKind::Bqp:
      return "bqp";
    case BoundKind::BestOf:
      return "best-of";
  }
  return "?";
}

std::string to_string(ScalingMode m) {
  switch (m) {
    case ScalingMode::None:
      return "none";
    case ScalingMode::Gamma:
      return "gamma";
    case ScalingMode::Upsilon:
      return "upsilon";
  }
  return "?";
}

ScaleVector::ScaleVector(VectorXd upsilon) : upsilon_(std::move(upsilon)) {
  if (upsilon_.size() == 0 || !(upsilon_.minCoeff() > 0.0) || !upsilon_.allFinite()) {
    throw MespError(ErrorKind::InvalidArgument, "scaling vector entries must be positive");
  }
}

ScaleVector ScaleVector::from_log(const VectorXd& log_upsilon) {
  return ScaleVector(log_upsilon.array().exp().matrix());
}

ScaleVector ScaleVector::uniform(int n, double gamma) { return ScaleVector(VectorXd::Constant(n, gamma)); }

BoundResult bound_at_gamma(BoundKind kind, const Instance& instance, double gamma,
                           const BoundOptions& options) {
  switch (kind) {
    case BoundKind::Linx:
      return linx_bound_direct(instance, gamma, options.linx);
    case BoundKind::Bqp:
      return bqp_admm(instance, gamma, options.bqp);
    case BoundKind::Ddfact:
      return ddfact_bound(instance, options.fact);
    case BoundKind::BestOf:
      return best_of({linx_bound_direct(instance, gamma, options.linx),
                      ddfact_bound(instance, options.fact), bqp_admm(instance, gamma, options.bqp)});
  }
  throw MespError(ErrorKind::InvalidArgument, "bound_at_gamma: unknown kind");
}

BoundResult bound_at_upsilon(BoundKind kind, const Instance& instance, const VectorXd& upsilon,
                             const BoundOptions& options) {
  switch (kind) {
    case BoundKind::Linx:
      return linx_bound_scaled(instance, upsilon, options.linx);
    case BoundKind::Bqp:
      return bqp_admm_scaled(instance, upsilon, options.bqp);
    case BoundKind::Ddfact:
      return ddfact_scaled_bound(instance, upsilon, options.fact);
    case BoundKind::BestOf:
      return best_of({linx_bound_scaled(instance, upsilon, options.linx),
                      ddfact_scaled_bound(instance, upsilon, options.fact),
                      bqp_admm_scaled(instance, upsilon, options.bqp)});
  }
  throw MespError(ErrorKind::InvalidArgument, "bound_at_upsilon: unknown kind");
}

ScaleResult optimize_gamma(BoundKind kind, const Instance& instance, const BoundOptions& options) {
  if (kind == BoundKind::Ddfact) {
    throw MespError(ErrorKind::InvalidArgument,
                    "optimize_gamma: the factorization bound is scale invariant");
  }
  if (kind == BoundKind::BestOf) {
    throw MespError(ErrorKind::InvalidArgument, "optimize_gamma: choose a single bound kind");
  }
  const ScalingOptions& so = options.scaling;
  ScaleResult out;

  auto eval = [&](double t) {
    const double gamma = std::exp(t);
    BoundResult r = bound_at_gamma(kind, instance, gamma, options);
    ++out.evaluations;
    Sample smp{t, r.value, 0.0};
    bool analytic = so.analytic_gradient && r.primal_value != kNegInf;
    if (analytic) {
      try {
        smp.slope = gamma_slope(kind, instance, gamma, r);
      } catch (const MespError&) {
        analytic = false;
      }
    }
    if (!analytic) {
      const double h = so.fd_step * std::max(1.0, std::abs(t));
      const double fp = bound_at_gamma(kind, instance, std::exp(t + h), options).value;
      const double fm = bound_at_gamma(kind, instance, std::exp(t - h), options).value;
      out.evaluations += 2;
      smp.slope = (fp - fm) / (2.0 * h);
    }
    if (r.value < out.value || out.evaluations <= 1) {
      out.value = r.value;
      out.gamma = gamma;
      out.bound = std::move(r);
    }
    return smp;
  };

  Sample a = eval(0.0);
  if (std::abs(a.slope) <= so.slope_tol) return out;

  // Expand away from the sign of the slope until it flips or the value rises.
  const double dir = a.slope > 0.0 ? -1.0 : 1.0;
  double step = 1.0;
  Sample prev = a;
  Sample cur = a;
  bool bracketed = false;
  while (std::abs(cur.t) < so.max_abs_log_gamma) {
    Sample next = eval(std::clamp(cur.t + dir * step, -so.max_abs_log_gamma, so.max_abs_log_gamma));
    prev = cur;
    cur = next;
    if ((cur.slope > 0.0) != (prev.slope > 0.0) || cur.value > prev.value) {
      bracketed = true;
      break;
    }
    if (std::abs(cur.slope) <= so.slope_tol) return out;
    step *= 2.0;
  }
  if (!bracketed) {
    out.bound.flags.push_back("gamma_at_bracket_limit");
    return out;
  }

  // Safeguarded secant (Illinois) on the slope; bisection when the slopes are inconsistent.
  Sample lo = prev.t < cur.t ? prev : cur;
  Sample hi = prev.t < cur.t ? cur : prev;
  if (!(lo.slope < 0.0 && hi.slope > 0.0)) {
    // Values rose but slopes disagree: widen to the sample before prev.
    lo.t = std::min(prev.t, cur.t) - step;
    lo = eval(lo.t);
  }
  int side = 0;
  for (int k = 0; k < 60 && hi.t - lo.t > 1e-10; ++k) {
    double t = 0.5 * (lo.t + hi.t);
    if (lo.slope < 0.0 && hi.slope > 0.0) t = lo.t - lo.slope * (hi.t - lo.t) / (hi.slope - lo.slope);
    if (!(t > lo.t && t < hi.t)) t = 0.5 * (lo.t + hi.t);
    Sample m = eval(t);
    if (std::abs(m.slope) <= so.slope_tol) break;
    if (m.slope > 0.0) {
      hi = m;
      if (side == 1) lo.slope *= 0.5;
      side = 1;
    } else {
      lo = m;
      if (side == -1) hi.slope *= 0.5;
      side = -1;
    }
  }
  return out;
}

VectorXd upsilon_gradient(BoundKind kind, const Instance& instance, const VectorXd& upsilon,
                          const BoundResult& at) {
  switch (kind) {
    case BoundKind::Linx:
      return linx_upsilon_gradient(instance.C, at.x, upsilon);
    case BoundKind::Bqp:
      return bqp_upsilon_gradient(instance.C, LiftedPoint{at.x, *at.X}, upsilon);
    case BoundKind::Ddfact: {
      const MatrixXd F = factor_of(instance);
      FactorizationProblem p{upsilon.cwiseSqrt().asDiagonal() * F, instance.s, 0.0,
                             -upsilon.array().log().matrix(), 1e-8};
      const FactorizationEval ev = evaluate_factorization(p, at.x);
      return (at.x.array() * (ev.d.array() - 1.0)).matrix();
    }
    case BoundKind::BestOf:
      break;
  }
  throw MespError(ErrorKind::InvalidArgument, "upsilon_gradient: choose a single bound kind");
}

ScaleResult optimize_upsilon(BoundKind kind, const Instance& instance, const BoundOptions& options) {
  if (kind == BoundKind::BestOf) {
    ScaleResult best;
    for (BoundKind k : {BoundKind::Linx, BoundKind::Ddfact, BoundKind::Bqp}) {
      ScaleResult r = optimize_upsilon(k, instance, options);
      if (r.value < best.value) best = std::move(r);
    }
    return best;
  }
  const ScalingOptions& so = options.scaling;
  const int n = instance.n();

  ScaleResult out;
  VectorXd u;
  if (kind == BoundKind::Ddfact) {
    out.bound = ddfact_bound(instance, options.fact);
    out.value = out.bound.value;
    out.evaluations = 1;
    u = VectorXd::Zero(n);
  } else {
    out = optimize_gamma(kind, instance, options);
    u = VectorXd::Constant(n, 0.5 * std::log(out.gamma));
  }
  out.upsilon = u.array().exp().matrix();

  auto eval = [&](const VectorXd& uu, VectorXd& grad) {
    const VectorXd ups = uu.array().exp().matrix();
    BoundResult r = bound_at_upsilon(kind, instance, ups, options);
    ++out.evaluations;
    const double value = r.value;
    bool analytic = so.analytic_gradient && r.primal_value != kNegInf;
    if (analytic) {
      try {
        grad = upsilon_gradient(kind, instance, ups, r);
      } catch (const MespError&) {
        analytic = false;
      }
    }
    if (!analytic) {
      grad.resize(n);
      for (int i = 0; i < n; ++i) {
        const double h = so.fd_step * std::max(1.0, std::abs(uu(i)));
        VectorXd up = uu;
        VectorXd um = uu;
        up(i) += h;
        um(i) -= h;
        const double fp = bound_at_upsilon(kind, instance, up.array().exp().matrix(), options).value;
        const double fm = bound_at_upsilon(kind, instance, um.array().exp().matrix(), options).value;
        grad(i) = (fp - fm) / (2.0 * h);
      }
      out.evaluations += 2 * n;
    }
    if (value < out.value) {
      out.value = value;
      out.upsilon = ups;
      out.gamma = 1.0;
      out.bound = std::move(r);
    }
    return value;
  };

  VectorXd g;
  double f = eval(u, g);
  std::deque<std::pair<VectorXd, VectorXd>> memory;
  constexpr std::size_t kMemory = 6;
  for (int k = 0; k < so.max_outer_iter; ++k) {
    if (g.lpNorm<Eigen::Infinity>() <= so.grad_tol) break;
    // Two-loop recursion.
    VectorXd q = g;
    std::vector<double> alphas(memory.size());
    for (std::size_t j = memory.size(); j-- > 0;) {
      const auto& [sv, yv] = memory[j];
      alphas[j] = sv.dot(q) / yv.dot(sv);
      q -= alphas[j] * yv;
    }
    if (!memory.empty()) {
      const auto& [sv, yv] = memory.back();
      q *= sv.dot(yv) / yv.squaredNorm();
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const auto& [sv, yv] = memory[j];
      const double beta = yv.dot(q) / yv.dot(sv);
      q += (alphas[j] - beta) * sv;
    }
    VectorXd p = -q;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      memory.clear();
      p = -g / std::max(1.0, g.norm());
      slope = g.dot(p);
    }
    double t = 1.0;
    VectorXd u_new;
    VectorXd g_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 20; ++ls) {
      u_new = u + t * p;
      f_new = eval(u_new, g_new);
      if (f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const VectorXd sv = u_new - u;
    const VectorXd yv = g_new - g;
    if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
      memory.emplace_back(sv, yv);
      if (memory.size() > kMemory) memory.pop_front();
    }
    const double decrease = f - f_new;
    u = u_new;
    g = g_new;
    f = f_new;
    if (decrease <= 1e-12 * std::max(1.0, std::abs(f))) break;
  }
  out.bound.upsilon = out.upsilon;
  return out;
}

void validate_mask(const MatrixXd& M, int n) {
  if (M.rows() != n || M.cols() != n) {
    throw MespError(ErrorKind::Validation, "mask: order does not match the instance");
  }
  if (!M.allFinite()) throw MespError(ErrorKind::Validation, "mask: non-finite entries");
  const double scale = std::max(1.0, max_abs_entry(M));
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol::kSym * scale) {
    throw MespError(ErrorKind::Validation, "mask: not symmetric");
  }
  if ((M.diagonal().array() - 1.0).abs().maxCoeff() > 1e-10) {
    throw MespError(ErrorKind::Validation, "mask: diagonal must be all ones");
  }
  const VectorXd ev =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev(0) < -tol::kPsd * std::max(std::abs(ev(0)), std::abs(ev(n - 1)))) {
    throw MespError(ErrorKind::Validation, "mask: not positive semidefinite");
  }
}

Instance apply_mask(const Instance& instance, const MatrixXd& M) {
  validate_mask(M, instance.n());
  Instance out = instance;
  out.C = instance.C.cwiseProduct(M);
  out.F.reset();
  out.label = "masked(" + instance.label + ")";
  return out;
}

BoundResult compute_bound(BoundKind kind, ScalingMode scaling, const Instance& instance,
                          const BoundOptions& options) {
  if (kind == BoundKind::BestOf) {
    std::vector<BoundResult> all;
    for (BoundKind k : {BoundKind::Linx, BoundKind::Ddfact, BoundKind::Bqp}) {
      all.push_back(compute_bound(k, scaling, instance, options));
    }
    return best_of(std::move(all));
  }
  switch (scaling) {
    case ScalingMode::None:
      return bound_at_gamma(kind, instance, 1.0, options);
    case ScalingMode::Gamma: {
      if (kind == BoundKind::Ddfact) return ddfact_bound(instance, options.fact);
      ScaleResult r = optimize_gamma(kind, instance, options);
      r.bound.value = r.value;
      r.bound.gamma = r.gamma;
      return r.bound;
    }
    case ScalingMode::Upsilon: {
      ScaleResult r = optimize_upsilon(kind, instance, options);
      r.bound.value = r.value;
      return r.bound;
    }
  }
  throw MespError(ErrorKind::InvalidArgument, "compute_bound: unknown scaling mode");
}

}  // namespace mesp
