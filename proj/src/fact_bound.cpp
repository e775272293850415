// SPDX-License-Identifier: Apache-2.0
#include "mesp/fact_bound.hpp"

#include "mesp/capped_simplex.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mesp {

namespace {

// Relative slack used when comparing the tail average with the next eigenvalue.
constexpr double kIotaSlack = 1e-12;

// Eigen-decomposition of a symmetric matrix, values non-increasing and clipped at zero.
void sorted_eigen(const MatrixXd& X, VectorXd& values, MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(X);
  values = es.eigenvalues().reverse().cwiseMax(0.0);
  vectors = es.eigenvectors().rowwise().reverse();
}

MatrixXd padded_factor(const MatrixXd& G, int s) {
  if (G.cols() >= s) return G;
  MatrixXd out = MatrixXd::Zero(G.rows(), s);
  out.leftCols(G.cols()) = G;
  return out;
}

}  // namespace

int find_iota(const VectorXd& lambda, int s) {
  const int k = static_cast<int>(lambda.size());
  if (s <= 0 || s > k) throw MespError(ErrorKind::InvalidArgument, "find_iota requires 0 < s <= k");
  double tail = lambda.sum();
  if (!(tail > 0.0)) throw MespError(ErrorKind::InvalidArgument, "find_iota: all-zero spectrum");
  const double scale = lambda(0);
  for (int i = 0; i < s; ++i) {
    // tail = sum_{l >= i} lambda_l (0-based), i.e. the sum over l > i in 1-based terms.
    const double avg = tail / (s - i);
    if (avg >= lambda(i) - kIotaSlack * scale) return i;
    tail -= lambda(i);
  }
  return s - 1;
}

GammaEval gamma_spectrum(const VectorXd& lambda, int s, double shift) {
  GammaEval g;
  g.lambda = lambda;
  VectorXd lam = lambda;
  if (lam.size() < s) {
    lam = VectorXd::Zero(s);
    lam.head(lambda.size()) = lambda;
  }
  if (!(lam.sum() > 0.0)) {
    g.iota = 0;
    g.delta = 0.0;
    g.value = shift > 0.0 ? s * std::log(shift) : kNegInf;
    return g;
  }
  g.iota = find_iota(lam, s);
  g.delta = lam.tail(lam.size() - g.iota).sum() / (s - g.iota);
  if (!(shift + g.delta > 0.0)) {
    g.value = kNegInf;
    return g;
  }
  double v = 0.0;
  for (int l = 0; l < g.iota; ++l) v += std::log(shift + lam(l));
  v += (s - g.iota) * std::log(shift + g.delta);
  g.value = v;
  return g;
}

GammaEval gamma_value(const MatrixXd& X, int s) {
  VectorXd values;
  MatrixXd vectors;
  sorted_eigen(0.5 * (X + X.transpose()), values, vectors);
  return gamma_spectrum(values, s);
}

FactorizationEval evaluate_factorization(const FactorizationProblem& problem, const VectorXd& x) {
  const int s = problem.s;
  const MatrixXd G = padded_factor(problem.G, s);
  const int k = static_cast<int>(G.cols());
  const Eigen::Index n = G.rows();

  FactorizationEval ev;
  MatrixXd X = G.transpose() * x.asDiagonal() * G;
  X = 0.5 * (X + X.transpose());
  VectorXd mu;
  MatrixXd U;
  sorted_eigen(X, mu, U);
  ev.eigenvectors = U;
  ev.gamma = gamma_spectrum(mu, s, problem.shift);
  const double lin = problem.linear.size() > 0 ? problem.linear.dot(x) : 0.0;
  ev.value = ev.gamma.value == kNegInf ? kNegInf : ev.gamma.value + lin;

  const double top = mu.size() > 0 ? mu(0) : 0.0;
  int rank = 0;
  for (int l = 0; l < k; ++l) {
    if (mu(l) > tol::kRank * top && mu(l) > 0.0) ++rank;
  }
  ev.rank = rank;

  const double shift = problem.shift;
  const double tail = shift + ev.gamma.delta;
  if (!(tail > 0.0)) {
    ev.gradient = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    ev.d = ev.gradient;
    ev.beta = VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    return ev;
  }
  ev.beta.resize(k);
  for (int l = 0; l < k; ++l) {
    if (l < ev.gamma.iota) {
      ev.beta(l) = 1.0 / (shift + mu(l));
    } else if (l < rank || shift > 0.0) {
      ev.beta(l) = 1.0 / tail;
    } else {
      ev.beta(l) = (1.0 + problem.eps_rank) / tail;
    }
  }
  const MatrixXd P = G * U;
  ev.d = P.cwiseAbs2() * ev.beta;
  ev.gradient = ev.d;
  if (problem.linear.size() > 0) ev.gradient += problem.linear;

  // Affine majorant at Theta: phi(X(y)) <= <Theta, X(y)> + shift sum_T beta - sum_T log beta - s
  // with T the s smallest eigenvalues of Theta; maximize the linear part over the polytope.
  VectorXd sorted_beta = ev.beta;
  std::sort(sorted_beta.data(), sorted_beta.data() + k);
  double constant = -static_cast<double>(s);
  for (int l = 0; l < s; ++l) constant += shift * sorted_beta(l) - std::log(sorted_beta(l));
  const std::vector<int> top_s = top_indices(ev.gradient, s);
  double lin_max = 0.0;
  for (int i : top_s) lin_max += ev.gradient(i);
  ev.majorant_bound = lin_max + constant;
  return ev;
}

BoundResult maximize_factorization(const FactorizationProblem& problem, const FactOptions& options,
                                   const std::string& name) {
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(problem.G.rows());
  const int s = problem.s;
  if (s <= 0 || s > n) throw MespError(ErrorKind::InvalidArgument, name + ": requires 0 < s <= n");

  BoundResult res;
  res.bound_name = name;
  VectorXd x = options.x0 ? *options.x0 : VectorXd::Constant(n, static_cast<double>(s) / n);
  if (x.size() != n) throw MespError(ErrorKind::InvalidArgument, name + ": x0 has wrong length");

  FactorizationEval ev = evaluate_factorization(problem, x);
  if (ev.value == kNegInf) {
    res.value = kNegInf;
    res.primal_value = kNegInf;
    res.x = x;
    res.flags.push_back("infeasible");
    res.converged = true;
    return res;
  }

  double best = std::numeric_limits<double>::infinity();
  auto record = [&](const FactorizationEval& e, const VectorXd& at) {
    if (e.majorant_bound < best) {
      best = e.majorant_bound;
      res.x = at;
      res.gradient = e.gradient;
      res.primal_value = e.value;
    }
  };

  int it = 0;
  double gap = capped_simplex_gap(ev.gradient, x, s);
  record(ev, x);
  for (; it < options.max_iter; ++it) {
    gap = capped_simplex_gap(ev.gradient, x, s);
    const double dual_gap = ev.majorant_bound - ev.value;
    if (gap <= options.fw_tol || dual_gap <= options.dual_tol) {
      res.converged = true;
      break;
    }

    // Pairwise step from the worst vertex of the minimal face containing x to the FW vertex.
    const std::vector<int> plus = top_indices(ev.gradient, s);
    std::vector<int> ones;
    std::vector<int> frac;
    for (int i = 0; i < n; ++i) {
      if (x(i) >= 1.0) {
        ones.push_back(i);
      } else if (x(i) > 0.0) {
        frac.push_back(i);
      }
    }
    std::stable_sort(frac.begin(), frac.end(),
                     [&](int a, int b) { return ev.gradient(a) < ev.gradient(b); });
    VectorXd dir = VectorXd::Zero(n);
    for (int i : plus) dir(i) += 1.0;
    for (int i : ones) dir(i) -= 1.0;
    const int need = s - static_cast<int>(ones.size());
    for (int j = 0; j < need && j < static_cast<int>(frac.size()); ++j) dir(frac[j]) -= 1.0;

    double eta_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (dir(i) > 0.0) eta_max = std::min(eta_max, (1.0 - x(i)) / dir(i));
      if (dir(i) < 0.0) eta_max = std::min(eta_max, x(i) / -dir(i));
    }
    const double slope0 = ev.gradient.dot(dir);
    if (!(eta_max > 0.0) || !(slope0 > 0.0) || !std::isfinite(eta_max)) {
      // x sits on a vertex of its face already maximizing the gradient.
      res.converged = gap <= options.fw_tol;
      break;
    }

    auto slope_at = [&](double eta) {
      const VectorXd y = (x + eta * dir).cwiseMax(0.0).cwiseMin(1.0);
      return evaluate_factorization(problem, y).gradient.dot(dir);
    };
    double eta = eta_max;
    double hi_slope = slope_at(eta_max);
    if (!(hi_slope >= 0.0)) {
      // Illinois regula falsi on the non-increasing directional derivative.
      double a = 0.0;
      double fa = slope0;
      double b = eta_max;
      double fb = std::isfinite(hi_slope) ? hi_slope : -slope0;
      int side = 0;
      for (int ls = 0; ls < 60; ++ls) {
        const double c = (a * fb - b * fa) / (fb - fa);
        const double fc = slope_at(c);
        if (std::abs(fc) <= 1e-12 * std::max(1.0, slope0) || b - a <= 1e-16 * eta_max) {
          a = b = c;
          break;
        }
        if (fc > 0.0) {
          a = c;
          fa = fc;
          if (side == 1) fb *= 0.5;
          side = 1;
        } else {
          b = c;
          fb = fc;
          if (side == -1) fa *= 0.5;
          side = -1;
        }
      }
      eta = 0.5 * (a + b);
    }

    x += eta * dir;
    for (int i = 0; i < n; ++i) {
      if (eta == eta_max && dir(i) != 0.0) {
        const double lim = dir(i) > 0.0 ? (1.0 - x(i)) : x(i);
        if (std::abs(lim) <= 1e-12) x(i) = dir(i) > 0.0 ? 1.0 : 0.0;
      }
      if (x(i) < 1e-15) x(i) = 0.0;
      if (x(i) > 1.0 - 1e-15) x(i) = 1.0;
    }
    ev = evaluate_factorization(problem, x);
    if (ev.value == kNegInf) {
      res.flags.push_back("numerical");
      break;
    }
    record(ev, x);
  }

  res.iterations = it;
  res.residual = capped_simplex_gap(res.gradient, res.x, s);
  if (!res.converged) res.flags.push_back("max_iter");
  res.value = best;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

MatrixXd dual_theta(const VectorXd& x, const MatrixXd& F, int s, double eps_rank) {
  FactorizationProblem p{F, s, 0.0, {}, eps_rank};
  FactorizationEval ev = evaluate_factorization(p, x);
  if (!(ev.gamma.delta > 0.0)) {
    throw MespError(ErrorKind::Numerical, "dual_theta: Gamma_s is -inf at x (rank below s)");
  }
  return ev.eigenvectors * ev.beta.asDiagonal() * ev.eigenvectors.transpose();
}

DualCertificate dual_certificate(const VectorXd& x, const MatrixXd& F, int s, double eps_rank) {
  FactorizationProblem p{F, s, 0.0, {}, eps_rank};
  FactorizationEval ev = evaluate_factorization(p, x);
  if (!(ev.gamma.delta > 0.0)) {
    throw MespError(ErrorKind::Numerical, "dual_certificate: Gamma_s is -inf at x (rank below s)");
  }
  const int n = static_cast<int>(F.rows());
  DualCertificate cert;
  cert.Theta = ev.eigenvectors * ev.beta.asDiagonal() * ev.eigenvectors.transpose();
  cert.d = ev.d;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cert.d(a) > cert.d(b); });
  cert.tau = cert.d(order[s - 1]);
  cert.nu = VectorXd::Zero(n);
  for (int l = 0; l < s; ++l) cert.nu(order[l]) = cert.d(order[l]) - cert.tau;
  cert.upsilon = (cert.nu.array() + cert.tau - cert.d.array()).matrix();
  cert.upsilon = cert.upsilon.cwiseMax(0.0);

  VectorXd sorted_beta = ev.beta;
  std::sort(sorted_beta.data(), sorted_beta.data() + sorted_beta.size());
  double obj = cert.nu.sum() + cert.tau * s - s;
  for (int l = 0; l < s; ++l) obj -= std::log(sorted_beta(l));
  cert.objective = obj;
  cert.gap = obj - ev.gamma.value;
  return cert;
}

FixReport variable_fix(double zeta, double lb, const DualCertificate& cert, double fix_safety) {
  if (lb > zeta + 1e-9 * std::max(1.0, std::abs(zeta))) {
    throw MespError(ErrorKind::InvalidArgument, "variable_fix: lower bound exceeds upper bound");
  }
  FixReport rep;
  rep.gap = std::max(0.0, zeta - lb);
  const Eigen::Index n = cert.nu.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool zero = rep.gap < cert.upsilon(j) - fix_safety;
    const bool one = rep.gap < cert.nu(j) - fix_safety;
    if (zero && one) {
      rep.conflicts.push_back(static_cast<int>(j));
    } else if (zero) {
      rep.fixed_to_zero.push_back(static_cast<int>(j));
    } else if (one) {
      rep.fixed_to_one.push_back(static_cast<int>(j));
    }
  }
  return rep;
}

BoundResult ddfact_bound(const Instance& instance, const FactOptions& options) {
  const MatrixXd F = factor_of(instance);
  FactorizationProblem p{F, instance.s, 0.0, {}, options.eps_rank};
  BoundResult res = maximize_factorization(p, options, "ddfact");
  if (res.value == kNegInf) return res;
  res.certificate = dual_certificate(res.x, F, instance.s, options.eps_rank);
  res.value = std::min(res.value, res.certificate->objective) + instance.offset;
  res.primal_value += instance.offset;
  return res;
}

BoundResult augmented_fact_bound(const Instance& instance, const FactOptions& options) {
  const int n = instance.n();
  SpectralCache spec(instance.C);
  const double lam_min = spec.values()(n - 1);
  if (!(lam_min > tol::kSingular * spec.max_abs())) {
    throw MespError(ErrorKind::Validation, "augmented_fact_bound: C must be positive definite");
  }
  std::vector<std::string> flags;
  double shift = lam_min;
  int shifted_rank = 0;
  for (int i = 0; i < n; ++i) {
    if (spec.values()(i) - lam_min > tol::kRank * spec.max_abs()) ++shifted_rank;
  }
  if (shifted_rank < instance.s) {
    shift = (1.0 - options.shift_backoff) * lam_min;
    flags.push_back("shift_backoff");
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (spec.values()(i) - shift > tol::kRank * spec.max_abs()) keep.push_back(i);
  }
  MatrixXd G(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    G.col(static_cast<Eigen::Index>(c)) =
        spec.vectors().col(keep[c]) * std::sqrt(spec.values()(keep[c]) - shift);
  }
  FactorizationProblem p{G, instance.s, shift, {}, options.eps_rank};
  BoundResult res = maximize_factorization(p, options, "augmented_fact");
  for (auto& f : flags) res.flags.push_back(f);
  res.gamma = shift;
  if (res.value != kNegInf) {
    res.value += instance.offset;
    res.primal_value += instance.offset;
  }
  return res;
}

double ddfact_scaled_objective(const MatrixXd& F, const VectorXd& x, const VectorXd& upsilon,
                               int s) {
  const MatrixXd G = upsilon.cwiseSqrt().asDiagonal() * F;
  const GammaEval g = gamma_value(G.transpose() * x.asDiagonal() * G, s);
  if (g.value == kNegInf) return kNegInf;
  return g.value - upsilon.array().log().matrix().dot(x);
}

BoundResult ddfact_scaled_bound(const Instance& instance, const VectorXd& upsilon,
                                const FactOptions& options) {
  if (upsilon.size() != instance.n() || !(upsilon.minCoeff() > 0.0)) {
    throw MespError(ErrorKind::InvalidArgument, "ddfact_scaled_bound: scaling must be positive");
  }
  const MatrixXd F = factor_of(instance);
  FactorizationProblem p{upsilon.cwiseSqrt().asDiagonal() * F, instance.s, 0.0,
                         -upsilon.array().log().matrix(), options.eps_rank};
  BoundResult res = maximize_factorization(p, options, "ddfact_g");
  res.upsilon = upsilon;
  if (res.value != kNegInf) {
    res.value += instance.offset;
    res.primal_value += instance.offset;
  }
  return res;
}

}  // namespace mesp
