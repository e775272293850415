// SPDX-License-Identifier: Apache-2.0
#include "mesp/linx_bound.hpp"

#include "mesp/capped_simplex.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

namespace mesp {

namespace {

// x -> 1/2 ldet(B Diag(x) B^T + Diag(e - x)) + linear^T x + constant.
struct LinxModel {
  MatrixXd B;
  VectorXd linear;
  double constant = 0.0;
  int s = 0;
};

LinxEval evaluate(const LinxModel& m, const VectorXd& x) {
  const Eigen::Index n = m.B.rows();
  LinxEval ev;
  MatrixXd H = m.B * x.asDiagonal() * m.B.transpose();
  H.diagonal() += (VectorXd::Ones(n) - x);
  H = 0.5 * (H + H.transpose());
  Eigen::LLT<MatrixXd> llt(H);
  ev.H = H;
  if (llt.info() != Eigen::Success) return ev;
  const VectorXd piv = llt.matrixLLT().diagonal().cwiseAbs2();
  if (!(piv.minCoeff() > tol::kSingular * H.diagonal().cwiseAbs().maxCoeff())) return ev;
  ev.Hinv = llt.solve(MatrixXd::Identity(n, n));
  ev.Hinv = 0.5 * (ev.Hinv + ev.Hinv.transpose());
  const double ldet = piv.array().log().sum();
  ev.value = 0.5 * ldet + m.constant;
  if (m.linear.size() > 0) ev.value += m.linear.dot(x);
  const MatrixXd HB = ev.Hinv * m.B;
  ev.gradient = 0.5 * ((m.B.array() * HB.array()).colwise().sum().transpose() -
                       ev.Hinv.diagonal().array())
                          .matrix();
  if (m.linear.size() > 0) ev.gradient += m.linear;
  return ev;
}

LinxModel gamma_model(const MatrixXd& C, double gamma, int s) {
  if (!(gamma > 0.0)) throw MespError(ErrorKind::InvalidArgument, "linx: gamma must be positive");
  return LinxModel{std::sqrt(gamma) * C, {}, -0.5 * s * std::log(gamma), s};
}

LinxModel upsilon_model(const MatrixXd& C, const VectorXd& upsilon, int s) {
  if (upsilon.size() != C.rows() || !(upsilon.minCoeff() > 0.0)) {
    throw MespError(ErrorKind::InvalidArgument, "linx: scaling vector must be positive, length n");
  }
  return LinxModel{upsilon.asDiagonal() * C, -upsilon.array().log().matrix(), 0.0, s};
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Fills value/primal/gradient/residual from the evaluation at a feasible x.
void certify(BoundResult& res, const LinxModel& m, const VectorXd& x, double offset) {
  LinxEval ev = evaluate(m, x);
  res.x = x;
  if (ev.value == kNegInf) {
    res.value = std::numeric_limits<double>::infinity();
    res.primal_value = kNegInf;
    res.flags.push_back("singular");
    return;
  }
  const double gap = capped_simplex_gap(ev.gradient, x, m.s);
  res.gradient = ev.gradient;
  res.primal_value = ev.value + offset;
  res.value = ev.value + gap + offset;
  res.residual = gap;
}

VectorXd start_point(const LinxOptions& options, int n, int s) {
  VectorXd x = options.x0 ? project_capped_simplex(*options.x0, s)
                          : VectorXd::Constant(n, static_cast<double>(s) / n);
  if (x.size() != n) throw MespError(ErrorKind::InvalidArgument, "linx: x0 has wrong length");
  return x;
}

BoundResult spg(const LinxModel& m, const LinxOptions& options, double offset,
                const std::string& name) {
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(m.B.rows());
  const int s = m.s;
  BoundResult res;
  res.bound_name = name;

  VectorXd x = start_point(options, n, s);
  LinxEval ev = evaluate(m, x);
  if (ev.value == kNegInf) throw MespError(ErrorKind::Numerical, name + ": H singular at start");

  constexpr int kMemory = 10;
  std::deque<double> history{ev.value};
  double alpha = 1.0;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const double pg = (project_capped_simplex(x + ev.gradient, s) - x).norm();
    const double gap = capped_simplex_gap(ev.gradient, x, s);
    if (pg <= options.pg_tol || gap <= options.pg_tol) {
      res.converged = true;
      break;
    }
    const VectorXd d = project_capped_simplex(x + alpha * ev.gradient, s) - x;
    const double slope = ev.gradient.dot(d);
    const double ref = *std::max_element(history.begin(), history.end());
    double t = 1.0;
    VectorXd x_new;
    LinxEval ev_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * d;
      ev_new = evaluate(m, x_new);
      if (ev_new.value != kNegInf && ev_new.value >= ref + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const VectorXd step = x_new - x;
    const VectorXd ydiff = ev.gradient - ev_new.gradient;
    const double sy = step.dot(ydiff);
    alpha = sy > 0.0 ? std::clamp(step.squaredNorm() / sy, 1e-10, 1e10) : 1e3;
    x = x_new;
    ev = std::move(ev_new);
    history.push_back(ev.value);
    if (history.size() > kMemory) history.pop_front();
  }
  res.iterations = it;
  if (!res.converged) res.flags.push_back("max_iter");
  certify(res, m, x, offset);
  res.wall_seconds = elapsed(start);
  return res;
}

// Minimizes 1/2 x^T Q x - q^T x over the box [0,1]^n by cyclic coordinate descent.
void box_qp(const MatrixXd& Q, const VectorXd& q, VectorXd& x) {
  const Eigen::Index n = q.size();
  VectorXd g = Q * x - q;
  for (int sweep = 0; sweep < 1000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = std::clamp(x(i) - g(i) / Q(i, i), 0.0, 1.0);
      const double delta = xi - x(i);
      if (delta != 0.0) {
        g += delta * Q.col(i);
        x(i) = xi;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change <= 1e-13) break;
  }
}

}  // namespace

LinxEval linx_objective(const MatrixXd& C, const VectorXd& x, double gamma, int s) {
  return evaluate(gamma_model(C, gamma, s), x);
}

LinxEval linx_objective_scaled(const MatrixXd& C, const VectorXd& x, const VectorXd& upsilon) {
  return evaluate(upsilon_model(C, upsilon, 0), x);
}

double linx_gamma_slope(const MatrixXd& C, const VectorXd& x, double gamma, int s) {
  LinxEval ev = linx_objective(C, x, gamma, s);
  if (ev.value == kNegInf) throw MespError(ErrorKind::Numerical, "linx: H singular");
  const MatrixXd K = C * x.asDiagonal() * C;
  return 0.5 * (gamma * (ev.Hinv.cwiseProduct(K)).sum() - s);
}

VectorXd linx_upsilon_gradient(const MatrixXd& C, const VectorXd& x, const VectorXd& upsilon) {
  LinxEval ev = linx_objective_scaled(C, x, upsilon);
  if (ev.value == kNegInf) throw MespError(ErrorKind::Numerical, "linx: H singular");
  const MatrixXd B = upsilon.asDiagonal() * C;
  const MatrixXd Hc = B * x.asDiagonal() * B.transpose();
  return (ev.Hinv * Hc).diagonal() - x;
}

BoundResult linx_bound_direct(const Instance& instance, double gamma, const LinxOptions& options) {
  BoundResult res =
      spg(gamma_model(instance.C, gamma, instance.s), options, instance.offset, "linx");
  res.gamma = gamma;
  return res;
}

BoundResult linx_bound_scaled(const Instance& instance, const VectorXd& upsilon,
                              const LinxOptions& options) {
  BoundResult res =
      spg(upsilon_model(instance.C, upsilon, instance.s), options, instance.offset, "linx_g");
  res.upsilon = upsilon;
  return res;
}

double z_update_eigenvalue(double mu, double rho) {
  const double disc = std::sqrt(mu * mu + 4.0 / rho);
  // Rationalized form for mu < 0 avoids cancellation.
  return mu >= 0.0 ? 0.5 * (mu + disc) : 2.0 / (rho * (disc - mu));
}

MatrixXd z_update(const MatrixXd& M, double rho) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
  VectorXd z = es.eigenvalues();
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = z_update_eigenvalue(z(i), rho);
  return es.eigenvectors() * z.asDiagonal() * es.eigenvectors().transpose();
}

BoundResult linx_admm(const Instance& instance, double gamma, double rho,
                      const LinxOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (!(rho > 0.0)) throw MespError(ErrorKind::InvalidArgument, "linx_admm: rho must be positive");
  const LinxModel m = gamma_model(instance.C, gamma, instance.s);
  const int n = instance.n();
  const int s = instance.s;
  const MatrixXd& B = m.B;
  const MatrixXd BtB = B.transpose() * B;

  // Coupling H(x) = I + sum_i x_i (b_i b_i^T - e_i e_i^T), vectorized into Q and the linear term.
  MatrixXd Q = BtB.cwiseAbs2();
  Q -= B.cwiseAbs2() + B.transpose().cwiseAbs2();
  Q += MatrixXd::Identity(n, n);
  Q.array() += 1.0;

  auto lifted = [&](const VectorXd& x) {
    MatrixXd H = B * x.asDiagonal() * B.transpose();
    H.diagonal() += VectorXd::Ones(n) - x;
    return H;
  };

  BoundResult res;
  res.bound_name = "linx_admm";
  res.gamma = gamma;
  VectorXd x = start_point(options, n, s);
  MatrixXd Hx = lifted(x);
  MatrixXd Z = Hx;
  MatrixXd Psi = MatrixXd::Zero(n, n);
  double delta = 0.0;

  std::deque<double> residuals;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const MatrixXd R = Z + Psi - MatrixXd::Identity(n, n);
    const MatrixXd RB = R * B;
    VectorXd q = (B.array() * RB.array()).colwise().sum().transpose();
    q -= R.diagonal();
    q.array() += s + delta;
    const MatrixXd H_old = Hx;
    box_qp(Q, q, x);
    Hx = lifted(x);

    Z = z_update(Hx - Psi, rho);
    const MatrixXd rz = Z - Hx;
    const double rs = s - x.sum();
    Psi += rz;
    delta += rs;

    const double primal = std::sqrt(rz.squaredNorm() + rs * rs);
    const double dual = rho * (Hx - H_old).norm();
    res.residual = std::max(primal, dual);
    if (primal <= options.admm_tol && dual <= options.admm_tol) {
      res.converged = true;
      ++it;
      break;
    }
    residuals.push_back(res.residual);
    if (residuals.size() > 100) {
      if (res.residual > 10.0 * residuals.front() && res.residual > 100.0 * options.admm_tol) {
        res.flags.push_back("diverged");
        ++it;
        break;
      }
      residuals.pop_front();
    }
    if (options.adaptive_rho && it % 10 == 9) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        Psi *= 0.5;
        delta *= 0.5;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        Psi *= 2.0;
        delta *= 2.0;
      }
    }
  }
  res.iterations = it;
  if (!res.converged && !res.has_flag("diverged")) res.flags.push_back("max_iter");
  const double admm_residual = res.residual;

  VectorXd xf = project_capped_simplex(x, s);
  if (evaluate(m, xf).value == kNegInf) {
    xf = 0.999 * xf + VectorXd::Constant(n, 0.001 * s / n);
  }
  certify(res, m, xf, instance.offset);
  res.residual = admm_residual;
  res.wall_seconds = elapsed(start);
  return res;
}

}  // namespace mesp
