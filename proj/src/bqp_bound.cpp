// SPDX-License-Identifier: Apache-2.0
#include "mesp/bqp_bound.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

namespace mesp {

namespace {

// Lifted data: maximize ldet(Ct o W + I) + <L, W> + constant over PSD W with A(W) = g.
struct BqpModel {
  MatrixXd Ct;
  MatrixXd L;
  double constant = 0.0;
  int n = 0;
  int s = 0;
};

BqpModel gamma_model(const MatrixXd& C, double gamma, int s) {
  if (!(gamma > 0.0)) throw MespError(ErrorKind::InvalidArgument, "bqp: gamma must be positive");
  const int n = static_cast<int>(C.rows());
  BqpModel m;
  m.n = n;
  m.s = s;
  m.Ct = MatrixXd::Zero(n + 1, n + 1);
  m.Ct.bottomRightCorner(n, n) = gamma * C - MatrixXd::Identity(n, n);
  m.L = MatrixXd::Zero(n + 1, n + 1);
  m.constant = -s * std::log(gamma);
  return m;
}

BqpModel upsilon_model(const MatrixXd& C, const VectorXd& upsilon, int s) {
  const int n = static_cast<int>(C.rows());
  if (upsilon.size() != n || !(upsilon.minCoeff() > 0.0)) {
    throw MespError(ErrorKind::InvalidArgument, "bqp: scaling vector must be positive, length n");
  }
  BqpModel m;
  m.n = n;
  m.s = s;
  m.Ct = MatrixXd::Zero(n + 1, n + 1);
  m.Ct.bottomRightCorner(n, n) =
      upsilon.asDiagonal() * C * upsilon.asDiagonal() - MatrixXd::Identity(n, n);
  m.L = MatrixXd::Zero(n + 1, n + 1);
  const VectorXd lg = -upsilon.array().log().matrix();
  m.L.block(0, 1, 1, n) = lg.transpose();
  m.L.block(1, 0, n, 1) = lg;
  return m;
}

double ldet_or_neginf(const MatrixXd& M) {
  Eigen::LLT<MatrixXd> llt(0.5 * (M + M.transpose()));
  if (llt.info() != Eigen::Success) return kNegInf;
  const VectorXd piv = llt.matrixLLT().diagonal().cwiseAbs2();
  if (!(piv.minCoeff() > tol::kSingular * M.diagonal().cwiseAbs().maxCoeff())) return kNegInf;
  return piv.array().log().sum();
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Constraint operator as a dense (2n+2) x (n+1)^2 matrix acting on column-major vec(W).
MatrixXd constraint_matrix(const std::vector<LinearConstraint>& cons, int N) {
  MatrixXd A(static_cast<Eigen::Index>(cons.size()), N * N);
  for (std::size_t l = 0; l < cons.size(); ++l) {
    A.row(static_cast<Eigen::Index>(l)) = Eigen::Map<const VectorXd>(cons[l].G.data(), N * N);
  }
  return A;
}

class BqpAdmm {
 public:
  BqpAdmm(const BqpModel& model, const BqpOptions& options)
      : m_(model), opt_(options), N_(model.n + 1), cons_(linear_constraints(model.n, model.s)) {
    A_ = constraint_matrix(cons_, N_);
    g_.resize(static_cast<Eigen::Index>(cons_.size()));
    for (std::size_t l = 0; l < cons_.size(); ++l) g_(static_cast<Eigen::Index>(l)) = cons_[l].g;
    const VectorXd ct = Eigen::Map<const VectorXd>(m_.Ct.data(), N_ * N_);
    dinv_ = (1.0 + ct.array().square()).inverse().matrix();
    AD_ = A_ * dinv_.asDiagonal();
    MatrixXd K = AD_ * A_.transpose();
    K.diagonal().array() += 1.0;
    kllt_.compute(K);

    // Repair direction: -t [[alpha, -e^T/2], [-e/2, I]] from the W11 and diag(X) = x rows.
    const int n = m_.n;
    alpha_ = n / 4.0 + 1.0;
    MatrixXd Krep = MatrixXd::Identity(N_, N_);
    Krep(0, 0) = alpha_;
    Krep.block(0, 1, 1, n).setConstant(-0.5);
    Krep.block(1, 0, n, 1).setConstant(-0.5);
    krep_min_ = Eigen::SelfAdjointEigenSolver<MatrixXd>(Krep, Eigen::EigenvaluesOnly)
                    .eigenvalues()(0);
  }

  BoundResult run(const std::string& name, double offset) {
    const auto start = std::chrono::steady_clock::now();
    const int n = m_.n;
    const int s = m_.s;
    BoundResult res;
    res.bound_name = name;

    // Start at the barycenter of the lifted vertices.
    const double p1 = static_cast<double>(s) / n;
    const double p2 = static_cast<double>(s) * (s - 1) / (static_cast<double>(n) * (n - 1));
    MatrixXd W(N_, N_);
    W(0, 0) = 1.0;
    W.block(0, 1, 1, n).setConstant(p1);
    W.block(1, 0, n, 1).setConstant(p1);
    W.bottomRightCorner(n, n).setConstant(p2);
    W.bottomRightCorner(n, n).diagonal().setConstant(p1);
    MatrixXd E = W;
    MatrixXd Z = m_.Ct.cwiseProduct(W) + MatrixXd::Identity(N_, N_);
    MatrixXd Lambda = Z.inverse();
    MatrixXd Psi = MatrixXd::Zero(N_, N_);
    MatrixXd Phi = MatrixXd::Zero(N_, N_);
    VectorXd omega = VectorXd::Zero(g_.size());
    double rho = opt_.rho;

    double best = std::numeric_limits<double>::infinity();
    std::deque<double> history;
    int it = 0;
    for (; it < opt_.max_iter; ++it) {
      // W: exact least squares via Woodbury on D + A^T A.
      const MatrixXd T = m_.Ct.cwiseProduct(Z - MatrixXd::Identity(N_, N_) + Psi) + E - Phi +
                         m_.L / rho;
      VectorXd rhs = Eigen::Map<const VectorXd>(T.data(), N_ * N_);
      rhs += A_.transpose() * (g_ + omega);
      VectorXd w = dinv_.cwiseProduct(rhs);
      w -= AD_.transpose() * kllt_.solve(AD_ * rhs);
      W = Eigen::Map<const MatrixXd>(w.data(), N_, N_);
      W = 0.5 * (W + W.transpose());

      const MatrixXd E_old = E;
      E = project_psd(W + Phi);

      const MatrixXd Z_old = Z;
      const MatrixXd CW = m_.Ct.cwiseProduct(W) + MatrixXd::Identity(N_, N_);
      {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * ((CW - Psi) + (CW - Psi).transpose()));
        VectorXd z = es.eigenvalues();
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          const double mu = z(i);
          const double disc = std::sqrt(mu * mu + 4.0 / rho);
          z(i) = mu >= 0.0 ? 0.5 * (mu + disc) : 2.0 / (rho * (disc - mu));
        }
        Z = es.eigenvectors() * z.asDiagonal() * es.eigenvectors().transpose();
        Lambda = es.eigenvectors() * z.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
      }

      const MatrixXd rz = Z - CW;
      const MatrixXd rw = W - E;
      const VectorXd rg = g_ - A_ * Eigen::Map<const VectorXd>(W.data(), N_ * N_);
      Psi += rz;
      Phi += rw;
      omega += rg;

      const double primal = std::sqrt(rz.squaredNorm() + rw.squaredNorm() + rg.squaredNorm());
      const double dual = rho * std::sqrt((E - E_old).squaredNorm() + (Z - Z_old).squaredNorm());
      res.residual = std::max(primal, dual);
      const bool done = primal <= opt_.admm_tol && dual <= opt_.admm_tol;
      if (done || it % opt_.certify_every == opt_.certify_every - 1) {
        best = std::min(best, certificate(Lambda, rho * omega));
      }
      if (done) {
        res.converged = true;
        ++it;
        break;
      }
      history.push_back(res.residual);
      if (history.size() > 100) {
        if (res.residual > 10.0 * history.front() && res.residual > 100.0 * opt_.admm_tol) {
          res.flags.push_back("diverged");
          ++it;
          break;
        }
        history.pop_front();
      }
      if (opt_.adaptive_rho && it % 10 == 9) {
        double factor = 1.0;
        if (primal > 10.0 * dual) factor = 2.0;
        if (dual > 10.0 * primal) factor = 0.5;
        if (factor != 1.0) {
          rho *= factor;
          Psi /= factor;
          Phi /= factor;
          omega /= factor;
        }
      }
    }
    if (!res.converged) {
      best = std::min(best, certificate(Lambda, rho * omega));
      if (!res.has_flag("diverged")) res.flags.push_back("max_iter");
    }
    res.iterations = it;

    const LiftedPoint p = LiftedPoint::from_W(W);
    res.x = p.x;
    res.X = p.X;
    const double primal_obj = ldet_or_neginf(m_.Ct.cwiseProduct(W) + MatrixXd::Identity(N_, N_));
    res.primal_value =
        primal_obj == kNegInf ? kNegInf : primal_obj + (m_.L.cwiseProduct(W)).sum() + m_.constant + offset;
    if (std::isfinite(best)) {
      res.value = best + offset;
    } else {
      res.value = res.primal_value;
      res.flags.push_back("unverified");
    }
    res.wall_seconds = elapsed(start);
    return res;
  }

 private:
  // Lagrangian dual bound tr(Lambda) - ldet(Lambda) - N - mu^T g + constant for PD Lambda,
  // after shifting mu so that Ct o Lambda + L + A^* mu is negative semidefinite.
  double certificate(const MatrixXd& Lambda, const VectorXd& mu) const {
    const double ld = ldet_or_neginf(Lambda);
    if (ld == kNegInf) return std::numeric_limits<double>::infinity();
    const VectorXd amu = A_.transpose() * mu;
    MatrixXd Pi = m_.Ct.cwiseProduct(Lambda) + m_.L + Eigen::Map<const MatrixXd>(amu.data(), N_, N_);
    Pi = 0.5 * (Pi + Pi.transpose());
    const double lmax =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(Pi, Eigen::EigenvaluesOnly).eigenvalues()(N_ - 1);
    const double t = lmax > 0.0 ? lmax / krep_min_ * (1.0 + 1e-12) : 0.0;
    return Lambda.trace() - ld - N_ - mu.dot(g_) + m_.constant + t * alpha_;
  }

  BqpModel m_;
  BqpOptions opt_;
  int N_;
  std::vector<LinearConstraint> cons_;
  MatrixXd A_;
  MatrixXd AD_;
  VectorXd g_;
  VectorXd dinv_;
  Eigen::LLT<MatrixXd> kllt_;
  double alpha_ = 1.0;
  double krep_min_ = 1.0;
};

void check_instance(const Instance& instance) {
  if (instance.n() < 2 || instance.s <= 0 || instance.s >= instance.n()) {
    throw MespError(ErrorKind::InvalidArgument, "bqp: requires n >= 2 and 0 < s < n");
  }
}

}  // namespace

MatrixXd LiftedPoint::W() const {
  const Eigen::Index n = x.size();
  MatrixXd out(n + 1, n + 1);
  out(0, 0) = 1.0;
  out.block(0, 1, 1, n) = x.transpose();
  out.block(1, 0, n, 1) = x;
  out.bottomRightCorner(n, n) = X;
  return out;
}

LiftedPoint LiftedPoint::from_W(const MatrixXd& W) {
  const Eigen::Index n = W.rows() - 1;
  LiftedPoint p;
  p.x = 0.5 * (W.block(1, 0, n, 1) + W.block(0, 1, 1, n).transpose());
  p.X = W.bottomRightCorner(n, n);
  return p;
}

LiftedPoint LiftedPoint::of_subset(const Subset& S, int n) {
  LiftedPoint p;
  p.x = S.indicator(n);
  p.X = p.x * p.x.transpose();
  return p;
}

LiftedFeasibility lifted_feasibility(const LiftedPoint& p, int s) {
  LiftedFeasibility f;
  const Eigen::Index n = p.x.size();
  const double r1 = (p.X.diagonal() - p.x).squaredNorm();
  const double r2 = (p.X * VectorXd::Ones(n) - s * p.x).squaredNorm();
  const double r3 = std::pow(p.x.sum() - s, 2);
  f.linear_residual = std::sqrt(r1 + r2 + r3);
  const MatrixXd gap = p.X - p.x * p.x.transpose();
  f.psd_margin = Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (gap + gap.transpose()),
                                                          Eigen::EigenvaluesOnly)
                     .eigenvalues()(0);
  return f;
}

double bqp_objective(const MatrixXd& C, const LiftedPoint& p, double gamma, int s) {
  const Eigen::Index n = C.rows();
  MatrixXd H = gamma * C.cwiseProduct(p.X);
  H.diagonal() += VectorXd::Ones(n) - p.x;
  const double ld = ldet_or_neginf(H);
  return ld == kNegInf ? kNegInf : ld - s * std::log(gamma);
}

double bqp_objective_scaled(const MatrixXd& C, const LiftedPoint& p, const VectorXd& upsilon) {
  const Eigen::Index n = C.rows();
  MatrixXd H = (upsilon.asDiagonal() * C * upsilon.asDiagonal()).cwiseProduct(p.X);
  H.diagonal() += VectorXd::Ones(n) - p.x;
  const double ld = ldet_or_neginf(H);
  return ld == kNegInf ? kNegInf : ld - 2.0 * upsilon.array().log().matrix().dot(p.x);
}

double bqp_gamma_slope(const MatrixXd& C, const LiftedPoint& p, double gamma, int s) {
  const Eigen::Index n = C.rows();
  const MatrixXd K = C.cwiseProduct(p.X);
  MatrixXd H = gamma * K;
  H.diagonal() += VectorXd::Ones(n) - p.x;
  const MatrixXd Hinv = H.llt().solve(MatrixXd::Identity(n, n));
  return gamma * Hinv.cwiseProduct(K).sum() - s;
}

VectorXd bqp_upsilon_gradient(const MatrixXd& C, const LiftedPoint& p, const VectorXd& upsilon) {
  const Eigen::Index n = C.rows();
  const MatrixXd M = (upsilon.asDiagonal() * C * upsilon.asDiagonal()).cwiseProduct(p.X);
  MatrixXd H = M;
  H.diagonal() += VectorXd::Ones(n) - p.x;
  const MatrixXd Hinv = H.llt().solve(MatrixXd::Identity(n, n));
  return 2.0 * (Hinv * M).diagonal() - 2.0 * p.x;
}

std::vector<LinearConstraint> linear_constraints(int n, int s) {
  if (n < 2 || s <= 0 || s >= n) {
    throw MespError(ErrorKind::InvalidArgument, "linear_constraints: requires n >= 2, 0 < s < n");
  }
  const int N = n + 1;
  std::vector<LinearConstraint> out;
  out.reserve(2 * n + 2);
  for (int i = 1; i <= n; ++i) {
    LinearConstraint c{MatrixXd::Zero(N, N), 0.0};
    c.G(i, i) = 1.0;
    c.G(0, i) -= 0.5;
    c.G(i, 0) -= 0.5;
    out.push_back(std::move(c));
  }
  for (int i = 1; i <= n; ++i) {
    LinearConstraint c{MatrixXd::Zero(N, N), 0.0};
    for (int j = 1; j <= n; ++j) {
      c.G(i, j) += 0.5;
      c.G(j, i) += 0.5;
    }
    c.G(0, i) -= 0.5 * s;
    c.G(i, 0) -= 0.5 * s;
    out.push_back(std::move(c));
  }
  {
    LinearConstraint c{MatrixXd::Zero(N, N), static_cast<double>(s)};
    for (int i = 1; i <= n; ++i) {
      c.G(0, i) = 0.5;
      c.G(i, 0) = 0.5;
    }
    out.push_back(std::move(c));
  }
  {
    LinearConstraint c{MatrixXd::Zero(N, N), 1.0};
    c.G(0, 0) = 1.0;
    out.push_back(std::move(c));
  }
  return out;
}

BoundResult bqp_admm(const Instance& instance, double gamma, const BqpOptions& options) {
  check_instance(instance);
  if (!(options.rho > 0.0)) throw MespError(ErrorKind::InvalidArgument, "bqp: rho must be positive");
  BqpAdmm solver(gamma_model(instance.C, gamma, instance.s), options);
  BoundResult res = solver.run("bqp", instance.offset);
  res.gamma = gamma;
  return res;
}

BoundResult bqp_admm_scaled(const Instance& instance, const VectorXd& upsilon,
                            const BqpOptions& options) {
  check_instance(instance);
  BqpAdmm solver(upsilon_model(instance.C, upsilon, instance.s), options);
  BoundResult res = solver.run("bqp_g", instance.offset);
  res.upsilon = upsilon;
  return res;
}

}  // namespace mesp
