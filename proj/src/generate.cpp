// SPDX-License-Identifier: Apache-2.0
#include "mesp/generate.hpp"

#include <cmath>
#include <random>

namespace mesp {

namespace {

std::mt19937_64 stream(std::uint64_t seed, Family family) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(family)};
  return std::mt19937_64(seq);
}

MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixXd A(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) A(i, j) = normal(rng);
  return A;
}

void check_sizes(const GenOptions& o) {
  if (o.n < 1) throw MespError(ErrorKind::InvalidArgument, "generator: n must be positive");
  if (o.s < 1 || o.s > o.n)
    throw MespError(ErrorKind::InvalidArgument, "generator: s must satisfy 1 <= s <= n");
}

MatrixXd randpd(const GenOptions& o, std::mt19937_64& rng) {
  const MatrixXd A = gaussian(o.n, 2 * o.n, rng);
  MatrixXd C = A * A.transpose() / (2.0 * o.n);
  if (o.condition > 0.0) {
    if (o.condition < 1.0)
      throw MespError(ErrorKind::InvalidArgument, "generator: condition must be >= 1");
    const SpectralCache spec(C);
    VectorXd lambda(o.n);
    for (int i = 0; i < o.n; ++i) {
      const double t = o.n == 1 ? 0.0 : static_cast<double>(i) / (o.n - 1);
      lambda(i) = std::pow(o.condition, -t);
    }
    C = spec.vectors() * lambda.asDiagonal() * spec.vectors().transpose();
  }
  return 0.5 * (C + C.transpose());
}

MatrixXd tridiag(const GenOptions& o, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(-1.0, 1.0), margin(0.1, 1.1);
  MatrixXd C = MatrixXd::Zero(o.n, o.n);
  for (int i = 0; i + 1 < o.n; ++i) C(i, i + 1) = C(i + 1, i) = off(rng);
  for (int i = 0; i < o.n; ++i) {
    double row = margin(rng);
    if (i > 0) row += std::abs(C(i, i - 1));
    if (i + 1 < o.n) row += std::abs(C(i, i + 1));
    C(i, i) = row;
  }
  return C;
}

MatrixXd lowrank(const GenOptions& o, std::mt19937_64& rng) {
  const int r = o.rank == 0 ? o.s : o.rank;
  if (r < o.s) throw MespError(ErrorKind::InvalidArgument, "generator: rank must be at least s");
  if (r > o.n) throw MespError(ErrorKind::InvalidArgument, "generator: rank must be at most n");
  const MatrixXd A = gaussian(o.n, r, rng);
  const MatrixXd C = A * A.transpose() / static_cast<double>(r);
  return 0.5 * (C + C.transpose());
}

}  // namespace

Family parse_family(const std::string& s) {
  if (s == "randpd") return Family::RandPd;
  if (s == "tridiag") return Family::Tridiag;
  if (s == "lowrank") return Family::LowRank;
  if (s == "dopt") return Family::Dopt;
  throw MespError(ErrorKind::InvalidArgument, "unknown family '" + s + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::RandPd: return "randpd";
    case Family::Tridiag: return "tridiag";
    case Family::LowRank: return "lowrank";
    case Family::Dopt: return "dopt";
  }
  return "unknown";
}

Instance generate_instance(const GenOptions& o) {
  check_sizes(o);
  std::mt19937_64 rng = stream(o.seed, o.family);
  MatrixXd C;
  switch (o.family) {
    case Family::RandPd: C = randpd(o, rng); break;
    case Family::Tridiag: C = tridiag(o, rng); break;
    case Family::LowRank: C = lowrank(o, rng); break;
    case Family::Dopt: return dopt_to_mesp(generate_dopt(o));
  }
  return Instance(std::move(C), o.s,
                  to_string(o.family) + "-n" + std::to_string(o.n) + "-seed" + std::to_string(o.seed));
}

DoptInstance generate_dopt(const GenOptions& o) {
  check_sizes(o);
  const int m = o.m == 0 ? std::max(1, o.s / 2) : o.m;
  if (m < 1 || m > o.s) throw MespError(ErrorKind::InvalidArgument, "generator: m must satisfy 1 <= m <= s");
  std::mt19937_64 rng = stream(o.seed, Family::Dopt);
  DoptInstance d;
  d.s = o.s;
  for (int attempt = 0; attempt < 10; ++attempt) {
    d.A = gaussian(o.n, m, rng);
    try {
      validate_dopt(d);
      return d;
    } catch (const MespError&) {
    }
  }
  throw MespError(ErrorKind::Numerical, "generator: could not draw a full-rank design");
}

}  // namespace mesp
