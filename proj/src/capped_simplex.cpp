// SPDX-License-Identifier: Apache-2.0
#include "mesp/capped_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mesp {

namespace {

double clipped_sum(const VectorXd& y, double tau) {
  return (y.array() - tau).cwiseMax(0.0).cwiseMin(1.0).sum();
}

}  // namespace

VectorXd project_capped_simplex(const VectorXd& y, double s) {
  const int n = static_cast<int>(y.size());
  if (s < 0.0 || s > n) {
    throw MespError(ErrorKind::InvalidArgument, "capped simplex requires 0 <= s <= n");
  }
  // sum_i clip(y_i - tau, 0, 1) is non-increasing in tau; bisect for the water level.
  double lo = y.minCoeff() - 1.0;
  double hi = y.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clipped_sum(y, mid) > s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // With the active sets identified, solve for tau exactly on the free coordinates.
  double tau = 0.5 * (lo + hi);
  int n_free = 0;
  int n_ones = 0;
  double free_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = y(i) - tau;
    if (v >= 1.0) {
      ++n_ones;
    } else if (v > 0.0) {
      ++n_free;
      free_sum += y(i);
    }
  }
  if (n_free > 0) tau = (free_sum - (s - n_ones)) / n_free;
  VectorXd x = (y.array() - tau).cwiseMax(0.0).cwiseMin(1.0);
  // Absorb residual round-off into the free coordinates.
  const double excess = x.sum() - s;
  if (std::abs(excess) > 0.0 && n_free > 0) {
    for (int i = 0; i < n; ++i) {
      if (x(i) > 0.0 && x(i) < 1.0) x(i) = std::clamp(x(i) - excess / n_free, 0.0, 1.0);
    }
  }
  return x;
}

std::vector<int> top_indices(const VectorXd& v, int s) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&v](int a, int b) { return v(a) > v(b); });
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double capped_simplex_gap(const VectorXd& g, const VectorXd& x, int s) {
  double best = 0.0;
  for (int i : top_indices(g, s)) best += g(i);
  return std::max(0.0, best - g.dot(x));
}

}  // namespace mesp
