// SPDX-License-Identifier: Apache-2.0
#include "mesp/exact.hpp"

#include "mesp/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mesp {

namespace {

std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  k = std::min(k, n - k);
  long double acc = 1.0L;
  for (int i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > static_cast<long double>(cap) * 2.0L) return cap + 1;
  }
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(acc)));
}

}  // namespace

ExactResult brute_force(const Instance& instance, std::uint64_t cap) {
  const int n = instance.n();
  const int s = instance.s;
  if (s <= 0 || s > n) {
    throw MespError(ErrorKind::InvalidArgument, "brute_force requires 0 < s <= n");
  }
  if (binomial_capped(n, s, cap) > cap) {
    throw MespError(ErrorKind::ResourceCap,
                    "brute_force: C(" + std::to_string(n) + "," + std::to_string(s) +
                        ") exceeds the enumeration cap of " + std::to_string(cap));
  }
  const MatrixXd& C = instance.C;

  // Lexicographic enumeration with a Cholesky factor of the current subset whose rows are
  // recomputed only from the first position that changed. Pivots are judged against the
  // largest diagonal of the subset, matching ldet_submatrix.
  std::vector<int> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  MatrixXd L = MatrixXd::Zero(s, s);
  std::vector<double> prefix_ldet(s + 1, 0.0);
  std::vector<double> prefix_min_pivot(s + 1, std::numeric_limits<double>::infinity());
  int valid_rows = 0;

  ExactResult best;
  while (true) {
    for (int p = valid_rows; p < s; ++p) {
      double pivot = 0.0;
      for (int q = 0; q <= p; ++q) {
        double v = C(idx[p], idx[q]);
        for (int r = 0; r < q; ++r) v -= L(p, r) * L(q, r);
        if (q < p) {
          L(p, q) = v / L(q, q);
        } else {
          pivot = v;
        }
      }
      if (!(pivot > 0.0)) break;
      L(p, p) = std::sqrt(pivot);
      prefix_ldet[p + 1] = prefix_ldet[p] + std::log(pivot);
      prefix_min_pivot[p + 1] = std::min(prefix_min_pivot[p], pivot);
      valid_rows = p + 1;
    }
    double value = kNegInf;
    if (valid_rows == s) {
      double scale = 0.0;
      for (int p = 0; p < s; ++p) scale = std::max(scale, std::abs(C(idx[p], idx[p])));
      if (prefix_min_pivot[s] > tol::kSingular * scale) value = prefix_ldet[s];
    }
    if (value > best.value) {
      best.value = value;
      best.subset = Subset(idx, n);
    }

    int i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    valid_rows = std::min(valid_rows, i);
  }
  if (best.value > kNegInf) best.value += instance.offset;
  return best;
}

double tridiag_det(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t r = a.size();
  if (r == 0) return 1.0;
  if (b.size() + 1 != r) {
    throw MespError(ErrorKind::InvalidArgument, "tridiag_det: b must have length r-1");
  }
  double prev2 = 1.0;  // det T_0
  double prev1 = a[0];
  for (std::size_t k = 1; k < r; ++k) {
    const double cur = a[k] * prev1 - b[k - 1] * b[k - 1] * prev2;
    prev2 = prev1;
    prev1 = cur;
  }
  return prev1;
}

bool is_tridiagonal(const MatrixXd& C) {
  const double cutoff = tol::kSym * std::max(1.0, max_abs_entry(C));
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      if (std::abs(i - j) > 1 && std::abs(C(i, j)) > cutoff) return false;
    }
  }
  return true;
}

TridiagonalDp::TridiagonalDp(const Instance& instance) : n_(instance.n()), s_(instance.s) {
  if (s_ <= 0 || s_ > n_) {
    throw MespError(ErrorKind::InvalidArgument, "tridiagonal DP requires 0 < s <= n");
  }
  if (!is_tridiagonal(instance.C)) {
    throw MespError(ErrorKind::InvalidArgument, "solve_tridiagonal: matrix is not tridiagonal");
  }
  const MatrixXd& C = instance.C;
  piece_.assign(static_cast<std::size_t>(n_) * n_, kNegInf);

  // Piece log-determinants from the three-term recursion, run as the ratio
  // det T_r / det T_{r-1} = a_r - b_{r-1}^2 det T_{r-2} / det T_{r-1} to avoid overflow.
  for (int k = 0; k < n_; ++k) {
    double ldet = 0.0;
    double ratio = 0.0;  // det T_{r-1} / det T_{r-2}
    double scale = 0.0;
    for (int l = k; l < n_ && l - k + 1 <= s_; ++l) {
      scale = std::max(scale, std::abs(C(l, l)));
      const double q = l == k ? C(l, l) : C(l, l) - C(l, l - 1) * C(l, l - 1) / ratio;
      if (!(q > tol::kSingular * scale) || !(scale > 0.0)) break;  // longer pieces singular too
      ldet += std::log(q);
      ratio = q;
      piece_[static_cast<std::size_t>(k) * n_ + l] = ldet;
    }
  }

  cells_.assign(static_cast<std::size_t>(n_) * n_ * (s_ + 1), DpCell{});
  for (int k = 0; k < n_; ++k) {
    for (int l = k; l < n_; ++l) {
      for (int t = 0; t <= s_; ++t) {
        DpCell& c = cells_[index(k, l, t)];
        c.first = k;
        c.last = l;
        c.t = t;
      }
    }
  }

  // running[m][t] = best cell f(i, j, t) over j <= m, kept as (value, i, j).
  struct Best {
    double value = kNegInf;
    int first = -1;
    int last = -1;
  };
  std::vector<Best> running(static_cast<std::size_t>(n_) * (s_ + 1));
  auto run = [&](int m, int t) -> Best& { return running[static_cast<std::size_t>(m) * (s_ + 1) + t]; };

  for (int t = 1; t <= s_; ++t) {
    for (int k = 0; k < n_; ++k) {
      for (int l = k; l < n_ && l - k + 1 <= t; ++l) {
        const int len = l - k + 1;
        const double piece = piece_ldet(k, l);
        DpCell& c = cells_[index(k, l, t)];
        if (piece == kNegInf) continue;
        if (len == t) {
          c.value = piece;
          continue;
        }
        if (k < 2) continue;
        const Best& pred = run(k - 2, t - len);
        if (pred.value == kNegInf) continue;
        c.value = piece + pred.value;
        c.prev_first = pred.first;
        c.prev_last = pred.last;
      }
    }
    for (int m = 0; m < n_; ++m) {
      Best b = m > 0 ? run(m - 1, t) : Best{};
      for (int i = 0; i <= m; ++i) {
        const DpCell& c = cells_[index(i, m, t)];
        if (c.value > b.value) b = Best{c.value, i, m};
      }
      run(m, t) = b;
    }
  }

  for (int k = 0; k < n_; ++k) {
    for (int l = k; l < n_ && l - k + 1 <= s_; ++l) {
      const double v = cells_[index(k, l, s_)].value;
      if (v > best_value_) {
        best_value_ = v;
        best_first_ = k;
        best_last_ = l;
      }
    }
  }
}

std::size_t TridiagonalDp::index(int first, int last, int t) const {
  return (static_cast<std::size_t>(t) * n_ + first) * n_ + last;
}

double TridiagonalDp::piece_ldet(int first, int last) const {
  return piece_[static_cast<std::size_t>(first) * n_ + last];
}

const DpCell& TridiagonalDp::cell(int first, int last, int t) const {
  if (first < 0 || last < first || last >= n_ || t < 0 || t > s_) return empty_;
  return cells_[index(first, last, t)];
}

Subset TridiagonalDp::argmax() const {
  std::vector<int> out;
  if (best_first_ < 0) return {};
  int k = best_first_;
  int l = best_last_;
  int t = s_;
  while (k >= 0) {
    const DpCell& c = cells_[index(k, l, t)];
    for (int i = k; i <= l; ++i) out.push_back(i);
    t -= l - k + 1;
    k = c.prev_first;
    l = c.prev_last;
  }
  return Subset(std::move(out), n_);
}

ExactResult solve_tridiagonal(const Instance& instance) {
  TridiagonalDp dp(instance);
  ExactResult res;
  if (dp.optimum() == kNegInf) return res;
  res.value = dp.optimum() + instance.offset;
  res.subset = dp.argmax();
  return res;
}

std::optional<std::vector<int>> detect_tridiagonal_permutation(const MatrixXd& C) {
  const int n = static_cast<int>(C.rows());
  const double cutoff = tol::kSym * std::max(1.0, max_abs_entry(C));
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(C(i, j)) > cutoff || std::abs(C(j, i)) > cutoff) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  for (const auto& a : adj) {
    if (a.size() > 2) return std::nullopt;
  }

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    // Collect the component to find its endpoints; a path has |E| = |V| - 1.
    std::vector<int> comp{root};
    seen[root] = 1;
    std::size_t degree_sum = 0;
    for (std::size_t h = 0; h < comp.size(); ++h) {
      degree_sum += adj[comp[h]].size();
      for (int nb : adj[comp[h]]) {
        if (!seen[nb]) {
          seen[nb] = 1;
          comp.push_back(nb);
        }
      }
    }
    if (degree_sum / 2 != comp.size() - 1) return std::nullopt;  // cycle
    int start = -1;
    for (int v : comp) {
      if (adj[v].size() <= 1 && (start < 0 || v < start)) start = v;
    }
    int prev = -1;
    int cur = start;
    while (cur >= 0) {
      order.push_back(cur);
      int next = -1;
      for (int nb : adj[cur]) {
        if (nb != prev) next = nb;
      }
      prev = cur;
      cur = next;
    }
  }
  return order;
}

MatrixXd permute_symmetric(const MatrixXd& C, const std::vector<int>& perm) {
  return principal(C, perm);
}

std::optional<ExactResult> solve_structured(const Instance& instance) {
  const int n = instance.n();
  auto map_back = [n](const Subset& sub, const std::vector<int>& perm) {
    std::vector<int> orig;
    orig.reserve(sub.size());
    for (int p : sub.indices()) orig.push_back(perm[p]);
    return Subset(std::move(orig), n);
  };

  if (auto perm = detect_tridiagonal_permutation(instance.C)) {
    Instance permuted = instance;
    permuted.C = permute_symmetric(instance.C, *perm);
    permuted.F.reset();
    ExactResult res = solve_tridiagonal(permuted);
    if (!res.subset.empty()) res.subset = map_back(res.subset, *perm);
    return res;
  }

  SpectralCache spec(instance.C);
  if (spec.values()(n - 1) <= tol::kSingular * spec.max_abs()) return std::nullopt;
  Instance comp = to_complementary(instance);
  auto perm = detect_tridiagonal_permutation(comp.C);
  if (!perm) return std::nullopt;
  Instance permuted = comp;
  permuted.C = permute_symmetric(comp.C, *perm);
  ExactResult res = solve_tridiagonal(permuted);
  if (res.subset.empty()) return res;
  res.subset = map_back(res.subset, *perm).complement(n);
  return res;
}

}  // namespace mesp
