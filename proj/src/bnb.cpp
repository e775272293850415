// SPDX-License-Identifier: Apache-2.0
#include "mesp/bnb.hpp"

#include "mesp/capped_simplex.hpp"
#include "mesp/fact_bound.hpp"
#include "mesp/reductions.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <queue>
#include <random>

namespace mesp {

namespace {

constexpr double kFracTol = 1e-6;

double diag_scale(const MatrixXd& C) {
  return C.rows() > 0 ? C.diagonal().cwiseAbs().maxCoeff() : 0.0;
}

// Greedy forward selection by conditional variance, optionally forcing the first pick.
std::optional<std::vector<int>> greedy_path(const MatrixXd& C, int s, int first) {
  const int n = static_cast<int>(C.rows());
  const double cutoff = tol::kSingular * std::max(diag_scale(C), 1e-300);
  std::vector<int> S;
  std::vector<char> in(n, 0);
  if (first >= 0) {
    if (!(C(first, first) > cutoff)) return std::nullopt;
    S.push_back(first);
    in[first] = 1;
  }
  while (static_cast<int>(S.size()) < s) {
    const MatrixXd CS = principal(C, S);
    Eigen::LLT<MatrixXd> llt(CS);
    int best = -1;
    double best_v = cutoff;
    for (int i = 0; i < n; ++i) {
      if (in[i]) continue;
      double v = C(i, i);
      if (!S.empty()) {
        VectorXd c(S.size());
        for (std::size_t k = 0; k < S.size(); ++k) c(static_cast<Eigen::Index>(k)) = C(S[k], i);
        v -= c.dot(llt.solve(c));
      }
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    if (best < 0) return std::nullopt;
    S.push_back(best);
    in[best] = 1;
  }
  std::sort(S.begin(), S.end());
  return S;
}

void local_search(const MatrixXd& C, std::vector<int>& S, double& value) {
  const int n = static_cast<int>(C.rows());
  for (int pass = 0; pass < 1000; ++pass) {
    std::vector<char> in(n, 0);
    for (int i : S) in[i] = 1;
    double best = value;
    std::vector<int> best_set;
    for (std::size_t p = 0; p < S.size(); ++p) {
      for (int j = 0; j < n; ++j) {
        if (in[j]) continue;
        std::vector<int> T = S;
        T[p] = j;
        const double v = ldet_submatrix(C, Subset(T, n));
        if (v > best + 1e-12 * std::max(1.0, std::abs(best))) {
          best = v;
          best_set = T;
        }
      }
    }
    if (best_set.empty()) return;
    std::sort(best_set.begin(), best_set.end());
    S = best_set;
    value = best;
  }
}

MatrixXd delete_index(const MatrixXd& C, int p) {
  const Eigen::Index n = C.rows();
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    if (i != p) keep.push_back(i);
  }
  return principal(C, keep);
}

int position_of(const std::vector<int>& v, int j) {
  auto it = std::find(v.begin(), v.end(), j);
  if (it == v.end()) throw MespError(ErrorKind::InvalidArgument, "branch: index not remaining");
  return static_cast<int>(it - v.begin());
}

Incumbent completion(const BnbNode& node, const std::vector<int>& local, double value) {
  std::vector<int> orig = node.S1;
  for (int p : local) orig.push_back(node.remaining[p]);
  const int n = static_cast<int>(node.S1.size() + node.S0.size() + node.remaining.size());
  return Incumbent{Subset(std::move(orig), n), value};
}

struct Evaluated {
  BnbNode node;
  bool prune = false;
  VectorXd x;
  VectorXd gradient;
  std::vector<Incumbent> candidates;
  std::int64_t bound_evaluations = 0;
  std::int64_t fixed = 0;
  std::vector<std::string> flags;
};

// Leaf when no choice remains; returns true if handled.
bool evaluate_leaf(Evaluated& ev) {
  const Instance& r = ev.node.reduced;
  const int n = r.n();
  const int s = r.s;
  if (s != 0 && s != n) return false;
  std::vector<int> all(static_cast<std::size_t>(s));
  std::iota(all.begin(), all.end(), 0);
  const double value = s == 0 ? r.offset : r.offset + ldet_pd(r.C);
  ev.node.raw_bound = value;
  ev.node.bound = std::min(ev.node.bound, value);
  if (value > kNegInf) ev.candidates.push_back(completion(ev.node, all, value));
  ev.prune = true;
  return true;
}

void apply_fixing(BnbNode& node, const std::vector<int>& to_one, const std::vector<int>& to_zero,
                  bool& infeasible) {
  // Translate local positions to original indices first; positions shift as we shrink.
  std::vector<int> ones;
  std::vector<int> zeros;
  for (int p : to_one) ones.push_back(node.remaining[p]);
  for (int p : to_zero) zeros.push_back(node.remaining[p]);
  for (int j : zeros) {
    auto [in, out] = branch(node, j);
    if (!out) {
      infeasible = true;
      return;
    }
    node = std::move(*out);
  }
  for (int j : ones) {
    auto [in, out] = branch(node, j);
    if (!in) {
      infeasible = true;
      return;
    }
    node = std::move(*in);
  }
}

Evaluated evaluate_node(BnbNode node, const BnbConfig& cfg, double incumbent) {
  Evaluated ev;
  ev.node = std::move(node);
  const int depth = ev.node.depth;
  const double parent_bound = ev.node.bound;

  for (int round = 0; round < 5; ++round) {
    if (evaluate_leaf(ev)) return ev;
    const Instance& r = ev.node.reduced;
    const int n = r.n();
    const int s = r.s;
    if (SpectralCache(r.C).rank() < s) {
      ev.node.raw_bound = kNegInf;
      ev.node.bound = kNegInf;
      ev.prune = true;
      return ev;
    }

    BoundResult b;
    try {
      b = compute_bound(cfg.bound, cfg.scaling, r, cfg.options);
    } catch (const MespError& e) {
      if (e.kind() != ErrorKind::Numerical) throw;
      b.value = std::numeric_limits<double>::infinity();
      b.x = VectorXd::Constant(n, static_cast<double>(s) / n);
      b.gradient = VectorXd::Zero(n);
      ev.flags.push_back("bound_failure");
    }
    ++ev.bound_evaluations;
    double bound = b.value;
    if (cfg.complementary && n - s < s) {
      try {
        const Instance comp = to_complementary(r);
        bound = std::min(bound, compute_bound(cfg.bound, cfg.scaling, comp, cfg.options).value);
        ++ev.bound_evaluations;
      } catch (const MespError& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
      }
    }

    std::optional<DualCertificate> cert = b.certificate;
    if (cfg.fixing && !cert) {
      BoundResult d = ddfact_bound(r, cfg.options.fact);
      ++ev.bound_evaluations;
      bound = std::min(bound, d.value);
      cert = d.certificate;
    }
    ev.node.raw_bound = bound;
    ev.node.bound = std::min(parent_bound, std::min(ev.node.bound, bound));
    ev.x = b.x.size() == n ? b.x : VectorXd::Constant(n, static_cast<double>(s) / n);
    ev.gradient = b.gradient.size() == n ? b.gradient : VectorXd::Zero(n);

    // Rounding candidate: top-s' coordinates of the relaxation point.
    VectorXd key = ev.x + 1e-9 * ev.gradient.cwiseAbs().cwiseMin(1.0);
    const std::vector<int> top = top_indices(key, s);
    const double v = ldet_submatrix(r.C, Subset(top, n));
    if (v > kNegInf) ev.candidates.push_back(completion(ev.node, top, r.offset + v));

    double lb = incumbent;
    for (const auto& c : ev.candidates) lb = std::max(lb, c.value);
    if (ev.node.bound <= lb + cfg.prune_tol) {
      ev.prune = true;
      return ev;
    }
    if (!cfg.fixing || !cert || lb == kNegInf) return ev;

    const double zeta = cert->objective;
    const double local_lb = lb - r.offset;
    if (local_lb > zeta) {
      ev.prune = true;
      return ev;
    }
    const FixReport fix = variable_fix(zeta, local_lb, *cert, cfg.options.fact.fix_safety);
    if (fix.fixed_to_one.empty() && fix.fixed_to_zero.empty()) return ev;
    if (static_cast<int>(fix.fixed_to_one.size()) > s ||
        n - static_cast<int>(fix.fixed_to_zero.size()) < s) {
      ev.prune = true;
      return ev;
    }
    bool infeasible = false;
    apply_fixing(ev.node, fix.fixed_to_one, fix.fixed_to_zero, infeasible);
    ev.fixed += static_cast<std::int64_t>(fix.fixed_to_one.size() + fix.fixed_to_zero.size());
    ev.node.depth = depth;
    if (infeasible) {
      ev.prune = true;
      return ev;
    }
  }
  return ev;
}

int choose_branch(const Evaluated& ev) {
  const VectorXd& x = ev.x;
  int best = -1;
  double best_frac = 2.0;
  double best_grad = -1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) <= kFracTol || x(i) >= 1.0 - kFracTol) continue;
    const double frac = std::abs(x(i) - 0.5);
    const double g = std::abs(ev.gradient(i));
    if (frac < best_frac - 1e-9 || (std::abs(frac - best_frac) <= 1e-9 && g > best_grad)) {
      best = static_cast<int>(i);
      best_frac = frac;
      best_grad = g;
    }
  }
  if (best < 0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double g = std::abs(ev.gradient(i));
      if (g > best_grad) {
        best = static_cast<int>(i);
        best_grad = g;
      }
    }
  }
  return ev.node.remaining[std::max(best, 0)];
}

struct Queued {
  BnbNode node;
  std::int64_t id = 0;
};

}  // namespace

Incumbent greedy_local_search(const Instance& instance, std::uint64_t seed) {
  const int n = instance.n();
  const int s = instance.s;
  if (s <= 0 || s > n) throw MespError(ErrorKind::InvalidArgument, "greedy: requires 0 < s <= n");
  std::optional<std::vector<int>> S = greedy_path(instance.C, s, -1);
  if (!S) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int r = 0; r < 10 && !S; ++r) S = greedy_path(instance.C, s, pick(rng));
  }
  if (!S) {
    std::vector<int> first(static_cast<std::size_t>(s));
    std::iota(first.begin(), first.end(), 0);
    return Incumbent{Subset(first, n), kNegInf};
  }
  double value = ldet_submatrix(instance.C, Subset(*S, n));
  local_search(instance.C, *S, value);
  return Incumbent{Subset(*S, n), value == kNegInf ? kNegInf : value + instance.offset};
}

BnbNode BnbNode::root(const Instance& instance) {
  BnbNode node;
  node.remaining.resize(static_cast<std::size_t>(instance.n()));
  std::iota(node.remaining.begin(), node.remaining.end(), 0);
  node.reduced = instance;
  return node;
}

std::pair<std::optional<BnbNode>, std::optional<BnbNode>> branch(const BnbNode& node, int j) {
  const int p = position_of(node.remaining, j);
  const MatrixXd& C = node.reduced.C;
  const int n = node.reduced.n();
  const int s = node.reduced.s;

  std::optional<BnbNode> in;
  const double pivot = C(p, p);
  if (s >= 1 && pivot > tol::kSingular * std::max(diag_scale(C), 1e-300)) {
    BnbNode child;
    child.S1 = node.S1;
    child.S1.push_back(j);
    std::sort(child.S1.begin(), child.S1.end());
    child.S0 = node.S0;
    child.remaining = node.remaining;
    child.remaining.erase(child.remaining.begin() + p);
    MatrixXd schur = C - C.col(p) * C.row(p) / pivot;
    schur = delete_index(schur, p);
    child.reduced = Instance(0.5 * (schur + schur.transpose()), s - 1, node.reduced.label);
    child.reduced.offset = node.reduced.offset + std::log(pivot);
    child.bound = node.bound;
    child.depth = node.depth + 1;
    in = std::move(child);
  }

  std::optional<BnbNode> out;
  if (n - 1 >= s) {
    BnbNode child;
    child.S1 = node.S1;
    child.S0 = node.S0;
    child.S0.push_back(j);
    std::sort(child.S0.begin(), child.S0.end());
    child.remaining = node.remaining;
    child.remaining.erase(child.remaining.begin() + p);
    child.reduced = Instance(delete_index(C, p), s, node.reduced.label);
    child.reduced.offset = node.reduced.offset;
    child.bound = node.bound;
    child.depth = node.depth + 1;
    out = std::move(child);
  }
  return {std::move(in), std::move(out)};
}

BnbResult solve_bnb(const Instance& instance, const BnbConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  require_valid(instance);
  if (config.workers < 1) throw MespError(ErrorKind::InvalidArgument, "bnb: workers must be >= 1");

  BnbResult res;
  Incumbent inc = greedy_local_search(instance, config.seed);

  auto lower = [](const Queued& a, const Queued& b) {
    if (a.node.bound != b.node.bound) return a.node.bound < b.node.bound;
    return a.id > b.id;
  };
  std::priority_queue<Queued, std::vector<Queued>, decltype(lower)> heap(lower);
  std::vector<Queued> stack;
  std::int64_t next_id = 0;
  auto push = [&](BnbNode n) {
    Queued q{std::move(n), next_id++};
    if (config.order == NodeOrder::BestFirst) {
      heap.push(std::move(q));
    } else {
      stack.push_back(std::move(q));
    }
  };
  auto empty = [&] { return config.order == NodeOrder::BestFirst ? heap.empty() : stack.empty(); };
  auto pop = [&] {
    Queued q;
    if (config.order == NodeOrder::BestFirst) {
      q = heap.top();
      heap.pop();
    } else {
      q = std::move(stack.back());
      stack.pop_back();
    }
    return q;
  };

  push(BnbNode::root(instance));
  bool capped = false;
  while (!empty()) {
    if (res.stats.nodes >= config.max_nodes) {
      res.flags.push_back("node_limit");
      capped = true;
      break;
    }
    if (elapsed() > config.max_seconds) {
      res.flags.push_back("time_limit");
      capped = true;
      break;
    }
    std::vector<BnbNode> batch;
    while (!empty() && static_cast<int>(batch.size()) < config.workers) {
      Queued q = pop();
      if (q.node.bound <= inc.value + config.prune_tol) continue;
      batch.push_back(std::move(q.node));
    }
    if (batch.empty()) continue;

    std::vector<Evaluated> done;
    if (batch.size() == 1) {
      done.push_back(evaluate_node(std::move(batch[0]), config, inc.value));
    } else {
      std::vector<std::future<Evaluated>> futures;
      for (auto& node : batch) {
        futures.push_back(std::async(std::launch::async, evaluate_node, std::move(node),
                                     std::cref(config), inc.value));
      }
      for (auto& f : futures) done.push_back(f.get());
    }

    for (Evaluated& ev : done) {
      ++res.stats.nodes;
      res.stats.bound_evaluations += ev.bound_evaluations;
      res.stats.fixed_variables += ev.fixed;
      res.stats.max_depth = std::max(res.stats.max_depth, ev.node.depth);
      if (res.stats.nodes == 1) res.stats.root_bound = ev.node.bound;
      for (auto& f : ev.flags) {
        if (std::find(res.flags.begin(), res.flags.end(), f) == res.flags.end()) res.flags.push_back(f);
      }
      for (auto& c : ev.candidates) {
        if (c.value > inc.value) inc = c;
      }
      if (ev.prune || ev.node.bound <= inc.value + config.prune_tol) continue;
      const int j = choose_branch(ev);
      auto [in, out] = branch(ev.node, j);
      if (config.order == NodeOrder::DepthFirst) {
        if (out) push(std::move(*out));
        if (in) push(std::move(*in));
      } else {
        if (in) push(std::move(*in));
        if (out) push(std::move(*out));
      }
    }
  }
  res.subset = inc.subset;
  res.value = inc.value;
  res.optimal = !capped;
  res.stats.wall_seconds = elapsed();
  return res;
}

}  // namespace mesp
