// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"
#include "mesp/scaling.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace mesp {

struct Incumbent {
  Subset subset;
  /// offset + ldet C[subset, subset].
  double value = kNegInf;
};

/// Greedy forward selection on conditional variances, then best-improvement 1-swaps.
/// Singular greedy paths restart from seeded random first picks (up to 10 restarts).
Incumbent greedy_local_search(const Instance& instance, std::uint64_t seed = 0);

/// Subproblem with S1 forced in and S0 forced out. `reduced` is indexed by `remaining`
/// (original indices) and its offset carries the instance offset plus log pivots of S1, so
/// ldet C[S,S] + offset = reduced.offset + ldet reduced[S \ S1] for every completion S.
struct BnbNode {
  std::vector<int> S1;
  std::vector<int> S0;
  std::vector<int> remaining;
  Instance reduced;
  /// Bound used for pruning: min of this node's bound and its parent's.
  double bound = std::numeric_limits<double>::infinity();
  /// Bound computed on this node's reduced instance alone.
  double raw_bound = std::numeric_limits<double>::infinity();
  int depth = 0;

  static BnbNode root(const Instance& instance);
  double offset() const noexcept { return reduced.offset; }
};

/// Children for original index j: first has j in S1 (nullopt when the pivot is singular),
/// second has j in S0 (nullopt when too few indices would remain).
std::pair<std::optional<BnbNode>, std::optional<BnbNode>> branch(const BnbNode& node, int j);

enum class NodeOrder { BestFirst, DepthFirst };

struct BnbConfig {
  BoundKind bound = BoundKind::Ddfact;
  ScalingMode scaling = ScalingMode::None;
  bool fixing = false;
  NodeOrder order = NodeOrder::BestFirst;
  std::int64_t max_nodes = 1'000'000;
  double max_seconds = 3600.0;
  int workers = 1;
  double prune_tol = 1e-7;
  /// Also bound through the complementary instance when n' - s' < s'.
  bool complementary = false;
  std::uint64_t seed = 0;
  BoundOptions options;
};

struct BnbStats {
  std::int64_t nodes = 0;
  std::int64_t bound_evaluations = 0;
  std::int64_t fixed_variables = 0;
  int max_depth = 0;
  double root_bound = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
};

struct BnbResult {
  Subset subset;
  double value = kNegInf;
  bool optimal = false;
  std::vector<std::string> flags;
  BnbStats stats;
};

BnbResult solve_bnb(const Instance& instance, const BnbConfig& config = {});

}  // namespace mesp
