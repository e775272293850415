// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bnb.hpp"
#include "mesp/generate.hpp"
#include "mesp/scaling.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace mesp {

enum class Command { Exact, Bound, Fix, Solve, Reduce, Gen };

enum class ExitCode : int { Ok = 0, Validation = 2, ResourceCap = 3, Numerical = 4 };

struct RunConfig {
  Command command = Command::Bound;
  std::string instance;
  std::optional<int> s;
  BoundKind kind = BoundKind::Ddfact;
  ScalingMode scaling = ScalingMode::None;
  std::string mask;
  /// Report path; matrix path for gen and reduce. Empty prints the report to stdout.
  std::string out;
  std::uint64_t seed = 0;
  std::optional<double> incumbent;

  // exact
  bool tridiag = false;
  std::uint64_t enumeration_cap = 2'000'000;

  // solve
  std::string solver_config;
  std::optional<bool> fixing;
  std::optional<NodeOrder> node_order;
  std::optional<std::int64_t> max_nodes;
  std::optional<double> max_seconds;
  std::optional<int> workers;

  // reduce: complement | dopt-to-mesp | mesp-to-dopt | mesp-to-ddf
  std::string direction = "complement";

  // gen
  GenOptions gen;
};

int exit_code(ErrorKind kind);

/// Executes one command. Writes the human summary to `out`, and the JSON report to `config.out`
/// (or to `out` after the summary). Library errors map onto exit codes and go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv into a RunConfig and runs it.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mesp
