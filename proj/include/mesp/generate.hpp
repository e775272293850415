// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"
#include "mesp/reductions.hpp"

#include <cstdint>
#include <string>

namespace mesp {

enum class Family { RandPd, Tridiag, LowRank, Dopt };

Family parse_family(const std::string& s);
std::string to_string(Family f);

struct GenOptions {
  Family family = Family::RandPd;
  int n = 10;
  int s = 5;
  std::uint64_t seed = 0;
  /// randpd: target condition number; 0 keeps the natural Gram spectrum.
  double condition = 0.0;
  /// lowrank: rank r (0 means r = s); must satisfy s <= r <= n.
  int rank = 0;
  /// dopt: columns m (0 means max(1, s / 2)); must satisfy m <= s.
  int m = 0;
};

/// Covariance instance for randpd, tridiag and lowrank. Deterministic in (options, seed).
Instance generate_instance(const GenOptions& options);

/// Gaussian A with full column rank (redrawn up to 10 times).
DoptInstance generate_dopt(const GenOptions& options);

}  // namespace mesp
