// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"

#include <vector>

namespace mesp {

/// Euclidean projection onto {x : e^T x = s, 0 <= x <= 1}.
VectorXd project_capped_simplex(const VectorXd& y, double s);

/// Indices of the s largest entries (ties to the smaller index), sorted ascending.
std::vector<int> top_indices(const VectorXd& v, int s);

/// max over vertices v of g^T (v - x): the linear-maximization gap on the capped simplex.
double capped_simplex_gap(const VectorXd& g, const VectorXd& x, int s);

}  // namespace mesp
