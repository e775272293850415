// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/core.hpp"

namespace mesp {

/// 0/1 D-optimal design: maximize ldet(A^T Diag(x) A) over e^T x = s.
/// Reported values are offset + ldet(...).
struct DoptInstance {
  MatrixXd A;  // n x m, full column rank
  int s = 0;
  double offset = 0.0;

  int n() const noexcept { return static_cast<int>(A.rows()); }
  int m() const noexcept { return static_cast<int>(A.cols()); }
};

/// 0/1 D-optimal data fusion: maximize ldet(B + A^T Diag(x) A) over e^T x = s.
struct DdfInstance {
  MatrixXd B;  // m x m PD
  MatrixXd A;  // n x m
  int s = 0;
  double offset = 0.0;

  int n() const noexcept { return static_cast<int>(A.rows()); }
};

/// Throws MespError(Validation) when A lacks full column rank or m <= s <= n fails.
void validate_dopt(const DoptInstance& d);

/// offset + ldet(A[S,:]^T A[S,:]).
double dopt_value(const DoptInstance& d, const Subset& S);
/// offset + ldet(B + A[S,:]^T A[S,:]).
double ddf_value(const DdfInstance& d, const Subset& S);

/// C -> C^{-1}, s -> n - s, offset += ldet C.
Instance to_complementary(const Instance& instance);

/// D-Opt -> MESP on I - U U^T with cardinality n - s; selected rows are the complement.
Instance dopt_to_mesp(const DoptInstance& d);

/// MESP whose positive eigenvalues all equal lambda_1 -> D-Opt on U with cardinality n - s.
DoptInstance mesp_to_dopt(const Instance& instance, double eq_tol = 1e-8);

/// MESP with PD C -> data fusion with B = I and A = W^T, where C / lambda_n - I = W^T W.
DdfInstance mesp_to_ddf(const Instance& instance);

}  // namespace mesp
