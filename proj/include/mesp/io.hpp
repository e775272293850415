// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mesp/bnb.hpp"
#include "mesp/bound.hpp"
#include "mesp/core.hpp"
#include "mesp/exact.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace mesp {

using nlohmann::json;

enum class MatrixFormat { Auto, MatrixMarket, Csv };

/// Reads any real matrix (Matrix Market coordinate/array, general/symmetric, or dense CSV).
MatrixXd read_dense_matrix(const std::string& path, MatrixFormat format = MatrixFormat::Auto);

/// Reads a square matrix and symmetrizes it; throws Validation when asymmetric beyond kSym.
MatrixXd read_matrix(const std::string& path, MatrixFormat format = MatrixFormat::Auto);

/// Symmetric matrices are written as the coordinate lower triangle, others as general arrays.
void write_matrix_market(const MatrixXd& M, const std::string& path, const std::string& comment = {});
void write_csv(const MatrixXd& M, const std::string& path);

/// `inst.mtx` -> `inst.json`.
std::string sidecar_path(const std::string& matrix_path);

/// Matrix plus sidecar metadata (s, offset, label). An explicit s overrides the sidecar.
Instance read_instance(const std::string& path, std::optional<int> s = std::nullopt);
void write_instance(const Instance& instance, const std::string& path, const json& extra = {});

json subset_json(const Subset& S);
json bound_report(const Instance& instance, const BoundResult& result);
json exact_report(const Instance& instance, const ExactResult& result, const std::string& method);
json fix_report(const FixReport& report, double zeta, double lb);
json bnb_report(const Instance& instance, const BnbResult& result, const BnbConfig& config);

/// Writes pretty-printed JSON; throws Io on failure.
void write_report(const json& report, const std::string& path);

/// Keys: bound, scaling, fixing, nodeOrder, maxNodes, maxSeconds, workers (all optional).
BnbConfig bnb_config_from_json(const json& j, BnbConfig base = {});

}  // namespace mesp
