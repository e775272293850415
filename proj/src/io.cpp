// SPDX-License-Identifier: Apache-2.0
#include "mesp/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mesp {

namespace {

[[noreturn]] void io_error(const std::string& path, const std::string& what) {
  throw MespError(ErrorKind::Io, path + ": " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

MatrixFormat resolve(const std::string& path, MatrixFormat format) {
  if (format != MatrixFormat::Auto) return format;
  const std::string ext = lower(std::filesystem::path(path).extension().string());
  if (ext == ".csv" || ext == ".txt") return MatrixFormat::Csv;
  return MatrixFormat::MatrixMarket;
}

double parse_number(const std::string& token, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) io_error(path, "bad number '" + token + "'");
    return v;
  } catch (const std::invalid_argument&) {
    io_error(path, "bad number '" + token + "'");
  } catch (const std::out_of_range&) {
    io_error(path, "number out of range '" + token + "'");
  }
}

long parse_index(const std::string& token, const std::string& path) {
  const double v = parse_number(token, path);
  if (v != std::floor(v)) io_error(path, "bad index '" + token + "'");
  return static_cast<long>(v);
}

MatrixXd read_mm(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) io_error(path, "empty file");
  std::istringstream header(line);
  std::string banner, object, layout, field, symmetry;
  header >> banner >> object >> layout >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix")
    io_error(path, "missing %%MatrixMarket matrix header");
  layout = lower(layout);
  field = lower(field);
  symmetry = lower(symmetry);
  if (layout != "coordinate" && layout != "array") io_error(path, "unsupported layout " + layout);
  if (field != "real" && field != "double" && field != "integer")
    io_error(path, "unsupported field " + field);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") io_error(path, "unsupported symmetry " + symmetry);

  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    break;
  }
  std::istringstream size_line(line);
  long rows = 0, cols = 0, entries = 0;
  size_line >> rows >> cols;
  if (layout == "coordinate") size_line >> entries;
  if (!size_line || rows <= 0 || cols <= 0 || entries < 0) io_error(path, "bad size line");
  if (symmetric && rows != cols) io_error(path, "symmetric matrix must be square");

  MatrixXd M = MatrixXd::Zero(rows, cols);
  std::string token;
  auto next = [&](const char* what) {
    if (!(in >> token)) io_error(path, std::string("unexpected end of file reading ") + what);
    return token;
  };

  if (layout == "coordinate") {
    for (long k = 0; k < entries; ++k) {
      const long i = parse_index(next("row"), path) - 1;
      const long j = parse_index(next("column"), path) - 1;
      const double v = parse_number(next("value"), path);
      if (i < 0 || i >= rows || j < 0 || j >= cols) io_error(path, "entry index out of range");
      M(i, j) = v;
      if (symmetric) M(j, i) = v;
    }
  } else {
    for (long j = 0; j < cols; ++j)
      for (long i = symmetric ? j : 0; i < rows; ++i) {
        M(i, j) = parse_number(next("value"), path);
        if (symmetric) M(j, i) = M(i, j);
      }
  }
  if (in >> token) io_error(path, "trailing data after declared entries");
  return M;
}

MatrixXd read_csv_stream(std::istream& in, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t\r")] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      if (b == std::string::npos) io_error(path, "empty CSV cell");
      row.push_back(parse_number(cell.substr(b, e - b + 1), path));
    }
    if (!rows.empty() && row.size() != rows.front().size()) io_error(path, "ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) io_error(path, "empty file");
  MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json one_based(const std::vector<int>& idx) {
  json a = json::array();
  for (int i : idx) a.push_back(i + 1);
  return a;
}

json problem_json(const Instance& instance) {
  return {{"n", instance.n()}, {"s", instance.s}, {"offset", instance.offset},
          {"label", instance.label}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) io_error(path, "cannot open for writing");
  return out;
}

}  // namespace

MatrixXd read_dense_matrix(const std::string& path, MatrixFormat format) {
  std::ifstream in(path);
  if (!in) io_error(path, "cannot open");
  const MatrixXd M = resolve(path, format) == MatrixFormat::Csv ? read_csv_stream(in, path)
                                                                 : read_mm(in, path);
  if (!M.allFinite()) throw MespError(ErrorKind::Validation, path + ": non-finite entries");
  return M;
}

MatrixXd read_matrix(const std::string& path, MatrixFormat format) {
  const MatrixXd M = read_dense_matrix(path, format);
  if (M.rows() != M.cols())
    throw MespError(ErrorKind::Validation, path + ": matrix is not square");
  const double scale = std::max(1.0, max_abs_entry(M));
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol::kSym * scale)
    throw MespError(ErrorKind::Validation, path + ": matrix is not symmetric");
  return 0.5 * (M + M.transpose());
}

void write_matrix_market(const MatrixXd& M, const std::string& path, const std::string& comment) {
  std::ofstream out = open_out(path);
  const bool symmetric = M.rows() == M.cols() && M == M.transpose();
  if (symmetric) {
    long nnz = 0;
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = j; i < M.rows(); ++i) nnz += M(i, j) != 0.0;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    if (!comment.empty()) out << "% " << comment << "\n";
    out << M.rows() << " " << M.cols() << " " << nnz << "\n";
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = j; i < M.rows(); ++i)
        if (M(i, j) != 0.0) out << i + 1 << " " << j + 1 << " " << fmt(M(i, j)) << "\n";
  } else {
    out << "%%MatrixMarket matrix array real general\n";
    if (!comment.empty()) out << "% " << comment << "\n";
    out << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) out << fmt(M(i, j)) << "\n";
  }
  if (!out) io_error(path, "write failed");
}

void write_csv(const MatrixXd& M, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << fmt(M(i, j));
    out << "\n";
  }
  if (!out) io_error(path, "write failed");
}

std::string sidecar_path(const std::string& matrix_path) {
  return std::filesystem::path(matrix_path).replace_extension(".json").string();
}

Instance read_instance(const std::string& path, std::optional<int> s) {
  Instance inst;
  inst.C = read_matrix(path);
  inst.label = std::filesystem::path(path).stem().string();
  const std::string meta_path = sidecar_path(path);
  if (meta_path != path && std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta;
    try {
      in >> meta;
    } catch (const json::exception& e) {
      io_error(meta_path, e.what());
    }
    if (meta.contains("s")) inst.s = meta.at("s").get<int>();
    if (meta.contains("offset")) inst.offset = meta.at("offset").get<double>();
    if (meta.contains("label")) inst.label = meta.at("label").get<std::string>();
  }
  if (s) inst.s = *s;
  if (inst.s <= 0 && !s && !std::filesystem::exists(meta_path))
    throw MespError(ErrorKind::InvalidArgument, path + ": cardinality s not given");
  return inst;
}

void write_instance(const Instance& instance, const std::string& path, const json& extra) {
  write_matrix_market(instance.C, path, instance.label);
  json meta = extra.is_object() ? extra : json::object();
  meta["s"] = instance.s;
  meta["offset"] = instance.offset;
  meta["label"] = instance.label;
  write_report(meta, sidecar_path(path));
}

json subset_json(const Subset& S) { return one_based(S.indices()); }

json bound_report(const Instance& instance, const BoundResult& r) {
  json j = {{"problem", problem_json(instance)},
            {"bound", r.bound_name},
            {"value", number(r.value)},
            {"primal_value", number(r.primal_value)},
            {"x", vector_json(r.x)},
            {"gamma", r.gamma},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"residual", number(r.residual)},
            {"wall_seconds", r.wall_seconds},
            {"flags", r.flags}};
  if (r.upsilon) j["upsilon"] = vector_json(*r.upsilon);
  if (r.certificate) {
    const DualCertificate& c = *r.certificate;
    j["duals"] = {{"tau", c.tau},
                  {"nu", vector_json(c.nu)},
                  {"upsilon", vector_json(c.upsilon)},
                  {"objective", number(c.objective + instance.offset)},
                  {"gap", number(c.gap)}};
  } else {
    j["duals"] = nullptr;
  }
  return j;
}

json exact_report(const Instance& instance, const ExactResult& result, const std::string& method) {
  return {{"problem", problem_json(instance)},
          {"method", method},
          {"value", number(result.value)},
          {"subset", subset_json(result.subset)}};
}

json fix_report(const FixReport& report, double zeta, double lb) {
  return {{"upper_bound", number(zeta)},
          {"lower_bound", number(lb)},
          {"fixed_to_zero", one_based(report.fixed_to_zero)},
          {"fixed_to_one", one_based(report.fixed_to_one)},
          {"conflicts", one_based(report.conflicts)},
          {"gap", number(report.gap)}};
}

json bnb_report(const Instance& instance, const BnbResult& r, const BnbConfig& cfg) {
  return {{"problem", problem_json(instance)},
          {"config",
           {{"bound", to_string(cfg.bound)},
            {"scaling", to_string(cfg.scaling)},
            {"fixing", cfg.fixing},
            {"nodeOrder", cfg.order == NodeOrder::BestFirst ? "best-first" : "depth-first"},
            {"maxNodes", cfg.max_nodes},
            {"maxSeconds", cfg.max_seconds},
            {"workers", cfg.workers}}},
          {"value", number(r.value)},
          {"subset", subset_json(r.subset)},
          {"optimal", r.optimal},
          {"flags", r.flags},
          {"stats",
           {{"nodes", r.stats.nodes},
            {"bound_evaluations", r.stats.bound_evaluations},
            {"fixed_variables", r.stats.fixed_variables},
            {"max_depth", r.stats.max_depth},
            {"root_bound", number(r.stats.root_bound)},
            {"wall_seconds", r.stats.wall_seconds}}}};
}

void write_report(const json& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << report.dump(2) << "\n";
  if (!out) io_error(path, "write failed");
}

BnbConfig bnb_config_from_json(const json& j, BnbConfig cfg) {
  try {
    if (j.contains("bound")) cfg.bound = parse_bound_kind(j.at("bound").get<std::string>());
    if (j.contains("scaling"))
      cfg.scaling = parse_scaling_mode(j.at("scaling").get<std::string>());
    if (j.contains("fixing")) cfg.fixing = j.at("fixing").get<bool>();
    if (j.contains("nodeOrder")) {
      const std::string o = lower(j.at("nodeOrder").get<std::string>());
      if (o == "best-first" || o == "best")
        cfg.order = NodeOrder::BestFirst;
      else if (o == "depth-first" || o == "dfs")
        cfg.order = NodeOrder::DepthFirst;
      else
        throw MespError(ErrorKind::InvalidArgument, "unknown nodeOrder '" + o + "'");
    }
    if (j.contains("maxNodes")) cfg.max_nodes = j.at("maxNodes").get<std::int64_t>();
    if (j.contains("maxSeconds")) cfg.max_seconds = j.at("maxSeconds").get<double>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
  } catch (const json::exception& e) {
    throw MespError(ErrorKind::InvalidArgument, std::string("bad solver config: ") + e.what());
  }
  if (cfg.max_nodes <= 0 || cfg.max_seconds <= 0 || cfg.workers <= 0)
    throw MespError(ErrorKind::InvalidArgument, "solver limits must be positive");
  return cfg;
}

}  // namespace mesp
