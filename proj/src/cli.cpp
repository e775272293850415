// SPDX-License-Identifier: Apache-2.0
#include "mesp/cli.hpp"

#include "mesp/exact.hpp"
#include "mesp/fact_bound.hpp"
#include "mesp/io.hpp"
#include "mesp/reductions.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace mesp {

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("MESPKIT_LOG");
  if (env == nullptr) return LogLevel::Quiet;
  const std::string v = env;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  if (v == "info" || v == "1") return LogLevel::Info;
  return LogLevel::Quiet;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const { emit(LogLevel::Info, msg); }
  void debug(const std::string& msg) const { emit(LogLevel::Debug, msg); }

 private:
  void emit(LogLevel at, const std::string& msg) const {
    if (level_ >= at) err_ << "[mespkit] " << msg << "\n";
  }
  std::ostream& err_;
  LogLevel level_;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string indices(const std::vector<int>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? " " : "") + std::to_string(idx[k] + 1);
  return "{" + s + "}";
}

void emit_report(const RunConfig& cfg, const json& report, std::ostream& out) {
  if (cfg.out.empty())
    out << report.dump(2) << "\n";
  else
    write_report(report, cfg.out);
}

Instance load(const RunConfig& cfg, const Log& log) {
  if (cfg.instance.empty()) throw MespError(ErrorKind::InvalidArgument, "--instance is required");
  Instance inst = read_instance(cfg.instance, cfg.s);
  log.info("loaded " + cfg.instance + " (n=" + std::to_string(inst.n()) +
           ", s=" + std::to_string(inst.s) + ")");
  const ValidationReport rep = validate(inst);
  for (const std::string& w : rep.warnings) log.info("warning: " + w);
  if (!rep.ok()) throw MespError(ErrorKind::Validation, rep.summary());
  if (!cfg.mask.empty()) {
    inst = apply_mask(inst, read_matrix(cfg.mask));
    log.info("applied mask " + cfg.mask);
  }
  return inst;
}

double incumbent_value(const RunConfig& cfg, const Instance& inst, const Log& log) {
  if (cfg.incumbent) return *cfg.incumbent;
  const Incumbent inc = greedy_local_search(inst, cfg.seed);
  log.info("greedy incumbent " + num(inc.value));
  return inc.value;
}

int run_exact(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load(cfg, log);
  ExactResult res;
  std::string method;
  if (cfg.tridiag) {
    const auto structured = solve_structured(inst);
    if (!structured)
      throw MespError(ErrorKind::Validation,
                      "--tridiag: neither C nor its inverse has a tridiagonal ordering");
    res = *structured;
    method = "tridiagonal-dp";
  } else {
    res = brute_force(inst, cfg.enumeration_cap);
    method = "enumeration";
  }
  out << "exact (" << method << "): value " << num(res.value) << " subset "
      << indices(res.subset.indices()) << "\n";
  emit_report(cfg, exact_report(inst, res, method), out);
  return 0;
}

int run_bound(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load(cfg, log);
  const BoundResult b = compute_bound(cfg.kind, cfg.scaling, inst, {});
  const double lb = incumbent_value(cfg, inst, log);
  out << b.bound_name << ": bound " << num(b.value);
  if (cfg.scaling == ScalingMode::Gamma) out << " gamma* " << num(b.gamma);
  out << " incumbent " << num(lb) << " gap " << num(b.value - lb) << " iterations "
      << b.iterations << "\n";
  for (const std::string& f : b.flags) out << "  flag: " << f << "\n";
  json report = bound_report(inst, b);
  report["kind"] = to_string(cfg.kind);
  report["scaling"] = to_string(cfg.scaling);
  report["incumbent"] = lb;
  report["gap"] = b.value - lb;
  emit_report(cfg, report, out);
  return b.has_flag("unverified") ? static_cast<int>(ExitCode::Numerical) : 0;
}

int run_fix(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load(cfg, log);
  const BoundResult b = ddfact_bound(inst);
  if (!b.certificate) throw MespError(ErrorKind::Numerical, "fix: no dual certificate");
  const double lb = incumbent_value(cfg, inst, log);
  const double zeta = b.certificate->objective;
  const FixReport fr = variable_fix(zeta, lb - inst.offset, *b.certificate);
  out << "fix: bound " << num(b.value) << " incumbent " << num(lb) << " J0 "
      << indices(fr.fixed_to_zero) << " J1 " << indices(fr.fixed_to_one) << "\n";
  json report = fix_report(fr, zeta + inst.offset, lb);
  report["problem"] = {{"n", inst.n()}, {"s", inst.s}, {"offset", inst.offset}};
  emit_report(cfg, report, out);
  return 0;
}

int run_solve(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load(cfg, log);
  BnbConfig bc;
  if (!cfg.solver_config.empty()) {
    std::ifstream in(cfg.solver_config);
    if (!in) throw MespError(ErrorKind::Io, cfg.solver_config + ": cannot open");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw MespError(ErrorKind::Io, cfg.solver_config + ": " + e.what());
    }
    bc = bnb_config_from_json(j, bc);
  }
  bc.bound = cfg.kind;
  bc.scaling = cfg.scaling;
  bc.seed = cfg.seed;
  if (cfg.fixing) bc.fixing = *cfg.fixing;
  if (cfg.node_order) bc.order = *cfg.node_order;
  if (cfg.max_nodes) bc.max_nodes = *cfg.max_nodes;
  if (cfg.max_seconds) bc.max_seconds = *cfg.max_seconds;
  if (cfg.workers) bc.workers = *cfg.workers;
  if (bc.max_nodes <= 0 || bc.max_seconds <= 0 || bc.workers <= 0)
    throw MespError(ErrorKind::InvalidArgument, "solver limits must be positive");

  const BnbResult r = solve_bnb(inst, bc);
  out << "solve (" << to_string(bc.bound) << "): value " << num(r.value) << " subset "
      << indices(r.subset.indices()) << (r.optimal ? " optimal" : " not proven optimal")
      << " nodes " << r.stats.nodes << " seconds " << num(r.stats.wall_seconds) << "\n";
  emit_report(cfg, bnb_report(inst, r, bc), out);
  return r.optimal ? 0 : static_cast<int>(ExitCode::ResourceCap);
}

json reduce_meta(const RunConfig& cfg) {
  return {{"direction", cfg.direction}, {"provenance", cfg.instance}};
}

int run_reduce(const RunConfig& cfg, std::ostream& out, const Log& log) {
  if (cfg.out.empty()) throw MespError(ErrorKind::InvalidArgument, "reduce: --out is required");
  json meta = reduce_meta(cfg);
  if (cfg.direction == "dopt-to-mesp") {
    DoptInstance d;
    d.A = read_dense_matrix(cfg.instance);
    const std::string side = sidecar_path(cfg.instance);
    if (cfg.s) {
      d.s = *cfg.s;
    } else if (std::filesystem::exists(side)) {
      std::ifstream in(side);
      json j;
      in >> j;
      d.s = j.value("s", 0);
      d.offset = j.value("offset", 0.0);
    }
    validate_dopt(d);
    const Instance inst = dopt_to_mesp(d);
    write_instance(inst, cfg.out, meta);
    out << "reduce dopt-to-mesp: n " << inst.n() << " s " << inst.s << " offset "
        << num(inst.offset) << " -> " << cfg.out << "\n";
    return 0;
  }

  const Instance inst = load(cfg, log);
  if (cfg.direction == "complement") {
    const Instance c = to_complementary(inst);
    write_instance(c, cfg.out, meta);
    out << "reduce complement: s " << c.s << " offset " << num(c.offset) << " -> " << cfg.out
        << "\n";
  } else if (cfg.direction == "mesp-to-dopt") {
    const DoptInstance d = mesp_to_dopt(inst);
    write_matrix_market(d.A, cfg.out, "design matrix");
    meta["s"] = d.s;
    meta["offset"] = d.offset;
    meta["m"] = d.m();
    write_report(meta, sidecar_path(cfg.out));
    out << "reduce mesp-to-dopt: m " << d.m() << " s " << d.s << " offset " << num(d.offset)
        << " -> " << cfg.out << "\n";
  } else if (cfg.direction == "mesp-to-ddf") {
    const DdfInstance d = mesp_to_ddf(inst);
    const std::string b_path =
        std::filesystem::path(cfg.out).replace_extension(".B.mtx").string();
    write_matrix_market(d.A, cfg.out, "fusion matrix A");
    write_matrix_market(d.B, b_path, "prior information B");
    meta["s"] = d.s;
    meta["offset"] = d.offset;
    meta["B"] = std::filesystem::path(b_path).filename().string();
    write_report(meta, sidecar_path(cfg.out));
    out << "reduce mesp-to-ddf: s " << d.s << " offset " << num(d.offset) << " -> " << cfg.out
        << "\n";
  } else {
    throw MespError(ErrorKind::InvalidArgument, "unknown direction '" + cfg.direction + "'");
  }
  return 0;
}

int run_gen(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw MespError(ErrorKind::InvalidArgument, "gen: --out is required");
  GenOptions g = cfg.gen;
  g.seed = cfg.seed;
  json meta = {{"family", to_string(g.family)}, {"n", g.n}, {"seed", g.seed}};
  if (g.family == Family::Dopt) {
    const DoptInstance d = generate_dopt(g);
    write_matrix_market(d.A, cfg.out, "design matrix");
    meta["s"] = d.s;
    meta["offset"] = d.offset;
    meta["m"] = d.m();
    write_report(meta, sidecar_path(cfg.out));
  } else {
    write_instance(generate_instance(g), cfg.out, meta);
  }
  out << "gen " << to_string(g.family) << ": n " << g.n << " s " << g.s << " -> " << cfg.out
      << "\n";
  return 0;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ResourceCap: return static_cast<int>(ExitCode::ResourceCap);
    case ErrorKind::Numerical: return static_cast<int>(ExitCode::Numerical);
    case ErrorKind::InvalidArgument:
    case ErrorKind::Validation:
    case ErrorKind::Io: return static_cast<int>(ExitCode::Validation);
  }
  return static_cast<int>(ExitCode::Validation);
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Log log(err);
  try {
    switch (cfg.command) {
      case Command::Exact: return run_exact(cfg, out, log);
      case Command::Bound: return run_bound(cfg, out, log);
      case Command::Fix: return run_fix(cfg, out, log);
      case Command::Solve: return run_solve(cfg, out, log);
      case Command::Reduce: return run_reduce(cfg, out, log);
      case Command::Gen: return run_gen(cfg, out);
    }
  } catch (const MespError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Validation);
  }
  return static_cast<int>(ExitCode::Validation);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Maximum-entropy sampling toolkit", "mespkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string kind = "ddfact", scaling = "none", order, family = "randpd";
  bool fixing = false;
  std::int64_t max_nodes = 0;
  double max_seconds = 0.0;
  int workers = 0;

  const std::map<std::string, Command> names = {
      {"exact", Command::Exact}, {"bound", Command::Bound},   {"fix", Command::Fix},
      {"solve", Command::Solve}, {"reduce", Command::Reduce}, {"gen", Command::Gen}};
  const std::map<std::string, std::string> help = {
      {"exact", "Exact optimum by enumeration or the tridiagonal dynamic program"},
      {"bound", "Upper bound from a convex relaxation"},
      {"fix", "Variables fixed by the factorization dual certificate"},
      {"solve", "Branch and bound"},
      {"reduce", "Rewrite an instance as an equivalent problem"},
      {"gen", "Generate a seeded random instance"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, cmd] : names) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    subs[name] = sub;
    sub->add_option("--out", cfg.out, "Output path");
    sub->add_option("--seed", cfg.seed, "Random seed");
    if (cmd != Command::Gen) {
      sub->add_option("--instance", cfg.instance, "Instance matrix (.mtx or .csv)")->required();
      sub->add_option("--s", cfg.s, "Cardinality (overrides the sidecar)");
    }
    if (cmd == Command::Bound || cmd == Command::Solve) {
      sub->add_option("--kind", kind, "linx | ddfact | bqp | best-of");
      sub->add_option("--scaling", scaling, "none | gamma | upsilon");
    }
    if (cmd != Command::Gen && cmd != Command::Reduce)
      sub->add_option("--mask", cfg.mask, "Correlation mask matrix");
    if (cmd == Command::Bound || cmd == Command::Fix)
      sub->add_option("--incumbent", cfg.incumbent, "Lower bound (default: greedy)");
  }
  subs["exact"]->add_flag("--tridiag", cfg.tridiag, "Use the tridiagonal dynamic program");
  subs["exact"]->add_option("--max-subsets", cfg.enumeration_cap, "Enumeration cap");
  CLI::App* solve = subs["solve"];
  solve->add_flag("--fixing", fixing, "Enable variable fixing");
  solve->add_option("--node-order", order, "best-first | depth-first");
  solve->add_option("--max-nodes", max_nodes, "Node cap");
  solve->add_option("--max-seconds", max_seconds, "Time cap");
  solve->add_option("--workers", workers, "Parallel bound evaluations");
  solve->add_option("--config", cfg.solver_config, "JSON solver configuration");
  subs["reduce"]->add_option("--direction", cfg.direction,
                             "complement | dopt-to-mesp | mesp-to-dopt | mesp-to-ddf");
  CLI::App* gen = subs["gen"];
  gen->add_option("--family", family, "randpd | tridiag | lowrank | dopt");
  gen->add_option("--n", cfg.gen.n, "Order")->required();
  gen->add_option("--s", cfg.gen.s, "Cardinality")->required();
  gen->add_option("--rank", cfg.gen.rank, "lowrank: rank");
  gen->add_option("--m", cfg.gen.m, "dopt: columns");
  gen->add_option("--condition", cfg.gen.condition, "randpd: condition number");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Validation);
  }

  for (const auto& [name, cmd] : names)
    if (subs[name]->parsed()) cfg.command = cmd;
  try {
    cfg.kind = parse_bound_kind(kind);
    cfg.scaling = parse_scaling_mode(scaling);
    if (cfg.command == Command::Gen) cfg.gen.family = parse_family(family);
    if (cfg.command == Command::Solve) {
      if (solve->count("--fixing")) cfg.fixing = fixing;
      if (!order.empty()) {
        if (order == "best-first" || order == "best")
          cfg.node_order = NodeOrder::BestFirst;
        else if (order == "depth-first" || order == "dfs")
          cfg.node_order = NodeOrder::DepthFirst;
        else
          throw MespError(ErrorKind::InvalidArgument, "unknown node order '" + order + "'");
      }
      if (solve->count("--max-nodes")) cfg.max_nodes = max_nodes;
      if (solve->count("--max-seconds")) cfg.max_seconds = max_seconds;
      if (solve->count("--workers")) cfg.workers = workers;
    }
  } catch (const MespError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return run(cfg, out, err);
}

}  // namespace mesp
