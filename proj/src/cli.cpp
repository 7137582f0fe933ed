#include "dqm/cli.hpp"

#include "dqm/experiment.hpp"
#include "dqm/trace_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace dqm::cli {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool full_state = false;
  bool timing = false;
  bool audit = false;
  std::vector<std::string> methods;
  std::optional<int> max_iter;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment configuration (JSON)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "graph seed N (data uses N+1)");
  cmd->add_option("--methods", f.methods, "comma-separated subset of DQM,DLM,DADMM")->delimiter(',');
  cmd->add_option("--max-iter", f.max_iter, "iteration budget");
  cmd->add_flag("--full-state", f.full_state, "write per-iteration node states (needed by audit)");
  cmd->add_flag("--timing", f.timing, "record wall-clock per iteration");
  cmd->add_flag("--audit", f.audit, "audit each run and write audit_<METHOD>.json");
}

ExperimentConfig load_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = config_from_json(read_text_file(f.config_path));
  if (!f.out_dir.empty()) cfg.output.directory = f.out_dir;
  if (f.seed) cfg.set_seed(*f.seed);
  if (!f.methods.empty()) {
    cfg.solver.methods.clear();
    for (const std::string& m : f.methods) cfg.solver.methods.push_back(parse_method(m));
  }
  if (f.max_iter) cfg.solver.max_iter = *f.max_iter;
  if (f.full_state) cfg.output.full_state = true;
  if (f.timing) cfg.output.timing = true;
  if (f.audit) cfg.analysis.audit = true;
  cfg.validate();
  return cfg;
}

std::string iters(long k) { return k < 0 ? std::string("-") : std::to_string(k); }

void print_table(const ExperimentResult& result, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %8s %8s %12s\n", "method", "c", "1e-3",
                "1e-6", "1e-9", "final", "wall_ms");
  out << line;
  for (const MethodRun& r : result.runs) {
    std::snprintf(line, sizeof line, "%-6s %8.4g %8s %8s %8s %8.2e %12.3f\n",
                  to_string(r.solver.method).c_str(), r.solver.c, iters(r.iterations_to[0]).c_str(),
                  iters(r.iterations_to[1]).c_str(), iters(r.iterations_to[2]).c_str(),
                  r.rel_err.empty() ? 0.0 : r.rel_err.back(), static_cast<double>(r.wall_ns) * 1e-6);
    out << line;
  }
}

int cmd_generate(const CommonFlags& f, std::ostream& out) {
  const ExperimentConfig cfg = load_config(f);
  const PreparedProblem prepared = prepare_problem(cfg);
  const fs::path dir = cfg.output.directory;
  write_text_file(dir / "config.json", config_to_json(cfg));
  write_text_file(dir / "network.json", network_to_json(prepared.problem.network));
  write_text_file(dir / "problem.json", problem_to_json(prepared.problem));
  if (prepared.dataset) write_text_file(dir / "dataset.json", dataset_to_json(*prepared.dataset));
  out << "wrote network (" << prepared.problem.num_nodes() << " nodes, "
      << prepared.problem.network.num_directed_edges() / 2 << " links) and problem to " << dir.string()
      << "\n";
  return kOk;
}

int cmd_run(const CommonFlags& f, std::ostream& out, bool table_only) {
  const ExperimentConfig cfg = load_config(f);
  const ExperimentResult result = run_experiment(cfg);
  const fs::path dir = cfg.output.directory;
  const bool audits_ok = write_experiment(result, dir);
  print_table(result, out);
  if (table_only) write_text_file(dir / "compare.txt", [&] {
      std::ostringstream os;
      print_table(result, os);
      return os.str();
    }());
  out << "outputs in " << dir.string() << "\n";
  if (!audits_ok) {
    out << "audit: FAILED (see audit_*.json)\n";
    return kAuditFailure;
  }
  return kOk;
}

int cmd_sweep(const CommonFlags& f, const std::string& axis_name, const std::vector<double>& values,
              const std::vector<double>& c_grid, std::ostream& out) {
  const ExperimentConfig cfg = load_config(f);
  const SweepAxis axis = parse_sweep_axis(axis_name);
  if (values.empty()) throw PreconditionError("sweep: --values must list at least one value");
  const std::vector<SweepPoint> points = run_sweep(cfg, axis, values, c_grid);
  const fs::path dir = cfg.output.directory;
  bool audits_ok = true;
  for (const SweepPoint& pt : points) {
    audits_ok = write_experiment(pt.result, dir / sweep_point_name(axis, pt.value)) && audits_ok;
    out << "[" << sweep_point_name(axis, pt.value) << "]\n";
    print_table(pt.result, out);
  }
  write_text_file(dir / "sweep_summary.json", sweep_summary_json(points, axis));
  out << "outputs in " << dir.string() << "\n";
  return audits_ok ? kOk : kAuditFailure;
}

int cmd_audit(const std::string& run_dir, const std::vector<std::string>& method_names,
              std::ostream& out) {
  const fs::path dir = run_dir;
  const ExperimentConfig cfg = config_from_json(read_text_file(dir / "config.json"));
  const ConsensusProblem problem = problem_from_json(read_text_file(dir / "problem.json"));
  const IncidenceOperators ops = incidence_operators(problem.network);
  const OptimalCertificate cert = optimal_certificate(problem, ops);
  std::vector<Method> methods = cfg.solver.methods;
  if (!method_names.empty()) {
    methods.clear();
    for (const std::string& m : method_names) methods.push_back(parse_method(m));
  }
  AuditOptions aopt;
  aopt.mu = cfg.analysis.mu;
  aopt.mu_prime = cfg.analysis.mu_prime;
  bool all_ok = true;
  for (Method method : methods) {
    const std::string name = to_string(method);
    const fs::path state_path = dir / ("state_" + name + ".csv");
    if (!fs::exists(state_path))
      throw PreconditionError("audit: " + state_path.string() +
                              " not found; re-run with --full-state to record node states");
    const SolverConfig solver = solver_config(cfg, method, problem);
    const IterationTrace trace = parse_state_csv(read_text_file(state_path), solver);
    const AuditReport report =
        audit(problem, ops, solver, audit_trace_from_reduced(trace, ops), cert, aopt);
    write_text_file(dir / ("audit_" + name + ".json"), audit_report_json(report));
    out << name << ": " << (report.passed() ? "pass" : "FAIL") << "\n";
    for (const CheckResult& c : report.checks) {
      out << "  " << c.name << ": " << to_string(c.status);
      if (c.status == CheckStatus::Fail) out << " (first failure at k = " << c.first_failure << ")";
      if (!c.note.empty()) out << " [" << c.note << "]";
      out << "\n";
    }
    all_ok = all_ok && report.passed();
  }
  return all_ok ? kOk : kAuditFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized consensus optimization: DQM, DLM and DADMM experiments"};
  app.name("dqm");
  app.require_subcommand(1);

  CommonFlags gen_flags, run_flags, sweep_flags, cmp_flags;
  auto* gen = app.add_subcommand("generate", "write the network and problem for a configuration");
  add_common(gen, gen_flags);
  auto* runc = app.add_subcommand("run", "run the configured methods and write traces");
  add_common(runc, run_flags);
  auto* sweep = app.add_subcommand("sweep", "repeat a run over values of c or r_c");
  add_common(sweep, sweep_flags);
  std::string axis = "c";
  std::vector<double> values;
  sweep->add_option("--axis", axis, "c or r_c")->check(CLI::IsMember({"c", "r_c", "rc"}));
  sweep->add_option("--values", values, "comma-separated values")->delimiter(',')->required();
  std::vector<double> c_grid;
  sweep->add_option("--tune-c", c_grid, "r_c axis: pick c per point from these values")->delimiter(',');
  auto* aud = app.add_subcommand("audit", "check invariants and rate bounds on a run directory");
  std::string audit_dir;
  std::vector<std::string> audit_methods;
  aud->add_option("dir", audit_dir, "run directory written with --full-state")->required();
  aud->add_option("--methods", audit_methods, "subset of methods to audit")->delimiter(',');
  auto* cmp = app.add_subcommand("compare", "run several methods on one problem and tabulate");
  add_common(cmp, cmp_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_flags, out);
    if (runc->parsed()) return cmd_run(run_flags, out, false);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, axis, values, c_grid, out);
    if (aud->parsed()) return cmd_audit(audit_dir, audit_methods, out);
    if (cmp->parsed()) {
      if (cmp_flags.methods.empty() && cmp_flags.config_path.empty())
        cmp_flags.methods = {"DQM", "DLM", "DADMM"};
      return cmd_run(cmp_flags, out, true);
    }
  } catch (const FormatError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const AssumptionViolation& e) {
    err << "assumption violated: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOtherError;
  }
  return kOtherError;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace dqm::cli
