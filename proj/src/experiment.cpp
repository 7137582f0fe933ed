#include "dqm/experiment.hpp"

#include "dqm/trace_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace dqm {

using detail::field;
using OJson = nlohmann::ordered_json;
using detail::Json;

namespace {

constexpr std::array<const char*, kSummaryThresholds.size()> kThresholdNames{"1e-3", "1e-6",
                                                                            "1e-9"};

void reject_unknown(const Json& obj, std::string_view text, std::string_view section,
                    std::initializer_list<const char*> known) {
  if (!obj.is_object())
    throw FormatError("config: '" + std::string(section) + "' must be an object",
                      detail::line_of_key(text, section), 1);
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw FormatError("config: unknown field '" + key + "' in '" + std::string(section) + "'",
                        detail::line_of_key(text, key), 1);
  }
}

template <class T>
void read_opt(const Json& obj, const char* key, T& into, std::string_view text) {
  if (obj.contains(key)) into = field<T>(obj, key, text);
}

Method method_at(const std::string& name, std::string_view text) {
  try {
    return parse_method(name);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what(), detail::line_of_key(text, name), 1);
  }
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t seed) {
  graph.seed = seed;
  data.seed = seed + 1;
}

double ExperimentConfig::c_for(Method method) const {
  const auto it = solver.c.find(method);
  if (it == solver.c.end())
    throw PreconditionError("config: no c given for " + to_string(method));
  return it->second;
}

void ExperimentConfig::validate() const {
  if (graph.n < 2) throw PreconditionError("config: graph.n must be at least 2");
  if (!(graph.r_c > 0.0 && graph.r_c <= 1.0))
    throw PreconditionError("config: graph.r_c must lie in (0, 1]");
  if (data.kind != "logistic" && data.kind != "quadratic")
    throw PreconditionError("config: data.kind must be 'logistic' or 'quadratic'");
  if (data.q < 1 || data.p < 1) throw PreconditionError("config: data.q and data.p must be >= 1");
  if (!(data.label_noise >= 0.0 && data.label_noise < 0.5))
    throw PreconditionError("config: data.label_noise must lie in [0, 0.5)");
  if (!(data.lambda_reg >= 0.0)) throw PreconditionError("config: data.lambda_reg must be >= 0");
  if (solver.methods.empty()) throw PreconditionError("config: no methods selected");
  for (Method m : solver.methods)
    if (!(c_for(m) > 0.0)) throw PreconditionError("config: c for " + to_string(m) + " must be > 0");
  if (solver.rho && !(*solver.rho > 0.0)) throw PreconditionError("config: rho must be > 0");
  if (solver.max_iter < 0) throw PreconditionError("config: max_iter must be >= 0");
  if (!(solver.inner_tol > 0.0) || solver.inner_max < 1)
    throw PreconditionError("config: inner_tol must be > 0 and inner_max >= 1");
  if (!(analysis.mu > 1.0) || !(analysis.mu_prime > 1.0))
    throw PreconditionError("config: mu and mu_prime must exceed 1");
}

ExperimentConfig config_from_json(std::string_view text) {
  const Json doc = detail::parse_json(text);
  detail::check_schema(doc, text, "config");
  reject_unknown(doc, text, "config",
                 {"schema_version", "graph", "data", "solver", "analysis", "output"});
  ExperimentConfig cfg;
  if (doc.contains("graph")) {
    const Json& g = doc["graph"];
    reject_unknown(g, text, "graph", {"n", "r_c", "seed"});
    read_opt(g, "n", cfg.graph.n, text);
    read_opt(g, "r_c", cfg.graph.r_c, text);
    read_opt(g, "seed", cfg.graph.seed, text);
  }
  if (doc.contains("data")) {
    const Json& d = doc["data"];
    reject_unknown(d, text, "data", {"kind", "q", "p", "seed", "label_noise", "lambda_reg"});
    read_opt(d, "kind", cfg.data.kind, text);
    read_opt(d, "q", cfg.data.q, text);
    read_opt(d, "p", cfg.data.p, text);
    read_opt(d, "seed", cfg.data.seed, text);
    read_opt(d, "label_noise", cfg.data.label_noise, text);
    read_opt(d, "lambda_reg", cfg.data.lambda_reg, text);
  }
  if (doc.contains("solver")) {
    const Json& s = doc["solver"];
    reject_unknown(s, text, "solver",
                   {"methods", "c", "rho", "max_iter", "inner_tol", "inner_max"});
    if (s.contains("methods")) {
      cfg.solver.methods.clear();
      for (const auto& name : field<std::vector<std::string>>(s, "methods", text))
        cfg.solver.methods.push_back(method_at(name, text));
    }
    if (s.contains("c")) {
      const Json& c = s["c"];
      if (c.is_number()) {
        for (Method m : {Method::DQM, Method::DLM, Method::DADMM}) cfg.solver.c[m] = c.get<double>();
      } else if (c.is_object()) {
        for (const auto& [name, value] : c.items()) {
          if (!value.is_number())
            throw FormatError("config: c for " + name + " must be a number",
                              detail::line_of_key(text, name), 1);
          cfg.solver.c[method_at(name, text)] = value.get<double>();
        }
      } else {
        throw FormatError("config: solver.c must be a number or an object keyed by method",
                          detail::line_of_key(text, "c"), 1);
      }
    }
    if (s.contains("rho") && !s["rho"].is_null()) cfg.solver.rho = field<double>(s, "rho", text);
    read_opt(s, "max_iter", cfg.solver.max_iter, text);
    read_opt(s, "inner_tol", cfg.solver.inner_tol, text);
    read_opt(s, "inner_max", cfg.solver.inner_max, text);
  }
  if (doc.contains("analysis")) {
    const Json& a = doc["analysis"];
    reject_unknown(a, text, "analysis", {"mu", "mu_prime", "audit"});
    read_opt(a, "mu", cfg.analysis.mu, text);
    read_opt(a, "mu_prime", cfg.analysis.mu_prime, text);
    read_opt(a, "audit", cfg.analysis.audit, text);
  }
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    reject_unknown(o, text, "output", {"directory", "full_state", "timing", "plot_data"});
    read_opt(o, "directory", cfg.output.directory, text);
    read_opt(o, "full_state", cfg.output.full_state, text);
    read_opt(o, "timing", cfg.output.timing, text);
    read_opt(o, "plot_data", cfg.output.plot_data, text);
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  OJson methods = OJson::array();
  for (Method m : cfg.solver.methods) methods.push_back(to_string(m));
  OJson c = OJson::object();
  for (const auto& [m, v] : cfg.solver.c) c[to_string(m)] = v;
  OJson doc{
      {"schema_version", kSchemaVersion},
      {"graph", {{"n", cfg.graph.n}, {"r_c", cfg.graph.r_c}, {"seed", cfg.graph.seed}}},
      {"data",
       {{"kind", cfg.data.kind},
        {"q", cfg.data.q},
        {"p", cfg.data.p},
        {"seed", cfg.data.seed},
        {"label_noise", cfg.data.label_noise},
        {"lambda_reg", cfg.data.lambda_reg}}},
      {"solver",
       {{"methods", methods},
        {"c", c},
        {"rho", cfg.solver.rho ? OJson(*cfg.solver.rho) : OJson()},
        {"max_iter", cfg.solver.max_iter},
        {"inner_tol", cfg.solver.inner_tol},
        {"inner_max", cfg.solver.inner_max}}},
      {"analysis",
       {{"mu", cfg.analysis.mu}, {"mu_prime", cfg.analysis.mu_prime}, {"audit", cfg.analysis.audit}}},
      {"output",
       {{"directory", cfg.output.directory},
        {"full_state", cfg.output.full_state},
        {"timing", cfg.output.timing},
        {"plot_data", cfg.output.plot_data}}}};
  return doc.dump(2) + "\n";
}

PreparedProblem prepare_problem(const ExperimentConfig& config) {
  config.validate();
  const Network net =
      build_random_graph(config.graph.n, config.graph.r_c, config.graph.seed, config.data.p);
  if (config.data.kind == "quadratic") {
    ConsensusProblem problem = quadratic_problem(net, config.data.seed);
    IncidenceOperators ops = incidence_operators(problem.network);
    return PreparedProblem{std::move(problem), std::move(ops), std::nullopt};
  }
  Dataset data = generate_dataset(config.graph.n, config.data.q, config.data.p, config.data.seed,
                                  config.data.label_noise);
  ConsensusProblem problem = logistic_problem(net, data, config.data.lambda_reg);
  IncidenceOperators ops = incidence_operators(problem.network);
  return PreparedProblem{std::move(problem), std::move(ops), std::move(data)};
}

SolverConfig solver_config(const ExperimentConfig& config, Method method,
                           const ConsensusProblem& problem) {
  SolverConfig s;
  s.method = method;
  s.c = config.c_for(method);
  s.rho = config.solver.rho ? *config.solver.rho : curvature_estimates(problem).M;
  s.max_iter = config.solver.max_iter;
  s.inner_tol = config.solver.inner_tol;
  s.inner_max = config.solver.inner_max;
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  PreparedProblem prepared = prepare_problem(config);
  OptimalCertificate cert = optimal_certificate(prepared.problem, prepared.ops);
  ExperimentResult result{config, std::move(prepared), std::move(cert), {}};
  AuditOptions aopt;
  aopt.mu = config.analysis.mu;
  aopt.mu_prime = config.analysis.mu_prime;
  for (Method method : config.solver.methods) {
    MethodRun mr;
    mr.solver = solver_config(config, method, result.prepared.problem);
    RunOptions ropt;
    ropt.timing = config.output.timing;
    mr.trace = run(result.prepared.problem, mr.solver, ropt);
    mr.rows = trace_rows(result.prepared.problem, result.prepared.ops, mr.trace, result.cert, aopt);
    mr.rel_err = relative_errors(mr.trace, result.cert);
    for (std::size_t t = 0; t < kSummaryThresholds.size(); ++t)
      mr.iterations_to[t] = iterations_to(mr.rel_err, kSummaryThresholds[t]);
    mr.wall_ns = mr.trace.wall_ns.empty() ? 0 : mr.trace.wall_ns.back();
    result.runs.push_back(std::move(mr));
  }
  return result;
}

namespace {

OJson iterations_json(const MethodRun& run) {
  OJson out = OJson::object();
  for (std::size_t t = 0; t < kSummaryThresholds.size(); ++t)
    out[kThresholdNames[t]] = run.iterations_to[t] >= 0 ? OJson(run.iterations_to[t]) : OJson();
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

OJson finite_or_null(double v) { return std::isfinite(v) ? OJson(v) : OJson(); }

}  // namespace

std::string summary_json(const ExperimentResult& result) {
  const ConsensusProblem& problem = result.prepared.problem;
  const CurvatureEstimates curv = curvature_estimates(problem);
  const SpectralData spectral = spectral_bounds(result.prepared.ops);
  const auto& prov = problem.network.provenance();
  OJson runs = OJson::array();
  for (const MethodRun& r : result.runs) {
    runs.push_back({{"method", to_string(r.solver.method)},
                    {"c", r.solver.c},
                    {"rho", r.solver.method == Method::DLM ? OJson(r.solver.rho) : OJson()},
                    {"max_iter", r.solver.max_iter},
                    {"iterations_to", iterations_json(r)},
                    {"final_rel_err", r.rel_err.empty() ? OJson() : finite_or_null(r.rel_err.back())},
                    {"c_threshold", finite_or_null(c_threshold(
                                        r.solver.method,
                                        rate_parameters(problem, result.prepared.ops, r.solver)))},
                    {"wall_ns", r.wall_ns}});
  }
  OJson doc{{"schema_version", kSchemaVersion},
            {"seeds",
             {{"graph", result.config.graph.seed},
              {"graph_accepted", prov.accepted_seed},
              {"graph_attempts", prov.attempts},
              {"data", result.config.data.seed}}},
            {"graph",
             {{"n", problem.num_nodes()},
              {"undirected_edges", problem.network.num_directed_edges() / 2},
              {"hash", hex64(topology_hash(problem.network))}}},
            {"x0", "zero"},
            {"curvature", {{"m", curv.m}, {"M", curv.M}, {"L", curv.L}}},
            {"spectral",
             {{"gamma_u", spectral.gamma_u},
              {"Gamma_u", spectral.Gamma_u},
              {"gamma_o", spectral.gamma_o},
              {"bipartite", spectral.bipartite}}},
            {"x_tilde_star", std::vector<double>(result.cert.x_tilde.data(),
                                                 result.cert.x_tilde.data() + result.cert.x_tilde.size())},
            {"runs", runs}};
  return doc.dump(2) + "\n";
}

bool write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "config.json", config_to_json(result.config));
  write_text_file(dir / "network.json", network_to_json(result.prepared.problem.network));
  write_text_file(dir / "problem.json", problem_to_json(result.prepared.problem));
  if (result.prepared.dataset)
    write_text_file(dir / "dataset.json", dataset_to_json(*result.prepared.dataset));
  bool all_passed = true;
  AuditOptions aopt;
  aopt.mu = result.config.analysis.mu;
  aopt.mu_prime = result.config.analysis.mu_prime;
  for (const MethodRun& r : result.runs) {
    const std::string name = to_string(r.solver.method);
    write_text_file(dir / ("trace_" + name + ".csv"), trace_csv(r.rows));
    if (result.config.output.full_state)
      write_text_file(dir / ("state_" + name + ".csv"), state_csv(r.trace));
    if (result.config.output.plot_data) {
      std::string dat = "# k rel_err V\n";
      for (const TraceRow& row : r.rows)
        dat += std::to_string(row.k) + " " + format_double(row.rel_err) + " " +
               format_double(row.V) + "\n";
      write_text_file(dir / ("trace_" + name + ".dat"), dat);
    }
    if (result.config.analysis.audit) {
      const AuditReport report =
          audit(result.prepared.problem, result.prepared.ops, r.solver,
                audit_trace_from_reduced(r.trace, result.prepared.ops), result.cert, aopt);
      write_text_file(dir / ("audit_" + name + ".json"), audit_report_json(report));
      all_passed = all_passed && report.passed();
    }
  }
  write_text_file(dir / "summary.json", summary_json(result));
  return all_passed;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "c") return SweepAxis::C;
  if (name == "r_c" || name == "rc") return SweepAxis::ConnectivityRatio;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected c or r_c)");
}

std::string sweep_point_name(SweepAxis axis, double value) {
  return std::string(axis == SweepAxis::C ? "c_" : "r_c_") + format_double(value);
}

double tune_c(const ExperimentConfig& config, Method method, const std::vector<double>& grid) {
  if (grid.empty()) throw PreconditionError("tune_c: empty grid");
  ExperimentConfig cfg = config;
  cfg.solver.methods = {method};
  double best_c = grid.front();
  long best = std::numeric_limits<long>::max();
  for (double c : grid) {
    if (!(c > 0.0)) throw PreconditionError("tune_c: grid values must be positive");
    cfg.solver.c[method] = c;
    const long it = run_experiment(cfg).runs.front().iterations_to[1];
    if (it >= 0 && it < best) {
      best = it;
      best_c = c;
    }
  }
  return best_c;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, SweepAxis axis,
                                  const std::vector<double>& values,
                                  const std::vector<double>& c_grid) {
  if (values.empty()) throw PreconditionError("sweep: no values given");
  if (axis == SweepAxis::C && !c_grid.empty())
    throw PreconditionError("sweep: c tuning only applies to the r_c axis");
  std::vector<SweepPoint> points;
  for (double v : values) {
    ExperimentConfig cfg = config;
    if (axis == SweepAxis::C) {
      for (Method m : cfg.solver.methods) cfg.solver.c[m] = v;
    } else {
      cfg.graph.r_c = v;
      if (!c_grid.empty())
        for (Method m : cfg.solver.methods) cfg.solver.c[m] = tune_c(cfg, m, c_grid);
    }
    points.push_back({v, run_experiment(cfg)});
  }
  return points;
}

std::string sweep_summary_json(const std::vector<SweepPoint>& points, SweepAxis axis) {
  OJson per_value = OJson::array();
  std::set<Method> methods;
  for (const SweepPoint& pt : points) {
    OJson runs = OJson::array();
    for (const MethodRun& r : pt.result.runs) {
      methods.insert(r.solver.method);
      runs.push_back({{"method", to_string(r.solver.method)},
                      {"c", r.solver.c},
                      {"iterations_to", iterations_json(r)}});
    }
    per_value.push_back({{"value", pt.value}, {"directory", sweep_point_name(axis, pt.value)},
                         {"runs", runs}});
  }
  OJson ranking = OJson::object();
  for (Method m : methods) {
    std::vector<std::pair<long, double>> order;
    for (const SweepPoint& pt : points)
      for (const MethodRun& r : pt.result.runs)
        if (r.solver.method == m) {
          const long it = r.iterations_to[1];
          order.emplace_back(it < 0 ? std::numeric_limits<long>::max() : it, pt.value);
        }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    OJson list = OJson::array();
    for (const auto& [it, value] : order)
      list.push_back({{"value", value},
                      {"iterations_to_1e-6",
                       it == std::numeric_limits<long>::max() ? OJson() : OJson(it)}});
    ranking[to_string(m)] = list;
  }
  OJson doc{{"schema_version", kSchemaVersion},
            {"axis", axis == SweepAxis::C ? "c" : "r_c"},
            {"points", per_value},
            {"ranking_by_iterations_to_1e-6", ranking}};
  return doc.dump(2) + "\n";
}

}  // namespace dqm
