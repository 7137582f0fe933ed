#pragma once

#include "dqm/analysis.hpp"
#include "dqm/data.hpp"
#include "dqm/graph.hpp"
#include "dqm/solvers.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dqm {

inline constexpr std::array<double, 3> kSummaryThresholds{1e-3, 1e-6, 1e-9};

struct ExperimentConfig {
  struct Graph {
    int n = 10;
    double r_c = 0.4;
    std::uint64_t seed = 1;
  } graph;
  struct Data {
    /// "logistic" or "quadratic".
    std::string kind = "logistic";
    int q = 5;
    int p = 3;
    std::uint64_t seed = 2;
    double label_noise = 0.05;
    double lambda_reg = 0.0;
  } data;
  struct Solver {
    std::vector<Method> methods{Method::DQM, Method::DLM, Method::DADMM};
    std::map<Method, double> c{{Method::DQM, 0.7}, {Method::DLM, 5.5}, {Method::DADMM, 0.7}};
    /// DLM proximal weight; empty means "use the curvature bound M".
    std::optional<double> rho;
    int max_iter = 300;
    double inner_tol = 1e-12;
    int inner_max = 50;
  } solver;
  struct Analysis {
    double mu = 1.01;
    double mu_prime = 1.01;
    bool audit = false;
  } analysis;
  struct Output {
    std::string directory = "out";
    bool full_state = false;
    bool timing = false;
    /// Also write whitespace-separated "k rel_err V" files for gnuplot.
    bool plot_data = false;
  } output;

  /// Sets the graph seed to `seed` and the data seed to `seed + 1`.
  void set_seed(std::uint64_t seed);
  double c_for(Method method) const;
  /// Throws PreconditionError on invalid values.
  void validate() const;
};

/// Versioned JSON; fields absent from the document keep their defaults and
/// unknown fields are rejected. Throws FormatError with the offending line.
ExperimentConfig config_from_json(std::string_view text);
std::string config_to_json(const ExperimentConfig& config);

struct PreparedProblem {
  ConsensusProblem problem;
  IncidenceOperators ops;
  std::optional<Dataset> dataset;
};

/// Graph from (n, r_c, graph seed), data from the data seed.
PreparedProblem prepare_problem(const ExperimentConfig& config);

/// Effective solver settings for one method (rho resolved to M when unset).
SolverConfig solver_config(const ExperimentConfig& config, Method method,
                           const ConsensusProblem& problem);

struct MethodRun {
  SolverConfig solver;
  IterationTrace trace;
  std::vector<TraceRow> rows;
  std::vector<double> rel_err;
  /// Iterations to each summary threshold, -1 when not reached.
  std::array<long, kSummaryThresholds.size()> iterations_to{};
  std::int64_t wall_ns = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  PreparedProblem prepared;
  OptimalCertificate cert;
  std::vector<MethodRun> runs;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes config.json, network.json, problem.json, summary.json and one
/// trace_<METHOD>.csv per method (plus state_<METHOD>.csv with full_state,
/// audit_<METHOD>.json with analysis.audit). Returns true when every audit passed.
bool write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

std::string summary_json(const ExperimentResult& result);

enum class SweepAxis { C, ConnectivityRatio };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepPoint {
  double value = 0.0;
  ExperimentResult result;
};

/// Grid value of c with the fewest iterations to 1e-6 for `method` (first
/// such value on ties; the first grid value when none reaches it).
double tune_c(const ExperimentConfig& config, Method method, const std::vector<double>& grid);

/// One experiment per value with all seeds shared. The c axis applies the
/// value to every configured method. On the r_c axis a non-empty `c_grid`
/// picks c per point and method with tune_c.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, SweepAxis axis,
                                  const std::vector<double>& values,
                                  const std::vector<double>& c_grid = {});

/// Per method, sweep values ordered by iterations to 1e-6 (unreached last).
std::string sweep_summary_json(const std::vector<SweepPoint>& points, SweepAxis axis);

/// Name used for per-value output directories, e.g. "c_0.8" or "r_c_0.2".
std::string sweep_point_name(SweepAxis axis, double value);

}  // namespace dqm
