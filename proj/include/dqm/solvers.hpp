#pragma once

#include "dqm/graph.hpp"
#include "dqm/objective.hpp"
#include "dqm/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dqm {

/// Node-local iterate of the reduced recursions: primal x and the aggregated
/// dual phi = E_o^T alpha. phi starts at zero and its blocks always sum to zero.
struct ReducedState {
  StackedVector x;
  StackedVector phi;
  long k = 0;

  /// x0 (zero when omitted) and phi0 = 0.
  static ReducedState initial(const ConsensusProblem& problem,
                              const std::optional<StackedVector>& x0 = std::nullopt);
};

/// Iterate of the textbook ADMM recursion over the edge-split problem:
/// x in R^{np}; z, alpha, beta in R^{mp}.
struct FullState {
  Vector x;
  Vector z;
  Vector alpha;
  Vector beta;
  long k = 0;

  static FullState zeros(const IncidenceOperators& ops);
};

struct SolverConfig {
  Method method = Method::DQM;
  double c = 1.0;
  /// Proximal weight of the DLM linearization.
  double rho = 1.0;
  int max_iter = 100;
  /// Inner-Newton gradient tolerance for the exact (DADMM) primal update.
  double inner_tol = 1e-12;
  int inner_max = 50;

  /// Throws PreconditionError on c <= 0, rho <= 0 (DLM) or negative budgets.
  void validate() const;
};

/// One synchronous round: every node updates x from iteration-k neighbor
/// values, then (after all x updates) phi from iteration-(k+1) values.
ReducedState dqm_step(const ReducedState& state, const ConsensusProblem& problem, double c);
ReducedState dlm_step(const ReducedState& state, const ConsensusProblem& problem, double c,
                      double rho);
ReducedState dadmm_step(const ReducedState& state, const ConsensusProblem& problem, double c,
                        double inner_tol = 1e-12, int inner_max = 50);
/// Dispatches on config.method.
ReducedState reduced_step(const ReducedState& state, const ConsensusProblem& problem,
                          const SolverConfig& config);

/// Explicit A = [A_s; A_d] and B = [-I; -I] of the constraint A x + B z = 0.
struct FullFormMatrices {
  SparseMatrix A;
  SparseMatrix B;
  static FullFormMatrices from(const IncidenceOperators& ops);
};

/// Reference implementation of the primal, auxiliary and multiplier updates
/// with explicit A, B, z and lambda = [alpha; beta]. Dense algebra; meant as an
/// oracle for the reduced recursions at small n.
FullState full_form_step(const FullState& state, const ConsensusProblem& problem,
                         const FullFormMatrices& mats, const SolverConfig& config);

/// Runs `iterations` full-form steps from the all-zero state; returns k = 0..iterations.
std::vector<FullState> run_full_form(const ConsensusProblem& problem, const IncidenceOperators& ops,
                                     const SolverConfig& config, int iterations);

struct CentralizedOptions {
  double tol = 1e-12;
  int max_iter = 200;
};

/// Newton's method on g(x) = sum_i f_i(x). Throws SolverError when the
/// Hessian becomes singular (e.g. separable unregularized logistic data) or
/// the iteration cap is hit.
Vector centralized_solve(const ConsensusProblem& problem, CentralizedOptions options = {});

struct RunOptions {
  std::optional<StackedVector> x0;
  /// Record cumulative wall-clock per iteration. Off by default so that
  /// repeated runs produce identical traces.
  bool timing = false;
  /// Invoked for k = 0..max_iter after each state is produced.
  std::function<void(const ReducedState&)> on_iterate;
};

struct IterationTrace {
  Method method = Method::DQM;
  SolverConfig config;
  /// states[k] is the iterate at k = 0..max_iter.
  std::vector<ReducedState> states;
  /// Cumulative nanoseconds at each k; all zero unless timing was requested.
  std::vector<std::int64_t> wall_ns;
};

/// Fixed-budget run of config.method from x0 (default 0) and phi0 = 0.
/// Step failures are rethrown as SolverError tagged with the iteration.
IterationTrace run(const ConsensusProblem& problem, const SolverConfig& config,
                   const RunOptions& options = {});

}  // namespace dqm
