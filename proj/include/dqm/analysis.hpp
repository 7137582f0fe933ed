#pragma once

#include "dqm/graph.hpp"
#include "dqm/objective.hpp"
#include "dqm/solvers.hpp"
#include "dqm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dqm {

/// (2 L_o)^+ v applied block-wise, using the n x n pseudoinverse of the graph.
Vector apply_oriented_gram_pinv(const IncidenceOperators& ops, const Vector& v);

/// || alpha - E_o (E_o^T E_o)^+ E_o^T alpha ||: distance of alpha from range(E_o).
double column_space_residual(const IncidenceOperators& ops, const Vector& alpha);

/// The alpha in range(E_o) with E_o^T alpha = phi. Throws SolverError when the
/// reconstruction residual exceeds `tol` (phi has left range(E_o^T)).
Vector recover_alpha(const StackedVector& phi, const IncidenceOperators& ops, double tol = 1e-9);

struct OptimalCertificate {
  Vector x_tilde;  // centralized minimizer, R^p
  Vector x_star;   // stacked copies, R^{np}
  Vector z_star;   // 1/2 E_u x*
  Vector alpha_star;
  double kkt_residual = 0.0;        // || grad f(x*) + E_o^T alpha* ||
  double consensus_residual = 0.0;  // || E_o x* ||
  double column_space_residual = 0.0;
};

inline constexpr double kKktTol = 1e-8;
inline constexpr double kColumnSpaceTol = 1e-9;

/// Builds (x*, z*, alpha*) from the centralized solution. Throws SolverError
/// if any residual exceeds its tolerance.
OptimalCertificate optimal_certificate(const ConsensusProblem& problem,
                                       const IncidenceOperators& ops,
                                       CentralizedOptions options = {});

/// c ||z - z*||^2 + ||alpha - alpha*||^2 / c.
double energy(const Vector& z, const Vector& alpha, const OptimalCertificate& cert, double c);

struct ApproximationError {
  StackedVector e;
  double norm = 0.0;
  double bound = 0.0;
  /// DQM only: the (L/2)||dx||^2 branch of the bound is the smaller one.
  bool quadratic_branch = false;
};

/// Gradient-model error of one primal step and its a-priori bound:
/// DQM  e = grad f(x) + H(x) dx - grad f(x + dx), bound min{2M|dx|, L/2 |dx|^2};
/// DLM  e = grad f(x) + rho dx - grad f(x + dx),  bound (rho + M)|dx|;
/// DADMM has an exact update, so e = 0 and bound = 0.
ApproximationError approx_error(Method method, const ConsensusProblem& problem,
                                const StackedVector& x_k, const StackedVector& x_next,
                                double rho);

struct RateParameters {
  double mu = 1.01;
  double mu_prime = 1.01;
  /// Fixed eta; when empty the geometric mean of the admissible interval is used.
  std::optional<double> eta;
  double c = 1.0;
  double rho = 0.0;
  CurvatureEstimates curvature;
  SpectralData spectral;
};

/// Lower bound on c required for a guaranteed linear rate: 4M^2/(m gamma_u^2)
/// for DQM, (rho+M)^2/(m gamma_u^2) for DLM, 0 for DADMM.
double c_threshold(Method method, const RateParameters& params);

/// Throws AssumptionViolation naming the first failed hypothesis
/// (m > 0, non-bipartite graph, mu, mu' > 1, c above threshold).
void check_rate_hypotheses(Method method, const RateParameters& params);

/// min{(L/2)|dx|, 2M}.
double dqm_zeta(const RateParameters& params, double step_norm);

/// delta for a given error coefficient zeta (DQM formula; DLM uses zeta = rho+M,
/// DADMM zeta = 0). Throws AssumptionViolation if eta leaves (zeta/m, c gamma_u^2/zeta).
double rate_constant_for_zeta(const RateParameters& params, double zeta);

/// Method-specific delta_k; `step_norm` is ||x_{k+1} - x_k|| (ignored except for DQM).
double rate_constant(Method method, const RateParameters& params, double step_norm);

/// zeta -> 0 with mu' -> 1 taken in closed form:
/// min{(mu-1) gamma_o^2 / (mu Gamma_u^2), m / (c Gamma_u^2/4 + mu M^2/(c gamma_o^2))}.
double rate_constant_limit(const RateParameters& params);

/// Full-variable iterates plus, when they came from a reduced run, the phi
/// sequence they were reconstructed from.
struct AuditTrace {
  std::vector<FullState> states;
  std::vector<StackedVector> phi;
};

/// z_k = 1/2 E_u x_k, alpha_k = E_o (2L_o)^+ phi_k, beta_k = -alpha_k.
/// Does not validate phi; the audit reports column-space failures.
AuditTrace audit_trace_from_reduced(const IterationTrace& trace, const IncidenceOperators& ops);
AuditTrace audit_trace_from_full(std::vector<FullState> states);

enum class CheckStatus { Pass, Fail, Skipped };
std::string to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  /// min over checked iterations of (allowed - measured); negative means failure.
  double worst_margin = 0.0;
  /// Largest measured left-hand side.
  double worst_value = 0.0;
  long first_failure = -1;
  long checked = 0;
  std::string note;
};

struct AuditReport {
  Method method = Method::DQM;
  std::vector<CheckResult> checks;
  /// DQM: first k at which the quadratic branch of the error bound is active.
  long quadratic_crossover = -1;

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
};

struct AuditOptions {
  double mu = 1.01;
  double mu_prime = 1.01;
  std::optional<double> eta;
  double equality_tol = 1e-8;
  double consistency_tol = 1e-10;
  double column_space_tol = kColumnSpaceTol;
  /// Relative slack on the energy inequalities.
  double relative_slack = 1e-9;
  /// Energies below resolution * (1 + V_0) are at rounding level and are not
  /// compared.
  double resolution = 1e-20;
};

RateParameters rate_parameters(const ConsensusProblem& problem, const IncidenceOperators& ops,
                               const SolverConfig& config, const AuditOptions& options = {});

/// Checks along a trace: multiplier symmetry, primal/auxiliary consistency,
/// dual column space, the three optimality relations, the error bound, the
/// energy contraction and the primal-error corollary. Rate checks are
/// Skipped (not Fail) when their hypotheses do not hold.
AuditReport audit(const ConsensusProblem& problem, const IncidenceOperators& ops,
                  const SolverConfig& config, const AuditTrace& trace,
                  const OptimalCertificate& cert, const AuditOptions& options = {});

struct TraceRow {
  long k = 0;
  double rel_err = 0.0;
  double V = 0.0;
  /// ||e_k|| and its bound for the step k -> k+1 (NaN on the last row).
  double err_bound_lhs = 0.0;
  double err_bound_rhs = 0.0;
  /// NaN when the rate hypotheses do not hold or on the last row.
  double delta_k = 0.0;
  std::int64_t wall_ns = 0;
};

std::vector<TraceRow> trace_rows(const ConsensusProblem& problem, const IncidenceOperators& ops,
                                 const IterationTrace& trace, const OptimalCertificate& cert,
                                 const AuditOptions& options = {});

/// ||x_k - x*|| / ||x_0 - x*|| for every k.
std::vector<double> relative_errors(const IterationTrace& trace, const OptimalCertificate& cert);

/// First k with rel_err <= threshold, or -1.
long iterations_to(const std::vector<double>& rel_err, double threshold);

}  // namespace dqm
