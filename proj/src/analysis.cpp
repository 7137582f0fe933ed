#include "dqm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dqm {
namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Vector apply_oriented_gram_pinv(const IncidenceOperators& ops, const Vector& v) {
  if (v.size() != static_cast<Index>(ops.n) * ops.p)
    throw PreconditionError("apply_oriented_gram_pinv: expected a vector of length n*p");
  Eigen::Map<const RowMajorMatrix> blocks(v.data(), ops.n, ops.p);
  Vector out(v.size());
  Eigen::Map<RowMajorMatrix>(out.data(), ops.n, ops.p) = ops.oriented_gram_pinv * blocks;
  return out;
}

double column_space_residual(const IncidenceOperators& ops, const Vector& alpha) {
  const Vector projected =
      ops.oriented * apply_oriented_gram_pinv(ops, ops.oriented.transpose() * alpha);
  return (alpha - projected).norm();
}

Vector recover_alpha(const StackedVector& phi, const IncidenceOperators& ops, double tol) {
  const Vector alpha = ops.oriented * apply_oriented_gram_pinv(ops, phi.values());
  const double res = (ops.oriented.transpose() * alpha - phi.values()).norm();
  if (!(res <= tol))
    throw SolverError("recover_alpha: phi is not in the range of E_o^T (residual " + fmt(res) +
                      "); the dual iterate is corrupted");
  return alpha;
}

OptimalCertificate optimal_certificate(const ConsensusProblem& problem,
                                       const IncidenceOperators& ops,
                                       CentralizedOptions options) {
  OptimalCertificate cert;
  cert.x_tilde = centralized_solve(problem, options);
  const StackedVector xs = StackedVector::replicate(cert.x_tilde, problem.num_nodes());
  cert.x_star = xs.values();
  cert.z_star = 0.5 * (ops.unoriented * cert.x_star);
  const Vector g = aggregate_gradient(problem, xs).values();
  cert.alpha_star = -(ops.oriented * apply_oriented_gram_pinv(ops, g));
  cert.kkt_residual = (g + ops.oriented.transpose() * cert.alpha_star).norm();
  cert.consensus_residual = (ops.oriented * cert.x_star).norm();
  cert.column_space_residual = column_space_residual(ops, cert.alpha_star);
  if (!(cert.kkt_residual <= kKktTol))
    throw SolverError("optimal_certificate: KKT residual " + fmt(cert.kkt_residual) +
                      " exceeds " + fmt(kKktTol));
  if (cert.consensus_residual != 0.0)
    throw SolverError("optimal_certificate: E_o x* is not zero");
  if (!(cert.column_space_residual <= kColumnSpaceTol))
    throw SolverError("optimal_certificate: alpha* is not in the range of E_o (residual " +
                      fmt(cert.column_space_residual) + ")");
  return cert;
}

double energy(const Vector& z, const Vector& alpha, const OptimalCertificate& cert, double c) {
  if (z.size() != cert.z_star.size() || alpha.size() != cert.alpha_star.size())
    throw PreconditionError("energy: dimension mismatch");
  return c * (z - cert.z_star).squaredNorm() + (alpha - cert.alpha_star).squaredNorm() / c;
}

ApproximationError approx_error(Method method, const ConsensusProblem& problem,
                                const StackedVector& x_k, const StackedVector& x_next,
                                double rho) {
  const Index p = problem.dimension();
  const int n = problem.num_nodes();
  if (x_k.num_blocks() != n || x_next.num_blocks() != n || x_k.block_dim() != p ||
      x_next.block_dim() != p)
    throw PreconditionError("approx_error: iterates do not match the problem dimensions");
  const StackedVector dx(x_next.values() - x_k.values(), p);
  const double step = dx.values().norm();
  const CurvatureEstimates curv = curvature_estimates(problem);

  ApproximationError out;
  out.e = StackedVector(n, p);
  switch (method) {
    case Method::DQM: {
      for (int i = 0; i < n; ++i)
        out.e.block(i) = -problem.local(i).gradient_remainder(x_k.block(i), dx.block(i));
      const double linear = 2.0 * curv.M * step;
      const double quadratic = 0.5 * curv.L * step * step;
      out.bound = std::min(linear, quadratic);
      out.quadratic_branch = quadratic < linear;
      break;
    }
    case Method::DLM:
      for (int i = 0; i < n; ++i) {
        const Vector xi = x_k.block(i);
        const Vector di = dx.block(i);
        out.e.block(i) = rho * di - problem.local(i).hessian(xi) * di -
                         problem.local(i).gradient_remainder(xi, di);
      }
      out.bound = (rho + curv.M) * step;
      break;
    case Method::DADMM:
      break;
  }
  out.norm = out.e.values().norm();
  return out;
}

// ---------------------------------------------------------------------------

double c_threshold(Method method, const RateParameters& params) {
  const double m = params.curvature.m;
  const double M = params.curvature.M;
  const double gu2 = params.spectral.gamma_u * params.spectral.gamma_u;
  if (method == Method::DADMM) return 0.0;
  if (!(m > 0.0) || !(gu2 > 0.0)) return kInf;
  const double zeta = method == Method::DQM ? 2.0 * M : params.rho + M;
  return zeta * zeta / (m * gu2);
}

void check_rate_hypotheses(Method method, const RateParameters& params) {
  if (!(params.curvature.m > 0.0))
    throw AssumptionViolation("strong convexity constant m is zero; set lambda_reg > 0");
  if (params.spectral.bipartite || !(params.spectral.gamma_u > 0.0))
    throw AssumptionViolation("graph is bipartite (gamma_u = 0)");
  if (!(params.spectral.gamma_o > 0.0))
    throw AssumptionViolation("gamma_o = 0 (graph has no edges)");
  if (!(params.mu > 1.0)) throw AssumptionViolation("mu must exceed 1");
  if (!(params.mu_prime > 1.0)) throw AssumptionViolation("mu' must exceed 1");
  if (!(params.c > 0.0)) throw AssumptionViolation("c must be positive");
  if (method == Method::DLM && !(params.rho > 0.0))
    throw AssumptionViolation("rho must be positive");
  const double threshold = c_threshold(method, params);
  if (!(params.c > threshold))
    throw AssumptionViolation("c = " + fmt(params.c) + " does not exceed the " +
                              to_string(method) + " threshold " + fmt(threshold));
}

double dqm_zeta(const RateParameters& params, double step_norm) {
  return std::min(0.5 * params.curvature.L * step_norm, 2.0 * params.curvature.M);
}

double rate_constant_for_zeta(const RateParameters& params, double zeta) {
  const double m = params.curvature.m;
  const double M = params.curvature.M;
  const double c = params.c;
  const double gu2 = params.spectral.gamma_u * params.spectral.gamma_u;
  const double Gu2 = params.spectral.Gamma_u * params.spectral.Gamma_u;
  const double go2 = params.spectral.gamma_o * params.spectral.gamma_o;
  const double mu = params.mu;
  const double mup = params.mu_prime;
  if (!(zeta >= 0.0)) throw PreconditionError("rate_constant: zeta must be non-negative");
  if (!(m > 0.0) || !(gu2 > 0.0) || !(go2 > 0.0) || !(mu > 1.0) || !(mup > 1.0) || !(c > 0.0))
    throw AssumptionViolation("rate_constant: need m > 0, gamma_u > 0, gamma_o > 0, mu, mu' > 1");

  const double lo = zeta / m;
  const double hi = zeta > 0.0 ? c * gu2 / zeta : kInf;
  // The geometric mean of (zeta/m, c gamma_u^2/zeta) does not depend on zeta.
  const double eta = params.eta ? *params.eta : std::sqrt(c * gu2 / m);
  if (!(eta > lo && eta < hi))
    throw AssumptionViolation("eta = " + fmt(eta) + " is outside (zeta/m, c gamma_u^2/zeta) = (" +
                              fmt(lo) + ", " + fmt(hi) + ")");

  const double first = (mu - 1.0) * (c * gu2 - eta * zeta) * go2 /
                       (mu * mup * (c * Gu2 * gu2 + 4.0 * zeta * zeta / (c * (mup - 1.0))));
  const double second = (m - zeta / eta) / (c * Gu2 / 4.0 + mu * M * M / (c * go2));
  return std::min(first, second);
}

double rate_constant(Method method, const RateParameters& params, double step_norm) {
  check_rate_hypotheses(method, params);
  switch (method) {
    case Method::DQM: return rate_constant_for_zeta(params, dqm_zeta(params, step_norm));
    case Method::DLM: return rate_constant_for_zeta(params, params.rho + params.curvature.M);
    case Method::DADMM: return rate_constant_for_zeta(params, 0.0);
  }
  throw PreconditionError("unknown method");
}

double rate_constant_limit(const RateParameters& params) {
  const double m = params.curvature.m;
  const double M = params.curvature.M;
  const double c = params.c;
  const double Gu2 = params.spectral.Gamma_u * params.spectral.Gamma_u;
  const double go2 = params.spectral.gamma_o * params.spectral.gamma_o;
  if (!(m > 0.0) || !(go2 > 0.0) || !(Gu2 > 0.0) || !(params.mu > 1.0) || !(c > 0.0))
    throw AssumptionViolation("rate_constant_limit: need m > 0, gamma_o > 0 and mu > 1");
  const double first = (params.mu - 1.0) * go2 / (params.mu * Gu2);
  const double second = m / (c * Gu2 / 4.0 + params.mu * M * M / (c * go2));
  return std::min(first, second);
}

// ---------------------------------------------------------------------------

namespace {

FullState reconstruct(const ReducedState& s, const IncidenceOperators& ops) {
  FullState f;
  f.x = s.x.values();
  f.z = 0.5 * (ops.unoriented * f.x);
  f.alpha = ops.oriented * apply_oriented_gram_pinv(ops, s.phi.values());
  f.beta = -f.alpha;
  f.k = s.k;
  return f;
}

struct Check {
  CheckResult r;
  explicit Check(std::string name) {
    r.name = std::move(name);
    r.worst_margin = kInf;
  }
  void observe(long k, double value, double allowed) {
    ++r.checked;
    r.worst_margin = std::min(r.worst_margin, allowed - value);
    r.worst_value = std::max(r.worst_value, value);
    if (!(value <= allowed)) {
      if (r.first_failure < 0) r.first_failure = k;
      r.status = CheckStatus::Fail;
      r.worst_margin = std::isnan(value) ? -kInf : r.worst_margin;
    }
  }
  void skip(std::string why) {
    r.status = CheckStatus::Skipped;
    r.note = std::move(why);
  }
  CheckResult done() {
    if (r.checked == 0 && r.status != CheckStatus::Skipped) r.worst_margin = 0.0;
    return r;
  }
};

}  // namespace

AuditTrace audit_trace_from_reduced(const IterationTrace& trace, const IncidenceOperators& ops) {
  AuditTrace out;
  out.states.reserve(trace.states.size());
  out.phi.reserve(trace.states.size());
  for (const ReducedState& s : trace.states) {
    out.states.push_back(reconstruct(s, ops));
    out.phi.push_back(s.phi);
  }
  return out;
}

AuditTrace audit_trace_from_full(std::vector<FullState> states) {
  AuditTrace out;
  out.states = std::move(states);
  return out;
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "?";
}

bool AuditReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult* AuditReport::find(const std::string& name) const {
  for (const CheckResult& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

RateParameters rate_parameters(const ConsensusProblem& problem, const IncidenceOperators& ops,
                               const SolverConfig& config, const AuditOptions& options) {
  RateParameters params;
  params.mu = options.mu;
  params.mu_prime = options.mu_prime;
  params.eta = options.eta;
  params.c = config.c;
  params.rho = config.rho;
  params.curvature = curvature_estimates(problem);
  params.spectral = spectral_bounds(ops);
  return params;
}

AuditReport audit(const ConsensusProblem& problem, const IncidenceOperators& ops,
                  const SolverConfig& config, const AuditTrace& trace,
                  const OptimalCertificate& cert, const AuditOptions& options) {
  const auto& S = trace.states;
  const long K = static_cast<long>(S.size());
  const Index p = problem.dimension();
  const double c = config.c;
  const Method method = config.method;
  if (!trace.phi.empty() && trace.phi.size() != S.size())
    throw PreconditionError("audit: phi sequence length differs from the state sequence");
  for (const FullState& s : S)
    if (s.x.size() != cert.x_star.size() || s.z.size() != cert.z_star.size() ||
        s.alpha.size() != cert.alpha_star.size() || s.beta.size() != cert.alpha_star.size())
      throw PreconditionError("audit: state dimensions do not match the certificate");

  AuditReport report;
  report.method = method;
  const RateParameters params = rate_parameters(problem, ops, config, options);
  const Vector grad_star =
      aggregate_gradient(problem, StackedVector(cert.x_star, p)).values();

  Check symmetry("multiplier_symmetry");
  Check consistency("primal_auxiliary_consistency");
  Check column("dual_column_space");
  Check rel1("optimality_relation_1");
  Check rel2("optimality_relation_2");
  Check rel3("optimality_relation_3");
  Check bound("error_bound");
  Check contraction("energy_contraction");
  Check corollary("primal_error_corollary");

  std::vector<double> V(static_cast<std::size_t>(K));
  for (long k = 0; k < K; ++k) {
    const FullState& s = S[static_cast<std::size_t>(k)];
    V[static_cast<std::size_t>(k)] = energy(s.z, s.alpha, cert, c);
    symmetry.observe(k, (s.alpha + s.beta).norm(), options.consistency_tol);
    consistency.observe(k, (ops.unoriented * s.x - 2.0 * s.z).norm(), options.consistency_tol);
    if (trace.phi.empty()) {
      column.observe(k, column_space_residual(ops, s.alpha), options.column_space_tol);
    } else {
      const Vector& phi = trace.phi[static_cast<std::size_t>(k)].values();
      column.observe(k, (ops.oriented.transpose() * s.alpha - phi).norm(),
                     options.column_space_tol);
    }
    rel3.observe(k,
                 (ops.unoriented * (s.x - cert.x_star) - 2.0 * (s.z - cert.z_star)).norm(),
                 options.consistency_tol);
  }

  std::string rate_skip;
  try {
    check_rate_hypotheses(method, params);
  } catch (const AssumptionViolation& e) {
    rate_skip = std::string("assumption violated: ") + e.what();
  }
  if (!rate_skip.empty()) contraction.skip(rate_skip);
  const bool corollary_ok = !params.spectral.bipartite && params.spectral.gamma_u > 0.0;
  if (!corollary_ok) corollary.skip("assumption violated: graph is bipartite (gamma_u = 0)");
  if (method == Method::DADMM) bound.skip("exact primal update has no approximation error");

  const double floor = options.resolution * (1.0 + (K > 0 ? V[0] : 0.0));
  long resolved_until = K;
  for (long k = 0; k < K; ++k)
    if (V[static_cast<std::size_t>(k)] <= floor) {
      resolved_until = k;
      break;
    }

  for (long k = 0; k + 1 < K; ++k) {
    const FullState& s = S[static_cast<std::size_t>(k)];
    const FullState& t = S[static_cast<std::size_t>(k + 1)];
    const StackedVector xk(s.x, p);
    const StackedVector xn(t.x, p);
    const ApproximationError err = approx_error(method, problem, xk, xn, config.rho);

    const Vector g_next = aggregate_gradient(problem, xn).values();
    const Vector r1 = g_next - grad_star + err.e.values() +
                      ops.oriented.transpose() * (t.alpha - cert.alpha_star) -
                      c * (ops.unoriented.transpose() * (s.z - t.z));
    rel1.observe(k, r1.norm(), options.equality_tol);
    const Vector r2 = 2.0 * (t.alpha - s.alpha) - c * (ops.oriented * (t.x - cert.x_star));
    rel2.observe(k, r2.norm(), options.equality_tol);

    if (method != Method::DADMM) {
      bound.observe(k, err.norm, err.bound);
      if (method == Method::DQM && err.quadratic_branch && report.quadratic_crossover < 0)
        report.quadratic_crossover = k;
    }

    if (k < resolved_until) {
      const double Vk = V[static_cast<std::size_t>(k)];
      const double Vn = V[static_cast<std::size_t>(k + 1)];
      if (rate_skip.empty()) {
        const double delta = rate_constant(method, params, (t.x - s.x).norm());
        contraction.observe(k, Vn, Vk / (1.0 + delta) + options.relative_slack * Vk);
      }
      if (corollary_ok) {
        const double gu2 = params.spectral.gamma_u * params.spectral.gamma_u;
        const double rhs = 4.0 * Vk / (c * gu2);
        corollary.observe(k, (s.x - cert.x_star).squaredNorm(),
                          rhs * (1.0 + options.relative_slack));
      }
    }
  }
  if (resolved_until < K) {
    const std::string note =
        "energy reached rounding level at k = " + std::to_string(resolved_until) +
        "; later iterations not compared";
    if (contraction.r.status != CheckStatus::Skipped) contraction.r.note = note;
    if (corollary.r.status != CheckStatus::Skipped) corollary.r.note = note;
  }

  for (Check* ch : {&symmetry, &consistency, &column, &rel1, &rel2, &rel3, &bound, &contraction,
                    &corollary})
    report.checks.push_back(ch->done());
  return report;
}

std::vector<double> relative_errors(const IterationTrace& trace, const OptimalCertificate& cert) {
  std::vector<double> out;
  out.reserve(trace.states.size());
  if (trace.states.empty()) return out;
  double base = (trace.states.front().x.values() - cert.x_star).norm();
  if (base == 0.0) base = 1.0;
  for (const ReducedState& s : trace.states) out.push_back((s.x.values() - cert.x_star).norm() / base);
  return out;
}

long iterations_to(const std::vector<double>& rel_err, double threshold) {
  for (std::size_t k = 0; k < rel_err.size(); ++k)
    if (rel_err[k] <= threshold) return static_cast<long>(k);
  return -1;
}

std::vector<TraceRow> trace_rows(const ConsensusProblem& problem, const IncidenceOperators& ops,
                                 const IterationTrace& trace, const OptimalCertificate& cert,
                                 const AuditOptions& options) {
  const RateParameters params = rate_parameters(problem, ops, trace.config, options);
  bool rate_ok = true;
  try {
    check_rate_hypotheses(trace.method, params);
  } catch (const AssumptionViolation&) {
    rate_ok = false;
  }
  const std::vector<double> rel = relative_errors(trace, cert);
  std::vector<TraceRow> rows;
  rows.reserve(trace.states.size());
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    const ReducedState& s = trace.states[k];
    TraceRow row;
    row.k = s.k;
    row.rel_err = rel[k];
    const FullState f = reconstruct(s, ops);
    row.V = energy(f.z, f.alpha, cert, trace.config.c);
    row.wall_ns = k < trace.wall_ns.size() ? trace.wall_ns[k] : 0;
    if (k + 1 < trace.states.size()) {
      const ReducedState& t = trace.states[k + 1];
      const ApproximationError err = approx_error(trace.method, problem, s.x, t.x, trace.config.rho);
      row.err_bound_lhs = err.norm;
      row.err_bound_rhs = err.bound;
      row.delta_k = rate_ok ? rate_constant(trace.method, params, (t.x.values() - s.x.values()).norm())
                            : kNaN;
    } else {
      row.err_bound_lhs = kNaN;
      row.err_bound_rhs = kNaN;
      row.delta_k = kNaN;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dqm
