#include "dqm/solvers.hpp"

#include "dqm/kernels.hpp"
#include "newton.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace dqm {
namespace {

using detail::line_search;
using detail::sci;

std::span<const double> cspan(const Eigen::Ref<const Vector>& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// c d_i x_i + c sum_{j in N_i} x_j - phi_i: the part of the primal right-hand
/// side shared by all three methods (neighbors summed in ascending order).
Vector shared_rhs(const ReducedState& s, const Network& net, int i, double c) {
  const Index p = s.x.block_dim();
  Vector nsum = Vector::Zero(p);
  for (int j : net.neighbors(i)) kernels::axpy(1.0, cspan(s.x.block(j)), mspan(nsum));
  Vector rhs = Vector::Zero(p);
  kernels::axpy(c * net.degree(i), cspan(s.x.block(i)), mspan(rhs));
  kernels::axpy(c, cspan(nsum), mspan(rhs));
  kernels::axpy(-1.0, cspan(s.phi.block(i)), mspan(rhs));
  return rhs;
}

/// phi_{i,k+1} = phi_{i,k} + c sum_{j in N_i} (x_{i,k+1} - x_{j,k+1}).
void dual_update(ReducedState& next, const ReducedState& prev, const Network& net, double c) {
  const Index p = next.x.block_dim();
  Vector diff(p);
  for (int i = 0; i < net.num_nodes(); ++i) {
    Vector acc = Vector::Zero(p);
    for (int j : net.neighbors(i)) {
      kernels::subtract(cspan(next.x.block(i)), cspan(next.x.block(j)), mspan(diff));
      kernels::axpy(1.0, cspan(diff), mspan(acc));
    }
    Vector phi = prev.phi.block(i);
    kernels::axpy(c, cspan(acc), mspan(phi));
    next.phi.block(i) = phi;
  }
}

void check_state(const ReducedState& s, const ConsensusProblem& problem) {
  if (s.x.num_blocks() != problem.num_nodes() || s.x.block_dim() != problem.dimension() ||
      s.phi.num_blocks() != problem.num_nodes() || s.phi.block_dim() != problem.dimension())
    throw PreconditionError("reduced state does not match the problem dimensions");
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0)) throw PreconditionError(std::string(what) + " must be positive");
}

ReducedState begin_step(const ReducedState& state) {
  ReducedState next;
  next.x = StackedVector(state.x.num_blocks(), state.x.block_dim());
  next.phi = StackedVector(state.x.num_blocks(), state.x.block_dim());
  next.k = state.k + 1;
  return next;
}

}  // namespace

ReducedState ReducedState::initial(const ConsensusProblem& problem,
                                   const std::optional<StackedVector>& x0) {
  ReducedState s;
  s.x = x0 ? *x0 : StackedVector(problem.num_nodes(), problem.dimension());
  s.phi = StackedVector(problem.num_nodes(), problem.dimension());
  check_state(s, problem);
  return s;
}

void SolverConfig::validate() const {
  require_positive(c, "c");
  if (method == Method::DLM) require_positive(rho, "rho");
  if (max_iter < 0) throw PreconditionError("max_iter must be non-negative");
  if (method == Method::DADMM) {
    require_positive(inner_tol, "inner_tol");
    if (inner_max < 1) throw PreconditionError("inner_max must be at least 1");
  }
}

ReducedState dqm_step(const ReducedState& state, const ConsensusProblem& problem, double c) {
  check_state(state, problem);
  require_positive(c, "c");
  const Network& net = problem.network;
  ReducedState next = begin_step(state);
  Vector g;
  Matrix h;
  for (int i = 0; i < net.num_nodes(); ++i) {
    const Vector xi = state.x.block(i);
    problem.local(i).gradient_and_hessian(xi, g, h);
    Vector rhs = shared_rhs(state, net, i, c);
    const Vector hx = h * xi;
    kernels::axpy(1.0, cspan(hx), mspan(rhs));
    kernels::axpy(-1.0, cspan(g), mspan(rhs));
    Matrix system = h;
    system.diagonal().array() += 2.0 * c * net.degree(i);
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success)
      throw SolverError("DQM: local system at node " + std::to_string(i) +
                            " is not positive definite",
                        i, state.k);
    next.x.block(i) = llt.solve(rhs);
  }
  dual_update(next, state, net, c);
  return next;
}

ReducedState dlm_step(const ReducedState& state, const ConsensusProblem& problem, double c,
                      double rho) {
  check_state(state, problem);
  require_positive(c, "c");
  require_positive(rho, "rho");
  const Network& net = problem.network;
  ReducedState next = begin_step(state);
  for (int i = 0; i < net.num_nodes(); ++i) {
    const Vector xi = state.x.block(i);
    const Vector g = problem.local(i).gradient(xi);
    Vector rhs = shared_rhs(state, net, i, c);
    const Vector rx = rho * xi;
    kernels::axpy(1.0, cspan(rx), mspan(rhs));
    kernels::axpy(-1.0, cspan(g), mspan(rhs));
    next.x.block(i) = rhs / (2.0 * c * net.degree(i) + rho);
  }
  dual_update(next, state, net, c);
  return next;
}

namespace {

/// Minimizes f_i(y) + c d_i ||y||^2 - r^T y by damped Newton from `start`.
Vector exact_local_update(const LocalObjective& f, const Vector& start, const Vector& r,
                          double cd, double tol, int max_iter, int node, long k) {
  auto merit = [&](const Vector& y) { return f.value(y) + cd * y.squaredNorm() - r.dot(y); };
  Vector y = start;
  Vector g;
  Matrix h;
  for (int it = 0;; ++it) {
    f.gradient_and_hessian(y, g, h);
    const Vector grad = g + 2.0 * cd * y - r;
    const double res = grad.norm();
    if (res <= tol) return y;
    if (it >= max_iter)
      throw SolverError("DADMM: inner Newton did not converge at node " + std::to_string(node) +
                            " (residual " + sci(res) + " after " +
                            std::to_string(max_iter) + " iterations)",
                        node, k);
    h.diagonal().array() += 2.0 * cd;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success)
      throw SolverError("DADMM: inner Hessian not positive definite at node " + std::to_string(node),
                        node, k);
    const Vector step = -llt.solve(grad);
    const double t = line_search(
        [&](double s) { return merit(y + s * step); }, merit(y), grad.dot(step), [&] {
          const Vector trial = y + step;
          Vector gt;
          Matrix ht;
          f.gradient_and_hessian(trial, gt, ht);
          return (gt + 2.0 * cd * trial - r).norm();
        }, res);
    if (t == 0.0)
      throw SolverError("DADMM: inner line search stalled at node " + std::to_string(node) +
                            " (residual " + sci(res) + ")",
                        node, k);
    y += t * step;
  }
}

}  // namespace

ReducedState dadmm_step(const ReducedState& state, const ConsensusProblem& problem, double c,
                        double inner_tol, int inner_max) {
  check_state(state, problem);
  require_positive(c, "c");
  const Network& net = problem.network;
  ReducedState next = begin_step(state);
  for (int i = 0; i < net.num_nodes(); ++i) {
    const Vector rhs = shared_rhs(state, net, i, c);
    next.x.block(i) = exact_local_update(problem.local(i), state.x.block(i), rhs,
                                         c * net.degree(i), inner_tol, inner_max, i, state.k);
  }
  dual_update(next, state, net, c);
  return next;
}

ReducedState reduced_step(const ReducedState& state, const ConsensusProblem& problem,
                          const SolverConfig& config) {
  switch (config.method) {
    case Method::DQM: return dqm_step(state, problem, config.c);
    case Method::DLM: return dlm_step(state, problem, config.c, config.rho);
    case Method::DADMM:
      return dadmm_step(state, problem, config.c, config.inner_tol, config.inner_max);
  }
  throw PreconditionError("unknown method");
}

Vector centralized_solve(const ConsensusProblem& problem, CentralizedOptions options) {
  const Index p = problem.dimension();
  auto total_value = [&](const Vector& x) {
    double v = 0.0;
    for (int i = 0; i < problem.num_nodes(); ++i) v += problem.local(i).value(x);
    return v;
  };
  constexpr double kSingularRatio = 1e-10;
  double curvature_scale = 0.0;
  for (int i = 0; i < problem.num_nodes(); ++i) curvature_scale += problem.local(i).curvature().M;
  curvature_scale = std::max(curvature_scale, std::numeric_limits<double>::min());
  Vector x = Vector::Zero(p);
  Vector g(p), gi;
  Matrix h(p, p), hi;
  for (int it = 0;; ++it) {
    g.setZero();
    h.setZero();
    for (int i = 0; i < problem.num_nodes(); ++i) {
      problem.local(i).gradient_and_hessian(x, gi, hi);
      g += gi;
      h += hi;
    }
    // Separable logistic data drive the minimizer to infinity, where the
    // aggregate Hessian vanishes on the scale of its curvature bound.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > kSingularRatio * curvature_scale))
      throw SolverError("centralized_solve: aggregate Hessian is singular (the data may be "
                        "linearly separable); set lambda_reg > 0");
    const double res = g.norm();
    if (res <= options.tol) return x;
    if (it >= options.max_iter)
      throw SolverError("centralized_solve: no convergence in " + std::to_string(options.max_iter) +
                        " Newton iterations (gradient norm " + sci(res) +
                        "); for separable logistic data set lambda_reg > 0");
    const Vector step = -h.llt().solve(g);
    const double t = line_search(
        [&](double s) { return total_value(x + s * step); }, total_value(x), g.dot(step), [&] {
          Vector gt = Vector::Zero(p);
          for (int i = 0; i < problem.num_nodes(); ++i) gt += problem.local(i).gradient(x + step);
          return gt.norm();
        }, res);
    if (t == 0.0)
      throw SolverError("centralized_solve: line search stalled at gradient norm " + sci(res));
    x += t * step;
  }
}

IterationTrace run(const ConsensusProblem& problem, const SolverConfig& config,
                   const RunOptions& options) {
  config.validate();
  IterationTrace trace;
  trace.method = config.method;
  trace.config = config;
  trace.states.reserve(static_cast<std::size_t>(config.max_iter) + 1);
  trace.wall_ns.reserve(static_cast<std::size_t>(config.max_iter) + 1);

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto stamp = [&]() -> std::int64_t {
    if (!options.timing) return 0;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  };

  trace.states.push_back(ReducedState::initial(problem, options.x0));
  trace.wall_ns.push_back(stamp());
  if (options.on_iterate) options.on_iterate(trace.states.back());
  for (int k = 0; k < config.max_iter; ++k) {
    try {
      trace.states.push_back(reduced_step(trace.states.back(), problem, config));
    } catch (const SolverError& e) {
      throw SolverError(to_string(config.method) + " iteration " + std::to_string(k) + ": " +
                            e.what(),
                        e.node(), k);
    }
    trace.wall_ns.push_back(stamp());
    if (options.on_iterate) options.on_iterate(trace.states.back());
  }
  return trace;
}

}  // namespace dqm
