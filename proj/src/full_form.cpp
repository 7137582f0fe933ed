#include "dqm/solvers.hpp"

#include "newton.hpp"

#include <string>

namespace dqm {

FullState FullState::zeros(const IncidenceOperators& ops) {
  const Index np = static_cast<Index>(ops.n) * ops.p;
  const Index mp = static_cast<Index>(ops.m) * ops.p;
  return {Vector::Zero(np), Vector::Zero(mp), Vector::Zero(mp), Vector::Zero(mp), 0};
}

FullFormMatrices FullFormMatrices::from(const IncidenceOperators& ops) {
  const Index mp = ops.source.rows();
  const Index np = ops.source.cols();
  std::vector<Eigen::Triplet<double>> a_entries;
  std::vector<Eigen::Triplet<double>> b_entries;
  for (int half = 0; half < 2; ++half) {
    const SparseMatrix& block = half == 0 ? ops.source : ops.destination;
    for (Index col = 0; col < block.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(block, col); it; ++it)
        a_entries.emplace_back(half * mp + it.row(), it.col(), it.value());
    for (Index r = 0; r < mp; ++r) b_entries.emplace_back(half * mp + r, r, -1.0);
  }
  FullFormMatrices out;
  out.A.resize(2 * mp, np);
  out.A.setFromTriplets(a_entries.begin(), a_entries.end());
  out.B.resize(2 * mp, mp);
  out.B.setFromTriplets(b_entries.begin(), b_entries.end());
  return out;
}

namespace {

Matrix block_diagonal(const std::vector<Matrix>& blocks, Index p) {
  const Index n = static_cast<Index>(blocks.size());
  Matrix out = Matrix::Zero(n * p, n * p);
  for (Index i = 0; i < n; ++i) out.block(i * p, i * p, p, p) = blocks[static_cast<std::size_t>(i)];
  return out;
}

/// argmin_x f(x) + lambda^T (A x + B z) + c/2 ||A x + B z||^2 by damped Newton.
Vector exact_primal_update(const ConsensusProblem& problem, const Matrix& AtA, const Vector& lin,
                           const Vector& x_start, double c, double tol, int max_iter, long k) {
  // lin = A^T lambda + c A^T B z; the objective in x is
  // f(x) + lin^T x + c/2 x^T A^T A x + const.
  const Index p = problem.dimension();
  auto merit = [&](const Vector& x) {
    const StackedVector sx(x, p);
    double v = 0.0;
    for (int i = 0; i < problem.num_nodes(); ++i) v += problem.local(i).value(sx.block(i));
    return v + lin.dot(x) + 0.5 * c * x.dot(AtA * x);
  };
  Vector x = x_start;
  for (int it = 0;; ++it) {
    const AggregateEvaluation ev = aggregate_eval(problem, StackedVector(x, p));
    const Vector grad = ev.gradient.values() + lin + c * (AtA * x);
    const double res = grad.norm();
    if (res <= tol) return x;
    if (it >= max_iter)
      throw SolverError("full-form DADMM: primal Newton did not converge (residual " +
                            detail::sci(res) + ")",
                        -1, k);
    const Matrix hess = block_diagonal(ev.hessian_blocks, p) + c * AtA;
    const Vector step = -hess.llt().solve(grad);
    const double t = detail::line_search(
        [&](double s) { return merit(x + s * step); }, merit(x), grad.dot(step), [&] {
          const Vector trial = x + step;
          return (aggregate_gradient(problem, StackedVector(trial, p)).values() + lin +
                  c * (AtA * trial)).norm();
        }, res);
    if (t == 0.0)
      throw SolverError("full-form DADMM: primal line search stalled (residual " +
                            detail::sci(res) + ")", -1, k);
    x += t * step;
  }
}

}  // namespace

FullState full_form_step(const FullState& state, const ConsensusProblem& problem,
                         const FullFormMatrices& mats, const SolverConfig& config) {
  config.validate();
  const Index p = problem.dimension();
  const Index np = state.x.size();
  const Index mp = state.z.size();
  if (mats.A.cols() != np || mats.B.cols() != mp || state.alpha.size() != mp ||
      state.beta.size() != mp || np != problem.num_nodes() * p)
    throw PreconditionError("full state does not match the edge/node dimensions");

  const double c = config.c;
  Vector lambda(2 * mp);
  lambda << state.alpha, state.beta;
  const Matrix AtA = Matrix(SparseMatrix(mats.A.transpose() * mats.A));
  const Vector Bz = mats.B * state.z;
  const Vector lin = mats.A.transpose() * lambda + c * (mats.A.transpose() * Bz);

  FullState next;
  next.k = state.k + 1;
  switch (config.method) {
    case Method::DQM: {
      const AggregateEvaluation ev = aggregate_eval(problem, StackedVector(state.x, p));
      const Matrix Hk = block_diagonal(ev.hessian_blocks, p);
      const Matrix system = Hk + c * AtA;
      next.x = system.llt().solve(Hk * state.x - ev.gradient.values() - lin);
      break;
    }
    case Method::DLM: {
      const Vector g = aggregate_gradient(problem, StackedVector(state.x, p)).values();
      Matrix system = c * AtA;
      system.diagonal().array() += config.rho;
      next.x = system.llt().solve(config.rho * state.x - g - lin);
      break;
    }
    case Method::DADMM:
      next.x = exact_primal_update(problem, AtA, lin, state.x, c, config.inner_tol,
                                   config.inner_max, state.k);
      break;
  }

  // First-order condition of the z-minimization: B^T lambda + c B^T (A x + B z) = 0.
  const SparseMatrix BtB = mats.B.transpose() * mats.B;
  const Vector z_rhs = -(mats.B.transpose() * lambda) / c - mats.B.transpose() * (mats.A * next.x);
  next.z = z_rhs.cwiseQuotient(Vector(BtB.diagonal()));

  const Vector lambda_next = lambda + c * (mats.A * next.x + mats.B * next.z);
  next.alpha = lambda_next.head(mp);
  next.beta = lambda_next.tail(mp);
  return next;
}

std::vector<FullState> run_full_form(const ConsensusProblem& problem, const IncidenceOperators& ops,
                                     const SolverConfig& config, int iterations) {
  const FullFormMatrices mats = FullFormMatrices::from(ops);
  std::vector<FullState> states;
  states.reserve(static_cast<std::size_t>(iterations) + 1);
  states.push_back(FullState::zeros(ops));
  for (int k = 0; k < iterations; ++k)
    states.push_back(full_form_step(states.back(), problem, mats, config));
  return states;
}

}  // namespace dqm
