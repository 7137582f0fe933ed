#include "dqm/objective.hpp"

#include "dqm/kernels.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <string>

namespace dqm {
namespace {

std::span<const double> col_span(const Matrix& m, Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Gauss-Legendre, 8 nodes, mapped to [0, 1].
constexpr std::array<double, 4> kGlNode{0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGlWeight{0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};

// h(z) = sigmoid(-z) and its first two derivatives.
double h0(double z) { return sigmoid(-z); }
double h1(double z) {
  const double s = sigmoid(z);
  return -s * (1.0 - s);
}
double h2(double z) {
  const double s = sigmoid(z);
  return -s * (1.0 - s) * (1.0 - 2.0 * s);
}

}  // namespace

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logistic_taylor_remainder(double z, double d) {
  if (std::abs(d) >= 0.25) return h0(z + d) - h0(z) - h1(z) * d;
  // Integral form of the remainder: d^2 * int_0^1 (1 - t) h''(z + t d) dt.
  double acc = 0.0;
  for (std::size_t k = 0; k < kGlNode.size(); ++k) {
    for (double sign : {-1.0, 1.0}) {
      const double t = 0.5 * (1.0 + sign * kGlNode[k]);
      acc += 0.5 * kGlWeight[k] * (1.0 - t) * h2(z + t * d);
    }
  }
  return d * d * acc;
}

Vector LocalObjective::gradient_remainder(const Vector& x, const Vector& dx) const {
  return gradient(x + dx) - gradient(x) - hessian(x) * dx;
}

// ---------------------------------------------------------------------------

QuadraticLocal::QuadraticLocal(Matrix curvature, Vector center)
    : q_(std::move(curvature)), center_(std::move(center)) {
  if (q_.rows() != q_.cols() || q_.rows() != center_.size())
    throw PreconditionError("QuadraticLocal: curvature must be p x p with p = dim(center)");
  if (!q_.isApprox(q_.transpose(), 1e-14))
    throw PreconditionError("QuadraticLocal: curvature must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
  bounds_.m = std::max(0.0, eig.eigenvalues().minCoeff());
  bounds_.M = eig.eigenvalues().maxCoeff();
  bounds_.L = 0.0;
  if (eig.eigenvalues().minCoeff() < -1e-12)
    throw PreconditionError("QuadraticLocal: curvature must be positive semidefinite");
}

QuadraticLocal::QuadraticLocal(Vector center)
    : QuadraticLocal(Matrix::Identity(center.size(), center.size()), center) {}

double QuadraticLocal::value(const Vector& x) const {
  const Vector d = x - center_;
  return 0.5 * d.dot(q_ * d);
}

Vector QuadraticLocal::gradient(const Vector& x) const { return q_ * (x - center_); }

Matrix QuadraticLocal::hessian(const Vector&) const { return q_; }

Vector QuadraticLocal::gradient_remainder(const Vector& x, const Vector&) const {
  return Vector::Zero(x.size());
}

// ---------------------------------------------------------------------------

LogisticLocal::LogisticLocal(Matrix samples, Vector labels, double reg)
    : samples_(std::move(samples)), labels_(std::move(labels)), reg_(reg) {
  if (samples_.rows() != labels_.size())
    throw PreconditionError("LogisticLocal: one label per sample required");
  if (samples_.cols() < 1) throw PreconditionError("LogisticLocal: feature dimension must be >= 1");
  if (reg_ < 0.0) throw PreconditionError("LogisticLocal: regularization must be non-negative");
  for (Index l = 0; l < labels_.size(); ++l)
    if (labels_(l) != 1.0 && labels_(l) != -1.0)
      throw PreconditionError("LogisticLocal: labels must be +1 or -1");
  if (!samples_.allFinite()) throw PreconditionError("LogisticLocal: non-finite feature");
}

Vector LogisticLocal::margins(const Vector& x) const {
  const Index q = samples_.rows();
  Vector sx = Vector::Zero(q);
  std::span<double> out(sx.data(), static_cast<std::size_t>(q));
  for (Index j = 0; j < samples_.cols(); ++j) kernels::axpy(x(j), col_span(samples_, j), out);
  return labels_.cwiseProduct(sx);
}

double LogisticLocal::value(const Vector& x) const {
  const Vector z = margins(x);
  double v = 0.0;
  for (Index l = 0; l < z.size(); ++l) v += softplus(-z(l));
  return v + 0.5 * reg_ * x.squaredNorm();
}

Vector LogisticLocal::gradient(const Vector& x) const {
  const Vector z = margins(x);
  Vector w(z.size());
  for (Index l = 0; l < z.size(); ++l) w(l) = -labels_(l) * sigmoid(-z(l));
  Vector g(dimension());
  for (Index j = 0; j < dimension(); ++j) g(j) = kernels::dot(col_span(samples_, j), as_span(w));
  return g + reg_ * x;
}

Matrix LogisticLocal::hessian(const Vector& x) const {
  Vector g;
  Matrix h;
  gradient_and_hessian(x, g, h);
  return h;
}

void LogisticLocal::gradient_and_hessian(const Vector& x, Vector& grad, Matrix& hess) const {
  const Vector z = margins(x);
  const Index p = dimension();
  Vector w(z.size());
  Vector v(z.size());
  for (Index l = 0; l < z.size(); ++l) {
    const double s = sigmoid(-z(l));
    w(l) = -labels_(l) * s;
    v(l) = s * (1.0 - s);
  }
  grad.resize(p);
  hess.resize(p, p);
  for (Index j = 0; j < p; ++j) {
    grad(j) = kernels::dot(col_span(samples_, j), as_span(w)) + reg_ * x(j);
    for (Index k = 0; k <= j; ++k) {
      const double hjk = kernels::weighted_dot(col_span(samples_, j), as_span(v), col_span(samples_, k));
      hess(j, k) = hjk;
      hess(k, j) = hjk;
    }
    hess(j, j) += reg_;
  }
}

CurvatureEstimates LogisticLocal::curvature() const {
  double sq = 0.0;
  double cube = 0.0;
  for (Index l = 0; l < samples_.rows(); ++l) {
    const double norm = samples_.row(l).norm();
    sq += norm * norm;
    cube += norm * norm * norm;
  }
  return {reg_, reg_ + 0.25 * sq, kSigmoidSecondDerivativeBound * cube};
}

Vector LogisticLocal::gradient_remainder(const Vector& x, const Vector& dx) const {
  // Per sample the gradient is -y s h(z) with z = y s^T x, so the remainder is
  // -y s [h(z + dz) - h(z) - h'(z) dz]; the ridge term is linear and drops out.
  const Vector z = margins(x);
  const Vector dz = margins(dx);
  Vector w(z.size());
  for (Index l = 0; l < z.size(); ++l) w(l) = -labels_(l) * logistic_taylor_remainder(z(l), dz(l));
  Vector r(dimension());
  for (Index j = 0; j < dimension(); ++j) r(j) = kernels::dot(col_span(samples_, j), as_span(w));
  return r;
}

// ---------------------------------------------------------------------------

ConsensusProblem::ConsensusProblem(Network net,
                                   std::vector<std::shared_ptr<const LocalObjective>> objectives)
    : network(std::move(net)), locals(std::move(objectives)) {
  if (static_cast<int>(locals.size()) != network.num_nodes())
    throw PreconditionError("ConsensusProblem: need one local objective per node (" +
                            std::to_string(network.num_nodes()) + " nodes, " +
                            std::to_string(locals.size()) + " objectives)");
  for (const auto& f : locals) {
    if (!f) throw PreconditionError("ConsensusProblem: null local objective");
    if (f->dimension() != network.block_dim())
      throw PreconditionError("ConsensusProblem: local dimension does not match network block dimension");
  }
}

namespace {
void check_shape(const ConsensusProblem& problem, const StackedVector& x) {
  if (x.num_blocks() != problem.num_nodes() || x.block_dim() != problem.dimension())
    throw PreconditionError("stacked vector does not have n blocks of dimension p");
}
}  // namespace

AggregateEvaluation aggregate_eval(const ConsensusProblem& problem, const StackedVector& x) {
  check_shape(problem, x);
  AggregateEvaluation out;
  out.gradient = StackedVector(problem.num_nodes(), problem.dimension());
  out.hessian_blocks.resize(static_cast<std::size_t>(problem.num_nodes()));
  for (int i = 0; i < problem.num_nodes(); ++i) {
    const Vector xi = x.block(i);
    const auto& f = problem.local(i);
    out.value += f.value(xi);
    Vector g;
    f.gradient_and_hessian(xi, g, out.hessian_blocks[static_cast<std::size_t>(i)]);
    out.gradient.block(i) = g;
  }
  return out;
}

StackedVector aggregate_gradient(const ConsensusProblem& problem, const StackedVector& x) {
  check_shape(problem, x);
  StackedVector g(problem.num_nodes(), problem.dimension());
  for (int i = 0; i < problem.num_nodes(); ++i) g.block(i) = problem.local(i).gradient(x.block(i));
  return g;
}

CurvatureEstimates curvature_estimates(const ConsensusProblem& problem) {
  CurvatureEstimates agg{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (int i = 0; i < problem.num_nodes(); ++i) {
    const CurvatureEstimates c = problem.local(i).curvature();
    agg.m = std::min(agg.m, c.m);
    agg.M = std::max(agg.M, c.M);
    agg.L = std::max(agg.L, c.L);
  }
  return agg;
}

}  // namespace dqm
