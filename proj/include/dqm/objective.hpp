#pragma once

#include "dqm/graph.hpp"
#include "dqm/types.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace dqm {

/// Curvature bounds m I <= Hess f_i <= M I and Hessian-Lipschitz constant L.
/// m = 0 means strong convexity is not certified; rate computations refuse it.
struct CurvatureEstimates {
  double m = 0.0;
  double M = 0.0;
  double L = 0.0;
  bool strongly_convex() const { return m > 0.0; }
};

/// Smooth convex local cost f_i : R^p -> R.
class LocalObjective {
public:
  virtual ~LocalObjective() = default;

  virtual Index dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
  virtual CurvatureEstimates curvature() const = 0;

  /// Gradient and Hessian at the same point; override when they share work.
  virtual void gradient_and_hessian(const Vector& x, Vector& grad, Matrix& hess) const {
    grad = gradient(x);
    hess = hessian(x);
  }

  /// grad f(x + dx) - grad f(x) - Hess f(x) dx. The default forms the
  /// difference directly; subclasses evaluate it without cancellation so that
  /// second-order error bounds stay checkable as dx -> 0.
  virtual Vector gradient_remainder(const Vector& x, const Vector& dx) const;
};

/// f(x) = 1/2 (x - b)^T Q (x - b), Q symmetric positive semidefinite.
class QuadraticLocal final : public LocalObjective {
public:
  QuadraticLocal(Matrix curvature, Vector center);
  /// Q = I.
  explicit QuadraticLocal(Vector center);

  Index dimension() const override { return center_.size(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  CurvatureEstimates curvature() const override { return bounds_; }
  Vector gradient_remainder(const Vector& x, const Vector& dx) const override;

  const Matrix& curvature_matrix() const { return q_; }
  const Vector& center() const { return center_; }

private:
  Matrix q_;
  Vector center_;
  CurvatureEstimates bounds_;
};

/// f(x) = sum_l log(1 + exp(-y_l s_l^T x)) + (reg/2) ||x||^2.
class LogisticLocal final : public LocalObjective {
public:
  /// `samples` is q x p (one feature vector per row); labels are +-1.
  LogisticLocal(Matrix samples, Vector labels, double reg = 0.0);

  Index dimension() const override { return samples_.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  void gradient_and_hessian(const Vector& x, Vector& grad, Matrix& hess) const override;
  CurvatureEstimates curvature() const override;
  Vector gradient_remainder(const Vector& x, const Vector& dx) const override;

  const Matrix& samples() const { return samples_; }
  const Vector& labels() const { return labels_; }
  double regularization() const { return reg_; }

private:
  /// y_l s_l^T x for every sample.
  Vector margins(const Vector& x) const;

  Matrix samples_;  // column-major: each feature is contiguous across samples
  Vector labels_;
  double reg_;
};

/// log(1 + exp(t)) without overflow.
double softplus(double t);
/// 1 / (1 + exp(-t)) without overflow.
double sigmoid(double t);
/// h(z + d) - h(z) - h'(z) d for h(z) = sigmoid(-z), accurate for small d.
double logistic_taylor_remainder(double z, double d);

/// Upper bound on |sigmoid''(t)|, attained at t = log(2 -+ sqrt 3).
inline const double kSigmoidSecondDerivativeBound = 1.0 / (6.0 * std::sqrt(3.0));

struct ConsensusProblem {
  ConsensusProblem(Network net, std::vector<std::shared_ptr<const LocalObjective>> objectives);

  int num_nodes() const { return network.num_nodes(); }
  Index dimension() const { return network.block_dim(); }
  const LocalObjective& local(int i) const { return *locals[static_cast<std::size_t>(i)]; }

  Network network;
  std::vector<std::shared_ptr<const LocalObjective>> locals;
};

struct AggregateEvaluation {
  double value = 0.0;
  StackedVector gradient;
  std::vector<Matrix> hessian_blocks;
};

/// f(x) = sum_i f_i(x_i) with its block gradient and block-diagonal Hessian.
AggregateEvaluation aggregate_eval(const ConsensusProblem& problem, const StackedVector& x);
StackedVector aggregate_gradient(const ConsensusProblem& problem, const StackedVector& x);

/// Worst case over nodes: m = min m_i, M = max M_i, L = max L_i.
CurvatureEstimates curvature_estimates(const ConsensusProblem& problem);

}  // namespace dqm
