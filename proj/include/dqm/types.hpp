#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dqm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Method { DQM, DLM, DADMM };

std::string to_string(Method method);
/// Accepts "DQM", "DLM", "DADMM" (case-insensitive). Throws std::invalid_argument.
Method parse_method(const std::string& name);

/// Element of R^{np} addressed as n blocks of dimension p.
class StackedVector {
public:
  StackedVector() = default;
  StackedVector(Index blocks, Index block_dim)
      : values_(Vector::Zero(blocks * block_dim)), blocks_(blocks), dim_(block_dim) {}
  StackedVector(Vector values, Index block_dim)
      : values_(std::move(values)), blocks_(block_dim > 0 ? values_.size() / block_dim : 0),
        dim_(block_dim) {
    if (block_dim <= 0 || values_.size() % block_dim != 0)
      throw std::invalid_argument("StackedVector: length is not a multiple of the block dimension");
  }

  /// Every block equal to `block`.
  static StackedVector replicate(const Vector& block, Index blocks) {
    return StackedVector(block.replicate(blocks, 1), block.size());
  }

  Index num_blocks() const { return blocks_; }
  Index block_dim() const { return dim_; }
  Index size() const { return values_.size(); }

  auto block(Index i) { return values_.segment(i * dim_, dim_); }
  auto block(Index i) const { return values_.segment(i * dim_, dim_); }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  /// Sum of all blocks.
  Vector block_sum() const {
    Vector s = Vector::Zero(dim_);
    for (Index i = 0; i < blocks_; ++i) s += block(i);
    return s;
  }

private:
  Vector values_;
  Index blocks_ = 0;
  Index dim_ = 0;
};

/// Raised when a caller violates a documented precondition.
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by iterative solvers (singular local systems, inner Newton caps, ...).
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, long node = -1, long iteration = -1)
      : std::runtime_error(what), node_(node), iteration_(iteration) {}
  long node() const { return node_; }
  long iteration() const { return iteration_; }

private:
  long node_;
  long iteration_;
};

/// Raised when a rate or threshold computation is asked for outside the
/// hypotheses it is valid under (m = 0, c below threshold, bipartite graph).
class AssumptionViolation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed or incompatible file; carries a line/byte position when known.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ", column " +
                                      std::to_string(column) + ")"
                                : what),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace dqm
