#pragma once

#include "dqm/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace dqm {

using Edge = std::pair<int, int>;

struct NetworkProvenance {
  std::uint64_t seed = 0;
  double r_c = 0.0;
  /// Seed of the sample that was accepted (differs from `seed` after resampling).
  std::uint64_t accepted_seed = 0;
  int attempts = 1;
};

/// Symmetric, connected communication network. Every undirected link {i,j}
/// appears as both ordered pairs (i,j) and (j,i), so m = sum_i d_i.
class Network {
public:
  using Provenance = NetworkProvenance;

  /// Validates and builds from undirected pairs. Throws PreconditionError on
  /// self-loops, duplicates, out-of-range endpoints or a disconnected graph.
  static Network from_undirected(int n, int p, const std::vector<Edge>& undirected,
                                 Provenance provenance = {});

  int num_nodes() const { return n_; }
  int block_dim() const { return p_; }
  /// Number of ordered edges (both orientations counted).
  int num_directed_edges() const { return static_cast<int>(directed_.size()); }

  /// Lexicographically sorted ordered pairs.
  const std::vector<Edge>& directed_edges() const { return directed_; }
  /// Pairs (i,j) with i < j, sorted.
  std::vector<Edge> undirected_edges() const;
  const std::vector<int>& degrees() const { return degrees_; }
  int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }
  /// Ascending neighbor indices; this order fixes every per-node summation.
  const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
  const Provenance& provenance() const { return provenance_; }

  /// Same topology, different block dimension.
  Network with_block_dim(int p) const;

  bool operator==(const Network& other) const {
    return n_ == other.n_ && p_ == other.p_ && directed_ == other.directed_;
  }

private:
  int n_ = 0;
  int p_ = 1;
  std::vector<Edge> directed_;
  std::vector<int> degrees_;
  std::vector<std::vector<int>> neighbors_;
  Provenance provenance_;
};

/// Breadth-first reachability from node 0.
bool is_connected(int n, const std::vector<Edge>& undirected);

/// FNV-1a digest of (n, p, edge list); stable across runs and platforms.
std::uint64_t topology_hash(const Network& net);

/// Erdos-Renyi sample conditioned on connectivity. Attempt 0 uses `seed`,
/// attempt a >= 1 uses seed + 1000 + a. Throws SolverError when no connected
/// sample is found within `max_attempts`.
Network build_random_graph(int n, double r_c, std::uint64_t seed, int p = 1,
                           int max_attempts = 1000);

/// Block incidence and Laplacian operators of a network.
struct IncidenceOperators {
  int n = 0;
  int p = 0;
  int m = 0;
  // mp x np, sparse
  SparseMatrix source;       // A_s
  SparseMatrix destination;  // A_d
  SparseMatrix oriented;     // E_o = A_s - A_d
  SparseMatrix unoriented;   // E_u = A_s + A_d
  // np x np, dense
  Matrix laplacian_oriented;    // L_o = 1/2 E_o^T E_o
  Matrix laplacian_unoriented;  // L_u = 1/2 E_u^T E_u
  Matrix degree;                // D = (L_u + L_o) / 2
  // n x n graph Laplacians (p = 1); the block operators are these (x) I_p.
  Matrix graph_laplacian_oriented;
  Matrix graph_laplacian_unoriented;
  /// Pseudoinverse of 2 * graph_laplacian_oriented (eigenvalue cutoff 1e-10).
  Matrix oriented_gram_pinv;
};

inline constexpr double kSpectralZeroTol = 1e-10;

IncidenceOperators incidence_operators(const Network& net);

struct SpectralData {
  double gamma_u = 0.0;  // smallest singular value of E_u
  double Gamma_u = 0.0;  // largest singular value of E_u
  double gamma_o = 0.0;  // smallest nonzero singular value of E_o
  bool bipartite = false;
};

/// Singular values from eigendecompositions of 2 L_u and 2 L_o. A bipartite
/// graph (gamma_u = 0) is reported through the flag, not as an error.
SpectralData spectral_bounds(const IncidenceOperators& ops);

/// Sum over neighbors j of (x_i - x_j) for every node, i.e. L_o x in block form.
StackedVector oriented_laplacian_apply(const Network& net, const StackedVector& x);

}  // namespace dqm
