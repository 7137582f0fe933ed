#include "dqm/graph.hpp"

#include "dqm/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <string>

namespace dqm {

std::string to_string(Method method) {
  switch (method) {
    case Method::DQM: return "DQM";
    case Method::DLM: return "DLM";
    case Method::DADMM: return "DADMM";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "DQM") return Method::DQM;
  if (up == "DLM") return Method::DLM;
  if (up == "DADMM") return Method::DADMM;
  throw std::invalid_argument("unknown method '" + name + "' (expected DQM, DLM or DADMM)");
}

bool is_connected(int n, const std::vector<Edge>& undirected) {
  if (n <= 0) return false;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [i, j] : undirected) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

Network Network::from_undirected(int n, int p, const std::vector<Edge>& undirected,
                                 Provenance provenance) {
  if (n < 1) throw PreconditionError("Network: need at least one node");
  if (p < 1) throw PreconditionError("Network: block dimension must be positive");
  std::set<Edge> seen;
  for (auto [i, j] : undirected) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw PreconditionError("Network: edge endpoint out of range");
    if (i == j) throw PreconditionError("Network: self-loop at node " + std::to_string(i));
    if (!seen.emplace(std::min(i, j), std::max(i, j)).second)
      throw PreconditionError("Network: duplicate edge {" + std::to_string(i) + "," +
                              std::to_string(j) + "}");
  }
  if (!is_connected(n, undirected)) throw PreconditionError("Network: graph is not connected");

  Network net;
  net.n_ = n;
  net.p_ = p;
  net.provenance_ = provenance;
  net.directed_.reserve(2 * seen.size());
  for (auto [i, j] : seen) {
    net.directed_.emplace_back(i, j);
    net.directed_.emplace_back(j, i);
  }
  std::sort(net.directed_.begin(), net.directed_.end());
  net.degrees_.assign(static_cast<std::size_t>(n), 0);
  net.neighbors_.assign(static_cast<std::size_t>(n), {});
  for (auto [i, j] : net.directed_) {
    ++net.degrees_[static_cast<std::size_t>(i)];
    net.neighbors_[static_cast<std::size_t>(i)].push_back(j);
  }
  return net;
}

std::vector<Edge> Network::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(directed_.size() / 2);
  for (auto [i, j] : directed_)
    if (i < j) out.emplace_back(i, j);
  return out;
}

Network Network::with_block_dim(int p) const {
  if (p < 1) throw PreconditionError("Network: block dimension must be positive");
  Network copy = *this;
  copy.p_ = p;
  return copy;
}

std::uint64_t topology_hash(const Network& net) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(net.num_nodes()));
  mix(static_cast<std::uint64_t>(net.block_dim()));
  for (auto [i, j] : net.directed_edges()) {
    mix(static_cast<std::uint64_t>(i));
    mix(static_cast<std::uint64_t>(j));
  }
  return h;
}

Network build_random_graph(int n, double r_c, std::uint64_t seed, int p, int max_attempts) {
  if (n < 2) throw PreconditionError("build_random_graph: n must be at least 2");
  if (!(r_c > 0.0 && r_c <= 1.0))
    throw PreconditionError("build_random_graph: connectivity ratio must lie in (0, 1]");

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t sub_seed =
        attempt == 0 ? seed : seed + 1000U + static_cast<std::uint64_t>(attempt);
    std::mt19937_64 rng(sub_seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < r_c) edges.emplace_back(i, j);
    if (is_connected(n, edges)) {
      Network::Provenance prov{seed, r_c, sub_seed, attempt + 1};
      return Network::from_undirected(n, p, edges, prov);
    }
  }
  throw SolverError("build_random_graph: no connected sample in " + std::to_string(max_attempts) +
                    " attempts (r_c = " + std::to_string(r_c) + " is too small for n = " +
                    std::to_string(n) + ")");
}

namespace {

SparseMatrix block_selector(int m, int n, int p, const std::vector<Edge>& edges, bool by_source) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(p));
  for (int e = 0; e < m; ++e) {
    const int node = by_source ? edges[static_cast<std::size_t>(e)].first
                               : edges[static_cast<std::size_t>(e)].second;
    for (int k = 0; k < p; ++k) entries.emplace_back(e * p + k, node * p + k, 1.0);
  }
  SparseMatrix out(static_cast<Index>(m) * p, static_cast<Index>(n) * p);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

}  // namespace

IncidenceOperators incidence_operators(const Network& net) {
  IncidenceOperators ops;
  ops.n = net.num_nodes();
  ops.p = net.block_dim();
  ops.m = net.num_directed_edges();
  const auto& edges = net.directed_edges();

  ops.source = block_selector(ops.m, ops.n, ops.p, edges, true);
  ops.destination = block_selector(ops.m, ops.n, ops.p, edges, false);
  ops.oriented = ops.source - ops.destination;
  ops.unoriented = ops.source + ops.destination;

  const SparseMatrix lo = 0.5 * SparseMatrix(ops.oriented.transpose() * ops.oriented);
  const SparseMatrix lu = 0.5 * SparseMatrix(ops.unoriented.transpose() * ops.unoriented);
  ops.laplacian_oriented = Matrix(lo);
  ops.laplacian_unoriented = Matrix(lu);
  ops.degree = 0.5 * (ops.laplacian_unoriented + ops.laplacian_oriented);

  ops.graph_laplacian_oriented = Matrix::Zero(ops.n, ops.n);
  ops.graph_laplacian_unoriented = Matrix::Zero(ops.n, ops.n);
  for (int i = 0; i < ops.n; ++i) {
    ops.graph_laplacian_oriented(i, i) = net.degree(i);
    ops.graph_laplacian_unoriented(i, i) = net.degree(i);
    for (int j : net.neighbors(i)) {
      ops.graph_laplacian_oriented(i, j) = -1.0;
      ops.graph_laplacian_unoriented(i, j) = 1.0;
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(2.0 * ops.graph_laplacian_oriented);
  Vector inv = eig.eigenvalues();
  for (Index k = 0; k < inv.size(); ++k) inv(k) = inv(k) > kSpectralZeroTol ? 1.0 / inv(k) : 0.0;
  ops.oriented_gram_pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return ops;
}

SpectralData spectral_bounds(const IncidenceOperators& ops) {
  // Block operators are the graph Laplacians (x) I_p, so the scalar spectra
  // carry every distinct eigenvalue.
  SpectralData out;
  Eigen::SelfAdjointEigenSolver<Matrix> eu(2.0 * ops.graph_laplacian_unoriented,
                                           Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> eo(2.0 * ops.graph_laplacian_oriented,
                                           Eigen::EigenvaluesOnly);
  const Vector& lu = eu.eigenvalues();
  const Vector& lo = eo.eigenvalues();
  const double min_u = lu.minCoeff();
  out.bipartite = min_u < kSpectralZeroTol;
  out.gamma_u = out.bipartite ? 0.0 : std::sqrt(min_u);
  out.Gamma_u = std::sqrt(std::max(0.0, lu.maxCoeff()));
  double smallest_nonzero = 0.0;
  for (Index k = 0; k < lo.size(); ++k) {
    if (lo(k) > kSpectralZeroTol) {
      smallest_nonzero = lo(k);
      break;  // ascending order
    }
  }
  out.gamma_o = std::sqrt(smallest_nonzero);
  return out;
}

StackedVector oriented_laplacian_apply(const Network& net, const StackedVector& x) {
  const Index p = x.block_dim();
  StackedVector out(x.num_blocks(), p);
  for (int i = 0; i < net.num_nodes(); ++i) {
    auto oi = out.block(i);
    std::span<double> acc(oi.data(), static_cast<std::size_t>(p));
    std::span<const double> xi(x.block(i).data(), static_cast<std::size_t>(p));
    for (int j : net.neighbors(i)) {
      kernels::axpy(1.0, xi, acc);
      kernels::axpy(-1.0, std::span<const double>(x.block(j).data(), static_cast<std::size_t>(p)),
                    acc);
    }
  }
  return out;
}

}  // namespace dqm
