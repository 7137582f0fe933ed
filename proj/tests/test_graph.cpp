#include <doctest.h>

#include "dqm/graph.hpp"

#include <cmath>
#include <queue>
#include <random>

using namespace dqm;

namespace {

Network triangle(int p = 1) { return Network::from_undirected(3, p, {{0, 1}, {0, 2}, {1, 2}}); }
Network pair_graph() { return Network::from_undirected(2, 1, {{0, 1}}); }

// Independent BFS over the directed edge list.
bool bfs_connected(const Network& net) {
  const int n = net.num_nodes();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [i, j] : net.directed_edges()) adj[static_cast<std::size_t>(i)].push_back(j);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        q.push(v);
      }
  }
  return count == n;
}

Matrix dense(const SparseMatrix& s) { return Matrix(s); }

}  // namespace

TEST_CASE("two-node and triangle graphs from complete sampling") {
  const Network two = build_random_graph(2, 1.0, 99);
  CHECK(two.directed_edges() == std::vector<Edge>{{0, 1}, {1, 0}});
  CHECK(two.degrees() == std::vector<int>{1, 1});
  const Network tri = build_random_graph(3, 1.0, 5);
  CHECK(tri.num_directed_edges() == 6);
  CHECK(tri.degrees() == std::vector<int>{2, 2, 2});
}

TEST_CASE("random graphs are connected, symmetric and near the binomial edge count") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Network net = build_random_graph(10, 0.4, seed);
    CHECK(bfs_connected(net));
    CHECK(is_connected(10, net.undirected_edges()));
    int m = 0;
    for (int d : net.degrees()) m += d;
    CHECK(m == net.num_directed_edges());
    for (auto [i, j] : net.directed_edges()) {
      CHECK(i != j);
      CHECK(std::binary_search(net.directed_edges().begin(), net.directed_edges().end(), Edge{j, i}));
    }
    total += static_cast<double>(net.undirected_edges().size());
  }
  // Binomial(45, 0.4): mean 18, sd 3.3; conditioning on connectivity only raises it slightly.
  const double mean = total / 100.0;
  CHECK(mean > 17.0);
  CHECK(mean < 20.5);
}

TEST_CASE("graph generation is deterministic and resampling is recorded") {
  CHECK(build_random_graph(10, 0.4, 7) == build_random_graph(10, 0.4, 7));
  CHECK(topology_hash(build_random_graph(10, 0.4, 7)) == topology_hash(build_random_graph(10, 0.4, 7)));
  bool saw_resample = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Network net = build_random_graph(10, 0.2, seed);
    CHECK(bfs_connected(net));
    if (net.provenance().attempts > 1) {
      saw_resample = true;
      CHECK(net.provenance().accepted_seed == seed + 1000 + static_cast<std::uint64_t>(net.provenance().attempts - 1));
    }
  }
  CHECK(saw_resample);
}

TEST_CASE("invalid graphs are rejected") {
  CHECK_THROWS_AS(build_random_graph(1, 0.5, 1), PreconditionError);
  CHECK_THROWS_AS(build_random_graph(5, 0.0, 1), PreconditionError);
  CHECK_THROWS_AS(build_random_graph(5, 1.5, 1), PreconditionError);
  CHECK_THROWS_AS(build_random_graph(40, 0.01, 1, 1, 5), SolverError);
  CHECK_THROWS_AS(Network::from_undirected(3, 1, {{0, 1}}), PreconditionError);
  CHECK_THROWS_AS(Network::from_undirected(3, 1, {{0, 0}, {0, 1}, {1, 2}}), PreconditionError);
  CHECK_THROWS_AS(Network::from_undirected(3, 1, {{0, 1}, {1, 0}, {1, 2}}), PreconditionError);
  CHECK_THROWS_AS(Network::from_undirected(3, 1, {{0, 1}, {1, 3}}), PreconditionError);
}

TEST_CASE("triangle operators match hand construction") {
  const IncidenceOperators ops = incidence_operators(triangle());
  Matrix Lu(3, 3), Lo(3, 3);
  Lu << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  Lo << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  CHECK((ops.laplacian_unoriented - Lu).norm() == 0.0);
  CHECK((ops.laplacian_oriented - Lo).norm() == 0.0);
  CHECK((ops.degree - 2.0 * Matrix::Identity(3, 3)).norm() == 0.0);

  // Explicit A_s, A_d from the directed edge list.
  const Network tri = triangle();
  const auto& edges = tri.directed_edges();
  Matrix As = Matrix::Zero(6, 3), Ad = Matrix::Zero(6, 3);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    As(static_cast<Index>(e), edges[e].first) = 1.0;
    Ad(static_cast<Index>(e), edges[e].second) = 1.0;
  }
  CHECK((dense(ops.source) - As).norm() == 0.0);
  CHECK((dense(ops.destination) - Ad).norm() == 0.0);
  CHECK((0.5 * (As + Ad).transpose() * (As + Ad) - Lu).norm() == 0.0);
}

TEST_CASE("two-node operators") {
  const IncidenceOperators ops = incidence_operators(pair_graph());
  Matrix Lu(2, 2), Lo(2, 2);
  Lu << 1, 1, 1, 1;
  Lo << 1, -1, -1, 1;
  CHECK((ops.laplacian_unoriented - Lu).norm() == 0.0);
  CHECK((ops.laplacian_oriented - Lo).norm() == 0.0);
  CHECK((ops.degree - Matrix::Identity(2, 2)).norm() == 0.0);
  const SpectralData s = spectral_bounds(ops);
  CHECK(s.bipartite);
  CHECK(s.gamma_u < 1e-6);
}

TEST_CASE("triangle spectrum") {
  const SpectralData s = spectral_bounds(incidence_operators(triangle()));
  CHECK(s.gamma_u == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.Gamma_u == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.gamma_o == doctest::Approx(std::sqrt(6.0)).epsilon(1e-12));
  CHECK_FALSE(s.bipartite);
}

TEST_CASE("complete graph on four nodes is not bipartite; even cycle is") {
  const Network k4 = Network::from_undirected(4, 1, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK_FALSE(spectral_bounds(incidence_operators(k4)).bipartite);
  CHECK(spectral_bounds(incidence_operators(k4)).gamma_u > 0.1);
  const Network c4 = Network::from_undirected(4, 1, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  CHECK(spectral_bounds(incidence_operators(c4)).bipartite);
}

TEST_CASE("operator identities on random graphs") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int p = 2;
    const Network net = build_random_graph(8, 0.5, seed, p);
    const IncidenceOperators ops = incidence_operators(net);
    const Index np = 8 * p;

    Matrix adj = Matrix::Zero(8, 8), deg = Matrix::Zero(8, 8);
    for (auto [i, j] : net.directed_edges()) adj(i, j) = 1.0;
    for (int i = 0; i < 8; ++i) deg(i, i) = net.degree(i);
    const Matrix Ip = Matrix::Identity(p, p);
    auto kron = [&](const Matrix& a) {
      Matrix out = Matrix::Zero(np, np);
      for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) out.block(i * p, j * p, p, p) = a(i, j) * Ip;
      return out;
    };
    CHECK((ops.degree - kron(deg)).norm() == 0.0);
    CHECK((ops.laplacian_unoriented - kron(deg + adj)).norm() == 0.0);
    CHECK((ops.laplacian_oriented - kron(deg - adj)).norm() == 0.0);
    CHECK((ops.degree - 0.5 * (ops.laplacian_unoriented + ops.laplacian_oriented)).norm() == 0.0);

    for (int t = 0; t < 100; ++t) {
      Vector x(np);
      for (Index i = 0; i < np; ++i) x(i) = N(rng);
      const double qu = 0.5 * (ops.unoriented * x).squaredNorm();
      const double qo = 0.5 * (ops.oriented * x).squaredNorm();
      CHECK(qu == doctest::Approx(x.dot(ops.laplacian_unoriented * x)).epsilon(1e-12));
      CHECK(qo == doctest::Approx(x.dot(ops.laplacian_oriented * x)).epsilon(1e-12));
      // Non-consensus vectors are not annihilated.
      CHECK((ops.oriented * x).norm() > 1e-6);
      const StackedVector sx(x, p);
      CHECK((oriented_laplacian_apply(net, sx).values() - ops.laplacian_oriented * x).norm() <= 1e-12);
    }
    Vector block(p);
    block << N(rng), N(rng);
    const Vector consensus = StackedVector::replicate(block, 8).values();
    CHECK((ops.oriented * consensus).norm() == 0.0);
    CHECK((ops.laplacian_oriented * consensus).norm() <= 1e-14);

    // Singular values squared equal the Laplacian eigenvalues (times two).
    const Eigen::JacobiSVD<Matrix> svd_u(dense(ops.unoriented));
    const Eigen::JacobiSVD<Matrix> svd_o(dense(ops.oriented));
    const SpectralData s = spectral_bounds(ops);
    CHECK(s.Gamma_u == doctest::Approx(svd_u.singularValues().maxCoeff()).epsilon(1e-10));
    CHECK(s.gamma_u == doctest::Approx(svd_u.singularValues()(np - 1)).epsilon(1e-8));
    double smallest_nonzero = 1e300;
    for (Index i = 0; i < svd_o.singularValues().size(); ++i)
      if (svd_o.singularValues()(i) > 1e-6) smallest_nonzero = std::min(smallest_nonzero, svd_o.singularValues()(i));
    CHECK(s.gamma_o == doctest::Approx(smallest_nonzero).epsilon(1e-10));
  }
}

TEST_CASE("neighbors are ascending and block dimension can change") {
  const Network net = build_random_graph(12, 0.3, 9);
  for (int i = 0; i < 12; ++i) CHECK(std::is_sorted(net.neighbors(i).begin(), net.neighbors(i).end()));
  const Network wide = net.with_block_dim(4);
  CHECK(wide.block_dim() == 4);
  CHECK(wide.directed_edges() == net.directed_edges());
}
