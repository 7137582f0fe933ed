#include <doctest.h>

#include "dqm/analysis.hpp"
#include "dqm/data.hpp"
#include "dqm/solvers.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace dqm;
using test::max_abs_diff;
using test::quadratic_with;

namespace {

Network triangle(int p = 1) { return Network::from_undirected(3, p, {{0, 1}, {0, 2}, {1, 2}}); }

SolverConfig make_config(Method method, double c, int iters, double rho = 1.0) {
  SolverConfig cfg;
  cfg.method = method;
  cfg.c = c;
  cfg.rho = rho;
  cfg.max_iter = iters;
  return cfg;
}

ReducedState optimal_state(const ConsensusProblem& problem) {
  const Vector xt = centralized_solve(problem);
  ReducedState s;
  s.x = StackedVector::replicate(xt, problem.num_nodes());
  s.phi = StackedVector(problem.num_nodes(), problem.dimension());
  for (int i = 0; i < problem.num_nodes(); ++i) s.phi.block(i) = -problem.local(i).gradient(xt);
  return s;
}

}  // namespace

TEST_CASE("DQM first step on the triangle") {
  const Vector b = (Vector(3) << 1.5, -0.25, 3.0).finished();
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  for (int i = 0; i < 3; ++i) locals.push_back(std::make_shared<QuadraticLocal>(Vector::Constant(1, b(i))));
  const ConsensusProblem problem(triangle(), locals);
  const ReducedState s1 = dqm_step(ReducedState::initial(problem), problem, 0.5);
  for (int i = 0; i < 3; ++i) CHECK(s1.x.block(i)(0) == doctest::Approx(b(i) / 3.0).epsilon(1e-15));
  // phi_1 = c L_o x_1.
  const Matrix Lo = incidence_operators(problem.network).laplacian_oriented;
  CHECK((s1.phi.values() - 0.5 * Lo * s1.x.values()).norm() <= 1e-15);
  CHECK(s1.k == 1);
}

TEST_CASE("optimal point is a fixed point of every method") {
  const Network net = build_random_graph(6, 0.5, 8, 2);
  SUBCASE("quadratic") {
    const ConsensusProblem problem = quadratic_problem(net, 9);
    const ReducedState s = optimal_state(problem);
    for (const ReducedState& t : {dqm_step(s, problem, 0.7), dlm_step(s, problem, 0.7, 2.0),
                                  dadmm_step(s, problem, 0.7)}) {
      CHECK(max_abs_diff(t.x.values(), s.x.values()) <= 1e-12);
      CHECK(max_abs_diff(t.phi.values(), s.phi.values()) <= 1e-12);
    }
  }
  SUBCASE("logistic") {
    const ConsensusProblem problem = logistic_problem(net.with_block_dim(3), generate_dataset(6, 5, 3, 10, 0.2), 0.1);
    const ReducedState s = optimal_state(problem);
    for (const ReducedState& t : {dqm_step(s, problem, 0.7), dlm_step(s, problem, 0.7, 2.0),
                                  dadmm_step(s, problem, 0.7)}) {
      CHECK(max_abs_diff(t.x.values(), s.x.values()) <= 1e-10);
      CHECK(max_abs_diff(t.phi.values(), s.phi.values()) <= 1e-10);
    }
  }
}

TEST_CASE("phi update is c L_o x and keeps zero block sum") {
  const Network net = build_random_graph(8, 0.4, 11, 3);
  const ConsensusProblem problem = logistic_problem(net, generate_dataset(8, 5, 3, 12, 0.2));
  const Matrix Lo = incidence_operators(net).laplacian_oriented;
  for (Method method : {Method::DQM, Method::DLM, Method::DADMM}) {
    const IterationTrace tr = run(problem, make_config(method, 0.7, 40, 3.0));
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      const Vector dphi = tr.states[k].phi.values() - tr.states[k - 1].phi.values();
      CHECK((dphi - 0.7 * Lo * tr.states[k].x.values()).norm() <= 1e-10 * (1 + dphi.norm()));
      CHECK(tr.states[k].phi.block_sum().norm() <= 1e-10);
    }
  }
  // Consensus iterates produce no phi increment.
  const StackedVector consensus = StackedVector::replicate(Vector::Constant(3, 0.3), 8);
  CHECK(oriented_laplacian_apply(net, consensus).values().norm() == 0.0);
}

TEST_CASE("quadratic collapse: DLM with H = rho I equals DQM, DADMM equals DQM") {
  const Network net = build_random_graph(7, 0.5, 13, 2);
  const double rho = 1.7;
  const ConsensusProblem iso = quadratic_with(net, rho * Matrix::Identity(2, 2), 14);
  const IterationTrace dqm = run(iso, make_config(Method::DQM, 0.6, 60));
  const IterationTrace dlm = run(iso, make_config(Method::DLM, 0.6, 60, rho));
  for (std::size_t k = 0; k < dqm.states.size(); ++k)
    CHECK(max_abs_diff(dqm.states[k].x.values(), dlm.states[k].x.values()) <= 1e-14);

  const ConsensusProblem quad = quadratic_problem(net, 15);
  const IterationTrace a = run(quad, make_config(Method::DQM, 0.6, 60));
  const IterationTrace b = run(quad, make_config(Method::DADMM, 0.6, 60));
  for (std::size_t k = 0; k < a.states.size(); ++k)
    CHECK(max_abs_diff(a.states[k].x.values(), b.states[k].x.values()) <= 1e-11);
}

TEST_CASE("reduced recursions reproduce the full-variable recursions") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Network net = build_random_graph(5, 0.5, seed, 2);
    const IncidenceOperators ops = incidence_operators(net);
    const ConsensusProblem quad = quadratic_problem(net, seed + 100);
    const ConsensusProblem logi = logistic_problem(net, generate_dataset(5, 4, 2, seed + 200, 0.2), 0.1);
    for (const ConsensusProblem* problem : {&quad, &logi})
      for (Method method : {Method::DQM, Method::DLM, Method::DADMM}) {
        const SolverConfig cfg = make_config(method, 0.8, 50, 2.0);
        const IterationTrace reduced = run(*problem, cfg);
        const std::vector<FullState> full = run_full_form(*problem, ops, cfg, 50);
        REQUIRE(full.size() == reduced.states.size());
        double worst = 0.0;
        for (std::size_t k = 0; k < full.size(); ++k)
          worst = std::max(worst, max_abs_diff(full[k].x, reduced.states[k].x.values()));
        CHECK(worst <= 1e-10);
      }
  }
}

TEST_CASE("full-form step satisfies the multiplier and auxiliary relations") {
  const Network net = build_random_graph(6, 0.5, 21, 2);
  const IncidenceOperators ops = incidence_operators(net);
  const ConsensusProblem problem = logistic_problem(net, generate_dataset(6, 4, 2, 22, 0.2), 0.1);
  const std::vector<FullState> full = run_full_form(problem, ops, make_config(Method::DQM, 0.8, 30), 30);
  for (std::size_t k = 1; k < full.size(); ++k) {
    CHECK((full[k].alpha + full[k].beta).norm() <= 1e-10);
    CHECK((ops.unoriented * full[k].x - 2.0 * full[k].z).norm() <= 1e-10);
    CHECK(column_space_residual(ops, full[k].alpha) <= 1e-9);
  }
}

TEST_CASE("centralized solve") {
  const Network net = build_random_graph(6, 0.5, 31, 3);
  SUBCASE("quadratic optimum is the mean of the centers") {
    const ConsensusProblem problem = quadratic_problem(net, 32, true);
    Vector mean = Vector::Zero(3);
    for (int i = 0; i < 6; ++i)
      mean += static_cast<const QuadraticLocal&>(problem.local(i)).center() / 6.0;
    CHECK(max_abs_diff(centralized_solve(problem), mean) <= 1e-14);
  }
  SUBCASE("one-dimensional logistic matches bisection") {
    // Node 0: s = 2, y = +1. Node 1: s = -1, y = +1. g'(x) = -2 sigma(-2x) + sigma(x).
    std::vector<std::shared_ptr<const LocalObjective>> locals{
        std::make_shared<LogisticLocal>(Matrix::Constant(1, 1, 2.0), Vector::Ones(1)),
        std::make_shared<LogisticLocal>(Matrix::Constant(1, 1, -1.0), Vector::Ones(1))};
    const ConsensusProblem problem(Network::from_undirected(2, 1, {{0, 1}}), locals);
    auto dg = [](double x) { return -2.0 * sigmoid(-2.0 * x) + sigmoid(x); };
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dg(mid) > 0 ? hi : lo) = mid;
    }
    const Vector x = centralized_solve(problem);
    CHECK(x(0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
    double grad = 0.0;
    for (int i = 0; i < 2; ++i) grad += problem.local(i).gradient(x)(0);
    CHECK(std::abs(grad) <= 1e-12);
  }
  SUBCASE("separable data is refused") {
    std::vector<std::shared_ptr<const LocalObjective>> locals{
        std::make_shared<LogisticLocal>(Matrix::Constant(1, 1, 1.0), Vector::Ones(1)),
        std::make_shared<LogisticLocal>(Matrix::Constant(1, 1, -1.0), -Vector::Ones(1))};
    const ConsensusProblem problem(Network::from_undirected(2, 1, {{0, 1}}), locals);
    CHECK_THROWS_AS(centralized_solve(problem), SolverError);
  }
}

TEST_CASE("run contract") {
  const Network net = build_random_graph(5, 0.5, 41, 2);
  const ConsensusProblem problem = quadratic_problem(net, 42);
  const IterationTrace empty = run(problem, make_config(Method::DQM, 1.0, 0));
  CHECK(empty.states.size() == 1);
  CHECK(empty.states[0].x.values().norm() == 0.0);
  CHECK(empty.states[0].phi.values().norm() == 0.0);

  const IterationTrace a = run(problem, make_config(Method::DLM, 1.0, 25, 2.0));
  const IterationTrace b = run(problem, make_config(Method::DLM, 1.0, 25, 2.0));
  CHECK(a.states.size() == 26);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(a.states[k].k == static_cast<long>(k));
    CHECK(a.states[k].x.values() == b.states[k].x.values());
  }
  CHECK(a.wall_ns.back() == 0);

  long calls = 0;
  RunOptions opts;
  opts.on_iterate = [&](const ReducedState&) { ++calls; };
  run(problem, make_config(Method::DQM, 1.0, 7), opts);
  CHECK(calls == 8);

  CHECK_THROWS_AS(run(problem, make_config(Method::DQM, 0.0, 5)), PreconditionError);
  CHECK_THROWS_AS(run(problem, make_config(Method::DLM, 1.0, 5, 0.0)), PreconditionError);
  CHECK_THROWS_AS(run(problem, make_config(Method::DQM, 1.0, -1)), PreconditionError);
}

TEST_CASE("inner Newton cap is reported") {
  const Network net = build_random_graph(5, 0.5, 43, 2);
  const ConsensusProblem problem = logistic_problem(net, generate_dataset(5, 4, 2, 44, 0.2));
  SolverConfig cfg = make_config(Method::DADMM, 0.7, 5);
  cfg.inner_max = 1;
  cfg.inner_tol = 1e-300;
  CHECK_THROWS_AS(run(problem, cfg), SolverError);
}

TEST_CASE("method names") {
  CHECK(parse_method("dqm") == Method::DQM);
  CHECK(parse_method("DADMM") == Method::DADMM);
  CHECK(to_string(Method::DLM) == "DLM");
  CHECK_THROWS_AS(parse_method("admm"), std::invalid_argument);
}
