#include <doctest.h>

#include "dqm/data.hpp"
#include "dqm/trace_io.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <random>

using namespace dqm;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("dataset shape and labels") {
  const Dataset one = generate_dataset(1, 1, 1, 5, 0.0);
  const double prod = one.samples[0](0, 0) * one.w_true(0);
  CHECK(one.labels[0](0) == (prod >= 0 ? 1.0 : -1.0));

  const Dataset d = generate_dataset(10, 5, 3, 2);
  CHECK(d.samples.size() == 10);
  Index total = 0;
  for (int i = 0; i < 10; ++i) {
    CHECK(d.samples[static_cast<std::size_t>(i)].rows() == 5);
    CHECK(d.samples[static_cast<std::size_t>(i)].cols() == 3);
    CHECK(d.samples[static_cast<std::size_t>(i)].allFinite());
    for (Index l = 0; l < 5; ++l) CHECK(std::abs(d.labels[static_cast<std::size_t>(i)](l)) == 1.0);
    total += d.samples[static_cast<std::size_t>(i)].rows();
  }
  CHECK(total == 50);
  CHECK(d.label_noise == 0.05);
}

TEST_CASE("dataset determinism and noise rate") {
  CHECK(generate_dataset(10, 5, 3, 9) == generate_dataset(10, 5, 3, 9));
  CHECK_FALSE(generate_dataset(10, 5, 3, 9) == generate_dataset(10, 5, 3, 10));
  const Dataset d = generate_dataset(200, 50, 4, 3, 0.2);
  long flipped = 0;
  for (int i = 0; i < 200; ++i)
    for (Index l = 0; l < 50; ++l) {
      const double clean = d.samples[static_cast<std::size_t>(i)].row(l).dot(d.w_true) >= 0 ? 1.0 : -1.0;
      flipped += clean != d.labels[static_cast<std::size_t>(i)](l);
    }
  const double rate = static_cast<double>(flipped) / 10000.0;
  CHECK(rate > 0.185);  // sd of the rate is 0.004
  CHECK(rate < 0.215);
  CHECK_THROWS_AS(generate_dataset(2, 2, 2, 1, 0.5), PreconditionError);
  CHECK_THROWS_AS(generate_dataset(0, 2, 2, 1), PreconditionError);
}

TEST_CASE("quadratic problem generator") {
  const Network net = build_random_graph(5, 0.6, 1, 3);
  const ConsensusProblem problem = quadratic_problem(net, 4);
  for (int i = 0; i < 5; ++i) {
    const auto& q = static_cast<const QuadraticLocal&>(problem.local(i)).curvature_matrix();
    for (Index j = 0; j < 3; ++j) {
      CHECK(q(j, j) >= 1.0);
      CHECK(q(j, j) <= 2.0);
    }
    CHECK((q - Matrix(q.diagonal().asDiagonal())).norm() == 0.0);
  }
  const ConsensusProblem ident = quadratic_problem(net, 4, true);
  CHECK(curvature_estimates(ident).M == 1.0);
}

TEST_CASE("network JSON round trip") {
  const Network tri = Network::from_undirected(3, 2, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(network_from_json(network_to_json(tri)) == tri);
  const Network net = build_random_graph(12, 0.3, 5);
  const Network back = network_from_json(network_to_json(net));
  CHECK(back == net);
  CHECK(back.provenance().accepted_seed == net.provenance().accepted_seed);
  CHECK(back.provenance().r_c == net.provenance().r_c);
}

TEST_CASE("dataset JSON round trip preserves every bit") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 100; ++t) {
    const Dataset d = generate_dataset(dim(rng), dim(rng), dim(rng), rng(), 0.1);
    const Dataset back = dataset_from_json(dataset_to_json(d));
    CHECK(back == d);
    CHECK(bit_equal(back.w_true, d.w_true));
    for (std::size_t i = 0; i < d.samples.size(); ++i) CHECK(bit_equal(back.samples[i], d.samples[i]));
  }
}

TEST_CASE("problem JSON round trip") {
  const Network net = build_random_graph(6, 0.5, 6, 3);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N(0.0, 1.0);
  for (const ConsensusProblem& problem :
       {logistic_problem(net, generate_dataset(6, 4, 3, 7, 0.2), 0.25), quadratic_problem(net, 8)}) {
    const ConsensusProblem back = problem_from_json(problem_to_json(problem));
    CHECK(back.network == problem.network);
    for (int t = 0; t < 5; ++t) {
      Vector x(3);
      for (Index j = 0; j < 3; ++j) x(j) = N(rng);
      for (int i = 0; i < 6; ++i) {
        CHECK(back.local(i).value(x) == problem.local(i).value(x));
        CHECK(back.local(i).gradient(x) == problem.local(i).gradient(x));
      }
    }
    CHECK(problem_to_json(back) == problem_to_json(problem));
  }
}

TEST_CASE("malformed documents carry positions") {
  try {
    network_from_json("{\n  \"schema_version\": 1,\n  \"n\": 3,\n  \"p\": 1,\n  \"edges\": [[0, 1], [1, 2]\n}");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 6);
  }
  try {
    network_from_json("{\n  \"schema_version\": 2,\n  \"n\": 2, \"p\": 1, \"edges\": [[0, 1]]\n}");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("schema") != std::string::npos);
  }
  CHECK_THROWS_AS(network_from_json("{\"schema_version\": 1, \"n\": 3, \"p\": 1, \"edges\": [[0, 1]]}"), FormatError);
  CHECK_THROWS_AS(dataset_from_json("{\"schema_version\": 1}"), FormatError);
  CHECK_THROWS_AS(problem_from_json("[]"), FormatError);
}

TEST_CASE("shortest round-trip doubles") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> N(0.0, 1e3);
  for (int t = 0; t < 1000; ++t) {
    const double v = N(rng) * std::pow(10.0, t % 40 - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("trace CSV round trip") {
  std::vector<TraceRow> rows;
  for (long k = 0; k < 5; ++k)
    rows.push_back({k, 1.0 / (k + 1), 0.3 * k, 1e-3 * k, 2e-3 * k, k == 4 ? std::nan("") : 0.01, 100 * k});
  const std::string csv = trace_csv(rows);
  CHECK(csv.rfind(std::string(kTraceCsvHeader) + "\n0,", 0) == 0);
  const std::vector<TraceRow> back = parse_trace_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].k == rows[i].k);
    CHECK(back[i].rel_err == rows[i].rel_err);
    CHECK(back[i].V == rows[i].V);
    CHECK(back[i].wall_ns == rows[i].wall_ns);
  }
  CHECK(std::isnan(back[4].delta_k));
  try {
    parse_trace_csv(std::string(kTraceCsvHeader) + "\n0,1,2,3,4,5,6\n1,x,2,3,4,5,6\n");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(parse_trace_csv("k,rel\n"), FormatError);
}

TEST_CASE("state CSV round trip") {
  const Network net = build_random_graph(5, 0.6, 11, 2);
  const ConsensusProblem problem = logistic_problem(net, generate_dataset(5, 4, 2, 12, 0.2));
  SolverConfig cfg;
  cfg.c = 0.7;
  cfg.max_iter = 10;
  const IterationTrace tr = run(problem, cfg);
  const IterationTrace back = parse_state_csv(state_csv(tr), cfg);
  REQUIRE(back.states.size() == tr.states.size());
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    CHECK(back.states[k].x.values() == tr.states[k].x.values());
    CHECK(back.states[k].phi.values() == tr.states[k].phi.values());
  }
  CHECK_THROWS_AS(parse_state_csv("k,node,x0,phi0\n1,0,1,2\n", cfg), FormatError);
}

TEST_CASE("text files") {
  const auto dir = std::filesystem::temp_directory_path() / "dqm_test_data_io" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file(dir / "a.txt", "hello\n");
  CHECK(read_text_file(dir / "a.txt") == "hello\n");
  CHECK_THROWS(read_text_file(dir / "missing.txt"));
  std::filesystem::remove_all(dir.parent_path());
}
