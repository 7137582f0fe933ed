#include <doctest.h>

#include "dqm/cli.hpp"
#include "dqm/data.hpp"
#include "dqm/experiment.hpp"
#include "dqm/trace_io.hpp"

#include <filesystem>
#include <sstream>

using namespace dqm;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dqm_test_cli" / name;
  fs::remove_all(dir);
  return dir;
}

const char* kQuadraticConfig = R"({
  "schema_version": 1,
  "graph": {"n": 6, "r_c": 0.5, "seed": 3},
  "data": {"kind": "quadratic", "p": 2},
  "solver": {"methods": ["DQM", "DLM", "DADMM"], "c": 1.0, "rho": 2.0, "max_iter": 40}
})";

fs::path write_config(const fs::path& dir, const std::string& text) {
  write_text_file(dir / "config_in.json", text);
  return dir / "config_in.json";
}

}  // namespace

TEST_CASE("run writes traces and a summary") {
  const fs::path dir = scratch("run");
  const Result r = invoke({"run", "--out", dir.string(), "--max-iter", "50"});
  CHECK(r.code == cli::kOk);
  for (const char* f : {"config.json", "network.json", "problem.json", "dataset.json", "summary.json",
                        "trace_DQM.csv", "trace_DLM.csv", "trace_DADMM.csv"})
    CHECK(fs::exists(dir / f));
  const auto rows = parse_trace_csv(read_text_file(dir / "trace_DQM.csv"));
  CHECK(rows.size() == 51);
  CHECK(rows.front().k == 0);
  CHECK(rows.front().rel_err == 1.0);
  CHECK(read_text_file(dir / "summary.json").find("\"iterations_to\"") != std::string::npos);
  CHECK(r.out.find("DQM") != std::string::npos);
}

TEST_CASE("zero iterations is a valid run") {
  const fs::path dir = scratch("zero");
  CHECK(invoke({"run", "--out", dir.string(), "--max-iter", "0", "--methods", "DQM"}).code == cli::kOk);
  CHECK(parse_trace_csv(read_text_file(dir / "trace_DQM.csv")).size() == 1);
}

TEST_CASE("configuration errors exit with the config code") {
  const fs::path dir = scratch("config");
  CHECK(invoke({"run", "--out", dir.string(), "--methods", "ADMM"}).code == cli::kConfigError);
  CHECK(invoke({"frobnicate"}).code == cli::kConfigError);
  CHECK(invoke({"run", "--config", (dir / "missing.json").string()}).code != cli::kOk);

  const fs::path bad = write_config(dir, "{\n  \"schema_version\": 1,\n  \"solver\": {\"max_iters\": 5}\n}");
  const Result r = invoke({"run", "--config", bad.string(), "--out", dir.string()});
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("line 3") != std::string::npos);

  const fs::path neg = write_config(dir, R"({"schema_version": 1, "solver": {"c": {"DQM": -1}}})");
  CHECK(invoke({"run", "--config", neg.string(), "--out", dir.string()}).code == cli::kConfigError);
}

TEST_CASE("separable data is a solver failure") {
  const fs::path dir = scratch("separable");
  const fs::path cfg = write_config(dir, R"({"schema_version": 1, "data": {"label_noise": 0.0}})");
  const Result r = invoke({"run", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == cli::kSolverFailure);
  CHECK(r.err.find("lambda_reg") != std::string::npos);
}

TEST_CASE("flags override file values") {
  const fs::path dir = scratch("override");
  const fs::path cfg = write_config(dir, kQuadraticConfig);
  CHECK(invoke({"run", "--config", cfg.string(), "--out", (dir / "o").string(), "--max-iter", "7",
                "--methods", "DLM", "--seed", "9"})
            .code == cli::kOk);
  CHECK(parse_trace_csv(read_text_file(dir / "o" / "trace_DLM.csv")).size() == 8);
  CHECK_FALSE(fs::exists(dir / "o" / "trace_DQM.csv"));
  const std::string written = read_text_file(dir / "o" / "config.json");
  CHECK(written.find("\"seed\": 9") != std::string::npos);
  CHECK(written.find("\"seed\": 10") != std::string::npos);
}

TEST_CASE("identical invocations give byte-identical traces") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  CHECK(invoke({"run", "--out", a.string(), "--max-iter", "60", "--full-state"}).code == cli::kOk);
  CHECK(invoke({"run", "--out", b.string(), "--max-iter", "60", "--full-state"}).code == cli::kOk);
  for (const char* m : {"DQM", "DLM", "DADMM"}) {
    CHECK(read_text_file(a / (std::string("trace_") + m + ".csv")) == read_text_file(b / (std::string("trace_") + m + ".csv")));
    CHECK(read_text_file(a / (std::string("state_") + m + ".csv")) == read_text_file(b / (std::string("state_") + m + ".csv")));
  }
}

TEST_CASE("audit of a quadratic smoke run passes; a corrupted phi fails") {
  const fs::path dir = scratch("audit");
  const fs::path cfg = write_config(dir, kQuadraticConfig);
  const fs::path run_dir = dir / "run";
  CHECK(invoke({"run", "--config", cfg.string(), "--out", run_dir.string(), "--full-state"}).code == cli::kOk);
  const Result ok = invoke({"audit", run_dir.string()});
  CHECK(ok.code == cli::kOk);
  CHECK(fs::exists(run_dir / "audit_DQM.json"));
  CHECK(read_text_file(run_dir / "audit_DQM.json").find("\"passed\": true") != std::string::npos);

  // Perturb one phi entry of node 2 at k = 5.
  std::string state = read_text_file(run_dir / "state_DQM.csv");
  const std::string key = "\n5,2,";
  const auto pos = state.find(key);
  REQUIRE(pos != std::string::npos);
  const auto eol = state.find('\n', pos + 1);
  const auto last_comma = state.rfind(',', eol);
  state.replace(last_comma + 1, eol - last_comma - 1, "0.75");
  write_text_file(run_dir / "state_DQM.csv", state);
  const Result bad = invoke({"audit", run_dir.string(), "--methods", "DQM"});
  CHECK(bad.code == cli::kAuditFailure);
  CHECK(bad.out.find("dual_column_space: fail") != std::string::npos);
}

TEST_CASE("audit without full state explains how to fix it") {
  const fs::path dir = scratch("audit_missing");
  CHECK(invoke({"run", "--out", dir.string(), "--max-iter", "10", "--methods", "DQM"}).code == cli::kOk);
  const Result r = invoke({"audit", dir.string()});
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("--full-state") != std::string::npos);
}

TEST_CASE("audit of an unregularized logistic run reports skipped rate checks") {
  const fs::path dir = scratch("audit_m0");
  CHECK(invoke({"run", "--out", dir.string(), "--max-iter", "60", "--methods", "DQM", "--full-state", "--audit"}).code ==
        cli::kOk);
  const Result r = invoke({"audit", dir.string()});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("energy_contraction: skipped [assumption violated") != std::string::npos);
}

TEST_CASE("sweeps write one directory per value and a ranking") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, kQuadraticConfig);
  CHECK(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "c").string(), "--axis", "c", "--values",
                "0.5,1.5", "--methods", "DQM"})
            .code == cli::kOk);
  CHECK(fs::exists(dir / "c" / "c_0.5" / "trace_DQM.csv"));
  CHECK(fs::exists(dir / "c" / "c_1.5" / "trace_DQM.csv"));
  CHECK(read_text_file(dir / "c" / "sweep_summary.json").find("ranking_by_iterations_to_1e-6") != std::string::npos);

  CHECK(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "r").string(), "--axis", "r_c", "--values",
                "0.4,0.8", "--methods", "DQM", "--tune-c", "0.5,1,2"})
            .code == cli::kOk);
  CHECK(fs::exists(dir / "r" / "r_c_0.8" / "trace_DQM.csv"));

  // A single-value sweep reproduces a plain run.
  CHECK(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "one").string(), "--axis", "c", "--values", "1"})
            .code == cli::kOk);
  CHECK(invoke({"run", "--config", cfg.string(), "--out", (dir / "plain").string()}).code == cli::kOk);
  for (const char* m : {"DQM", "DLM", "DADMM"})
    CHECK(read_text_file(dir / "one" / "c_1" / (std::string("trace_") + m + ".csv")) ==
          read_text_file(dir / "plain" / (std::string("trace_") + m + ".csv")));
}

TEST_CASE("generate and compare") {
  const fs::path dir = scratch("gen");
  CHECK(invoke({"generate", "--out", dir.string(), "--seed", "4"}).code == cli::kOk);
  CHECK(network_from_json(read_text_file(dir / "network.json")) == build_random_graph(10, 0.4, 4, 3));
  CHECK(invoke({"compare", "--out", (dir / "cmp").string(), "--max-iter", "30"}).code == cli::kOk);
  CHECK(read_text_file(dir / "cmp" / "compare.txt").find("DADMM") != std::string::npos);
}

TEST_CASE("shipped configurations load and validate") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(DQM_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    INFO(entry.path().string());
    const ExperimentConfig cfg = config_from_json(read_text_file(entry.path()));
    CHECK_NOTHROW(cfg.validate());
    CHECK(config_from_json(config_to_json(cfg)).solver.c == cfg.solver.c);
    ++count;
  }
  CHECK(count >= 3);
}
