#pragma once

#include "dqm/graph.hpp"
#include "dqm/objective.hpp"
#include "dqm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dqm {

inline constexpr int kSchemaVersion = 1;

/// Synthetic binary classification data split across n nodes.
struct Dataset {
  int n = 0;
  int q = 0;
  int p = 0;
  std::uint64_t seed = 0;
  double label_noise = 0.0;
  Vector w_true;
  /// samples[i] is q x p, one feature vector per row.
  std::vector<Matrix> samples;
  /// labels[i] has q entries in {-1, +1}.
  std::vector<Vector> labels;

  bool operator==(const Dataset& other) const;
};

/// Features and w_true i.i.d. N(0,1); y = sign(s^T w_true) (sign(0) = +1),
/// each label flipped independently with probability `label_noise`.
Dataset generate_dataset(int n, int q, int p, std::uint64_t seed, double label_noise = 0.05);

/// One LogisticLocal per node with regularization `lambda_reg`.
ConsensusProblem logistic_problem(const Network& net, const Dataset& data, double lambda_reg = 0.0);

/// f_i(x) = 1/2 (x - b_i)^T Q_i (x - b_i), b_i ~ N(0, I), Q_i diagonal with
/// entries uniform in [1, 2] (Q_i = I when `identity`).
ConsensusProblem quadratic_problem(const Network& net, std::uint64_t seed, bool identity = false);

// JSON documents. Every document carries "schema_version"; loaders throw
// FormatError with the offending line on malformed input or a version mismatch.

std::string network_to_json(const Network& net);
Network network_from_json(std::string_view text);

std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(std::string_view text);

/// Supports QuadraticLocal and LogisticLocal objectives.
std::string problem_to_json(const ConsensusProblem& problem);
ConsensusProblem problem_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dqm
