#include "dqm/data.hpp"

#include "json_util.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace dqm {

using detail::field;
using detail::Json;

bool Dataset::operator==(const Dataset& o) const {
  if (n != o.n || q != o.q || p != o.p || seed != o.seed || label_noise != o.label_noise ||
      w_true != o.w_true || samples.size() != o.samples.size() || labels.size() != o.labels.size())
    return false;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i] != o.samples[i] || labels[i] != o.labels[i]) return false;
  return true;
}

Dataset generate_dataset(int n, int q, int p, std::uint64_t seed, double label_noise) {
  if (n < 1 || q < 1 || p < 1) throw PreconditionError("generate_dataset: n, q, p must be >= 1");
  if (!(label_noise >= 0.0 && label_noise < 0.5))
    throw PreconditionError("generate_dataset: label_noise must lie in [0, 0.5)");
  Dataset d;
  d.n = n;
  d.q = q;
  d.p = p;
  d.seed = seed;
  d.label_noise = label_noise;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  d.w_true.resize(p);
  for (int k = 0; k < p; ++k) d.w_true(k) = gauss(rng);
  d.samples.resize(static_cast<std::size_t>(n));
  d.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Matrix& s = d.samples[static_cast<std::size_t>(i)];
    Vector& y = d.labels[static_cast<std::size_t>(i)];
    s.resize(q, p);
    y.resize(q);
    for (int l = 0; l < q; ++l) {
      for (int k = 0; k < p; ++k) s(l, k) = gauss(rng);
      double label = s.row(l).dot(d.w_true) >= 0.0 ? 1.0 : -1.0;
      if (coin(rng) < label_noise) label = -label;
      y(l) = label;
    }
  }
  return d;
}

ConsensusProblem logistic_problem(const Network& net, const Dataset& data, double lambda_reg) {
  if (data.n != net.num_nodes())
    throw PreconditionError("logistic_problem: dataset has " + std::to_string(data.n) +
                            " nodes, network has " + std::to_string(net.num_nodes()));
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  locals.reserve(static_cast<std::size_t>(data.n));
  for (int i = 0; i < data.n; ++i)
    locals.push_back(std::make_shared<LogisticLocal>(data.samples[static_cast<std::size_t>(i)],
                                                     data.labels[static_cast<std::size_t>(i)],
                                                     lambda_reg));
  return ConsensusProblem(net.with_block_dim(data.p), std::move(locals));
}

ConsensusProblem quadratic_problem(const Network& net, std::uint64_t seed, bool identity) {
  const int p = net.block_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1.0, 2.0);
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  for (int i = 0; i < net.num_nodes(); ++i) {
    Vector b(p);
    for (int k = 0; k < p; ++k) b(k) = gauss(rng);
    Matrix Q = Matrix::Identity(p, p);
    if (!identity)
      for (int k = 0; k < p; ++k) Q(k, k) = scale(rng);
    locals.push_back(std::make_shared<QuadraticLocal>(Q, b));
  }
  return ConsensusProblem(net, std::move(locals));
}

// ---------------------------------------------------------------------------

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from(const Json& j, std::string_view text, const char* key) {
  const auto values = field<std::vector<double>>(j, key, text);
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Matrix matrix_from(const Json& j, std::string_view text, const char* key) {
  const auto rows = field<std::vector<std::vector<double>>>(j, key, text);
  const Index cols = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  Matrix m(static_cast<Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Index>(rows[r].size()) != cols)
      throw FormatError(std::string("ragged matrix in field '") + key + "'",
                        detail::line_of_key(text, key), 1);
    for (Index c = 0; c < cols; ++c) m(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return m;
}

Json network_doc(const Network& net) {
  Json edges = Json::array();
  for (auto [i, j] : net.undirected_edges()) edges.push_back({i, j});
  const auto& prov = net.provenance();
  return Json{{"schema_version", kSchemaVersion},
              {"n", net.num_nodes()},
              {"p", net.block_dim()},
              {"edges", std::move(edges)},
              {"seed", prov.seed},
              {"r_c", prov.r_c},
              {"accepted_seed", prov.accepted_seed},
              {"attempts", prov.attempts}};
}

Network network_from_doc(const Json& doc, std::string_view text) {
  detail::check_schema(doc, text, "network");
  const int n = field<int>(doc, "n", text);
  const int p = field<int>(doc, "p", text);
  const auto pairs = field<std::vector<std::vector<int>>>(doc, "edges", text);
  std::vector<Edge> edges;
  for (const auto& e : pairs) {
    if (e.size() != 2) throw FormatError("network: each edge must be a pair", detail::line_of_key(text, "edges"), 1);
    edges.emplace_back(e[0], e[1]);
  }
  Network::Provenance prov;
  if (doc.contains("seed")) prov.seed = field<std::uint64_t>(doc, "seed", text);
  if (doc.contains("r_c")) prov.r_c = field<double>(doc, "r_c", text);
  prov.accepted_seed = doc.contains("accepted_seed")
                           ? field<std::uint64_t>(doc, "accepted_seed", text)
                           : prov.seed;
  if (doc.contains("attempts")) prov.attempts = field<int>(doc, "attempts", text);
  try {
    return Network::from_undirected(n, p, edges, prov);
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("network: ") + e.what(), detail::line_of_key(text, "edges"), 1);
  }
}

Json dataset_doc(const Dataset& d) {
  Json nodes = Json::array();
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    nodes.push_back({{"samples", matrix_json(d.samples[i])}, {"labels", vector_json(d.labels[i])}});
  return Json{{"schema_version", kSchemaVersion},
              {"n", d.n},
              {"q", d.q},
              {"p", d.p},
              {"seed", d.seed},
              {"label_noise", d.label_noise},
              {"feature_distribution", "standard_normal"},
              {"w_true", vector_json(d.w_true)},
              {"nodes", std::move(nodes)}};
}

Dataset dataset_from_doc(const Json& doc, std::string_view text) {
  detail::check_schema(doc, text, "dataset");
  Dataset d;
  d.n = field<int>(doc, "n", text);
  d.q = field<int>(doc, "q", text);
  d.p = field<int>(doc, "p", text);
  d.seed = field<std::uint64_t>(doc, "seed", text);
  d.label_noise = field<double>(doc, "label_noise", text);
  d.w_true = vector_from(doc, text, "w_true");
  const Json& nodes = field<Json>(doc, "nodes", text);
  if (!nodes.is_array() || static_cast<int>(nodes.size()) != d.n)
    throw FormatError("dataset: 'nodes' must list n entries", detail::line_of_key(text, "nodes"), 1);
  for (const Json& node : nodes) {
    Matrix s = matrix_from(node, text, "samples");
    Vector y = vector_from(node, text, "labels");
    if (s.rows() != d.q || s.cols() != d.p || y.size() != d.q)
      throw FormatError("dataset: node block does not have q samples of dimension p",
                        detail::line_of_key(text, "samples"), 1);
    for (Index l = 0; l < y.size(); ++l)
      if (y(l) != 1.0 && y(l) != -1.0)
        throw FormatError("dataset: labels must be +1 or -1", detail::line_of_key(text, "labels"), 1);
    d.samples.push_back(std::move(s));
    d.labels.push_back(std::move(y));
  }
  return d;
}

}  // namespace

std::string network_to_json(const Network& net) { return network_doc(net).dump(2) + "\n"; }

Network network_from_json(std::string_view text) {
  return network_from_doc(detail::parse_json(text), text);
}

std::string dataset_to_json(const Dataset& data) { return dataset_doc(data).dump(2) + "\n"; }

Dataset dataset_from_json(std::string_view text) {
  return dataset_from_doc(detail::parse_json(text), text);
}

std::string problem_to_json(const ConsensusProblem& problem) {
  Json locals = Json::array();
  for (int i = 0; i < problem.num_nodes(); ++i) {
    const LocalObjective& f = problem.local(i);
    if (const auto* lg = dynamic_cast<const LogisticLocal*>(&f)) {
      locals.push_back({{"type", "logistic"},
                        {"reg", lg->regularization()},
                        {"samples", matrix_json(lg->samples())},
                        {"labels", vector_json(lg->labels())}});
    } else if (const auto* qd = dynamic_cast<const QuadraticLocal*>(&f)) {
      locals.push_back({{"type", "quadratic"},
                        {"Q", matrix_json(qd->curvature_matrix())},
                        {"b", vector_json(qd->center())}});
    } else {
      throw PreconditionError("problem_to_json: unsupported local objective at node " +
                              std::to_string(i));
    }
  }
  Json doc{{"schema_version", kSchemaVersion},
           {"network", network_doc(problem.network)},
           {"locals", std::move(locals)}};
  return doc.dump(2) + "\n";
}

ConsensusProblem problem_from_json(std::string_view text) {
  const Json doc = detail::parse_json(text);
  detail::check_schema(doc, text, "problem");
  Network net = network_from_doc(field<Json>(doc, "network", text), text);
  const Json& arr = field<Json>(doc, "locals", text);
  if (!arr.is_array()) throw FormatError("problem: 'locals' must be an array", detail::line_of_key(text, "locals"), 1);
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  for (const Json& entry : arr) {
    const auto type = field<std::string>(entry, "type", text);
    try {
      if (type == "logistic") {
        locals.push_back(std::make_shared<LogisticLocal>(matrix_from(entry, text, "samples"),
                                                         vector_from(entry, text, "labels"),
                                                         field<double>(entry, "reg", text)));
      } else if (type == "quadratic") {
        locals.push_back(std::make_shared<QuadraticLocal>(matrix_from(entry, text, "Q"),
                                                          vector_from(entry, text, "b")));
      } else {
        throw FormatError("problem: unknown local type '" + type + "'", detail::line_of_key(text, "type"), 1);
      }
    } catch (const PreconditionError& e) {
      throw FormatError(std::string("problem: ") + e.what(), detail::line_of_key(text, "locals"), 1);
    }
  }
  try {
    return ConsensusProblem(std::move(net), std::move(locals));
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("problem: ") + e.what(), detail::line_of_key(text, "locals"), 1);
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace dqm
