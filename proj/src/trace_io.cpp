#include "dqm/trace_io.hpp"

#include "json_util.hpp"

#include <charconv>
#include <cmath>
#include <map>

namespace dqm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
T parse_number(std::string_view s, std::size_t line, std::size_t column) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (s == "inf") return std::numeric_limits<T>::infinity();
    if (s == "-inf") return -std::numeric_limits<T>::infinity();
  }
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw FormatError("invalid number '" + std::string(s) + "'", line, column);
  return value;
}

}  // namespace

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (const TraceRow& r : rows) {
    out += std::to_string(r.k);
    for (double v : {r.rel_err, r.V, r.err_bound_lhs, r.err_bound_rhs, r.delta_k}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(r.wall_ns);
    out += '\n';
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kTraceCsvHeader)
    throw FormatError(std::string("trace CSV: expected header '") + kTraceCsvHeader + "'", 1, 1);
  std::vector<TraceRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = split_fields(lines[ln]);
    if (f.size() != 7) throw FormatError("trace CSV: expected 7 fields", ln + 1, 1);
    TraceRow r;
    r.k = parse_number<long>(f[0], ln + 1, 1);
    r.rel_err = parse_number<double>(f[1], ln + 1, 2);
    r.V = parse_number<double>(f[2], ln + 1, 3);
    r.err_bound_lhs = parse_number<double>(f[3], ln + 1, 4);
    r.err_bound_rhs = parse_number<double>(f[4], ln + 1, 5);
    r.delta_k = parse_number<double>(f[5], ln + 1, 6);
    r.wall_ns = parse_number<std::int64_t>(f[6], ln + 1, 7);
    rows.push_back(r);
  }
  return rows;
}

std::string state_csv(const IterationTrace& trace) {
  std::string out = "k,node";
  const Index p = trace.states.empty() ? 0 : trace.states.front().x.block_dim();
  for (Index j = 0; j < p; ++j) out += ",x" + std::to_string(j);
  for (Index j = 0; j < p; ++j) out += ",phi" + std::to_string(j);
  out += '\n';
  for (const ReducedState& s : trace.states) {
    for (Index i = 0; i < s.x.num_blocks(); ++i) {
      out += std::to_string(s.k);
      out += ',';
      out += std::to_string(i);
      for (Index j = 0; j < p; ++j) {
        out += ',';
        out += format_double(s.x.block(i)(j));
      }
      for (Index j = 0; j < p; ++j) {
        out += ',';
        out += format_double(s.phi.block(i)(j));
      }
      out += '\n';
    }
  }
  return out;
}

IterationTrace parse_state_csv(std::string_view text, const SolverConfig& config) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError("state CSV: empty file", 1, 1);
  const auto header = split_fields(lines.front());
  if (header.size() < 4 || header[0] != "k" || header[1] != "node" || (header.size() - 2) % 2 != 0)
    throw FormatError("state CSV: expected header 'k,node,x0..,phi0..'", 1, 1);
  const Index p = static_cast<Index>((header.size() - 2) / 2);

  std::map<long, std::vector<std::pair<long, std::vector<double>>>> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = split_fields(lines[ln]);
    if (f.size() != header.size())
      throw FormatError("state CSV: expected " + std::to_string(header.size()) + " fields", ln + 1, 1);
    const long k = parse_number<long>(f[0], ln + 1, 1);
    const long node = parse_number<long>(f[1], ln + 1, 2);
    std::vector<double> vals;
    for (std::size_t c = 2; c < f.size(); ++c) vals.push_back(parse_number<double>(f[c], ln + 1, c + 1));
    rows[k].emplace_back(node, std::move(vals));
  }

  IterationTrace trace;
  trace.method = config.method;
  trace.config = config;
  long expected_k = 0;
  Index n = -1;
  for (auto& [k, nodes] : rows) {
    if (k != expected_k) throw FormatError("state CSV: iteration " + std::to_string(expected_k) + " missing");
    ++expected_k;
    if (n < 0) n = static_cast<Index>(nodes.size());
    if (static_cast<Index>(nodes.size()) != n)
      throw FormatError("state CSV: iteration " + std::to_string(k) + " has a different node count");
    ReducedState s;
    s.k = k;
    s.x = StackedVector(n, p);
    s.phi = StackedVector(n, p);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (auto& [node, vals] : nodes) {
      if (node < 0 || node >= n || seen[static_cast<std::size_t>(node)])
        throw FormatError("state CSV: bad or repeated node index at iteration " + std::to_string(k));
      seen[static_cast<std::size_t>(node)] = 1;
      for (Index j = 0; j < p; ++j) {
        s.x.block(node)(j) = vals[static_cast<std::size_t>(j)];
        s.phi.block(node)(j) = vals[static_cast<std::size_t>(p + j)];
      }
    }
    trace.states.push_back(std::move(s));
    trace.wall_ns.push_back(0);
  }
  return trace;
}

std::string audit_report_json(const AuditReport& report) {
  using detail::Json;
  auto num = [](double v) -> Json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  Json checks = Json::array();
  for (const CheckResult& c : report.checks) {
    Json entry{{"name", c.name},
               {"status", to_string(c.status)},
               {"worst_margin", num(c.worst_margin)},
               {"worst_value", num(c.worst_value)},
               {"first_failure_iteration", c.first_failure >= 0 ? Json(c.first_failure) : Json()},
               {"iterations_checked", c.checked}};
    if (!c.note.empty()) entry["note"] = c.note;
    checks.push_back(std::move(entry));
  }
  Json doc{{"schema_version", 1},
           {"method", to_string(report.method)},
           {"passed", report.passed()},
           {"quadratic_crossover_iteration",
            report.quadratic_crossover >= 0 ? Json(report.quadratic_crossover) : Json()},
           {"checks", std::move(checks)}};
  return doc.dump(2) + "\n";
}

}  // namespace dqm
