#pragma once

#include "dqm/analysis.hpp"
#include "dqm/solvers.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dqm {

/// Shortest decimal that parses back to the same double ("nan", "inf" for
/// non-finite values).
std::string format_double(double v);

inline constexpr const char* kTraceCsvHeader = "k,rel_err,V,err_bound_lhs,err_bound_rhs,delta_k,wall_ns";

std::string trace_csv(const std::vector<TraceRow>& rows);
/// Throws FormatError with the line number on malformed input.
std::vector<TraceRow> parse_trace_csv(std::string_view text);

/// Per-iteration node states: header "k,node,x0..x{p-1},phi0..phi{p-1}".
std::string state_csv(const IterationTrace& trace);
/// Rebuilds the states of a trace; method/config are taken from `config`.
IterationTrace parse_state_csv(std::string_view text, const SolverConfig& config);

std::string audit_report_json(const AuditReport& report);

}  // namespace dqm
