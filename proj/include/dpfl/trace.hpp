#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpfl {

// One row per outer AM iteration (or per decoupled solve).
struct TraceRow {
    std::uint64_t restart_index = 0;
    std::uint64_t outer_iter = 0;
    std::uint64_t inner_iters = 0;
    double F_gap = 0.0;
    double f_gap = 0.0;  // NaN when no consensus reference is known
    double consensus_residual = 0.0;
    std::uint64_t local_grad_calls = 0;
    std::uint64_t comm_rounds = 0;
    double elapsed_seconds = 0.0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct ConvergenceTrace {
    std::vector<TraceRow> rows;
};

inline constexpr const char* kTraceHeader =
    "restart_index,outer_iter,inner_iters,F_gap,f_gap,consensus_residual,local_grad_calls,comm_rounds,"
    "elapsed_seconds";

// Shortest decimal text that parses back to exactly `v` ("nan", "inf" for
// non-finite values).
std::string format_double(double v);
double parse_double(const std::string& text);

// With include_timing == false the elapsed_seconds column is written as 0 so
// that repeated runs produce byte-identical files.
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace, bool include_timing);
// Throws ConfigError with a line number on malformed input.
ConvergenceTrace read_trace_csv(std::istream& in);

}  // namespace dpfl
