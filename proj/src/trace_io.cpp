#include "dpfl/trace.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <system_error>

#include "dpfl/errors.hpp"

namespace dpfl {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, end);
}

double parse_double(const std::string& text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("not a number: '" + text + "'");
    return v;
}

namespace {

std::uint64_t parse_count(const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError("not a count: '" + text + "'");
    return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace, bool include_timing) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace.rows) {
        out << r.restart_index << ',' << r.outer_iter << ',' << r.inner_iters << ',' << format_double(r.F_gap) << ','
            << format_double(r.f_gap) << ',' << format_double(r.consensus_residual) << ',' << r.local_grad_calls << ','
            << r.comm_rounds << ',' << format_double(include_timing ? r.elapsed_seconds : 0.0) << '\n';
    }
}

ConvergenceTrace read_trace_csv(std::istream& in) {
    ConvergenceTrace trace;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line != kTraceHeader) throw ConfigError("trace csv line 1: unexpected header");
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) {
            throw ConfigError("trace csv line " + std::to_string(lineno) + ": expected 9 fields, got " +
                              std::to_string(f.size()));
        }
        try {
            TraceRow r;
            r.restart_index = parse_count(f[0]);
            r.outer_iter = parse_count(f[1]);
            r.inner_iters = parse_count(f[2]);
            r.F_gap = parse_double(f[3]);
            r.f_gap = parse_double(f[4]);
            r.consensus_residual = parse_double(f[5]);
            r.local_grad_calls = parse_count(f[6]);
            r.comm_rounds = parse_count(f[7]);
            r.elapsed_seconds = parse_double(f[8]);
            trace.rows.push_back(r);
        } catch (const ConfigError& e) {
            throw ConfigError("trace csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return trace;
}

}  // namespace dpfl
