#pragma once

// CSV reading and writing for observations, experiment records, summaries
// and curves. Floating-point fields carry 17 significant digits so that a
// write/read cycle is exact.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gammabayes/analysis.hpp"
#include "gammabayes/curves.hpp"
#include "gammabayes/errors.hpp"
#include "gammabayes/experiment.hpp"
#include "gammabayes/gamma_model.hpp"

namespace gammabayes::io {

/// Malformed user input (bad rows, unknown columns).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

template <class Int>
Int parse_integer(std::string_view s, const char* what) {
    s = trim(s);
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(std::string("cannot parse ") + what + " from '" + std::string(s) + "'");
    return v;
}

// ---------------------------------------------------------------------------
// Observations: one positive real per line, optional header "x", blank
// lines ignored. Row numbers in errors are 1-based file lines.

inline std::vector<double> read_observations(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t row = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++row;
        const std::string_view field = trim(line);
        if (field.empty()) continue;
        if (!seen_content) {
            seen_content = true;
            if (field == "x") continue;
        }
        const auto v = parse_double(field);
        if (!v)
            throw InputError("row " + std::to_string(row) + ": '" + std::string(field) +
                             "' is not a number");
        if (!(*v > 0.0) || !std::isfinite(*v))
            throw InputError("row " + std::to_string(row) + ": value " + std::string(field) +
                             " is not a positive finite number");
        values.push_back(*v);
    }
    if (values.empty()) throw InputError("input contains no observations");
    return values;
}

inline std::vector<double> read_observations_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_observations(in);
}

inline void write_observations(std::ostream& out, std::span<const double> values) {
    out << "x\n";
    for (double v : values) out << format_double(v) << '\n';
}

// ---------------------------------------------------------------------------
// Experiment records

inline constexpr std::string_view kRecordHeader =
    "method,n,replication_index,seed,true_shape,true_scale,est_shape,est_scale,kl,iterations,"
    "converged,wall_time_seconds";

/// Lines starting with '#' precede the header and are skipped on read.
inline void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records,
                          const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << to_string(r.method) << ',' << r.n << ',' << r.replication_index << ',' << r.seed
            << ',' << format_double(r.true_shape) << ',' << format_double(r.true_scale) << ','
            << format_double(r.est_shape) << ',' << format_double(r.est_scale) << ','
            << format_double(r.kl) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
            << format_double(r.wall_time_seconds) << '\n';
    }
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<ExperimentRecord> read_records(std::istream& in) {
    std::vector<ExperimentRecord> out;
    std::string line;
    std::size_t row = 0;
    bool header = false;
    auto num = [&](std::string_view f) {
        const auto v = parse_double(f);
        if (!v) throw InputError("records row " + std::to_string(row) + ": bad number '" +
                                 std::string(f) + "'");
        return *v;
    };
    while (std::getline(in, line)) {
        ++row;
        const std::string_view l = trim(line);
        if (l.empty() || l.front() == '#') continue;
        if (!header) {
            if (l != kRecordHeader) throw InputError("records: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = split_commas(l);
        if (f.size() != 12)
            throw InputError("records row " + std::to_string(row) + ": expected 12 fields");
        ExperimentRecord r{};
        r.method = parse_method(f[0]);
        r.n = parse_integer<std::size_t>(f[1], "n");
        r.replication_index = parse_integer<std::size_t>(f[2], "replication_index");
        r.seed = parse_integer<std::uint64_t>(f[3], "seed");
        r.true_shape = num(f[4]);
        r.true_scale = num(f[5]);
        r.est_shape = num(f[6]);
        r.est_scale = num(f[7]);
        r.kl = num(f[8]);
        r.iterations = parse_integer<int>(f[9], "iterations");
        r.converged = parse_integer<int>(f[10], "converged") != 0;
        r.wall_time_seconds = num(f[11]);
        out.push_back(r);
    }
    return out;
}

inline void write_redraws(std::ostream& out, const std::vector<RedrawDiagnostic>& redraws) {
    out << "n,replication_index,redraws\n";
    for (const auto& r : redraws)
        out << r.n << ',' << r.replication_index << ',' << r.redraws << '\n';
}

// ---------------------------------------------------------------------------
// Summary: one table, rows tagged by `kind` (bias, paired_t, timing).

inline constexpr std::string_view kSummaryHeader =
    "kind,method,method_b,n,param,mean_bias,sd_bias,replications,t_statistic,"
    "degrees_of_freedom,p_value,median_iterations,median_wall_time_seconds";

inline void write_summary(std::ostream& out, const std::vector<BiasSummary>& bias_rows,
                          const std::vector<PairedTestResult>& tests,
                          const std::vector<TimingSummary>& timing) {
    out << kSummaryHeader << '\n';
    for (const auto& b : bias_rows)
        out << "bias," << to_string(b.method) << ",," << b.n << ',' << to_string(b.param) << ','
            << format_double(b.mean_bias) << ',' << format_double(b.sd_bias) << ','
            << b.replications << ",,,,,\n";
    for (const auto& t : tests)
        out << "paired_t," << to_string(t.method_a) << ',' << to_string(t.method_b) << ',' << t.n
            << ",kl,,," << (t.degrees_of_freedom + 1) << ',' << format_double(t.t_statistic)
            << ',' << t.degrees_of_freedom << ',' << format_double(t.p_value) << ",,\n";
    for (const auto& t : timing)
        out << "timing," << to_string(t.method) << ",," << t.n << ",,,," << t.replications
            << ",,,," << format_double(t.median_iterations) << ','
            << format_double(t.median_wall_time_seconds) << '\n';
}

// ---------------------------------------------------------------------------

inline void write_curves(std::ostream& out, const std::vector<CurvePoint>& points) {
    out << "alpha,log_prior,log_posterior\n";
    for (const auto& p : points)
        out << format_double(p.alpha) << ',' << format_double(p.log_prior) << ','
            << format_double(p.log_posterior) << '\n';
}

}  // namespace gammabayes::io
