#pragma once

// Plain-text interchange: comma-separated matrices (row-major, no header),
// triplet files with a `row,col,value` header, and telemetry CSV.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sinkmd/kernel.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/solvers.hpp"

namespace sinkmd::io {

/// Malformed input; the message carries the file and line number.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline double parse_number(std::string_view field, const std::string& where) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ParseError(where + ": not a number: '" + std::string(field) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                         : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    return out;
}

}  // namespace detail

inline Matrix parse_matrix(std::istream& in, const std::string& name = "<input>") {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (detail::trim(line).empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto fields = detail::split(line);
        if (rows == 0) {
            cols = fields.size();
        } else if (fields.size() != cols) {
            throw ParseError(where + ": expected " + std::to_string(cols) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (auto f : fields) data.push_back(detail::parse_number(f, where));
        ++rows;
    }
    if (rows == 0) throw ParseError(name + ": no data");
    return Matrix(rows, cols, std::move(data));
}

inline Matrix read_matrix(const std::string& path) {
    auto in = detail::open_in(path);
    return parse_matrix(in, path);
}

/// A vector may be stored as a single row or a single column.
inline std::vector<double> read_vector(const std::string& path) {
    const Matrix m = read_matrix(path);
    if (m.rows() != 1 && m.cols() != 1) {
        throw ParseError(path + ": expected a single row or column, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    return m.vector();
}

inline bool is_triplet_file(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        return t == "row,col,value";
    }
    return false;
}

inline std::vector<ConstraintSystem::Triplet> read_triplets(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<ConstraintSystem::Triplet> out;
    std::string line;
    bool header = false;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (detail::trim(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (!header) {
            if (detail::trim(line) != "row,col,value") {
                throw ParseError(where + ": expected header 'row,col,value'");
            }
            header = true;
            continue;
        }
        const auto fields = detail::split(line);
        if (fields.size() != 3) throw ParseError(where + ": expected 3 fields");
        const double r = detail::parse_number(fields[0], where);
        const double c = detail::parse_number(fields[1], where);
        if (r < 0 || c < 0 || r != std::floor(r) || c != std::floor(c)) {
            throw ParseError(where + ": row and col must be nonnegative integers");
        }
        out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                       detail::parse_number(fields[2], where)});
    }
    if (!header) throw ParseError(path + ": no data");
    return out;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix(const std::string& path, const Matrix& m) {
    auto out = detail::open_out(path);
    write_matrix(out, m);
}

/// One value per line.
inline void write_vector(const std::string& path, std::span<const double> v) {
    auto out = detail::open_out(path);
    for (double x : v) out << format_double(x) << '\n';
}

inline void write_trace(std::ostream& out, std::span<const TraceEntry> trace) {
    out << "iter,objective,violation_l1,time_ms\n";
    for (const auto& e : trace) {
        out << e.iter << ',' << format_double(e.objective) << ',' << format_double(e.violation_l1)
            << ',' << format_double(e.time_ms) << '\n';
    }
}

inline void write_trace(const std::string& path, std::span<const TraceEntry> trace) {
    auto out = detail::open_out(path);
    write_trace(out, trace);
}

inline std::vector<TraceEntry> read_trace(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "iter,objective,violation_l1,time_ms") {
        throw ParseError(path + ":1: expected telemetry header");
    }
    std::vector<TraceEntry> out;
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (detail::trim(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto f = detail::split(line);
        if (f.size() != 4) throw ParseError(where + ": expected 4 fields");
        out.push_back({static_cast<std::size_t>(detail::parse_number(f[0], where)),
                       detail::parse_number(f[1], where), detail::parse_number(f[2], where),
                       detail::parse_number(f[3], where)});
    }
    return out;
}

}  // namespace sinkmd::io
