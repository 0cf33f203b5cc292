/*
   Copyright 2026 The polyqmc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#ifndef POLYQMC_IO_HPP
#define POLYQMC_IO_HPP

#include <polyqmc/lattice.hpp>
#include <polyqmc/scramble.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace polyqmc {

/// One error-vs-cost measurement of a convergence sweep.
struct ConvergenceRecord {
    std::string regime;  // "fixed", "ml", or "rule" (raw rule over n)
    std::uint64_t budget = 0;
    std::uint64_t cost = 0;
    std::uint64_t n_or_levels = 0;  // points (fixed/rule) or level count (ml)
    std::uint64_t s_or_dims = 0;    // active dimension (deepest level for ml)
    double rmse = 0.0;
    double stderr_of_rmse = 0.0;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double eps = 0.0;
    double anchor = 0.0;
    std::string shape;  // integrand descriptor
};

namespace detail {

/// Shortest decimal that round-trips the double exactly.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& field, const std::string& context) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("records file: bad number '" + field + "' in " + context);
    }
    if (pos != field.size()) {
        throw std::runtime_error("records file: trailing junk in '" + field + "'");
    }
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline constexpr const char* kRecordHeader =
    "regime,N,cost,n_or_levels,s_or_dims,rmse,stderr,reps,seed,alpha,eps,anchor,shape";

inline void save_records(const std::vector<ConvergenceRecord>& records, std::ostream& out) {
    out << kRecordHeader << "\n";
    for (const auto& r : records) {
        out << r.regime << "," << r.budget << "," << r.cost << "," << r.n_or_levels << ","
            << r.s_or_dims << "," << detail::format_real(r.rmse) << ","
            << detail::format_real(r.stderr_of_rmse) << "," << r.reps << "," << r.seed << ","
            << detail::format_real(r.alpha) << "," << detail::format_real(r.eps) << ","
            << detail::format_real(r.anchor) << "," << r.shape << "\n";
    }
}

inline void save_records(const std::vector<ConvergenceRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write records file: " + path);
    save_records(records, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<ConvergenceRecord> load_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecordHeader) {
        throw std::runtime_error("records file: missing or wrong header");
    }
    std::vector<ConvergenceRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 13) {
            throw std::runtime_error("records file: expected 13 fields, got " +
                                     std::to_string(f.size()));
        }
        ConvergenceRecord r;
        r.regime = f[0];
        r.budget = std::stoull(f[1]);
        r.cost = std::stoull(f[2]);
        r.n_or_levels = std::stoull(f[3]);
        r.s_or_dims = std::stoull(f[4]);
        r.rmse = detail::parse_real(f[5], "rmse");
        r.stderr_of_rmse = detail::parse_real(f[6], "stderr");
        r.reps = std::stoull(f[7]);
        r.seed = std::stoull(f[8]);
        r.alpha = detail::parse_real(f[9], "alpha");
        r.eps = detail::parse_real(f[10], "eps");
        r.anchor = detail::parse_real(f[11], "anchor");
        r.shape = f[12];
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<ConvergenceRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read records file: " + path);
    return load_records(in);
}

/// Unscrambled rule points, one row per point, coordinates as exact
/// dyadic decimals.
inline void save_points(const PointSet& ps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write points file: " + path);
    for (std::uint64_t i = 0; i < ps.n(); ++i) {
        for (int j = 0; j < ps.s(); ++j) {
            if (j) out << ",";
            out << detail::format_real(ps.value(i, j));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Scrambled points with the randomization recorded in header comments.
inline void save_points(const ScrambledPointSet& ps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write points file: " + path);
    const auto& spec = ps.spec();
    out << "# kind="
        << (spec.kind == ScrambleSpec::Kind::owen ? "owen" : "linear-shift") << "\n"
        << "# depth=" << spec.depth << "\n"
        << "# seed=" << spec.seed << "\n"
        << "# replicate=" << spec.replicate_id << "\n";
    for (std::uint64_t i = 0; i < ps.n(); ++i) {
        for (int j = 0; j < ps.s(); ++j) {
            if (j) out << ",";
            out << detail::format_real(ps.value(i, j));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace polyqmc

#endif
