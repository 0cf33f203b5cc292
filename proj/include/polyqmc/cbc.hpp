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

#ifndef POLYQMC_CBC_HPP
#define POLYQMC_CBC_HPP

#include <polyqmc/common.hpp>
#include <polyqmc/lattice.hpp>
#include <polyqmc/prf.hpp>
#include <polyqmc/wspace.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace polyqmc {

namespace detail {

/// Shared core of wce_squared: value is any (i, j) -> coordinate accessor.
template <class Value>
double wce_excess_mean(std::uint64_t n, int s, const WeightSequence& ws, Value&& value) {
    std::vector<double> gam(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) {
        gam[static_cast<std::size_t>(j)] = ws.gamma(static_cast<std::uint64_t>(j) + 1);
    }
    StableSum total;
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t h = 0; h < n; ++h) {
            double q = 0.0;  // running excess product
            for (int j = 0; j < s; ++j) {
                const double x = gam[static_cast<std::size_t>(j)] * kernel_eval(value(i, j), value(h, j));
                q += x * (1.0 + q);
            }
            total.add(q);
        }
    }
    const double e2 = total.value() / (static_cast<double>(n) * static_cast<double>(n));
    return e2 < 0.0 ? 0.0 : e2;  // clamp the last ulp of roundoff
}

}  // namespace detail

/// Squared worst-case error of equal-weight quadrature in the weighted
/// product space over the first s coordinates. The kernel is mean-centered
/// (its integral in each argument is zero), which collapses the usual
/// three-term identity to
///   e^2 = -1 + (1/n^2) sum_{i,h} prod_{j<=s} (1 + gamma_j k(x_i^j, x_h^j)).
/// Computed through the excess product prod(1+x_j) - 1 so values around
/// 1e-8 survive the subtraction.
inline double wce_squared(const PointSet& ps, const WeightSequence& ws, int s) {
    if (s < 0 || s > ps.s()) throw std::invalid_argument("wce_squared: dimension mismatch");
    return detail::wce_excess_mean(ps.n(), s, ws,
                                   [&ps](std::uint64_t i, int j) { return ps.value(i, j); });
}

/// Same error functional on an explicit point list (points need not lie on
/// a dyadic grid; each row must carry at least s coordinates in [0,1]).
inline double wce_squared(const std::vector<std::vector<double>>& pts, const WeightSequence& ws,
                          int s) {
    if (pts.empty()) throw std::invalid_argument("wce_squared: empty point list");
    for (const auto& row : pts) {
        if (static_cast<int>(row.size()) < s) {
            throw std::invalid_argument("wce_squared: dimension mismatch");
        }
    }
    if (s < 0) throw std::invalid_argument("wce_squared: dimension mismatch");
    return detail::wce_excess_mean(
        pts.size(), s, ws,
        [&pts](std::uint64_t i, int j) { return pts[i][static_cast<std::size_t>(j)]; });
}

struct SearchSpec {
    enum class Kind { full, random };
    Kind kind = Kind::full;
    std::uint64_t candidates = 512;  // random only
    std::uint64_t seed = 0;          // random only; fixed default keeps runs reproducible

    static SearchSpec full() { return SearchSpec{}; }
    static SearchSpec random(std::uint64_t c, std::uint64_t seed = 0) {
        SearchSpec sp;
        sp.kind = Kind::random;
        sp.candidates = c;
        sp.seed = seed;
        return sp;
    }
};

struct MeritReport {
    std::vector<Gf2Poly> q;       // chosen component per dimension
    std::vector<double> e2;       // squared worst-case error after each dimension
    std::vector<double> seconds;  // wall clock per dimension scan

    /// Sidecar CSV: dimension, chosen polynomial, squared error.
    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write merit file: " + path);
        out << "dimension,q_hex,e2\n";
        out.precision(17);
        for (std::size_t j = 0; j < q.size(); ++j) {
            out << (j + 1) << "," << q[j].to_hex() << "," << e2[j] << "\n";
        }
        if (!out) throw std::runtime_error("write failed: " + path);
    }
};

struct CbcResult {
    GeneratingVector vector;
    MeritReport merit;
};

namespace detail {

/// Candidate encodings for one dimension scan, ascending (the scan keeps
/// the first strict minimum, so ascending order implements the
/// smallest-encoding tie-break).
inline std::vector<std::uint64_t> candidate_set(std::uint64_t n, const SearchSpec& search,
                                                std::uint64_t key) {
    const std::uint64_t total = n - 1;
    if (search.kind == SearchSpec::Kind::full || search.candidates >= total) {
        std::vector<std::uint64_t> all(total);
        for (std::uint64_t c = 1; c < n; ++c) all[c - 1] = c;
        return all;
    }
    // Keyed counter-mode rejection sampling without replacement;
    // deterministic given (seed, key).
    std::unordered_set<std::uint64_t> seen;
    std::vector<std::uint64_t> picked;
    picked.reserve(search.candidates);
    std::uint64_t ctr = 0;
    while (picked.size() < search.candidates) {
        const std::uint64_t c = 1 + mix64(key ^ ctr++) % total;
        if (seen.insert(c).second) picked.push_back(c);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace detail

/// Component-by-component construction: p is the smallest irreducible of
/// degree m; each q_j minimizes the squared worst-case error of the
/// j-dimensional rule over the scanned candidate set, ties to the smallest
/// encoding. Candidate scoring reuses two n-by-n tables: the kernel on the
/// value grid (candidates only permute grid values) and the excess product
/// over the dimensions already fixed, so one candidate costs one gather
/// pass over the pair upper triangle.
inline CbcResult cbc_construct(int m, int s_max, const WeightSequence& ws,
                               const SearchSpec& search = SearchSpec::full()) {
    if (m < 1) throw std::invalid_argument("cbc_construct: m must be >= 1");
    if (m > 13) {
        throw std::invalid_argument("cbc_construct: m > 13 exceeds the n^2 table budget");
    }
    if (s_max < 1) throw std::invalid_argument("cbc_construct: s_max must be >= 1");
    if (search.kind == SearchSpec::Kind::random && search.candidates < 1) {
        throw std::invalid_argument("cbc_construct: empty candidate budget");
    }

    const Gf2Poly p = find_irreducible(m);
    const std::uint64_t n = std::uint64_t{1} << m;
    const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

    // K[a*n+b] = k(a/n, b/n); Q[i*n+h] = excess product over fixed dims.
    std::vector<double> K(nn);
    for (std::uint64_t a = 0; a < n; ++a) {
        const double xa = std::ldexp(static_cast<double>(a), -m);
        for (std::uint64_t b = 0; b <= a; ++b) {
            const double v = kernel_eval(xa, std::ldexp(static_cast<double>(b), -m));
            K[a * n + b] = v;
            K[b * n + a] = v;
        }
    }
    std::vector<double> Q(nn, 0.0);

    CbcResult out;
    out.vector.m = m;
    out.vector.p = p;

    std::vector<std::uint32_t> w;
    std::vector<std::uint32_t> best_w;
    for (int dim = 1; dim <= s_max; ++dim) {
        const auto t0 = std::chrono::steady_clock::now();
        const double gamma = ws.gamma(static_cast<std::uint64_t>(dim));

        Gf2Poly chosen;
        if (dim == 1) {
            // Every nonzero candidate yields the same one-dimensional point
            // set (the full grid), so all scores tie and the tie-break
            // picks encoding 1 without a scan.
            chosen = Gf2Poly::one();
            best_w = coordinate_indices(p, m, chosen);
        } else {
            const auto cands = detail::candidate_set(
                n, search, mix64(search.seed + 0x9e3779b97f4a7c15ull) ^ static_cast<std::uint64_t>(dim));
            double best_score = 0.0;
            bool have_best = false;
            for (std::uint64_t cand : cands) {
                w = coordinate_indices(p, m, Gf2Poly{cand});
                // score = sum_{i,h} K[w_i,w_h] (1 + Q[i,h]); gamma and the
                // candidate-independent sum of Q are added afterwards.
                double score = 0.0;
                for (std::uint64_t i = 0; i < n; ++i) {
                    const double* Krow = K.data() + static_cast<std::size_t>(w[i]) * n;
                    const double* Qrow = Q.data() + static_cast<std::size_t>(i) * n;
                    double acc = 0.0;
                    for (std::uint64_t h = 0; h < i; ++h) {
                        acc += Krow[w[h]] * (1.0 + Qrow[h]);
                    }
                    score += 2.0 * acc + Krow[w[i]] * (1.0 + Qrow[i]);
                }
                if (!have_best || score < best_score) {
                    have_best = true;
                    best_score = score;
                    chosen = Gf2Poly{cand};
                    best_w.swap(w);
                }
            }
        }

        // Fold the winner into the excess product and take the exact merit
        // from the updated table (compensated; the scan's plain doubles
        // are only used to rank candidates).
        StableSum total;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double* Krow = K.data() + static_cast<std::size_t>(best_w[i]) * n;
            double* Qrow = Q.data() + static_cast<std::size_t>(i) * n;
            for (std::uint64_t h = 0; h < n; ++h) {
                const double x = gamma * Krow[best_w[h]];
                Qrow[h] += x * (1.0 + Qrow[h]);
                total.add(Qrow[h]);
            }
        }
        double e2 = total.value() / (static_cast<double>(n) * static_cast<double>(n));
        if (e2 < 0.0) e2 = 0.0;

        out.vector.q.push_back(chosen);
        out.merit.q.push_back(chosen);
        out.merit.e2.push_back(e2);
        out.merit.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return out;
}

}  // namespace polyqmc

#endif
