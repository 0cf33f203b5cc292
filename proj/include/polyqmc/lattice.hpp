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

#ifndef POLYQMC_LATTICE_HPP
#define POLYQMC_LATTICE_HPP

#include <polyqmc/gf2poly.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyqmc {

/// Rule description: n = 2^m points, modulus p of degree m, one generating
/// polynomial per coordinate. Point i of coordinate j is the m-digit
/// truncation of the Laurent series of i(x) q_j(x) / p(x).
struct GeneratingVector {
    int m = 0;
    Gf2Poly p;
    std::vector<Gf2Poly> q;

    [[nodiscard]] int max_dim() const noexcept { return static_cast<int>(q.size()); }
    [[nodiscard]] std::uint64_t n() const noexcept { return std::uint64_t{1} << m; }

    void validate() const {
        if (m < 1 || m > 31) throw std::invalid_argument("GeneratingVector: m must be in [1, 31]");
        if (p.degree() != m) throw std::invalid_argument("GeneratingVector: degree(p) != m");
        if (!is_irreducible(p)) throw std::invalid_argument("GeneratingVector: p is reducible");
        for (const Gf2Poly& qj : q) {
            if (qj.is_zero()) throw std::invalid_argument("GeneratingVector: zero q component");
            if (qj.degree() >= m) {
                throw std::invalid_argument("GeneratingVector: q component of degree >= m");
            }
        }
    }

    /// Text format, one datum per line: b=2, m=<int>, p=<hex>, then one
    /// q=<hex> line per dimension.
    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write generating vector file: " + path);
        out << "b=2\n" << "m=" << m << "\n" << "p=" << p.to_hex() << "\n";
        for (const Gf2Poly& qj : q) out << "q=" << qj.to_hex() << "\n";
        if (!out) throw std::runtime_error("write failed: " + path);
    }

    static GeneratingVector load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read generating vector file: " + path);
        GeneratingVector g;
        bool saw_b = false, saw_m = false, saw_p = false;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("bad generating vector line: " + line);
            }
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            if (key == "b") {
                if (val != "2") throw std::runtime_error("unsupported base: " + val);
                saw_b = true;
            } else if (key == "m") {
                g.m = std::stoi(val);
                saw_m = true;
            } else if (key == "p") {
                g.p = Gf2Poly::from_hex(val);
                saw_p = true;
            } else if (key == "q") {
                g.q.push_back(Gf2Poly::from_hex(val));
            } else {
                throw std::runtime_error("bad generating vector key: " + key);
            }
        }
        if (!saw_b || !saw_m || !saw_p || g.q.empty()) {
            throw std::runtime_error("incomplete generating vector file: " + path);
        }
        g.validate();
        return g;
    }
};

/// Generating-matrix columns of coordinate j (0-based): column[l] is the
/// value index of the point with i = 2^l, i.e. of x^l q_j mod p. The value
/// index of point i is the XOR of the columns at i's set bits, because the
/// Laurent truncation is GF(2)-linear in the numerator.
inline std::vector<std::uint32_t> lattice_columns(Gf2Poly p, int m, Gf2Poly qj) {
    if (p.degree() != m) throw std::invalid_argument("lattice_columns: degree(p) != m");
    std::vector<std::uint32_t> cols(static_cast<std::size_t>(m));
    Gf2Poly xl = Gf2Poly::one();
    for (int l = 0; l < m; ++l) {
        const Gf2Poly u = poly_mulmod(xl, qj, p);
        cols[static_cast<std::size_t>(l)] = laurent_value_index(u, p, m);
        xl = poly_mulmod(xl, Gf2Poly::monomial(1), p);
    }
    return cols;
}

inline std::vector<std::uint32_t> lattice_columns(const GeneratingVector& g, int j) {
    if (j < 0 || j >= g.max_dim()) throw std::invalid_argument("lattice_columns: bad coordinate");
    return lattice_columns(g.p, g.m, g.q[static_cast<std::size_t>(j)]);
}

/// Materialized point set. Stores the value index a = floor(x * 2^m) per
/// (point, coordinate); real values and individual digits derive from it.
class PointSet {
  public:
    PointSet(int m, int s, std::vector<std::uint32_t> indices)
        : m_(m), s_(s), n_(std::uint64_t{1} << m), idx_(std::move(indices)) {
        if (m < 1 || m > 31) throw std::invalid_argument("PointSet: m must be in [1, 31]");
        if (s < 1) throw std::invalid_argument("PointSet: s must be >= 1");
        if (idx_.size() != n_ * static_cast<std::uint64_t>(s)) {
            throw std::invalid_argument("PointSet: index buffer size mismatch");
        }
        for (std::uint32_t a : idx_) {
            if (a >> m) throw std::invalid_argument("PointSet: value index out of range");
        }
    }

    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] int s() const noexcept { return s_; }
    [[nodiscard]] std::uint64_t n() const noexcept { return n_; }

    [[nodiscard]] std::uint32_t index(std::uint64_t i, int j) const {
        return idx_[i * static_cast<std::uint64_t>(s_) + static_cast<std::uint64_t>(j)];
    }

    [[nodiscard]] double value(std::uint64_t i, int j) const {
        return std::ldexp(static_cast<double>(index(i, j)), -m_);
    }

    /// Digit l (1-based, l = 1 most significant) of coordinate j of point i.
    [[nodiscard]] int digit(std::uint64_t i, int j, int l) const {
        return static_cast<int>((index(i, j) >> (m_ - l)) & 1u);
    }

  private:
    int m_;
    int s_;
    std::uint64_t n_;
    std::vector<std::uint32_t> idx_;
};

inline PointSet generate_points(const GeneratingVector& g, int s) {
    g.validate();
    if (s < 1 || s > g.max_dim()) {
        throw std::invalid_argument("generate_points: s outside available dimensions");
    }
    const std::uint64_t n = g.n();
    std::vector<std::uint32_t> idx(n * static_cast<std::uint64_t>(s));
    std::vector<std::uint32_t> delta(static_cast<std::size_t>(g.m * s));
    for (int j = 0; j < s; ++j) {
        // delta[j][z]: XOR of columns 0..z, the index change when the
        // binary increment i -> i+1 flips bits 0..z.
        const auto cols = lattice_columns(g, j);
        std::uint32_t acc = 0;
        for (int z = 0; z < g.m; ++z) {
            acc ^= cols[static_cast<std::size_t>(z)];
            delta[static_cast<std::size_t>(z * s + j)] = acc;
        }
    }
    std::vector<std::uint32_t> cur(static_cast<std::size_t>(s), 0);
    for (std::uint64_t i = 0;; ++i) {
        for (int j = 0; j < s; ++j) {
            idx[i * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(j)] =
                cur[static_cast<std::size_t>(j)];
        }
        if (i + 1 == n) break;
        const int z = std::countr_zero(i + 1);
        for (int j = 0; j < s; ++j) {
            cur[static_cast<std::size_t>(j)] ^= delta[static_cast<std::size_t>(z * s + j)];
        }
    }
    return PointSet(g.m, s, std::move(idx));
}

/// Value indices of a single coordinate for all n points, in point order:
/// the one-column version of generate_points, for callers that walk a
/// high-dimensional rule one coordinate at a time.
inline std::vector<std::uint32_t> coordinate_indices(Gf2Poly p, int m, Gf2Poly q) {
    const auto cols = lattice_columns(p, m, q);
    std::vector<std::uint32_t> delta(static_cast<std::size_t>(m));
    std::uint32_t acc = 0;
    for (int z = 0; z < m; ++z) {
        acc ^= cols[static_cast<std::size_t>(z)];
        delta[static_cast<std::size_t>(z)] = acc;
    }
    const std::uint64_t n = std::uint64_t{1} << m;
    std::vector<std::uint32_t> w(n);
    std::uint32_t cur = 0;
    w[0] = 0;
    for (std::uint64_t i = 1; i < n; ++i) {
        cur ^= delta[static_cast<std::size_t>(std::countr_zero(i))];
        w[i] = cur;
    }
    return w;
}

inline std::vector<std::uint32_t> coordinate_indices(const GeneratingVector& g, int j) {
    if (j < 0 || j >= g.max_dim()) throw std::invalid_argument("coordinate_indices: bad coordinate");
    return coordinate_indices(g.p, g.m, g.q[static_cast<std::size_t>(j)]);
}

/// Natural-order stream over the same indices as generate_points, holding
/// O(m s) state instead of the n-by-s matrix. advance() steps i -> i+1 and
/// must not be called past the last point.
class PointStream {
  public:
    PointStream(const GeneratingVector& g, int s)
        : m_(g.m), s_(s), n_(g.n()), i_(0),
          cur_(static_cast<std::size_t>(s), 0),
          delta_(static_cast<std::size_t>(g.m) * static_cast<std::size_t>(s)) {
        g.validate();
        if (s < 1 || s > g.max_dim()) {
            throw std::invalid_argument("PointStream: s outside available dimensions");
        }
        for (int j = 0; j < s; ++j) {
            const auto cols = lattice_columns(g, j);
            std::uint32_t acc = 0;
            for (int z = 0; z < m_; ++z) {
                acc ^= cols[static_cast<std::size_t>(z)];
                delta_[static_cast<std::size_t>(z * s_ + j)] = acc;
            }
        }
    }

    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] int s() const noexcept { return s_; }
    [[nodiscard]] std::uint64_t n() const noexcept { return n_; }
    [[nodiscard]] std::uint64_t i() const noexcept { return i_; }

    /// Value indices of the current point, one per coordinate.
    [[nodiscard]] const std::uint32_t* indices() const noexcept { return cur_.data(); }

    void advance() {
        if (i_ + 1 >= n_) throw std::logic_error("PointStream: advanced past the last point");
        ++i_;
        const int z = std::countr_zero(i_);
        for (int j = 0; j < s_; ++j) {
            cur_[static_cast<std::size_t>(j)] ^= delta_[static_cast<std::size_t>(z * s_ + j)];
        }
    }

    void reset() noexcept {
        i_ = 0;
        for (auto& c : cur_) c = 0;
    }

  private:
    int m_;
    int s_;
    std::uint64_t n_;
    std::uint64_t i_;
    std::vector<std::uint32_t> cur_;
    std::vector<std::uint32_t> delta_;
};

namespace detail {

/// Binomial coefficient with saturation; only used for enumeration guards.
inline double comp_count(int k, int s) {
    double c = 1.0;
    for (int i = 1; i <= s - 1; ++i) c *= static_cast<double>(k + i) / static_cast<double>(i);
    return c;
}

template <typename Fn>
void for_each_composition(int k, int s, std::vector<int>& d, int pos, Fn&& fn) {
    if (pos == s - 1) {
        d[static_cast<std::size_t>(pos)] = k;
        fn(d);
        return;
    }
    for (int v = 0; v <= k; ++v) {
        d[static_cast<std::size_t>(pos)] = v;
        for_each_composition(k - v, s, d, pos + 1, fn);
    }
}

}  // namespace detail

/// Smallest t such that every elementary interval of volume 2^{t-m}
/// (digit budget m - t split across coordinates) holds exactly 2^t points.
/// Exhaustive check, guarded to keep the enumeration around 10^7 buckets.
inline int net_strength(const PointSet& ps) {
    const int m = ps.m();
    const int s = ps.s();
    const double n = static_cast<double>(ps.n());
    if (n * detail::comp_count(m, s) > 1e7) {
        throw std::length_error("net_strength: enumeration guard exceeded");
    }
    for (int t = 0; t <= m; ++t) {
        const int k = m - t;
        const std::uint32_t boxes = std::uint32_t{1} << k;
        const std::uint64_t want = std::uint64_t{1} << t;
        bool ok = true;
        std::vector<int> d(static_cast<std::size_t>(s));
        std::vector<std::uint64_t> counts;
        detail::for_each_composition(k, s, d, 0, [&](const std::vector<int>& comp) {
            if (!ok) return;
            counts.assign(boxes, 0);
            for (std::uint64_t i = 0; i < ps.n(); ++i) {
                std::uint32_t key = 0;
                for (int j = 0; j < s; ++j) {
                    const int dj = comp[static_cast<std::size_t>(j)];
                    key = (key << dj) | (ps.index(i, j) >> (m - dj));
                }
                if (++counts[key] > want) {
                    ok = false;
                    return;
                }
            }
            for (std::uint64_t c : counts) {
                if (c != want) {
                    ok = false;
                    return;
                }
            }
        });
        if (ok) return t;
    }
    return m;
}

}  // namespace polyqmc

#endif
