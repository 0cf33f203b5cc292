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

#ifndef POLYQMC_SCRAMBLE_HPP
#define POLYQMC_SCRAMBLE_HPP

#include <polyqmc/common.hpp>
#include <polyqmc/lattice.hpp>
#include <polyqmc/prf.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace polyqmc {

struct ScrambleSpec {
    enum class Kind { owen, linear_shift };
    Kind kind = Kind::owen;
    int depth = 31;  // D: digits randomized individually; below D a uniform offset fills in
    std::uint64_t seed = 0;
    std::uint64_t replicate_id = 0;
};

/// Randomizer for one coordinate: maps an m-digit value index to a point
/// in [0,1). Pure function of (spec, coordinate, index); all randomness
/// comes from the keyed PRF, so equal indices always map to equal outputs
/// and the map is a valid random permutation of [0,1).
///
/// owen: digit l of the output is the input digit XORed with a PRF bit
/// attached to the permutation-tree node reached by the first l-1 input
/// digits (node ids are heap indices, shared across points with a common
/// prefix, which is exactly the nestedness Owen scrambling requires).
/// Digits m+1..D sit below the input resolution: their tree path is fixed
/// by the full index, so they are drawn in one block keyed by the index.
///
/// linear_shift: output digits are a unit-lower-triangular GF(2) transform
/// of the input digits plus a digital shift, per coordinate.
///
/// Both kinds fill digits below D with one uniform offset in [0, 2^{-D}).
/// Both leave leading-digit prefixes bijective at every resolution <= m,
/// so elementary-interval counts of the base net are preserved.
class CoordScrambler {
  public:
    CoordScrambler(const ScrambleSpec& spec, int m, int coord)
        : m_(m), depth_(spec.depth), kind_(spec.kind),
          base_(prf_key(spec.seed, spec.replicate_id, static_cast<std::uint64_t>(coord))) {
        if (m < 1 || m > 31) throw std::invalid_argument("CoordScrambler: m must be in [1, 31]");
        if (depth_ < m) throw std::invalid_argument("CoordScrambler: depth below point resolution");
        if (depth_ > 62) throw std::invalid_argument("CoordScrambler: depth must be <= 62");
        if (kind_ == ScrambleSpec::Kind::linear_shift) {
            // Column l (0-based input digit, 0 = most significant) holds
            // the output-digit pattern toggled by that input digit: unit
            // diagonal plus random strictly-lower rows.
            cols_.resize(static_cast<std::size_t>(m_));
            for (int l = 0; l < m_; ++l) {
                const std::uint64_t diag = std::uint64_t{1} << (depth_ - 1 - l);
                const std::uint64_t below = diag - 1;  // rows strictly lower than l
                const std::uint64_t rnd = mix64(base_ ^ (kTagColumns + static_cast<std::uint64_t>(l)));
                cols_[static_cast<std::size_t>(l)] = diag | (rnd & below);
            }
            sigma_ = mix64(base_ ^ kTagShift) >> (64 - depth_);
        }
    }

    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }

    /// Scrambled value of the point with m-digit value index a.
    [[nodiscard]] double operator()(std::uint32_t a) const {
        std::uint64_t out;
        if (kind_ == ScrambleSpec::Kind::owen) {
            out = static_cast<std::uint64_t>(a) << (depth_ - m_);
            // Tree levels 1..m: node id = 2^{l-1} + (first l-1 digits).
            for (int l = 1; l <= m_; ++l) {
                const std::uint64_t node =
                    (std::uint64_t{1} << (l - 1)) + (static_cast<std::uint64_t>(a) >> (m_ - l + 1));
                out ^= (mix64(base_ ^ node) >> 63) << (depth_ - l);
            }
            // Levels m+1..D in one keyed block (path below resolution m is
            // determined by a, so points share these bits iff equal).
            if (depth_ > m_) {
                const std::uint64_t block = mix64(base_ ^ (kTagTail + static_cast<std::uint64_t>(a)));
                out ^= block >> (64 - (depth_ - m_));
            }
        } else {
            out = sigma_;
            std::uint32_t rest = a;
            while (rest != 0) {
                const int top = 31 - std::countl_zero(rest);  // digit index m-1-top... see below
                out ^= cols_[static_cast<std::size_t>(m_ - 1 - top)];
                rest &= ~(std::uint32_t{1} << top);
            }
        }
        const double fill = uniform53(mix64(base_ ^ (kTagFill + static_cast<std::uint64_t>(a))));
        return std::ldexp(static_cast<double>(out) + fill, -depth_);
    }

  private:
    // Key namespaces. Tree node ids stay below 2^m <= 2^31, so offsets at
    // 2^32 and beyond cannot collide with them.
    static constexpr std::uint64_t kTagTail = std::uint64_t{1} << 32;
    static constexpr std::uint64_t kTagFill = std::uint64_t{1} << 33;
    static constexpr std::uint64_t kTagColumns = std::uint64_t{3} << 32;
    static constexpr std::uint64_t kTagShift = (std::uint64_t{3} << 32) + 0xffffffffull;

    int m_;
    int depth_;
    ScrambleSpec::Kind kind_;
    std::uint64_t base_;
    std::vector<std::uint64_t> cols_;  // linear_shift only
    std::uint64_t sigma_ = 0;
};

/// Materialized scrambled replicate of a point set. Values are produced by
/// the same CoordScrambler the streaming paths use, so a materialized set
/// and a streamed pass over the same spec agree bit for bit.
class ScrambledPointSet {
  public:
    ScrambledPointSet(const PointSet& base, const ScrambleSpec& spec)
        : m_(base.m()), s_(base.s()), n_(base.n()), spec_(spec),
          values_(base.n() * static_cast<std::uint64_t>(base.s())) {
        std::vector<CoordScrambler> sc;
        sc.reserve(static_cast<std::size_t>(s_));
        for (int j = 0; j < s_; ++j) sc.emplace_back(spec, m_, j);
        for (std::uint64_t i = 0; i < n_; ++i) {
            for (int j = 0; j < s_; ++j) {
                values_[i * static_cast<std::uint64_t>(s_) + static_cast<std::uint64_t>(j)] =
                    sc[static_cast<std::size_t>(j)](base.index(i, j));
            }
        }
    }

    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] int s() const noexcept { return s_; }
    [[nodiscard]] std::uint64_t n() const noexcept { return n_; }
    [[nodiscard]] const ScrambleSpec& spec() const noexcept { return spec_; }

    [[nodiscard]] double value(std::uint64_t i, int j) const {
        return values_[i * static_cast<std::uint64_t>(s_) + static_cast<std::uint64_t>(j)];
    }

    /// Row view of point i.
    [[nodiscard]] std::span<const double> point(std::uint64_t i) const {
        return {values_.data() + i * static_cast<std::uint64_t>(s_), static_cast<std::size_t>(s_)};
    }

  private:
    int m_;
    int s_;
    std::uint64_t n_;
    ScrambleSpec spec_;
    std::vector<double> values_;
};

inline ScrambledPointSet scramble(const PointSet& ps, const ScrambleSpec& spec) {
    return ScrambledPointSet(ps, spec);
}

/// Equal-weight average of f over the scrambled points, accumulated in
/// index order with compensated summation (replicate reductions stay
/// order-independent because each replicate is summed the same way).
template <typename F>
double quadrature(const ScrambledPointSet& sps, F&& f) {
    StableSum acc;
    for (std::uint64_t i = 0; i < sps.n(); ++i) acc.add(f(sps.point(i)));
    return acc.value() / static_cast<double>(sps.n());
}

}  // namespace polyqmc

#endif
