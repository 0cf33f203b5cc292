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

#include <polyqmc/scramble.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

using polyqmc::GeneratingVector;
using polyqmc::Gf2Poly;
using polyqmc::PointSet;
using polyqmc::ScrambledPointSet;
using polyqmc::ScrambleSpec;

namespace {

GeneratingVector example_m2() {
    GeneratingVector g;
    g.m = 2;
    g.p = Gf2Poly{0x7};
    g.q = {Gf2Poly::one(), Gf2Poly::monomial(1)};
    return g;
}

GeneratingVector vector_m6_s3() {
    GeneratingVector g;
    g.m = 6;
    g.p = polyqmc::find_irreducible(6);
    g.q = {Gf2Poly::one(), Gf2Poly{0x2b}, Gf2Poly{0x31}};
    return g;
}

ScrambleSpec spec_of(ScrambleSpec::Kind kind, std::uint64_t seed, std::uint64_t rep,
                     int depth = 31) {
    ScrambleSpec sp;
    sp.kind = kind;
    sp.depth = depth;
    sp.seed = seed;
    sp.replicate_id = rep;
    return sp;
}

// Sorted occupancy profile at mixed resolution d (one entry per
// coordinate). Scrambling relabels boxes, so only the multiset of
// per-box counts is invariant, not which box holds which count.
std::vector<std::uint64_t> occupancy_profile(const std::vector<std::vector<double>>& pts,
                                             const std::vector<int>& d) {
    std::map<std::uint64_t, std::uint64_t> counts;
    for (const auto& x : pts) {
        std::uint64_t key = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const auto dj = d[j];
            key = (key << dj) |
                  static_cast<std::uint64_t>(std::floor(x[j] * std::ldexp(1.0, dj)));
        }
        ++counts[key];
    }
    std::vector<std::uint64_t> profile;
    profile.reserve(counts.size());
    for (const auto& [key, c] : counts) profile.push_back(c);
    std::sort(profile.begin(), profile.end());
    return profile;
}

constexpr auto kKinds = {ScrambleSpec::Kind::owen, ScrambleSpec::Kind::linear_shift};

}  // namespace

TEST_CASE("identical spec gives identical output, new replicate changes it") {
    const PointSet ps = polyqmc::generate_points(vector_m6_s3(), 3);
    for (auto kind : kKinds) {
        const ScrambledPointSet a(ps, spec_of(kind, 42, 7));
        const ScrambledPointSet b(ps, spec_of(kind, 42, 7));
        const ScrambledPointSet c(ps, spec_of(kind, 42, 8));
        bool any_differ = false;
        for (std::uint64_t i = 0; i < ps.n(); ++i) {
            for (int j = 0; j < 3; ++j) {
                REQUIRE(a.value(i, j) == b.value(i, j));
                any_differ = any_differ || (a.value(i, j) != c.value(i, j));
            }
        }
        CHECK(any_differ);
    }
}

TEST_CASE("all scrambled values lie in the unit interval") {
    const PointSet ps = polyqmc::generate_points(vector_m6_s3(), 3);
    for (auto kind : kKinds) {
        for (int depth : {6, 20, 31, 53}) {
            const ScrambledPointSet sps(ps, spec_of(kind, 9, 1, depth));
            for (std::uint64_t i = 0; i < ps.n(); ++i) {
                for (int j = 0; j < 3; ++j) {
                    REQUIRE(sps.value(i, j) >= 0.0);
                    REQUIRE(sps.value(i, j) < 1.0);
                }
            }
        }
    }
}

TEST_CASE("depth below the point resolution is rejected") {
    const PointSet ps = polyqmc::generate_points(vector_m6_s3(), 3);
    CHECK_THROWS_AS(ScrambledPointSet(ps, spec_of(ScrambleSpec::Kind::owen, 1, 1, 5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(polyqmc::CoordScrambler(spec_of(ScrambleSpec::Kind::owen, 1, 1, 63), 6, 0),
                    std::invalid_argument);
    CHECK_NOTHROW(ScrambledPointSet(ps, spec_of(ScrambleSpec::Kind::owen, 1, 1, 6)));
}

TEST_CASE("equal value indices always scramble to equal values") {
    // A scramble is a function of the input value, so a repeated input
    // must stay repeated. Hand-built set with index 0 twice.
    const PointSet ps(2, 1, {0, 0, 1, 2});
    for (auto kind : kKinds) {
        const ScrambledPointSet sps(ps, spec_of(kind, 77, 3));
        CHECK(sps.value(0, 0) == sps.value(1, 0));
        CHECK(sps.value(2, 0) != sps.value(0, 0));
    }
}

TEST_CASE("the m=2 example stays stratified into quarters per coordinate") {
    const PointSet ps = polyqmc::generate_points(example_m2(), 2);
    for (auto kind : kKinds) {
        for (std::uint64_t rep = 0; rep < 50; ++rep) {
            const ScrambledPointSet sps(ps, spec_of(kind, 5, rep));
            for (int j = 0; j < 2; ++j) {
                std::vector<double> v;
                for (std::uint64_t i = 0; i < 4; ++i) v.push_back(sps.value(i, j));
                std::sort(v.begin(), v.end());
                for (int q = 0; q < 4; ++q) {
                    REQUIRE(v[static_cast<std::size_t>(q)] >= 0.25 * q);
                    REQUIRE(v[static_cast<std::size_t>(q)] < 0.25 * (q + 1));
                }
            }
        }
    }
}

TEST_CASE("one-dimensional projections stay stratified at full resolution") {
    GeneratingVector g;
    g.m = 5;
    g.p = polyqmc::find_irreducible(5);
    g.q = {Gf2Poly{0x13}, Gf2Poly{0x1d}};
    const PointSet ps = polyqmc::generate_points(g, 2);
    const double n = 32.0;
    for (auto kind : kKinds) {
        const ScrambledPointSet sps(ps, spec_of(kind, 123, 0));
        for (int j = 0; j < 2; ++j) {
            std::vector<bool> seen(32, false);
            for (std::uint64_t i = 0; i < 32; ++i) {
                const auto cell = static_cast<std::size_t>(sps.value(i, j) * n);
                REQUIRE_FALSE(seen[cell]);
                seen[cell] = true;
            }
        }
    }
}

TEST_CASE("scrambling preserves every elementary-interval count up to resolution m") {
    const GeneratingVector g = vector_m6_s3();
    const PointSet ps = polyqmc::generate_points(g, 3);
    std::vector<std::vector<double>> base;
    for (std::uint64_t i = 0; i < ps.n(); ++i) {
        base.push_back({ps.value(i, 0), ps.value(i, 1), ps.value(i, 2)});
    }
    for (auto kind : kKinds) {
        const ScrambledPointSet sps(ps, spec_of(kind, 2024, 11));
        std::vector<std::vector<double>> scr;
        for (std::uint64_t i = 0; i < ps.n(); ++i) {
            scr.push_back({sps.value(i, 0), sps.value(i, 1), sps.value(i, 2)});
        }
        for (int d1 = 0; d1 <= 6; ++d1) {
            for (int d2 = 0; d2 + d1 <= 6; ++d2) {
                for (int d3 = 0; d3 + d2 + d1 <= 6; ++d3) {
                    const std::vector<int> d{d1, d2, d3};
                    CAPTURE(d1, d2, d3);
                    REQUIRE(occupancy_profile(base, d) == occupancy_profile(scr, d));
                }
            }
        }
    }
}

TEST_CASE("quadrature of the constant function is exactly one") {
    const PointSet ps = polyqmc::generate_points(vector_m6_s3(), 3);
    for (auto kind : kKinds) {
        const ScrambledPointSet sps(ps, spec_of(kind, 3, 0));
        CHECK(polyqmc::quadrature(sps, [](std::span<const double>) { return 1.0; }) == 1.0);
    }
}

TEST_CASE("unscrambled average of the first coordinate on the m=2 example is 3/8") {
    const PointSet ps = polyqmc::generate_points(example_m2(), 2);
    double acc = 0.0;
    for (std::uint64_t i = 0; i < 4; ++i) acc += ps.value(i, 0);
    CHECK(acc / 4.0 == 0.375);
}

TEST_CASE("scrambled quadrature is unbiased on low-degree monomials") {
    GeneratingVector g;
    g.m = 3;
    g.p = polyqmc::find_irreducible(3);
    g.q = {Gf2Poly{0x1}, Gf2Poly{0x6}};
    const PointSet ps = polyqmc::generate_points(g, 2);
    const int reps = 10000;

    struct Case {
        double exact;
        double (*f)(std::span<const double>);
    };
    const Case cases[] = {
        {0.5, [](std::span<const double> x) { return x[0]; }},
        {1.0 / 6.0, [](std::span<const double> x) { return x[0] * x[0] * x[1]; }},
    };

    for (auto kind : kKinds) {
        for (const auto& c : cases) {
            double sum = 0.0, sumsq = 0.0;
            for (int r = 0; r < reps; ++r) {
                const ScrambledPointSet sps(ps, spec_of(kind, 31337, static_cast<std::uint64_t>(r)));
                const double q = polyqmc::quadrature(sps, c.f);
                sum += q;
                sumsq += q * q;
            }
            const double mean = sum / reps;
            const double var = (sumsq - sum * sum / reps) / (reps - 1);
            const double se = std::sqrt(var / reps);
            CAPTURE(static_cast<int>(kind), c.exact);
            CHECK(std::abs(mean - c.exact) <= 4.0 * se);
        }
    }
}

TEST_CASE("distinct replicates are uncorrelated") {
    GeneratingVector g;
    g.m = 3;
    g.p = polyqmc::find_irreducible(3);
    g.q = {Gf2Poly{0x7}};
    const PointSet ps = polyqmc::generate_points(g, 1);
    const int reps = 10000;
    for (auto kind : kKinds) {
        std::vector<double> q(reps);
        for (int r = 0; r < reps; ++r) {
            const ScrambledPointSet sps(ps, spec_of(kind, 555, static_cast<std::uint64_t>(r)));
            q[static_cast<std::size_t>(r)] =
                polyqmc::quadrature(sps, [](std::span<const double> x) { return x[0] * x[0]; });
        }
        double mean = 0.0;
        for (double v : q) mean += v;
        mean /= reps;
        double var = 0.0, cov = 0.0;
        for (int r = 0; r < reps; ++r) {
            var += (q[r] - mean) * (q[r] - mean);
            if (r + 1 < reps) cov += (q[r] - mean) * (q[r + 1] - mean);
        }
        var /= (reps - 1);
        cov /= (reps - 2);
        const double corr = cov / var;
        CAPTURE(static_cast<int>(kind));
        CHECK(std::abs(corr) <= 4.0 / std::sqrt(static_cast<double>(reps)));
    }
}

TEST_CASE("a single scrambled point is marginally uniform") {
    const PointSet ps(4, 1, {5, 0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
    const int reps = 20000;
    for (auto kind : kKinds) {
        double sum = 0.0;
        int below_half = 0;
        for (int r = 0; r < reps; ++r) {
            const ScrambledPointSet sps(ps, spec_of(kind, 808, static_cast<std::uint64_t>(r)));
            const double v = sps.value(0, 0);  // scramble of index 5
            sum += v;
            below_half += v < 0.5 ? 1 : 0;
        }
        const double mean = sum / reps;
        const double se_mean = std::sqrt(1.0 / 12.0 / reps);
        CHECK(std::abs(mean - 0.5) <= 4.0 * se_mean);
        const double frac = static_cast<double>(below_half) / reps;
        CHECK(std::abs(frac - 0.5) <= 4.0 * std::sqrt(0.25 / reps));
    }
}
