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

#include <polyqmc/cbc.hpp>
#include <polyqmc/infdim.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

using polyqmc::cbc_construct;
using polyqmc::cost_fixed;
using polyqmc::cost_variable;
using polyqmc::fixed_estimate;
using polyqmc::FixedPlan;
using polyqmc::GeneratingVector;
using polyqmc::ml_estimate;
using polyqmc::MultilevelPlan;
using polyqmc::out_of_regime_error;
using polyqmc::plan_fixed;
using polyqmc::plan_fixed_slack;
using polyqmc::plan_multilevel;
using polyqmc::ProductIntegrand;
using polyqmc::ScrambleSpec;
using polyqmc::truncate;
using polyqmc::WeightSequence;
using Shape = polyqmc::ProductIntegrand::Shape;
using BetaSpec = polyqmc::ProductIntegrand::BetaSpec;

namespace {

// CBC vector with enough components for the given plan dimension; small
// cases only, the tests do not need optimality.
GeneratingVector vector_for(int m, int s) {
    return cbc_construct(m, s, WeightSequence::power_law(3.0)).vector;
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased sample variance
    double se = 0.0;   // standard error of the mean
};

MeanVar summarize(const std::vector<double>& xs) {
    MeanVar out;
    polyqmc::StableSum sum;
    for (double x : xs) sum.add(x);
    const double n = static_cast<double>(xs.size());
    out.mean = sum.value() / n;
    polyqmc::StableSum sq;
    for (double x : xs) sq.add((x - out.mean) * (x - out.mean));
    out.var = sq.value() / (n - 1.0);
    out.se = std::sqrt(out.var / n);
    return out;
}

}  // namespace

TEST_CASE("truncation evaluator") {
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::linear};

    SECTION("zero active coordinates give the all-anchor constant") {
        for (double a : {0.0, 0.3, 1.0}) {
            const auto t = truncate(f, 0, a);
            CHECK(t(std::vector<double>{}) == f.eval(std::vector<double>{}, a));
            CHECK(t.integral() == t.tail_factor());
        }
    }

    SECTION("centered anchor leaves only the explicit prefix") {
        const auto t = truncate(f, 3, 0.5);
        CHECK(t.tail_factor() == 1.0);
        const std::vector<double> x{0.2, 0.9, 0.55};
        double expect = 1.0;
        for (int j = 0; j < 3; ++j) {
            expect *= 1.0 + ws.gamma(static_cast<std::uint64_t>(j) + 1) * (x[static_cast<std::size_t>(j)] - 0.5);
        }
        CHECK(t(x) == Catch::Approx(expect).epsilon(1e-15));
    }

    SECTION("nested truncations collapse") {
        // Evaluating the s-truncation with coordinates beyond s' pinned to
        // the anchor is the s'-truncation.
        const double a = 0.25;
        const auto ts = truncate(f, 5, a);
        const auto tsp = truncate(f, 2, a);
        const std::vector<double> x{0.7, 0.15};
        const std::vector<double> padded{0.7, 0.15, a, a, a};
        CHECK(ts(padded) == Catch::Approx(tsp(x)).epsilon(1e-14));
    }

    SECTION("anchor validation") {
        CHECK_THROWS_AS(truncate(f, 2, -0.1), std::invalid_argument);
        CHECK_THROWS_AS(truncate(f, 2, 1.1), std::invalid_argument);
        CHECK_THROWS_AS(truncate(f, 2, 0.5)(std::vector<double>{0.5}), std::invalid_argument);
    }
}

TEST_CASE("cost accounting") {
    FixedPlan fp;
    fp.budget = 100;
    fp.n = 16;
    fp.s = 4;
    CHECK(cost_fixed(fp) == 64);
    fp.n = 17;  // n_eff floors to 16
    CHECK(cost_fixed(fp) == 64);

    MultilevelPlan mp;
    mp.s = {2, 4};
    mp.n = {8, 4};
    CHECK(cost_variable(mp) == 2 * 8 + 4 * 4);

    MultilevelPlan single;
    single.s = {4};
    single.n = {16};
    FixedPlan same;
    same.n = 16;
    same.s = 4;
    CHECK(cost_variable(single) == cost_fixed(same));
}

TEST_CASE("fixed estimate basics") {
    const auto ws = WeightSequence::power_law(3.0);
    FixedPlan plan;
    plan.budget = 1000;
    plan.n = 16;
    plan.s = 4;
    plan.anchor = 0.5;
    const GeneratingVector g = vector_for(4, 4);

    SECTION("constant integrand is exact") {
        const ProductIntegrand one{ws, Shape::linear, BetaSpec::uniform(0.0)};
        ScrambleSpec spec;
        spec.seed = 7;
        spec.replicate_id = 3;
        CHECK(fixed_estimate(one, plan, g, spec) == 1.0);
    }

    SECTION("plan and vector must agree") {
        const ProductIntegrand f{ws, Shape::linear};
        ScrambleSpec spec;
        const GeneratingVector narrow = vector_for(4, 2);
        CHECK_THROWS_AS(fixed_estimate(f, plan, narrow, spec), std::invalid_argument);
        const GeneratingVector wrong_m = vector_for(3, 4);
        CHECK_THROWS_AS(fixed_estimate(f, plan, wrong_m, spec), std::invalid_argument);
    }
}

TEST_CASE("fixed estimate is unbiased at the centered anchor") {
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::linear};
    FixedPlan plan;
    plan.budget = 1000;
    plan.n = 16;
    plan.s = 6;
    plan.anchor = 0.5;
    const GeneratingVector g = vector_for(4, 6);

    const int R = 1000;
    std::vector<double> est(R);
    for (int r = 0; r < R; ++r) {
        ScrambleSpec spec;
        spec.seed = 11;
        spec.replicate_id = static_cast<std::uint64_t>(r);
        est[static_cast<std::size_t>(r)] = fixed_estimate(f, plan, g, spec);
    }
    const auto mv = summarize(est);
    // Exact integral is 1 and the centered anchor kills truncation bias.
    CHECK(std::abs(mv.mean - 1.0) <= 4.0 * mv.se);
}

TEST_CASE("anchored tail bias is exhibited away from the center") {
    // At anchor 0, the estimator targets the truncated integral, which is
    // a known product strictly below 1.
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::linear};
    FixedPlan plan;
    plan.budget = 1000;
    plan.n = 32;
    plan.s = 2;
    plan.anchor = 0.0;
    const GeneratingVector g = vector_for(5, 2);

    const double target = f.truncated_integral(2, 0.0);
    REQUIRE(target < 0.99);

    const int R = 600;
    std::vector<double> est(R);
    for (int r = 0; r < R; ++r) {
        ScrambleSpec spec;
        spec.seed = 4;
        spec.replicate_id = static_cast<std::uint64_t>(r);
        est[static_cast<std::size_t>(r)] = fixed_estimate(f, plan, g, spec);
    }
    const auto mv = summarize(est);
    CHECK(std::abs(mv.mean - target) <= 4.0 * mv.se);
    // The bias is resolvable: the estimator mean is far from 1.
    CHECK(std::abs(mv.mean - 1.0) > 10.0 * mv.se);
}

TEST_CASE("one-level multilevel reduces to the fixed estimate") {
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::quadratic};
    MultilevelPlan mp;
    mp.budget = 100;
    mp.anchor = 0.3;
    mp.s = {3};
    mp.n = {16};
    const std::vector<GeneratingVector> gs{vector_for(4, 3)};

    FixedPlan fp;
    fp.budget = 100;
    fp.n = 16;
    fp.s = 3;
    fp.anchor = 0.3;

    for (std::uint64_t r : {0ull, 5ull, 900ull}) {
        ScrambleSpec ml_spec;
        ml_spec.seed = 21;
        ml_spec.replicate_id = r;
        ScrambleSpec fixed_spec = ml_spec;
        fixed_spec.replicate_id = (r << 16) | 1u;  // the level tag
        CHECK(ml_estimate(f, mp, gs, ml_spec) == fixed_estimate(f, fp, gs[0], fixed_spec));
    }
}

TEST_CASE("telescoping identity of truncated integrals") {
    const auto ws = WeightSequence::power_law(3.0);
    for (Shape shape : {Shape::linear, Shape::quadratic}) {
        const ProductIntegrand f{ws, shape};
        for (double a : {0.0, 0.25, 0.8}) {
            const std::vector<int> s{2, 4, 8, 16, 32};
            polyqmc::StableSum sum;
            double prev = 0.0;  // empty truncation integrates to zero
            for (int sl : s) {
                const double cur = f.truncated_integral(static_cast<std::uint64_t>(sl), a);
                sum.add(cur - prev);
                prev = cur;
            }
            const double whole = f.truncated_integral(32, a);
            CHECK(std::abs(sum.value() - whole) < 1e-12);
        }
    }
}

TEST_CASE("multilevel estimate targets the deepest truncation") {
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::linear};
    MultilevelPlan mp;
    mp.budget = 1000;
    mp.anchor = 0.0;  // biased anchor so the target is not trivially 1
    mp.s = {2, 4, 8};
    mp.n = {64, 16, 8};
    const std::vector<GeneratingVector> gs{vector_for(6, 2), vector_for(4, 4), vector_for(3, 8)};

    const double target = f.truncated_integral(8, 0.0);
    const int R = 1000;
    std::vector<double> est(R);
    std::vector<std::vector<double>> levels(3);
    for (int r = 0; r < R; ++r) {
        ScrambleSpec spec;
        spec.seed = 33;
        spec.replicate_id = static_cast<std::uint64_t>(r);
        std::vector<double> lv;
        est[static_cast<std::size_t>(r)] = ml_estimate(f, mp, gs, spec, &lv);
        REQUIRE(lv.size() == 3);
        for (int l = 0; l < 3; ++l) levels[static_cast<std::size_t>(l)].push_back(lv[static_cast<std::size_t>(l)]);
    }
    const auto mv = summarize(est);
    CHECK(std::abs(mv.mean - target) <= 4.0 * mv.se);

    SECTION("level estimates are uncorrelated") {
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                const auto ma = summarize(levels[static_cast<std::size_t>(a)]);
                const auto mb = summarize(levels[static_cast<std::size_t>(b)]);
                polyqmc::StableSum cov;
                for (int r = 0; r < R; ++r) {
                    cov.add((levels[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] - ma.mean) *
                            (levels[static_cast<std::size_t>(b)][static_cast<std::size_t>(r)] - mb.mean));
                }
                const double c = cov.value() / (R - 1.0);
                // Correlation bounded by Monte Carlo noise ~ 1/sqrt(R).
                const double corr = c / std::sqrt(ma.var * mb.var);
                CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(R)));
            }
        }
    }

    SECTION("variance adds across levels") {
        const auto m0 = summarize(levels[0]);
        const auto m1 = summarize(levels[1]);
        const auto m2 = summarize(levels[2]);
        const double sum_var = m0.var + m1.var + m2.var;
        // Sample variances fluctuate ~ var * sqrt(2/R).
        CHECK(mv.var == Catch::Approx(sum_var).margin(6.0 * mv.var * std::sqrt(2.0 / R)));
    }
}

TEST_CASE("mean-square error splits into bias and variance") {
    const auto ws = WeightSequence::power_law(3.0);
    const ProductIntegrand f{ws, Shape::linear};
    MultilevelPlan mp;
    mp.budget = 1000;
    mp.anchor = 0.0;
    mp.s = {2, 4};
    mp.n = {32, 8};
    const std::vector<GeneratingVector> gs{vector_for(5, 2), vector_for(3, 4)};

    const double exact = 1.0;  // full integral of the product integrand
    const double truncated = f.truncated_integral(4, 0.0);
    const double bias = exact - truncated;

    const int R = 1000;
    std::vector<double> est(R), sq(R);
    for (int r = 0; r < R; ++r) {
        ScrambleSpec spec;
        spec.seed = 55;
        spec.replicate_id = static_cast<std::uint64_t>(r);
        const double q = ml_estimate(f, mp, gs, spec);
        est[static_cast<std::size_t>(r)] = q;
        sq[static_cast<std::size_t>(r)] = (exact - q) * (exact - q);
    }
    const auto mq = summarize(sq);
    const auto me = summarize(est);
    CHECK(std::abs(mq.mean - (bias * bias + me.var)) <= 5.0 * mq.se);
}

TEST_CASE("fixed planner") {
    SECTION("regime guards") {
        CHECK_THROWS_AS(plan_fixed(10000, 2.9, 0.1), out_of_regime_error);
        CHECK_THROWS_AS(plan_fixed(10000, 3.0, 0.0), out_of_regime_error);
        CHECK_THROWS_AS(plan_fixed(10000, 3.0, 3.0), out_of_regime_error);
        CHECK_THROWS_AS(plan_fixed(1, 3.0, 0.1), std::invalid_argument);
    }

    SECTION("published operating point") {
        // alpha=3, eps=0.1, N=10^4: exponents 0.40816/0.59184, raw n 42.9.
        const auto p = plan_fixed(10000, 3.0, 0.1);
        CHECK(p.n_eff() == 32);
        CHECK(p.m() == 5);
        CHECK(p.s == 233);
        CHECK(cost_fixed(p) <= 10000);
        CHECK(plan_fixed_slack(p) == 10000 - 32 * 233);
    }

    SECTION("second operating point") {
        const auto p = plan_fixed(1000000, 4.0, 0.1);
        CHECK(p.n_eff() == 1024);
    }

    SECTION("budget compliance and utilization on sampled parameters") {
        for (std::uint64_t N : {1000ull, 10000ull, 100000ull, 1000000ull, 1ull << 22}) {
            for (double alpha : {3.0, 4.0, 6.0, 8.0}) {
                for (double eps : {0.1, 0.5}) {
                    const auto p = plan_fixed(N, alpha, eps);
                    CHECK(cost_fixed(p) <= N);
                    // The planner should actually use the budget.
                    CHECK(cost_fixed(p) * 5 >= N);
                    CHECK(p.alpha == alpha);
                    CHECK(p.budget == N);
                }
            }
        }
    }

    SECTION("tuning constants scale the raw sizes") {
        const auto base = plan_fixed(1 << 20, 4.0, 0.1);
        const auto big_n = plan_fixed(1 << 20, 4.0, 0.1, 0.5, 4.0, 1.0);
        CHECK(big_n.n_eff() == 4 * base.n_eff());
    }
}

TEST_CASE("multilevel planner") {
    SECTION("regime guards") {
        CHECK_THROWS_AS(plan_multilevel(1 << 20, 3.0, 0.1), out_of_regime_error);
        CHECK_THROWS_AS(plan_multilevel(1 << 20, 4.0, 0.0), out_of_regime_error);
        CHECK_THROWS_AS(plan_multilevel(1 << 20, 4.0, 1.0), out_of_regime_error);
        CHECK_THROWS_AS(plan_multilevel(1 << 20, 10.0, 3.6), out_of_regime_error);
    }

    SECTION("published operating point") {
        const auto p = plan_multilevel(1 << 20, 10.0, 0.5);
        CHECK(p.levels() == 6);
        CHECK(p.s.back() == 64);
        CHECK(cost_variable(p) <= (1u << 20));
    }

    SECTION("rate exponents") {
        const auto p = plan_multilevel(1 << 20, 8.0, 0.1);
        CHECK(p.rho1() == Catch::Approx((8.0 - 1.0) / (3.0 - 0.05)).epsilon(1e-15));
        CHECK(p.rho2() == Catch::Approx((8.0 - 4.0 - 0.1) / (3.0 - 0.05)).epsilon(1e-15));
    }

    SECTION("schedule shape on sampled parameters") {
        for (std::uint64_t N : {1ull << 12, 1ull << 16, 1ull << 20, 1ull << 24}) {
            for (double alpha : {4.0, 6.0, 8.0, 10.0}) {
                for (double eps : {0.1, 0.5}) {
                    const auto p = plan_multilevel(N, alpha, eps);
                    p.validate();
                    CHECK(cost_variable(p) <= N);
                    CHECK(cost_variable(p) * 5 >= N);
                    for (int l = 0; l < p.levels(); ++l) {
                        CHECK(p.s[static_cast<std::size_t>(l)] == (1 << (l + 1)));
                        if (l > 0) {
                            CHECK(p.n[static_cast<std::size_t>(l)] <=
                                  p.n[static_cast<std::size_t>(l - 1)]);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("plan files round-trip") {
    SECTION("fixed") {
        const auto p = plan_fixed(10000, 3.0, 0.1, 0.25);
        const std::string path = "plan_fixed_roundtrip.txt";
        p.save(path);
        const auto q = FixedPlan::load(path);
        CHECK(q.budget == p.budget);
        CHECK(q.alpha == p.alpha);
        CHECK(q.eps == p.eps);
        CHECK(q.anchor == p.anchor);
        CHECK(q.n == p.n);
        CHECK(q.s == p.s);
        std::remove(path.c_str());
    }

    SECTION("multilevel") {
        const auto p = plan_multilevel(1 << 18, 6.0, 0.25, 0.75);
        const std::string path = "plan_ml_roundtrip.txt";
        p.save(path);
        const auto q = MultilevelPlan::load(path);
        CHECK(q.budget == p.budget);
        CHECK(q.alpha == p.alpha);
        CHECK(q.eps == p.eps);
        CHECK(q.anchor == p.anchor);
        CHECK(q.s == p.s);
        CHECK(q.n == p.n);
        std::remove(path.c_str());
    }

    SECTION("malformed files are rejected") {
        const std::string path = "plan_bad.txt";
        {
            std::ofstream out(path);
            out << "type=ml\nN=100\n";
        }
        CHECK_THROWS_AS(FixedPlan::load(path), std::runtime_error);
        CHECK_THROWS_AS(MultilevelPlan::load(path), std::runtime_error);
        {
            std::ofstream out(path);
            out << "type=ml\nN=100\nalpha=4\neps=0.1\nanchor=0.5\n"
                << "level 2: s=4 n=8\n";
        }
        CHECK_THROWS_AS(MultilevelPlan::load(path), std::runtime_error);
        {
            std::ofstream out(path);
            out << "type=fixed\nN=100\nalpha=4\nbogus\n";
        }
        CHECK_THROWS_AS(FixedPlan::load(path), std::runtime_error);
        std::remove(path.c_str());
    }
}

TEST_CASE("multilevel plan validation") {
    MultilevelPlan p;
    p.anchor = 0.5;
    p.s = {2, 2};
    p.n = {8, 8};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.s = {2, 4};
    p.n = {8, 6};  // not a power of two
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.n = {8, 4};
    CHECK_NOTHROW(p.validate());

    const ProductIntegrand f{WeightSequence::power_law(3.0), Shape::linear};
    const std::vector<GeneratingVector> wrong{vector_for(3, 2)};
    CHECK_THROWS_AS(ml_estimate(f, p, wrong, ScrambleSpec{}), std::invalid_argument);
}
