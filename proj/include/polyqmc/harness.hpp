// Copyright 2026 The polyqmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Randomized-error harness: replicated root-mean-square error of the
// scrambled estimators, budget sweeps that produce convergence records,
// and the log-log slope fit used to compare measured rates against the
// predicted ones.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "polyqmc/cbc.hpp"
#include "polyqmc/infdim.hpp"
#include "polyqmc/io.hpp"
#include "polyqmc/lattice.hpp"
#include "polyqmc/prf.hpp"
#include "polyqmc/scramble.hpp"
#include "polyqmc/wspace.hpp"

namespace polyqmc {

/// Normalized root-mean-square error over independent scrambling
/// replicates, with a delta-method standard error for the rmse itself.
struct RmseResult {
    double rmse = 0.0;
    double stderr_of_rmse = 0.0;
};

/// Run `reps` independent replicates of `estimate` (called with the
/// replicate id) and return the rmse of (estimate - exact) / norm.
///
/// The replicate mean squares are averaged with compensated summation;
/// the standard error of the mean square propagates to the rmse through
/// the square root (delta method), so the reported uncertainty is the
/// one a confidence band on the rmse should use.
template <class Estimator>
RmseResult rmse_over_replicates(int reps, double exact, double norm, Estimator&& estimate) {
    if (reps < 8) throw std::invalid_argument("rmse_over_replicates: need at least 8 replicates");
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::invalid_argument("rmse_over_replicates: norm must be positive and finite");
    }
    std::vector<double> sq(static_cast<std::size_t>(reps));
    StableSum mean_acc;
    for (int r = 0; r < reps; ++r) {
        const double err = (estimate(static_cast<std::uint64_t>(r)) - exact) / norm;
        sq[static_cast<std::size_t>(r)] = err * err;
        mean_acc.add(err * err);
    }
    const double m2 = mean_acc.value() / static_cast<double>(reps);
    StableSum var_acc;
    for (double v : sq) var_acc.add((v - m2) * (v - m2));
    const double var_m2 = var_acc.value() / static_cast<double>(reps - 1);

    RmseResult out;
    out.rmse = std::sqrt(std::max(m2, 0.0));
    if (out.rmse > 0.0) {
        out.stderr_of_rmse = std::sqrt(std::max(var_m2, 0.0) / static_cast<double>(reps)) /
                             (2.0 * out.rmse);
    }
    return out;
}

/// Knobs shared by every sweep: replication, scrambling, and how hard the
/// component-by-component search is allowed to work.
struct HarnessConfig {
    int reps = 32;
    std::uint64_t seed = 0;
    ScrambleSpec::Kind scramble = ScrambleSpec::Kind::owen;
    int depth = 31;

    /// Resolutions above cbc_max_m skip the search and draw the vector
    /// components from a keyed hash instead: the n^2 kernel table of the
    /// search is quadratic in the point count and stops paying for itself
    /// once the rule is long enough for generic components to be good.
    int cbc_max_m = 12;

    /// Rough cap on kernel-table reads per construction. The candidate
    /// count is lowered (never below 8) so c * s * n^2 / 2 stays under it.
    double cbc_ops_budget = 2e10;

    /// Candidate pool per component when the budget does not bind.
    std::uint64_t candidates = 512;
};

/// Memoized generating vectors, keyed by (m, s, weight exponent). Sweeps
/// revisit the same geometry across budgets and replicates; constructing
/// each vector once keeps the search cost out of the replication loop.
class VectorCache {
  public:
    const GeneratingVector& get(int m, int s, double alpha, const HarnessConfig& cfg) {
        const Key key{m, s, std::bit_cast<std::uint64_t>(alpha)};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(key, build(m, s, alpha, cfg)).first->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return cache_.size(); }

  private:
    using Key = std::tuple<int, int, std::uint64_t>;

    static GeneratingVector build(int m, int s, double alpha, const HarnessConfig& cfg) {
        if (m < 1 || m > 31) throw std::invalid_argument("VectorCache: m outside [1, 31]");
        if (s < 1) throw std::invalid_argument("VectorCache: s must be positive");
        if (m > cfg.cbc_max_m) return hashed_vector(m, s);

        const double n = std::ldexp(1.0, m);
        const double per_candidate = 0.5 * static_cast<double>(s) * n * n;
        double c = cfg.cbc_ops_budget / std::max(per_candidate, 1.0);
        c = std::clamp(c, 8.0, static_cast<double>(cfg.candidates));
        const auto ceff = static_cast<std::uint64_t>(c);

        const WeightSequence ws = WeightSequence::power_law(alpha, 1.0);
        const SearchSpec search = (ceff + 1 >= (std::uint64_t{1} << m))
                                      ? SearchSpec::full()
                                      : SearchSpec::random(ceff, cfg.seed);
        return cbc_construct(m, s, ws, search).vector;
    }

    /// Deterministic stand-in for large m: component j is a keyed hash of
    /// (m, j) reduced to [1, n-1], with the first component pinned to one
    /// as in the searched vectors.
    static GeneratingVector hashed_vector(int m, int s) {
        const std::uint64_t n1 = (std::uint64_t{1} << m) - 1;
        GeneratingVector g;
        g.m = m;
        g.p = find_irreducible(m);
        g.q.resize(static_cast<std::size_t>(s));
        g.q[0] = Gf2Poly{1};
        for (int j = 1; j < s; ++j) {
            const std::uint64_t h =
                mix64(0xa0761d6478bd642full ^ (static_cast<std::uint64_t>(m) << 32) ^
                      static_cast<std::uint64_t>(j));
            g.q[static_cast<std::size_t>(j)] = Gf2Poly{1 + h % n1};
        }
        g.validate();
        return g;
    }

    std::map<Key, GeneratingVector> cache_;
};

/// One convergence experiment: a list of budgets walked in order, one
/// record per budget. "fixed" and "ml" budgets are total-cost caps N fed
/// to the planners; "rule" budgets are point counts n of a single rule in
/// `dims` dimensions, for measuring the quadrature rate in isolation.
struct SweepRequest {
    std::string regime = "fixed";
    std::vector<std::uint64_t> budgets;
    double alpha = 4.0;
    double eps = 0.1;
    double anchor = 0.5;
    ProductIntegrand::Shape shape = ProductIntegrand::Shape::linear;
    int dims = 10;
    HarnessConfig cfg;
};

namespace detail {

/// Deterministic equal-weight average of the truncated integrand over the
/// plain (unscrambled) rule.
inline double unscrambled_mean(const PointSet& ps, const TruncatedIntegrand& tf) {
    const int s = tf.s();
    std::vector<double> x(static_cast<std::size_t>(s));
    StableSum acc;
    for (std::uint64_t i = 0; i < ps.n(); ++i) {
        for (int j = 0; j < s; ++j) x[static_cast<std::size_t>(j)] = ps.value(i, j);
        acc.add(tf(x));
    }
    return acc.value() / static_cast<double>(ps.n());
}

/// Cross-module invariant kept live inside the sweeps: the deterministic
/// rule error on the truncated integrand may not exceed the worst-case
/// error times the truncated norm. Skipped when the n^2 kernel table
/// would dominate the sweep's own cost.
inline void check_worst_case_bound(const GeneratingVector& g, int s, double alpha,
                                   const ProductIntegrand& f, double anchor) {
    const double n = std::ldexp(1.0, g.m);
    if (n * n * static_cast<double>(s) > 5e8) return;
    const WeightSequence ws = WeightSequence::power_law(alpha, 1.0);
    const PointSet ps = generate_points(g, s);
    const double wq = wce_squared(ps, ws, s);
    const double wce = std::sqrt(std::max(wq, 0.0));
    const TruncatedIntegrand tf = truncate(f, s, anchor);
    const double err = std::abs(unscrambled_mean(ps, tf) - tf.integral());
    const double bound = wce * tf.norm_in_K();
    if (err > bound * (1.0 + 1e-9) + 1e-13) {
        throw std::runtime_error("sweep: deterministic error exceeds worst-case bound");
    }
}

}  // namespace detail

/// Run the sweep and return one record per budget. A shared cache may be
/// passed so repeated sweeps reuse constructed vectors; by default each
/// sweep owns a private one.
inline std::vector<ConvergenceRecord> sweep(const SweepRequest& req,
                                            VectorCache* shared = nullptr) {
    if (req.budgets.size() < 3) {
        throw std::invalid_argument("sweep: need at least 3 budgets for a rate estimate");
    }
    for (std::size_t i = 1; i < req.budgets.size(); ++i) {
        if (req.budgets[i] <= req.budgets[i - 1]) {
            throw std::invalid_argument("sweep: budgets must be strictly increasing");
        }
    }
    const bool is_fixed = req.regime == "fixed";
    const bool is_ml = req.regime == "ml";
    const bool is_rule = req.regime == "rule";
    if (!is_fixed && !is_ml && !is_rule) {
        throw std::invalid_argument("sweep: regime must be fixed, ml, or rule");
    }
    if (is_rule && req.dims < 1) throw std::invalid_argument("sweep: dims must be positive");

    VectorCache local;
    VectorCache& cache = shared != nullptr ? *shared : local;

    const ProductIntegrand f(WeightSequence::power_law(req.alpha, 1.0), req.shape);
    const double exact = f.exact_integral();
    const double norm = f.norm_in_K();

    ScrambleSpec spec;
    spec.kind = req.cfg.scramble;
    spec.depth = req.cfg.depth;
    spec.seed = req.cfg.seed;

    std::vector<ConvergenceRecord> out;
    out.reserve(req.budgets.size());
    for (const std::uint64_t N : req.budgets) {
        ConvergenceRecord rec;
        rec.regime = req.regime;
        rec.budget = N;
        rec.reps = static_cast<std::uint64_t>(req.cfg.reps);
        rec.seed = req.cfg.seed;
        rec.alpha = req.alpha;
        rec.eps = req.eps;
        rec.anchor = req.anchor;
        rec.shape = req.shape == ProductIntegrand::Shape::linear ? "linear" : "quadratic";

        RmseResult r;
        if (is_ml) {
            const MultilevelPlan plan = plan_multilevel(N, req.alpha, req.eps, req.anchor);
            std::vector<GeneratingVector> gs;
            gs.reserve(plan.n.size());
            for (std::size_t l = 0; l < plan.n.size(); ++l) {
                const int ml = std::bit_width(plan.n[l]) - 1;
                gs.push_back(cache.get(ml, plan.s[l], req.alpha, req.cfg));
            }
            rec.cost = cost_variable(plan);
            rec.n_or_levels = static_cast<std::uint64_t>(plan.levels());
            rec.s_or_dims = static_cast<std::uint64_t>(plan.s.back());
            r = rmse_over_replicates(req.cfg.reps, exact, norm, [&](std::uint64_t rep) {
                ScrambleSpec sp = spec;
                sp.replicate_id = rep;
                return ml_estimate(f, plan, gs, sp);
            });
        } else {
            FixedPlan plan;
            if (is_fixed) {
                plan = plan_fixed(N, req.alpha, req.eps, req.anchor);
            } else {
                if (!std::has_single_bit(N)) {
                    throw std::invalid_argument("sweep: rule budgets must be powers of two");
                }
                plan.budget = N * static_cast<std::uint64_t>(req.dims);
                plan.n = N;
                plan.s = req.dims;
                plan.anchor = req.anchor;
                plan.alpha = req.alpha;
                plan.eps = req.eps;
            }
            plan.validate();
            const GeneratingVector& g = cache.get(plan.m(), plan.s, req.alpha, req.cfg);
            detail::check_worst_case_bound(g, plan.s, req.alpha, f, req.anchor);
            rec.cost = cost_fixed(plan);
            rec.n_or_levels = plan.n_eff();
            rec.s_or_dims = static_cast<std::uint64_t>(plan.s);
            r = rmse_over_replicates(req.cfg.reps, exact, norm, [&](std::uint64_t rep) {
                ScrambleSpec sp = spec;
                sp.replicate_id = rep;
                return fixed_estimate(f, plan, g, sp);
            });
        }
        rec.rmse = r.rmse;
        rec.stderr_of_rmse = r.stderr_of_rmse;
        out.push_back(rec);
    }
    return out;
}

/// Least-squares fit of log2(rmse) against log2(N).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    /// Records dropped because their rmse was exactly zero (log undefined).
    int excluded = 0;
};

inline SlopeFit fit_slope(std::span<const ConvergenceRecord> records) {
    std::vector<double> xs;
    std::vector<double> ys;
    SlopeFit fit;
    for (const ConvergenceRecord& r : records) {
        if (!(r.rmse > 0.0)) {
            ++fit.excluded;
            continue;
        }
        xs.push_back(std::log2(static_cast<double>(r.budget)));
        ys.push_back(std::log2(r.rmse));
    }
    const std::size_t k = xs.size();
    if (k < 3) throw std::invalid_argument("fit_slope: need at least 3 records with rmse > 0");

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_slope: budgets are all equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssres = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssres += e * e;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ssres / syy : 1.0;
    return fit;
}

inline SlopeFit fit_slope(const std::vector<ConvergenceRecord>& records) {
    return fit_slope(std::span<const ConvergenceRecord>(records));
}

}  // namespace polyqmc
