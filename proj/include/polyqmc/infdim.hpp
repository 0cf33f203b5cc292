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

#ifndef POLYQMC_INFDIM_HPP
#define POLYQMC_INFDIM_HPP

#include <polyqmc/common.hpp>
#include <polyqmc/lattice.hpp>
#include <polyqmc/scramble.hpp>
#include <polyqmc/wspace.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace polyqmc {

namespace detail {

inline std::uint64_t floor_pow2(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("floor_pow2: zero");
    return std::uint64_t{1} << (std::bit_width(n) - 1);
}

inline double parse_field(const std::string& line, const std::string& key) {
    if (line.rfind(key, 0) != 0) {
        throw std::runtime_error("plan file: expected '" + key + "' line, got: " + line);
    }
    std::size_t pos = 0;
    const std::string body = line.substr(key.size());
    const double v = std::stod(body, &pos);
    if (pos != body.size()) throw std::runtime_error("plan file: trailing junk in: " + line);
    return v;
}

}  // namespace detail

/// Parameters of one fixed-subspace quadrature run: an n-point rule (used
/// at the power-of-two count n_eff) on the first s coordinates, remaining
/// coordinates pinned to the anchor.
struct FixedPlan {
    std::uint64_t budget = 0;  // cost budget N the plan was sized for
    std::uint64_t n = 0;       // requested point count
    int s = 0;
    double anchor = 0.5;
    double alpha = 0.0;  // weight decay the planner assumed (0 = not set)
    double eps = 0.0;

    [[nodiscard]] std::uint64_t n_eff() const { return detail::floor_pow2(n); }
    [[nodiscard]] int m() const { return std::bit_width(n_eff()) - 1; }

    void validate() const {
        if (n < 2) throw std::invalid_argument("FixedPlan: needs at least two points");
        if (s < 1) throw std::invalid_argument("FixedPlan: s must be >= 1");
        if (!(anchor >= 0.0 && anchor <= 1.0)) {
            throw std::invalid_argument("FixedPlan: anchor outside [0,1]");
        }
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write plan file: " + path);
        out.precision(17);
        out << "type=fixed\n"
            << "N=" << budget << "\n"
            << "alpha=" << alpha << "\n"
            << "eps=" << eps << "\n"
            << "anchor=" << anchor << "\n"
            << "n=" << n << "\n"
            << "s=" << s << "\n";
        if (!out) throw std::runtime_error("write failed: " + path);
    }

    static FixedPlan load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read plan file: " + path);
        std::string line;
        if (!std::getline(in, line) || line != "type=fixed") {
            throw std::runtime_error("plan file: not a fixed plan: " + path);
        }
        FixedPlan p;
        auto next = [&in, &path]() {
            std::string l;
            if (!std::getline(in, l)) throw std::runtime_error("plan file truncated: " + path);
            return l;
        };
        p.budget = static_cast<std::uint64_t>(detail::parse_field(next(), "N="));
        p.alpha = detail::parse_field(next(), "alpha=");
        p.eps = detail::parse_field(next(), "eps=");
        p.anchor = detail::parse_field(next(), "anchor=");
        p.n = static_cast<std::uint64_t>(detail::parse_field(next(), "n="));
        p.s = static_cast<int>(detail::parse_field(next(), "s="));
        p.validate();
        return p;
    }
};

[[nodiscard]] inline std::uint64_t cost_fixed(const FixedPlan& plan) {
    return plan.n_eff() * static_cast<std::uint64_t>(plan.s);
}

/// Parameters of one multilevel run: strictly increasing active dimensions
/// s_l with per-level point counts n_l (powers of two).
struct MultilevelPlan {
    std::uint64_t budget = 0;
    double alpha = 0.0;
    double eps = 0.0;
    double anchor = 0.5;
    std::vector<int> s;
    std::vector<std::uint64_t> n;

    [[nodiscard]] int levels() const { return static_cast<int>(s.size()); }

    //  Error-rate exponents this plan targets: rmse = O(N^{-rho1} + N^{-rho2}).
    [[nodiscard]] double rho1() const { return (alpha - 1.0) / (3.0 - eps / 2.0); }
    [[nodiscard]] double rho2() const { return (alpha - 4.0 - eps) / (3.0 - eps / 2.0); }

    void validate() const {
        if (s.empty() || s.size() != n.size()) {
            throw std::invalid_argument("MultilevelPlan: level tables empty or mismatched");
        }
        for (std::size_t l = 0; l < s.size(); ++l) {
            if (s[l] < 1) throw std::invalid_argument("MultilevelPlan: s_l must be >= 1");
            if (l > 0 && s[l] <= s[l - 1]) {
                throw std::invalid_argument("MultilevelPlan: s_l must be strictly increasing");
            }
            if (n[l] < 2 || !std::has_single_bit(n[l])) {
                throw std::invalid_argument("MultilevelPlan: n_l must be a power of two >= 2");
            }
        }
        if (!(anchor >= 0.0 && anchor <= 1.0)) {
            throw std::invalid_argument("MultilevelPlan: anchor outside [0,1]");
        }
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write plan file: " + path);
        out.precision(17);
        out << "type=ml\n"
            << "N=" << budget << "\n"
            << "alpha=" << alpha << "\n"
            << "eps=" << eps << "\n"
            << "anchor=" << anchor << "\n";
        for (std::size_t l = 0; l < s.size(); ++l) {
            out << "level " << (l + 1) << ": s=" << s[l] << " n=" << n[l] << "\n";
        }
        if (!out) throw std::runtime_error("write failed: " + path);
    }

    static MultilevelPlan load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read plan file: " + path);
        std::string line;
        if (!std::getline(in, line) || line != "type=ml") {
            throw std::runtime_error("plan file: not a multilevel plan: " + path);
        }
        MultilevelPlan p;
        auto next = [&in, &path]() {
            std::string l;
            if (!std::getline(in, l)) throw std::runtime_error("plan file truncated: " + path);
            return l;
        };
        p.budget = static_cast<std::uint64_t>(detail::parse_field(next(), "N="));
        p.alpha = detail::parse_field(next(), "alpha=");
        p.eps = detail::parse_field(next(), "eps=");
        p.anchor = detail::parse_field(next(), "anchor=");
        int expect = 1;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string lvl, colon, sfield, nfield;
            int idx = 0;
            row >> lvl >> idx >> colon >> sfield >> nfield;
            if (row.fail() || lvl != "level" || colon != ":" || sfield.rfind("s=", 0) != 0 ||
                nfield.rfind("n=", 0) != 0) {
                throw std::runtime_error("plan file: bad level line: " + line);
            }
            if (idx != expect) throw std::runtime_error("plan file: level lines out of order");
            ++expect;
            p.s.push_back(std::stoi(sfield.substr(2)));
            p.n.push_back(std::stoull(nfield.substr(2)));
        }
        p.validate();
        return p;
    }
};

[[nodiscard]] inline std::uint64_t cost_variable(const MultilevelPlan& plan) {
    std::uint64_t c = 0;
    for (std::size_t l = 0; l < plan.s.size(); ++l) {
        c += static_cast<std::uint64_t>(plan.s[l]) * plan.n[l];
    }
    return c;
}

/// The truncated integrand x -> f(x_1, ..., x_s, a, a, ...): the anchored
/// tail collapses to one constant factor, and the per-coordinate
/// coefficients are cached so evaluation is a length-s product.
class TruncatedIntegrand {
  public:
    TruncatedIntegrand(const ProductIntegrand& f, int s, double a)
        : f_(f), s_(s), anchor_(a),
          tail_(f.truncated_integral(static_cast<std::uint64_t>(s < 0 ? 0 : s), a)) {
        if (s < 0) throw std::invalid_argument("TruncatedIntegrand: s must be >= 0");
        coeff_.resize(static_cast<std::size_t>(s));
        for (int j = 0; j < s; ++j) {
            coeff_[static_cast<std::size_t>(j)] = f.coeff(static_cast<std::uint64_t>(j) + 1);
        }
    }

    [[nodiscard]] int s() const noexcept { return s_; }
    [[nodiscard]] double anchor() const noexcept { return anchor_; }

    /// Constant produced by the anchored coordinates beyond s. It equals
    /// the exact integral of the truncated function (the active factors
    /// each integrate to one).
    [[nodiscard]] double tail_factor() const noexcept { return tail_; }
    [[nodiscard]] double integral() const noexcept { return tail_; }

    /// Evaluate at the first s entries of x.
    [[nodiscard]] double operator()(std::span<const double> x) const {
        if (static_cast<int>(x.size()) < s_) {
            throw std::invalid_argument("TruncatedIntegrand: point has too few coordinates");
        }
        double acc = tail_;
        for (int j = 0; j < s_; ++j) {
            acc *= 1.0 + coeff_[static_cast<std::size_t>(j)] * f_.g(x[static_cast<std::size_t>(j)]);
        }
        return acc;
    }

    /// Active-factor product only (without the tail constant), used by the
    /// multilevel difference evaluator.
    [[nodiscard]] double coeff(int j) const { return coeff_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] double g(double x) const noexcept { return f_.g(x); }

    /// Norm of the truncated function in the weighted space: the tail
    /// constant times the norm of the active s-coordinate product.
    [[nodiscard]] double norm_in_K() const {
        double prod = 1.0;
        const double kap = f_.kappa();
        for (int j = 0; j < s_; ++j) {
            const double gb = coeff_[static_cast<std::size_t>(j)];
            const double b = f_.beta().beta(static_cast<std::uint64_t>(j) + 1);
            // gb = gamma_j * beta_j, so gb * b recovers gamma_j * beta_j^2.
            prod *= 1.0 + gb * b * kap;
        }
        return std::abs(tail_) * std::sqrt(prod);
    }

  private:
    ProductIntegrand f_;
    int s_;
    double anchor_;
    double tail_;
    std::vector<double> coeff_;
};

inline TruncatedIntegrand truncate(const ProductIntegrand& f, int s, double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("truncate: anchor outside [0,1]");
    return TruncatedIntegrand{f, s, a};
}

/// Fixed-subspace estimate: scramble the rule's first plan.s coordinates
/// and average the truncated integrand. Walks the rule one coordinate at a
/// time (memory n doubles, not n by s), which keeps the very high
/// dimensional plans of the fixed regime affordable.
inline double fixed_estimate(const ProductIntegrand& f, const FixedPlan& plan,
                             const GeneratingVector& g, const ScrambleSpec& spec) {
    plan.validate();
    g.validate();
    if (g.max_dim() < plan.s) {
        throw std::invalid_argument("fixed_estimate: generating vector has fewer components than plan.s");
    }
    if (g.m != plan.m()) {
        throw std::invalid_argument("fixed_estimate: vector resolution does not match the plan");
    }
    const std::uint64_t n = plan.n_eff();
    const TruncatedIntegrand tf = truncate(f, plan.s, plan.anchor);
    std::vector<double> prod(n, 1.0);
    for (int j = 0; j < plan.s; ++j) {
        const auto idx = coordinate_indices(g, j);
        const CoordScrambler sc(spec, g.m, j);
        const double c = tf.coeff(j);
        for (std::uint64_t i = 0; i < n; ++i) {
            prod[i] *= 1.0 + c * tf.g(sc(idx[i]));
        }
    }
    // The anchored-tail constant multiplies at the end, mirroring the
    // multilevel evaluator so a one-level plan reproduces this estimate
    // bit for bit.
    const double tail = tf.tail_factor();
    StableSum acc;
    for (std::uint64_t i = 0; i < n; ++i) acc.add(tail * prod[i]);
    return acc.value() / static_cast<double>(n);
}

/// Multilevel estimate: sum over levels of the scrambled-rule average of
/// the telescoping difference between truncations at s_l and s_{l-1},
/// each level with an independent replicate of the scrambling. Both terms
/// of a difference are evaluated on the same level-l points (the lower
/// truncation reads the s_{l-1}-prefix), so their strong coupling is
/// preserved and the level variance decays with the tail weights. If
/// level_out is given it receives the L per-level contributions.
inline double ml_estimate(const ProductIntegrand& f, const MultilevelPlan& plan,
                          std::span<const GeneratingVector> vectors, const ScrambleSpec& spec,
                          std::vector<double>* level_out = nullptr) {
    plan.validate();
    if (static_cast<int>(vectors.size()) != plan.levels()) {
        throw std::invalid_argument("ml_estimate: need one generating vector per level");
    }
    if (spec.replicate_id >> 48) {
        throw std::invalid_argument("ml_estimate: replicate_id too large to tag levels");
    }
    if (level_out != nullptr) level_out->clear();
    StableSum total;
    for (int l = 1; l <= plan.levels(); ++l) {
        const GeneratingVector& g = vectors[static_cast<std::size_t>(l - 1)];
        g.validate();
        const int sl = plan.s[static_cast<std::size_t>(l - 1)];
        const int sprev = (l >= 2) ? plan.s[static_cast<std::size_t>(l - 2)] : 0;
        if (g.max_dim() < sl) {
            throw std::invalid_argument("ml_estimate: level vector has fewer components than s_l");
        }
        if (g.n() != plan.n[static_cast<std::size_t>(l - 1)]) {
            throw std::invalid_argument("ml_estimate: level vector size does not match n_l");
        }
        // Levels must be scrambled independently: tag the replicate id
        // with the level index.
        ScrambleSpec level_spec = spec;
        level_spec.replicate_id = (spec.replicate_id << 16) | static_cast<std::uint64_t>(l);

        const TruncatedIntegrand hi = truncate(f, sl, plan.anchor);
        const std::uint64_t n = g.n();
        // Running products of the active factors; snapshot at the lower
        // truncation boundary.
        std::vector<double> run(n, 1.0);
        std::vector<double> low(n, (l >= 2) ? 1.0 : 0.0);
        for (int j = 0; j < sl; ++j) {
            const auto idx = coordinate_indices(g, j);
            const CoordScrambler sc(level_spec, g.m, j);
            const double c = hi.coeff(j);
            for (std::uint64_t i = 0; i < n; ++i) {
                run[i] *= 1.0 + c * hi.g(sc(idx[i]));
            }
            if (j + 1 == sprev) low = run;
        }
        const double tail_hi = hi.tail_factor();
        const double tail_lo =
            (l >= 2) ? truncate(f, sprev, plan.anchor).tail_factor() : 0.0;
        StableSum level;
        for (std::uint64_t i = 0; i < n; ++i) {
            level.add(tail_hi * run[i] - tail_lo * low[i]);
        }
        const double level_mean = level.value() / static_cast<double>(n);
        if (level_out != nullptr) level_out->push_back(level_mean);
        total.add(level_mean);
    }
    return total.value();
}

/// Budget-to-parameters map of the fixed-subspace regime: n grows like
/// N^{(alpha-1)/(alpha+2-eps)} (floored to a power of two), s like
/// N^{(3-eps)/(alpha+2-eps)}, and s is capped so the realized cost never
/// exceeds the budget (the planner's cost constant is 1).
inline FixedPlan plan_fixed(std::uint64_t N, double alpha, double eps, double anchor = 0.5,
                            double c_n = 1.0, double c_s = 1.0) {
    if (!(alpha >= 3.0)) {
        throw out_of_regime_error("plan_fixed: requires alpha >= 3");
    }
    if (!(eps > 0.0 && eps < 3.0)) {
        throw out_of_regime_error("plan_fixed: requires 0 < eps < 3");
    }
    if (N < 2) throw std::invalid_argument("plan_fixed: budget too small");
    if (!(c_n > 0.0 && c_s > 0.0)) throw std::invalid_argument("plan_fixed: bad tuning constants");
    const double denom = alpha + 2.0 - eps;
    const double raw_n = c_n * std::pow(static_cast<double>(N), (alpha - 1.0) / denom);
    const double raw_s = c_s * std::pow(static_cast<double>(N), (3.0 - eps) / denom);

    FixedPlan plan;
    plan.budget = N;
    plan.alpha = alpha;
    plan.eps = eps;
    plan.anchor = anchor;
    plan.n = raw_n < 2.0 ? 2 : detail::floor_pow2(static_cast<std::uint64_t>(raw_n));
    std::uint64_t s = static_cast<std::uint64_t>(std::ceil(raw_s));
    if (s < 1) s = 1;
    // Hard budget cap: rounding s upward may not push the cost past N.
    const std::uint64_t cap = N / plan.n_eff();
    if (cap < 1) throw std::invalid_argument("plan_fixed: budget cannot fund the point count");
    if (s > cap) s = cap;
    if (s > 100000000ull) throw std::invalid_argument("plan_fixed: dimension out of supported range");
    plan.s = static_cast<int>(s);
    plan.validate();
    return plan;
}

/// Remaining budget after the fixed plan's realized cost (the rounding
/// slack; nonnegative by construction).
[[nodiscard]] inline std::uint64_t plan_fixed_slack(const FixedPlan& plan) {
    return plan.budget - cost_fixed(plan);
}

/// Budget-to-parameters map of the multilevel regime. Dimensions double
/// per level (s_l = 2^l); the level count matches the truncation bias to
/// the target rate; points per level follow the cost-constrained
/// allocation n_l proportional to (v_l / s_l)^{1/(4-eps)} for the level
/// variance model v_1 = 1, v_l = s_{l-1}^{-(alpha-1)}, floored to powers
/// of two with the scale chosen as large as the budget allows. Levels
/// whose allocation falls below two points are dropped from the top.
inline MultilevelPlan plan_multilevel(std::uint64_t N, double alpha, double eps,
                                      double anchor = 0.5) {
    if (!(alpha > 3.0)) {
        throw out_of_regime_error("plan_multilevel: requires alpha > 3");
    }
    if (!(eps > 0.0 && eps < std::min(6.0, alpha - 3.0))) {
        throw out_of_regime_error("plan_multilevel: requires 0 < eps < min(6, alpha - 3)");
    }
    if (eps >= 3.5) {
        // The allocation exponent 1/(4-eps) loses meaning as eps
        // approaches 4; the regime of interest is small eps.
        throw out_of_regime_error("plan_multilevel: allocation schedule requires eps < 3.5");
    }
    if (N < 4) throw std::invalid_argument("plan_multilevel: budget too small");

    const double lgN = std::log2(static_cast<double>(N));
    int L = static_cast<int>(
        std::ceil((3.0 - eps) * lgN * std::max(1.0 / (alpha - 1.0), 1.0 / 9.0)));
    if (L < 1) L = 1;
    // A level needs at least 2 points, so any level with 2 * 2^l > N can
    // never be funded. The per-level scale u_l decreases strictly, so
    // these are exactly the levels the drop rule below would remove;
    // pruning them up front leaves the allocation unchanged.
    const int fundable = std::bit_width(N) - 2;
    if (L > fundable) L = fundable;

    std::vector<double> u(static_cast<std::size_t>(L));
    for (int l = 1; l <= L; ++l) {
        const double sl = std::ldexp(1.0, l);  // 2^l
        const double vl = (l == 1) ? 1.0 : std::pow(std::ldexp(1.0, l - 1), -(alpha - 1.0));
        u[static_cast<std::size_t>(l - 1)] = std::pow(vl / sl, 1.0 / (4.0 - eps));
    }
    // cost(lambda) is a nondecreasing step function; bisect for the
    // largest scale within budget. Levels allocated fewer than 2 points
    // count zero cost here and are dropped below.
    const auto cost_at = [&u, L](double lambda) {
        std::uint64_t c = 0;
        for (int l = 1; l <= L; ++l) {
            const double raw = lambda * u[static_cast<std::size_t>(l - 1)];
            if (raw >= 2.0) {
                c += (std::uint64_t{1} << l) *
                     detail::floor_pow2(static_cast<std::uint64_t>(raw));
            }
        }
        return c;
    };
    double lo = 0.0;
    double hi = 2.0 / u[0];
    for (int it = 0; it < 80 && cost_at(hi) <= N; ++it) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cost_at(mid) <= N) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    MultilevelPlan plan;
    plan.budget = N;
    plan.alpha = alpha;
    plan.eps = eps;
    plan.anchor = anchor;
    for (int l = 1; l <= L; ++l) {
        const double raw = lo * u[static_cast<std::size_t>(l - 1)];
        if (raw < 2.0) break;  // this and all higher levels are dropped
        if (l > 30) throw std::invalid_argument("plan_multilevel: level dimension exceeds range");
        plan.s.push_back(1 << l);
        plan.n.push_back(detail::floor_pow2(static_cast<std::uint64_t>(raw)));
    }
    if (plan.s.empty()) throw std::invalid_argument("plan_multilevel: budget funds no level");
    plan.validate();
    return plan;
}

}  // namespace polyqmc

#endif
