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

#ifndef POLYQMC_WSPACE_HPP
#define POLYQMC_WSPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace polyqmc {

/// Product weights gamma_j, either the power law c * j^{-alpha} or an
/// explicit finite prefix. A prefix may declare a power-law decay exponent
/// for the indices beyond it (continued from its last entry); without one
/// the weights are zero past the prefix.
class WeightSequence {
  public:
    static WeightSequence power_law(double alpha, double c = 1.0) {
        if (!(c > 0.0)) throw std::invalid_argument("WeightSequence: scale must be positive");
        if (!std::isfinite(alpha)) throw std::invalid_argument("WeightSequence: bad alpha");
        WeightSequence w;
        w.alpha_ = alpha;
        w.c_ = c;
        return w;
    }

    static WeightSequence explicit_list(std::vector<double> gammas,
                                        std::optional<double> tail_alpha = std::nullopt) {
        if (gammas.empty()) throw std::invalid_argument("WeightSequence: empty weight list");
        for (std::size_t i = 0; i < gammas.size(); ++i) {
            if (!(gammas[i] > 0.0)) {
                throw std::invalid_argument("WeightSequence: weights must be positive");
            }
            if (i > 0 && gammas[i] > gammas[i - 1]) {
                throw std::invalid_argument("WeightSequence: weights must be nonincreasing");
            }
        }
        if (tail_alpha && !(*tail_alpha > 0.0)) {
            throw std::invalid_argument("WeightSequence: tail exponent must be positive");
        }
        WeightSequence w;
        w.list_ = std::move(gammas);
        w.tail_alpha_ = tail_alpha;
        return w;
    }

    [[nodiscard]] bool is_power_law() const noexcept { return list_.empty(); }

    /// gamma_j, 1-based.
    [[nodiscard]] double gamma(std::uint64_t j) const {
        if (j < 1) throw std::invalid_argument("WeightSequence: index is 1-based");
        if (is_power_law()) return c_ * std::pow(static_cast<double>(j), -alpha_);
        const std::uint64_t len = list_.size();
        if (j <= len) return list_[static_cast<std::size_t>(j - 1)];
        if (!tail_alpha_) return 0.0;
        return list_.back() *
               std::pow(static_cast<double>(len) / static_cast<double>(j), *tail_alpha_);
    }

    /// Decay exponent governing the infinite tail; nullopt when the
    /// sequence is eventually zero.
    [[nodiscard]] std::optional<double> tail_exponent() const noexcept {
        if (is_power_law()) return alpha_;
        return tail_alpha_;
    }

    /// True iff sum_j gamma_j < infinity.
    [[nodiscard]] bool summable() const noexcept {
        const auto t = tail_exponent();
        return !t || *t > 1.0;
    }

    /// Power-law parameters of the tail: gamma_j = tc * j^{-ta} for j past
    /// the explicit prefix (prefix length 0 for a pure power law).
    struct Tail {
        std::uint64_t start;  // first index governed by the power law
        double alpha;
        double c;
    };
    [[nodiscard]] std::optional<Tail> tail() const {
        if (is_power_law()) return Tail{1, alpha_, c_};
        if (!tail_alpha_) return std::nullopt;
        const auto len = static_cast<std::uint64_t>(list_.size());
        return Tail{len + 1, *tail_alpha_,
                    list_.back() * std::pow(static_cast<double>(len), *tail_alpha_)};
    }

    [[nodiscard]] std::uint64_t prefix_length() const noexcept { return list_.size(); }

  private:
    WeightSequence() = default;
    double alpha_ = 0.0;
    double c_ = 0.0;
    std::vector<double> list_;
    std::optional<double> tail_alpha_;
};

/// Mean-centered univariate kernel on [0,1]^2.
inline double kernel_eval(double x, double y) {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
        throw std::invalid_argument("kernel_eval: arguments must lie in [0,1]");
    }
    return 1.0 / 3.0 + 0.5 * (x * x + y * y) - std::max(x, y);
}

/// Weighted product space: K_{1:s}(x,y) = prod_j (1 + gamma_j k(x_j,y_j)).
struct KernelSpace {
    WeightSequence weights;

    [[nodiscard]] double product_kernel_eval(std::span<const double> x,
                                             std::span<const double> y) const {
        if (x.size() != y.size()) {
            throw std::invalid_argument("product_kernel_eval: dimension mismatch");
        }
        double acc = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            acc *= 1.0 + weights.gamma(j + 1) * kernel_eval(x[j], y[j]);
        }
        return acc;
    }
};

/// Summability condition sum_j gamma_j^{1/(3-eps)} < infinity governing
/// the n^{-(3/2-eps)} randomized-error rate.
inline bool theorem1_condition(const WeightSequence& ws, double eps) {
    if (!(eps > 0.0 && eps < 3.0)) {
        throw std::invalid_argument("theorem1_condition: eps must lie in (0,3)");
    }
    const auto t = ws.tail_exponent();
    if (!t) return true;  // eventually-zero weights: finite sum
    return *t / (3.0 - eps) > 1.0;
}

namespace detail {

/// log of prod_{j>J} (1 + t j^{-alpha}) for the infinite power-law tail,
/// where every remaining term satisfies |t| J^{-alpha} <= 1e-8. Two-order
/// expansion of log1p with Euler-Maclaurin sums; absolute error well below
/// 1e-15 under that smallness condition.
inline double log_tail_remainder(double t, double alpha, double J) {
    const double N = J + 1.0;
    const double s1 = std::pow(N, 1.0 - alpha) / (alpha - 1.0) + 0.5 * std::pow(N, -alpha) +
                      alpha * std::pow(N, -alpha - 1.0) / 12.0;
    const double s2 = std::pow(N, 1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0) +
                      0.5 * std::pow(N, -2.0 * alpha);
    return t * s1 - 0.5 * t * t * s2;
}

}  // namespace detail

/// Tail product prod_{j>s} (1 + gamma_j * t) with t fixed, evaluated to
/// relative accuracy 1e-14: explicit log1p summation until terms are small
/// enough that the analytic remainder bound is below 1e-15, then the
/// remainder in closed form.
inline double weight_tail_product(const WeightSequence& ws, std::uint64_t s, double t) {
    if (t == 0.0) return 1.0;
    if (!ws.summable()) {
        throw std::domain_error("weight_tail_product: weights are not summable");
    }
    // Early factors may be zero or negative; only the far tail (factors
    // near 1) goes through the log-sum, so track sign explicitly.
    double logsum = 0.0;
    double sign = 1.0;
    bool zero = false;
    const auto absorb = [&](double x) {
        const double v = 1.0 + x;
        if (v == 0.0) {
            zero = true;
        } else if (std::abs(x) < 0.5) {
            logsum += std::log1p(x);
        } else {
            if (v < 0.0) sign = -sign;
            logsum += std::log(std::abs(v));
        }
    };

    const auto tail = ws.tail();
    const std::uint64_t list_end = ws.prefix_length();
    for (std::uint64_t j = s + 1; j <= list_end && !zero; ++j) absorb(ws.gamma(j) * t);
    if (zero) return 0.0;
    if (!tail) return sign * std::exp(logsum);

    const double alpha = tail->alpha;
    const double c = tail->c;
    std::uint64_t j = std::max(s, tail->start - 1) + 1;
    // Explicit summation until the two-order remainder expansion is valid:
    // remaining terms below 1e-8 and the index large enough that the
    // Euler-Maclaurin error terms sit below 1e-15.
    for (;; ++j) {
        if (j > std::uint64_t{200000000}) {
            throw std::domain_error("weight_tail_product: tail did not converge");
        }
        const double x = c * std::pow(static_cast<double>(j), -alpha) * t;
        if (std::abs(x) <= 1e-8 && j >= 512) break;
        absorb(x);
        if (zero) return 0.0;
    }
    logsum += detail::log_tail_remainder(c * t, alpha, static_cast<double>(j - 1));
    return sign * std::exp(logsum);
}

/// Mean-one product integrand f(x) = prod_j (1 + gamma_j beta_j g(x_j)).
/// Both factor shapes integrate to zero, so every truncation has a
/// closed-form integral and the H(K) norm is an explicit product.
class ProductIntegrand {
  public:
    enum class Shape { linear, quadratic };

    /// Per-coordinate scale factors: a constant, or a finite list that is
    /// zero beyond its length.
    class BetaSpec {
      public:
        static BetaSpec uniform(double v = 1.0) {
            BetaSpec b;
            b.uniform_ = v;
            return b;
        }
        static BetaSpec list(std::vector<double> values) {
            BetaSpec b;
            b.list_ = std::move(values);
            b.uniform_ = 0.0;
            b.is_list_ = true;
            return b;
        }
        [[nodiscard]] double beta(std::uint64_t j) const {
            if (!is_list_) return uniform_;
            return j <= list_.size() ? list_[static_cast<std::size_t>(j - 1)] : 0.0;
        }
        [[nodiscard]] bool is_list() const noexcept { return is_list_; }
        [[nodiscard]] std::uint64_t list_length() const noexcept { return list_.size(); }
        [[nodiscard]] double uniform_value() const noexcept { return uniform_; }

      private:
        double uniform_ = 1.0;
        std::vector<double> list_;
        bool is_list_ = false;
    };

    ProductIntegrand(WeightSequence weights, Shape shape, BetaSpec beta = BetaSpec::uniform())
        : weights_(std::move(weights)), shape_(shape), beta_(std::move(beta)) {}

    [[nodiscard]] const WeightSequence& weights() const noexcept { return weights_; }
    [[nodiscard]] Shape shape() const noexcept { return shape_; }
    [[nodiscard]] const BetaSpec& beta() const noexcept { return beta_; }

    [[nodiscard]] double g(double x) const noexcept {
        return shape_ == Shape::linear ? x - 0.5 : x * x - x + 1.0 / 6.0;
    }

    /// Energy of the factor shape: integral of (g')^2.
    [[nodiscard]] double kappa() const noexcept {
        return shape_ == Shape::linear ? 1.0 : 1.0 / 3.0;
    }

    /// Coefficient gamma_j * beta_j of factor j.
    [[nodiscard]] double coeff(std::uint64_t j) const { return weights_.gamma(j) * beta_.beta(j); }

    /// Product over the explicit prefix only: prod_{j<=s} (1 + c_j g(x_j)).
    [[nodiscard]] double eval_prefix(std::span<const double> x) const {
        double acc = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (!(x[j] >= 0.0 && x[j] <= 1.0)) {
                throw std::invalid_argument("ProductIntegrand: coordinate outside [0,1]");
            }
            acc *= 1.0 + coeff(j + 1) * g(x[j]);
        }
        return acc;
    }

    /// Anchored tail T(s,a) = prod_{j>s} (1 + gamma_j beta_j g(a)).
    [[nodiscard]] double tail(std::uint64_t s, double a) const {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw std::invalid_argument("ProductIntegrand: anchor outside [0,1]");
        }
        const double ga = g(a);
        if (ga == 0.0) return 1.0;
        if (beta_.is_list()) {
            // Finite support: the infinite part of the product is 1.
            double acc = 1.0;
            for (std::uint64_t j = s + 1; j <= beta_.list_length(); ++j) {
                acc *= 1.0 + coeff(j) * ga;
            }
            return acc;
        }
        const double t = beta_.uniform_value() * ga;
        if (t == 0.0) return 1.0;
        return weight_tail_product(weights_, s, t);
    }

    /// f evaluated with coordinates beyond the prefix anchored at a.
    [[nodiscard]] double eval(std::span<const double> x, double a) const {
        return eval_prefix(x) * tail(x.size(), a);
    }

    [[nodiscard]] double exact_integral() const {
        require_summable();
        return 1.0;
    }

    [[nodiscard]] double truncated_integral(std::uint64_t s, double a) const {
        require_summable();
        return tail(s, a);
    }

    /// H(K) norm: sqrt(prod_j (1 + gamma_j beta_j^2 kappa)).
    [[nodiscard]] double norm_in_K() const {
        const double k = kappa();
        if (beta_.is_list()) {
            double acc = 1.0;
            for (std::uint64_t j = 1; j <= beta_.list_length(); ++j) {
                const double b = beta_.beta(j);
                acc *= 1.0 + weights_.gamma(j) * b * b * k;
            }
            return std::sqrt(acc);
        }
        const double b = beta_.uniform_value();
        if (b == 0.0) return 1.0;
        return std::sqrt(weight_tail_product(weights_, 0, b * b * k));
    }

  private:
    void require_summable() const {
        // A finite-support beta list shields divergent weights.
        if (!beta_.is_list() && beta_.uniform_value() != 0.0 && !weights_.summable()) {
            throw std::domain_error("ProductIntegrand: weights are not summable");
        }
    }

    WeightSequence weights_;
    Shape shape_;
    BetaSpec beta_;
};

}  // namespace polyqmc

#endif
