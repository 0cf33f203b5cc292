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

#ifndef POLYQMC_COMMON_HPP
#define POLYQMC_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace polyqmc {

/// Thrown when algorithm parameters fall outside the regime a planner or
/// rate statement is valid for (e.g. a weight decay exponent too small).
/// The CLI maps this to its own exit code, distinct from plain
/// configuration errors.
class out_of_regime_error : public std::domain_error {
  public:
    explicit out_of_regime_error(const std::string& what) : std::domain_error(what) {}
};

/// Neumaier-compensated accumulator. Summation order is fixed by the
/// caller; the compensation keeps long reductions (millions of terms)
/// accurate to a few ulps of the true sum.
class StableSum {
  public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double stable_sum(std::span<const double> xs) noexcept {
    StableSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace polyqmc

#endif
