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

#ifndef POLYQMC_PRF_HPP
#define POLYQMC_PRF_HPP

#include <cstdint>

namespace polyqmc {

/// Counter-mode pseudorandom function built on the splitmix64 finalizer.
/// Stateless: every random decision in the library is keyed by what it is
/// for, never by draw order, so results are independent of evaluation
/// order and thread count.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

/// Well-mixed base key for one (seed, replicate, coordinate) triple.
/// Chained full mixes, so structured inputs cannot alias.
constexpr std::uint64_t prf_key(std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t coord) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
    h = mix64(h ^ (replicate + 0xd1b54a32d192ed03ull));
    h = mix64(h ^ (coord + 0x8cb92ba72f3d8dd7ull));
    return h;
}

/// Uniform double in [0,1) from the top 53 bits.
constexpr double uniform53(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace polyqmc

#endif
