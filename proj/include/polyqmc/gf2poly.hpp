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

#ifndef POLYQMC_GF2POLY_HPP
#define POLYQMC_GF2POLY_HPP

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyqmc {

/// Polynomial over GF(2), packed into a 64-bit coefficient mask.
/// Bit i holds the coefficient of x^i, so the zero polynomial is the
/// all-zero mask and every nonzero value is automatically in canonical
/// form (the top set bit is the leading coefficient). Supports degrees
/// up to 62, which covers every modulus this library constructs.
class Gf2Poly {
  public:
    /// Degree reported for the zero polynomial. A sentinel, not a value
    /// that participates in arithmetic.
    static constexpr int kZeroDegree = -1;

    constexpr Gf2Poly() noexcept = default;
    constexpr explicit Gf2Poly(std::uint64_t coeff_mask) noexcept : bits_(coeff_mask) {}

    static constexpr Gf2Poly zero() noexcept { return Gf2Poly{0}; }
    static constexpr Gf2Poly one() noexcept { return Gf2Poly{1}; }
    /// The monomial x^k.
    static constexpr Gf2Poly monomial(unsigned k) { return Gf2Poly{std::uint64_t{1} << k}; }

    [[nodiscard]] constexpr std::uint64_t bits() const noexcept { return bits_; }
    [[nodiscard]] constexpr bool is_zero() const noexcept { return bits_ == 0; }

    [[nodiscard]] constexpr int degree() const noexcept {
        return bits_ == 0 ? kZeroDegree : std::bit_width(bits_) - 1;
    }

    [[nodiscard]] constexpr bool coeff(unsigned i) const noexcept {
        return i < 64 && ((bits_ >> i) & 1u) != 0;
    }

    friend constexpr bool operator==(Gf2Poly a, Gf2Poly b) noexcept = default;
    friend constexpr bool operator<(Gf2Poly a, Gf2Poly b) noexcept { return a.bits_ < b.bits_; }

    /// Coefficientwise addition; in characteristic 2 every element is its
    /// own additive inverse.
    friend constexpr Gf2Poly operator+(Gf2Poly a, Gf2Poly b) noexcept {
        return Gf2Poly{a.bits_ ^ b.bits_};
    }

    /// Hex coefficient mask, least-significant bit = constant term
    /// (x^2 + x + 1 <-> "0x7").
    [[nodiscard]] std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        if (bits_ == 0) return "0x0";
        std::string out;
        for (std::uint64_t v = bits_; v != 0; v >>= 4) out.insert(0, 1, digits[v & 0xf]);
        return "0x" + out;
    }

    static Gf2Poly from_hex(const std::string& text) {
        std::size_t pos = 0;
        if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) pos = 2;
        if (pos >= text.size()) throw std::invalid_argument("empty polynomial literal: " + text);
        std::uint64_t v = 0;
        for (; pos < text.size(); ++pos) {
            char c = text[pos];
            std::uint64_t d;
            if (c >= '0' && c <= '9') d = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') d = static_cast<std::uint64_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') d = static_cast<std::uint64_t>(c - 'A' + 10);
            else throw std::invalid_argument("bad polynomial literal: " + text);
            if (v >> 60) throw std::invalid_argument("polynomial literal overflows 64 bits: " + text);
            v = (v << 4) | d;
        }
        return Gf2Poly{v};
    }

  private:
    std::uint64_t bits_ = 0;
};

inline Gf2Poly poly_add(Gf2Poly a, Gf2Poly b) noexcept { return a + b; }

namespace detail {

/// Remainder of a by p, p nonzero. Plain shift-and-subtract division.
inline std::uint64_t poly_mod_bits(std::uint64_t a, std::uint64_t p) noexcept {
    const int dp = std::bit_width(p) - 1;
    int da = std::bit_width(a) - 1;
    while (a != 0 && da >= dp) {
        a ^= p << (da - dp);
        da = std::bit_width(a) - 1;
    }
    return a;
}

}  // namespace detail

/// (a * b) mod p over GF(2)[x]. The product is reduced as it is built,
/// so operands of any degree below 63 are safe from overflow.
inline Gf2Poly poly_mulmod(Gf2Poly a, Gf2Poly b, Gf2Poly p) {
    if (p.degree() < 1) throw std::invalid_argument("poly_mulmod: modulus must have degree >= 1");
    const std::uint64_t pb = p.bits();
    const int dp = p.degree();
    std::uint64_t x = detail::poly_mod_bits(a.bits(), pb);
    std::uint64_t y = detail::poly_mod_bits(b.bits(), pb);
    std::uint64_t acc = 0;
    while (y != 0) {
        if (y & 1u) acc ^= x;
        y >>= 1;
        x <<= 1;
        if ((x >> dp) & 1u) x ^= pb;
    }
    return Gf2Poly{acc};
}

/// True iff p has no factor of degree in [1, deg(p)/2]. Trial division
/// against every polynomial of those degrees; a reducible p always has an
/// irreducible factor in that range, so scanning composites too costs a
/// little time and no correctness.
inline bool is_irreducible(Gf2Poly p) {
    const int d = p.degree();
    if (d < 1) throw std::invalid_argument("is_irreducible: degree must be >= 1");
    if (d == 1) return true;
    for (int fd = 1; fd <= d / 2; ++fd) {
        const std::uint64_t lo = std::uint64_t{1} << fd;
        const std::uint64_t hi = std::uint64_t{1} << (fd + 1);
        for (std::uint64_t f = lo; f < hi; ++f) {
            if (detail::poly_mod_bits(p.bits(), f) == 0) return false;
        }
    }
    return true;
}

/// Irreducible polynomial of degree m with the smallest coefficient mask,
/// read as an integer. The tie-break makes every construction that calls
/// this reproducible bit for bit.
inline Gf2Poly find_irreducible(int m) {
    if (m < 1) throw std::invalid_argument("find_irreducible: m must be >= 1");
    if (m > 62) throw std::invalid_argument("find_irreducible: m must be <= 62");
    const std::uint64_t lo = std::uint64_t{1} << m;
    const std::uint64_t hi = lo << 1;
    for (std::uint64_t c = lo; c < hi; ++c) {
        Gf2Poly p{c};
        if (is_irreducible(p)) return p;
    }
    throw std::logic_error("find_irreducible: no irreducible polynomial found");
}

/// First m digits of the formal Laurent expansion of u/p: the coefficients
/// of x^-1, ..., x^-m. Computed one digit at a time by the series long
/// division u <- u*x, emit the overflow coefficient, reduce.
inline std::vector<unsigned char> laurent_digits(Gf2Poly u, Gf2Poly p, int m) {
    if (u.degree() >= p.degree()) {
        throw std::invalid_argument("laurent_digits: need degree(u) < degree(p)");
    }
    if (m < 0) throw std::invalid_argument("laurent_digits: m must be >= 0");
    const int dp = p.degree();
    std::uint64_t r = u.bits();
    std::vector<unsigned char> digits(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        r <<= 1;
        if ((r >> dp) & 1u) {
            digits[static_cast<std::size_t>(i)] = 1;
            r ^= p.bits();
        }
    }
    return digits;
}

/// laurent_digits packed into an integer: digit ell lands at bit (m-ell),
/// so the result is floor(value * 2^m) of the point coordinate the digits
/// define. This is the representation the lattice generator works in.
inline std::uint32_t laurent_value_index(Gf2Poly u, Gf2Poly p, int m) {
    if (u.degree() >= p.degree()) {
        throw std::invalid_argument("laurent_value_index: need degree(u) < degree(p)");
    }
    const int dp = p.degree();
    std::uint64_t r = u.bits();
    std::uint32_t a = 0;
    for (int i = 0; i < m; ++i) {
        r <<= 1;
        const std::uint32_t bit = static_cast<std::uint32_t>((r >> dp) & 1u);
        a = (a << 1) | bit;
        if (bit) r ^= p.bits();
    }
    return a;
}

}  // namespace polyqmc

#endif
