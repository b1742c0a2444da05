#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace metacmi {

/**
 * Exact rational value with int64 numerator/denominator, always stored in
 * canonical form (den > 0, gcd(|num|, den) == 1, zero is 0/1).
 *
 * All model-weight and hyperparameter grids in this library are rationals
 * over small denominators (e.g. den(alpha)*N*M), so int64 is ample; every
 * product still goes through 128-bit intermediates and overflow throws
 * rather than wrapping.
 */
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;

    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        normalize();
    }

    static Rational integer(std::int64_t n) {
        Rational r;
        r.num = n;
        r.den = 1;
        return r;
    }

    /**
     * Parse a plain decimal string ("0.5", "-1.25", "3") exactly.
     * Decimal notation maps onto small rationals ("0.5" -> 1/2), unlike a
     * round-trip through double, which would inflate e.g. 0.3 into a
     * 2^52-denominator dyadic.
     */
    static Rational from_decimal(std::string_view text) {
        std::string_view s = text;
        bool neg = false;
        if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
            neg = s.front() == '-';
            s.remove_prefix(1);
        }
        if (s.empty()) throw std::invalid_argument("Rational::from_decimal: empty value");
        std::int64_t mantissa = 0;
        std::int64_t scale = 1;
        bool seen_dot = false;
        bool seen_digit = false;
        for (char c : s) {
            if (c == '.') {
                if (seen_dot) throw std::invalid_argument("Rational::from_decimal: bad value '" + std::string(text) + "'");
                seen_dot = true;
                continue;
            }
            if (c < '0' || c > '9')
                throw std::invalid_argument("Rational::from_decimal: bad value '" + std::string(text) + "'");
            seen_digit = true;
            if (mantissa > (INT64_MAX - 9) / 10)
                throw std::overflow_error("Rational::from_decimal: too many digits in '" + std::string(text) + "'");
            mantissa = mantissa * 10 + (c - '0');
            if (seen_dot) {
                if (scale > INT64_MAX / 10)
                    throw std::overflow_error("Rational::from_decimal: too many digits in '" + std::string(text) + "'");
                scale *= 10;
            }
        }
        if (!seen_digit) throw std::invalid_argument("Rational::from_decimal: bad value '" + std::string(text) + "'");
        return Rational(neg ? -mantissa : mantissa, scale);
    }

    [[nodiscard]] double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    [[nodiscard]] bool is_zero() const { return num == 0; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const std::int64_t g = std::gcd(a.den, b.den);
        const std::int64_t bd = b.den / g;
        const std::int64_t n = checked_add(checked_mul(a.num, bd), checked_mul(b.num, a.den / g));
        return Rational(n, checked_mul(a.den, bd));
    }

    friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num, b.den); }

    friend Rational operator*(const Rational& a, const Rational& b) {
        // Cross-reduce before multiplying to keep intermediates small.
        const std::int64_t g1 = std::gcd(std::abs(a.num), b.den);
        const std::int64_t g2 = std::gcd(std::abs(b.num), a.den);
        return Rational(checked_mul(a.num / g1, b.num / g2), checked_mul(a.den / g2, b.den / g1));
    }

    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num == 0) throw std::invalid_argument("Rational: division by zero");
        return a * Rational(b.den, b.num);
    }

    Rational operator-() const { return Rational(-num, den); }

    friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }

    static std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
        const __int128 p = static_cast<__int128>(a) * b;
        if (p > INT64_MAX || p < INT64_MIN) throw std::overflow_error("Rational: multiplication overflow");
        return static_cast<std::int64_t>(p);
    }

    static std::int64_t checked_add(std::int64_t a, std::int64_t b) {
        const __int128 s = static_cast<__int128>(a) + b;
        if (s > INT64_MAX || s < INT64_MIN) throw std::overflow_error("Rational: addition overflow");
        return static_cast<std::int64_t>(s);
    }

  private:
    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        if (num == 0) {
            den = 1;
            return;
        }
        const std::int64_t g = std::gcd(std::abs(num), den);
        num /= g;
        den /= g;
    }
};

}  // namespace metacmi
