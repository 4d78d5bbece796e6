#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace rigidity {

using Rational = mpq_class;
using Integer = mpz_class;

enum class Backend { rational, floating };

std::string_view backend_name(Backend b);
Backend parse_backend(std::string_view name);

// Accepts "a/b", integers and plain decimals ("0.125", "1e-3" is rejected).
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& x);
std::string to_string(const Integer& x);

// 17 significant digits, enough to round-trip an IEEE double.
std::string format_double(double x);

template <class Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
    static constexpr Backend backend = Backend::rational;
    static constexpr bool exact = true;
    static double to_double(const Rational& x) { return x.get_d(); }
    static Rational from_rational(const Rational& x) { return x; }
    static Rational parse(std::string_view text) { return parse_rational(text); }
    static std::string str(const Rational& x) { return to_string(x); }
};

template <>
struct ScalarTraits<double> {
    static constexpr Backend backend = Backend::floating;
    static constexpr bool exact = false;
    static double to_double(double x) { return x; }
    static double from_rational(const Rational& x) { return x.get_d(); }
    static double parse(std::string_view text);
    static std::string str(double x) { return format_double(x); }
};

template <class Scalar>
concept MeasureScalar = requires { ScalarTraits<Scalar>::backend; };

inline Rational abs_value(const Rational& x) { return abs(x); }
inline double abs_value(double x) { return x < 0 ? -x : x; }

// p^n as an unsigned 64-bit integer; throws InputError on overflow.
std::uint64_t checked_pow(std::uint64_t p, int n);

} // namespace rigidity
