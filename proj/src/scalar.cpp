#include "rigidity/scalar.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "rigidity/errors.hpp"

namespace rigidity {

std::string_view backend_name(Backend b)
{
    return b == Backend::rational ? "rational" : "float";
}

Backend parse_backend(std::string_view name)
{
    if (name == "rational") return Backend::rational;
    if (name == "float") return Backend::floating;
    throw InputError("unknown backend '" + std::string(name) + "' (expected rational|float)");
}

namespace {

bool all_digits(std::string_view s)
{
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

Integer parse_integer(std::string_view s)
{
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s)) throw InputError("not an integer: '" + std::string(s) + "'");
    Integer z(std::string(s), 10);
    return negative ? Integer(-z) : z;
}

} // namespace

Rational parse_rational(std::string_view text)
{
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw InputError("empty number");

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Integer num = parse_integer(text.substr(0, slash));
        Integer den = parse_integer(text.substr(slash + 1));
        if (den == 0) throw InputError("zero denominator in '" + std::string(text) + "'");
        Rational q(num, den);
        q.canonicalize();
        return q;
    }

    std::string_view body = text;
    bool negative = false;
    if (body.front() == '-' || body.front() == '+') {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    auto dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if ((whole.empty() && frac.empty()) || (!whole.empty() && !all_digits(whole)) ||
        (!frac.empty() && !all_digits(frac)))
        throw InputError("not a rational number: '" + std::string(text) + "'");

    Integer num(std::string(whole.empty() ? "0" : whole) + std::string(frac), 10);
    Integer den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    Rational q(negative ? Integer(-num) : num, den);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& x)
{
    if (x.get_den() == 1) return x.get_num().get_str();
    return x.get_str();
}

std::string to_string(const Integer& x) { return x.get_str(); }

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double ScalarTraits<double>::parse(std::string_view text)
{
    if (text.find('/') != std::string_view::npos) return parse_rational(text).get_d();
    std::string s(text);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw InputError("not a number: '" + s + "'");
    return v;
}

std::uint64_t checked_pow(std::uint64_t p, int n)
{
    if (n < 0) throw InputError("negative exponent");
    std::uint64_t r = 1;
    for (int i = 0; i < n; ++i) {
        if (r > std::numeric_limits<std::uint64_t>::max() / p)
            throw InputError("p^n exceeds 64-bit range");
        r *= p;
    }
    return r;
}

} // namespace rigidity
