#include "rigidity/orders.hpp"

#include <map>
#include <optional>
#include <string>

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {

constexpr unsigned long brute_force_limit = 10'000'000;
constexpr unsigned long trial_division_bound = 1'000'000;

Integer from_u64(std::uint64_t x) { return Integer(static_cast<unsigned long>(x)); }

Integer power(const Integer& base, unsigned long e)
{
    Integer r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

Integer powm(const Integer& base, const Integer& e, const Integer& mod)
{
    Integer r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    return r;
}

using Factorization = std::map<Integer, unsigned long>;

// Trial division up to `trial_division_bound`; a leftover cofactor is accepted
// only when it is (probably) prime.
std::optional<Factorization> factor(Integer n)
{
    Factorization out;
    if (n < 2) return out;
    auto strip = [&](unsigned long d) {
        while (mpz_divisible_ui_p(n.get_mpz_t(), d)) {
            mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), d);
            ++out[Integer(d)];
        }
    };
    strip(2);
    for (unsigned long d = 3; d <= trial_division_bound; d += 2) {
        if (Integer(d) * d > n) break;
        strip(d);
    }
    if (n > 1) {
        if (Integer(trial_division_bound) * trial_division_bound < n && mpz_probab_prime_p(n.get_mpz_t(), 30) == 0)
            return std::nullopt;
        ++out[n];
    }
    return out;
}

// Factorization of the Carmichael exponent lambda(M).
std::optional<Factorization> carmichael_factorization(const Integer& M)
{
    auto fm = factor(M);
    if (!fm) return std::nullopt;
    Factorization lambda;
    auto merge = [&](const Integer& prime, unsigned long e) {
        auto& slot = lambda[prime];
        if (e > slot) slot = e;
    };
    for (const auto& [prime, e] : *fm) {
        if (prime == 2) {
            if (e == 2) merge(2, 1);
            if (e >= 3) merge(2, e - 2);
            continue;
        }
        if (e > 1) merge(prime, e - 1);
        auto fl = factor(Integer(prime - 1));
        if (!fl) return std::nullopt;
        for (const auto& [r, k] : *fl) merge(r, k);
    }
    return lambda;
}

Integer brute_force_order(const Integer& q, const Integer& M)
{
    Integer x = q % M, t = 1;
    while (x != 1) {
        x = (x * q) % M;
        ++t;
    }
    return t;
}

void check_coprime_bases(std::uint64_t p, std::uint64_t q)
{
    if (p < 2 || q < 2) throw InputError("p and q must both exceed 1");
    Integer g;
    mpz_gcd(g.get_mpz_t(), from_u64(p).get_mpz_t(), from_u64(q).get_mpz_t());
    if (g != 1) throw InputError("p=" + std::to_string(p) + " and q=" + std::to_string(q) + " are not coprime");
}

} // namespace

PadicSplit padic_valuation(const Integer& x, const Integer& p)
{
    if (x == 0) throw InputError("p-adic valuation of 0 is undefined");
    if (p < 2) throw InputError("p-adic valuation needs p >= 2");
    PadicSplit s{0, x};
    while (mpz_divisible_p(s.unit.get_mpz_t(), p.get_mpz_t())) {
        mpz_divexact(s.unit.get_mpz_t(), s.unit.get_mpz_t(), p.get_mpz_t());
        ++s.valuation;
    }
    return s;
}

Integer mult_order(const Integer& q, const Integer& M)
{
    if (M < 1) throw InputError("modulus must be positive");
    if (M == 1) return 1;
    Integer g;
    mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), M.get_mpz_t());
    if (g != 1) throw InputError("q=" + q.get_str() + " is not invertible modulo " + M.get_str());

    if (M <= brute_force_limit) {
        const unsigned long m = M.get_ui();
        Integer qm = q % M;
        if (qm < 0) qm += M;
        const unsigned long step = qm.get_ui();
        unsigned long x = step, t = 1;
        while (x != 1) {
            x = static_cast<unsigned long>((static_cast<unsigned __int128>(x) * step) % m);
            ++t;
        }
        return Integer(t);
    }

    auto lambda = carmichael_factorization(M);
    if (!lambda) return brute_force_order(q, M);
    Integer order = 1;
    for (const auto& [prime, e] : *lambda) order *= power(prime, e);
    for (const auto& [prime, e] : *lambda) {
        for (unsigned long i = 0; i < e; ++i) {
            Integer reduced = order / prime;
            if (powm(q, reduced, M) != 1) break;
            order = reduced;
        }
    }
    return order;
}

Integer orbit_size(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n)
{
    check_coprime_bases(p, q);
    if (a < 1) throw InputError("a must be at least 1");
    if (n < 1) throw InputError("n must be at least 1");
    // a q^k = a (mod p^n) iff q^k = 1 modulo p^n / gcd(a, p^n).
    const Integer pn = power(from_u64(p), static_cast<unsigned long>(n));
    Integer g;
    mpz_gcd(g.get_mpz_t(), from_u64(a).get_mpz_t(), pn.get_mpz_t());
    return mult_order(from_u64(q), pn / g);
}

std::vector<std::uint64_t> enumerate_orbit(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n)
{
    check_coprime_bases(p, q);
    if (a < 1) throw InputError("a must be at least 1");
    if (n < 1) throw InputError("n must be at least 1");
    Integer big = power(from_u64(p), static_cast<unsigned long>(n));
    if (big > 100'000'000) throw InputError("literal orbit enumeration is limited to p^n <= 10^8");
    const std::uint64_t M = big.get_ui();
    std::vector<char> seen(M, 0);
    std::vector<std::uint64_t> orbit;
    std::uint64_t x = a % M;
    const std::uint64_t step = q % M;
    while (!seen[x]) {
        seen[x] = 1;
        orbit.push_back(x);
        x = static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * step) % M);
    }
    return orbit;
}

const Integer& OrderProfile::T(int n) const
{
    if (n < 1 || n > n_max) throw InputError("n outside the profile table");
    return table[static_cast<std::size_t>(n - 1)];
}

OrderProfile order_profile(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n_max)
{
    check_coprime_bases(p, q);
    if (a < 1) throw InputError("a must be at least 1");
    const Integer P = from_u64(p), Q = from_u64(q);
    if (mpz_probab_prime_p(P.get_mpz_t(), 30) == 0)
        throw InputError("order profiles need a prime p; p=" + std::to_string(p) + " is composite");

    OrderProfile prof;
    prof.a = a;
    prof.p = p;
    prof.q = q;
    prof.r = padic_valuation(from_u64(a), P).valuation;
    prof.n_max = n_max;
    if (n_max < static_cast<int>(prof.r) + 2)
        throw InputError("n_max must be at least r + 2 = " + std::to_string(prof.r + 2));

    for (int n = 1; n <= n_max; ++n) prof.table.push_back(orbit_size(a, p, q, n));

    const int first = static_cast<int>(prof.r) + 1;
    for (int n = first; n <= n_max && prof.n0 == 0; ++n) {
        const unsigned long v_target = static_cast<unsigned long>(n) - prof.r;
        if (p % 2 == 0 && v_target < 2) continue;
        const Integer modulus = power(P, v_target + 2);
        Integer x = powm(Q, prof.T(n), modulus) - 1;
        if (x < 0) x += modulus;
        if (x == 0) continue;  // v >= v_target + 2
        PadicSplit split = padic_valuation(x, P);
        if (split.valuation != v_target) continue;
        prof.n0 = n;
        prof.certificate.v = split.valuation;
        prof.certificate.unit_residue = split.unit % (P * P);
        prof.certificate.modulus = modulus;
    }
    if (prof.n0 == 0)
        throw NotStabilized("T_n has not stabilized by n_max=" + std::to_string(n_max) + "; increase n_max",
                            prof.table);

    prof.c1 = Rational(prof.T(prof.n0), power(P, static_cast<unsigned long>(prof.n0)));
    prof.c1.canonicalize();
    for (int n = prof.n0; n < n_max; ++n)
        if (prof.T(n + 1) != prof.T(n) * P)
            throw std::logic_error("order lifting failed after the detected stabilization index");

    // The index n0 = r + s + 1 read off from q^{T_{r+1}} = 1 + u0 p^{s+1}.
    Integer lifted = power(Q, prof.T(first).get_ui()) - 1;
    const unsigned long s = padic_valuation(lifted, P).valuation - 1;
    prof.constructive_n0 = first + static_cast<int>(s);
    if (prof.constructive_n0 <= n_max) {
        prof.constructive_c1 =
            Rational(prof.T(prof.constructive_n0), power(P, static_cast<unsigned long>(prof.constructive_n0)));
        prof.constructive_c1.canonicalize();
        prof.constructive_holds = true;
        for (int n = prof.constructive_n0; n <= n_max; ++n) {
            Rational expected = prof.constructive_c1 * Rational(power(P, static_cast<unsigned long>(n)));
            if (Rational(prof.T(n)) != expected) prof.constructive_holds = false;
        }
    }
    return prof;
}

} // namespace rigidity
