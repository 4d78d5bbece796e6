#pragma once

#include <cstdint>
#include <vector>

#include "rigidity/scalar.hpp"

namespace rigidity {

struct PadicSplit {
    unsigned long valuation;
    Integer unit;
};

// x = unit * p^valuation with gcd(unit, p) = 1. Throws InputError for x = 0.
PadicSplit padic_valuation(const Integer& x, const Integer& p);

// Smallest T >= 1 with q^T = 1 (mod M). Brute force for M <= 10^7, otherwise
// the Carmichael exponent of M is factored and reduced.
Integer mult_order(const Integer& q, const Integer& M);

// T_n = #{a q^k mod p^n : k >= 0}.
Integer orbit_size(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n);

// The residues a q^k mod p^n in orbit order, by literal iteration. Limited to
// p^n <= 10^8.
std::vector<std::uint64_t> enumerate_orbit(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n);

// Witness that T_n has entered the proportional regime: q^T = 1 + u p^v with
// gcd(u, p) = 1, recorded modulo p^(v+2).
struct StabilizationCertificate {
    unsigned long v = 0;
    Integer unit_residue;  // u mod p^2
    Integer modulus;       // p^(v+2)
};

struct OrderProfile {
    std::uint64_t a = 1, p = 2, q = 3;
    unsigned long r = 0;          // p-adic valuation of a
    int n_max = 0;
    std::vector<Integer> table;   // table[n-1] = T_n, n = 1..n_max
    int n0 = 0;
    Rational c1;                  // T_{n0} / p^{n0}
    StabilizationCertificate certificate;

    // The index obtained from q^{T_{r+1}} = 1 + u0 p^{s+1} as n0 = r+s+1,
    // and whether T_n = (T_{n0}/p^{n0}) p^n actually holds from there on.
    int constructive_n0 = 0;
    Rational constructive_c1;
    bool constructive_holds = false;

    const Integer& T(int n) const;
};

// n0 is the first n > r where q^{T_n} = 1 + u p^v with gcd(u,p) = 1,
// v = n - r, and v >= 2 when p is even. From there T_{n+1} = p T_n.
// Throws NotStabilized (with the partial table) if no such n <= n_max.
// p must be prime.
OrderProfile order_profile(std::uint64_t a, std::uint64_t p, std::uint64_t q, int n_max);

} // namespace rigidity
