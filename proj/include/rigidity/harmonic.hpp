#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rigidity/measure.hpp"
#include "rigidity/orders.hpp"

namespace rigidity {

// Integrals of e(fx) = exp(2 pi i f x) against a cylinder measure, with the
// measure spread uniformly inside each depth-N cylinder:
//     int e(fx) dmu = c(f) * sum_K w_K e(f K / p^N),
//     c(f) = (e(f/p^N) - 1) / (2 pi i f / p^N).
// Phases are reduced modulo p^N in exact integer arithmetic, so arbitrarily
// large frequencies cost the same as small ones.
class CylinderSpectrum {
public:
    template <class Scalar>
    explicit CylinderSpectrum(const CylinderMeasure<Scalar>& mu)
        : CylinderSpectrum(mu.base(), mu.depth(), mu.weights_as_double())
    {
    }
    CylinderSpectrum(int p, int depth, std::vector<double> weights);

    int base() const noexcept { return p_; }
    int depth() const noexcept { return depth_; }
    double total_mass() const noexcept { return total_; }
    std::span<const double> weights() const noexcept { return weights_; }

    // Any integer frequency, including zero and negatives.
    std::complex<double> coefficient(const Integer& frequency) const;
    // pi |f| p^-N (total mass): dominates the gap between the piecewise-uniform
    // integral and any other measure with the same cylinder masses.
    double error_bound(const Integer& frequency) const;

private:
    int p_;
    int depth_;
    std::uint64_t modulus_;
    std::vector<double> weights_;
    std::vector<std::complex<double>> roots_;
    double total_;
};

struct FourierCoefficient {
    Integer m;
    std::complex<double> value;
    int depth;
    double error_bound;
};

// f_m = int e(mx) dmu for m >= 1.
template <class Scalar>
FourierCoefficient fourier(const CylinderMeasure<Scalar>& mu, const Integer& m);

// beta_T(x) = T^-1 sum_{k<T} e(m q^k x), phases reduced exactly mod 1.
std::complex<double> weyl_sum(const Rational& x, const Integer& m, const Integer& q, std::uint64_t T);

struct ExpSum {
    Integer exact;                              // p^n or 0
    std::optional<std::complex<double>> numeric; // direct sum, when p^n <= 2^24
};

// sum_{j < p^n} e(m (q^k - q^l) j / p^n): p^n if p^n | m(q^k - q^l), else 0.
ExpSum exp_sum_zero(const Integer& m, const Integer& q, std::uint64_t p, int n, std::uint64_t k, std::uint64_t l);

struct WeylL2 {
    double value = 0;
    std::uint64_t T = 0;
    double deviation = 0;   // value - 1/T
    double error_bound = 0; // off-diagonal quadrature bounds, averaged over T^2
    int depth = 0;
};

// int |beta_{T_n}|^2 dnu_n, expanded as T^-2 sum_{k,l} nu_n^(m(q^k - q^l)),
// with T_n = #{m q^k mod p^n}. Requires a p-invariant mu and 1 <= n < N.
template <class Scalar>
WeylL2 weyl_l2_nu(const CylinderMeasure<Scalar>& mu, int n, std::uint64_t m, std::uint64_t q,
                  double invariance_tolerance = 1e-9);

struct ChainLink {
    std::string name;
    double lhs;
    double rhs;
    // rhs - lhs for inequalities, -|lhs - rhs| for identities.
    double slack;
};

struct RigidityReport {
    std::uint64_t m = 0, p = 0, q = 0;
    int n = 0;
    int depth = 0;
    std::uint64_t T = 0;
    int n0 = 0;
    Rational c1;
    double c0 = 0;
    std::optional<Rational> c0_exact;
    std::complex<double> beta_integral;
    double lhs = 0;            // |int beta dmu|^2
    double weyl_l2 = 0;        // int |beta|^2 dnu_n
    double weyl_deviation = 0; // weyl_l2 - 1/T_n
    double phi_integral = 0;   // int phi_n dmu at depth N
    double final_bound = 0;    // 1 / (C1 (1+C0)^n)
    std::optional<Rational> final_bound_exact;
    std::vector<ChainLink> links;
    double tolerance = 0;
    bool ok = false;
};

struct RigidityOptions {
    double tolerance = 1e-8;
    double invariance_tolerance = 1e-9;
    // Reuse a balanced-geometry constant computed elsewhere (same measure).
    std::optional<double> c0;
    std::optional<Rational> c0_exact;
};

// Evaluates every inequality of the chain bounding |int beta_{T_n} dmu|^2 by
// (1/C1)(1+C0)^-n. `orders` must be the profile of (m, p, q); n > n0.
template <class Scalar>
RigidityReport rigidity_chain(const CylinderMeasure<Scalar>& mu, std::uint64_t m, std::uint64_t q, int n,
                              const OrderProfile& orders, const RigidityOptions& options = {});

struct QTransfer {
    std::complex<double> beta_integral;
    std::complex<double> f_m;
    double q_defect;
    std::uint64_t T;
};

// Both sides of int beta_{T_n} dmu = int e(mx) dmu, which holds for
// q-invariant mu; the gap is reported as the q-defect.
template <class Scalar>
QTransfer q_invariance_transfer(const CylinderMeasure<Scalar>& mu, std::uint64_t m, std::uint64_t q, int n);

} // namespace rigidity
