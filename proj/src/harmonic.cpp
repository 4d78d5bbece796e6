#include "rigidity/harmonic.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr std::uint64_t max_spectrum_modulus = std::uint64_t{1} << 26;
constexpr std::uint64_t max_orbit_terms = std::uint64_t{1} << 14;

// e(t) for t in [0, 1), evaluated on the nearer side of zero.
std::complex<double> unit_root(double t)
{
    if (t > 0.5) t -= 1.0;
    return {std::cos(two_pi * t), std::sin(two_pi * t)};
}

std::complex<double> unit_root(const Integer& num, const Integer& den)
{
    Rational t(num, den);
    return unit_root(t.get_d());
}

Integer power(const Integer& base, unsigned long e)
{
    Integer r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

std::uint64_t narrow_orbit(const Integer& T)
{
    if (T > max_orbit_terms) throw InputError("T_n = " + T.get_str() + " is too large for the pairwise expansion");
    return T.get_ui();
}

std::vector<Integer> orbit_frequencies(std::uint64_t m, std::uint64_t q, std::uint64_t T)
{
    std::vector<Integer> f;
    f.reserve(T);
    Integer x(static_cast<unsigned long>(m));
    for (std::uint64_t k = 0; k < T; ++k) {
        f.push_back(x);
        x *= static_cast<unsigned long>(q);
    }
    return f;
}

// c(f) * sum with c(f) = (e(r) - 1) / (2 pi i t), r = (f mod p^N) / p^N,
// t = f / p^N. An infinite t stands for |f| beyond double range, where
// |c(f)| < 1e-290.
std::complex<double> shaped(std::complex<double> sum, double r, double t)
{
    if (!std::isfinite(t)) return 0.0;
    const double s = std::sin(std::numbers::pi * r);
    const std::complex<double> e_minus_one(-2.0 * s * s, std::sin(two_pi * r));
    const std::complex<double> c(e_minus_one.imag() / (two_pi * t), -e_minus_one.real() / (two_pi * t));
    return c * sum;
}

// S(r) = sum_K w_K e(r K / M) for every residue r, by one FFT.
std::vector<std::complex<double>> residue_sums(std::span<const double> weights)
{
    const auto M = weights.size();
    auto* buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * M));
    if (!buffer) throw std::bad_alloc();
    std::vector<std::complex<double>> out(M);
    {
        // Planning touches global FFTW state.
        static std::mutex planner;
        fftw_plan plan;
        {
            std::lock_guard lock(planner);
            plan = fftw_plan_dft_1d(static_cast<int>(M), buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        for (std::size_t K = 0; K < M; ++K) {
            buffer[K][0] = weights[K];
            buffer[K][1] = 0.0;
        }
        fftw_execute(plan);
        for (std::size_t r = 0; r < M; ++r) out[r] = {buffer[r][0], buffer[r][1]};
        std::lock_guard lock(planner);
        fftw_destroy_plan(plan);
    }
    fftw_free(buffer);
    return out;
}

// Orbit frequencies split into residues mod p^N and f / p^N in doubles.
struct OrbitResidues {
    std::vector<std::uint64_t> residue;
    std::vector<double> scaled;
};

OrbitResidues orbit_residues(const std::vector<Integer>& frequencies, std::uint64_t M64)
{
    const Integer M(static_cast<unsigned long>(M64));
    OrbitResidues out;
    for (const auto& f : frequencies) {
        Integer r;
        mpz_fdiv_r(r.get_mpz_t(), f.get_mpz_t(), M.get_mpz_t());
        out.residue.push_back(r.get_ui());
        // Above 2^1000 the shape factor is negligible; keep it out of range.
        out.scaled.push_back(mpz_sizeinbase(f.get_mpz_t(), 2) > 1000 ? INFINITY : Rational(f, M).get_d());
    }
    return out;
}

std::complex<double> orbit_average(const CylinderSpectrum& spectrum, const std::vector<Integer>& frequencies)
{
    const auto table = residue_sums(spectrum.weights());
    const std::uint64_t M = table.size();
    const auto orbit = orbit_residues(frequencies, M);
    std::complex<double> sum = 0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        const std::uint64_t r = orbit.residue[k];
        sum += r == 0 ? 0.0 : shaped(table[r], static_cast<double>(r) / static_cast<double>(M), orbit.scaled[k]);
    }
    return sum / static_cast<double>(frequencies.size());
}

} // namespace

CylinderSpectrum::CylinderSpectrum(int p, int depth, std::vector<double> weights)
    : p_(p), depth_(depth), modulus_(checked_pow(static_cast<std::uint64_t>(p), depth)), weights_(std::move(weights))
{
    if (modulus_ > max_spectrum_modulus) throw InputError("p^N too large for a cylinder spectrum");
    if (weights_.size() != modulus_) throw InputError("weight count does not match p^N");
    roots_.resize(modulus_);
    const double inv = 1.0 / static_cast<double>(modulus_);
    for (std::uint64_t j = 0; j < modulus_; ++j) roots_[j] = unit_root(static_cast<double>(j) * inv);
    total_ = 0;
    for (double w : weights_) total_ += w;
}

std::complex<double> CylinderSpectrum::coefficient(const Integer& frequency) const
{
    if (frequency == 0) return total_;
    const Integer M(static_cast<unsigned long>(modulus_));
    Integer reduced;
    mpz_fdiv_r(reduced.get_mpz_t(), frequency.get_mpz_t(), M.get_mpz_t());
    const std::uint64_t step = reduced.get_ui();
    if (step == 0) return 0.0;

    const std::uint64_t M64 = modulus_;
    std::complex<double> sum = parallel::reduce_blocks(
        M64, 4096, std::complex<double>{},
        [&](std::size_t begin, std::size_t end) {
            auto j = static_cast<std::uint64_t>((static_cast<unsigned __int128>(step) * begin) % M64);
            std::complex<double> acc = 0;
            for (std::size_t K = begin; K < end; ++K) {
                acc += weights_[K] * roots_[j];
                j += step;
                if (j >= M64) j -= M64;
            }
            return acc;
        },
        [](std::complex<double> a, std::complex<double> b) { return a + b; });

    const double r = static_cast<double>(step) / static_cast<double>(M64);
    return shaped(sum, r, Rational(frequency, M).get_d());
}

double CylinderSpectrum::error_bound(const Integer& frequency) const
{
    const double f = std::abs(Integer(frequency).get_d());
    return std::numbers::pi * f / static_cast<double>(modulus_) * total_;
}

template <class S>
FourierCoefficient fourier(const CylinderMeasure<S>& mu, const Integer& m)
{
    if (m < 1) throw InputError("Fourier frequency must be >= 1");
    CylinderSpectrum spectrum(mu);
    return {m, spectrum.coefficient(m), mu.depth(), spectrum.error_bound(m)};
}

std::complex<double> weyl_sum(const Rational& x, const Integer& m, const Integer& q, std::uint64_t T)
{
    if (T < 1) throw InputError("T must be at least 1");
    const Integer& den = x.get_den();
    Integer phase;
    mpz_fdiv_r(phase.get_mpz_t(), Integer(m * x.get_num()).get_mpz_t(), den.get_mpz_t());
    Integer step;
    mpz_fdiv_r(step.get_mpz_t(), q.get_mpz_t(), den.get_mpz_t());
    std::complex<double> sum = 0;
    for (std::uint64_t k = 0; k < T; ++k) {
        sum += unit_root(phase, den);
        phase = (phase * step) % den;
    }
    return sum / static_cast<double>(T);
}

ExpSum exp_sum_zero(const Integer& m, const Integer& q, std::uint64_t p, int n, std::uint64_t k, std::uint64_t l)
{
    if (p < 2) throw InputError("p must exceed 1");
    if (n < 1) throw InputError("n must be at least 1");
    const Integer P = power(Integer(static_cast<unsigned long>(p)), static_cast<unsigned long>(n));
    Integer qk, ql;
    mpz_powm_ui(qk.get_mpz_t(), q.get_mpz_t(), static_cast<unsigned long>(k), P.get_mpz_t());
    mpz_powm_ui(ql.get_mpz_t(), q.get_mpz_t(), static_cast<unsigned long>(l), P.get_mpz_t());
    Integer d;
    mpz_fdiv_r(d.get_mpz_t(), Integer(m * (qk - ql)).get_mpz_t(), P.get_mpz_t());

    ExpSum out;
    out.exact = d == 0 ? P : Integer(0);
    if (P <= (1 << 24)) {
        const std::uint64_t M = P.get_ui(), step = d.get_ui();
        std::complex<double> sum = 0;
        std::uint64_t j = 0;
        for (std::uint64_t i = 0; i < M; ++i) {
            sum += unit_root(static_cast<double>(j) / static_cast<double>(M));
            j += step;
            if (j >= M) j -= M;
        }
        out.numeric = sum;
    }
    return out;
}

template <class S>
WeylL2 weyl_l2_nu(const CylinderMeasure<S>& mu, int n, std::uint64_t m, std::uint64_t q, double invariance_tolerance)
{
    if (m < 1) throw InputError("m must be at least 1");
    if (q < 2) throw InputError("q must exceed 1");
    if (n < 1 || n >= mu.depth())
        throw InputError("n too large relative to the measure depth (need 1 <= n < " + std::to_string(mu.depth()) + ")");

    const auto view = smooth_nu(mu, n, invariance_tolerance);
    const CylinderSpectrum spectrum(view.to_measure());
    const std::uint64_t T = narrow_orbit(orbit_size(m, static_cast<std::uint64_t>(mu.base()), q, n));
    const auto table = residue_sums(spectrum.weights());
    const std::uint64_t M = table.size();
    const auto orbit = orbit_residues(orbit_frequencies(m, q, T), M);
    const double inv_M = 1.0 / static_cast<double>(M);

    // Terms (k,l) and (l,k) are complex conjugates. For k > l the difference
    // f_k - f_l is at least f_k (1 - 1/q), so t_k - t_l keeps full precision.
    double off_diagonal = 0, bound = 0;
    for (std::uint64_t k = 1; k < T; ++k) {
        for (std::uint64_t l = 0; l < k; ++l) {
            std::uint64_t r = orbit.residue[k] + M - orbit.residue[l];
            if (r >= M) r -= M;
            const double t = orbit.scaled[k] - orbit.scaled[l];
            if (r != 0) off_diagonal += shaped(table[r], static_cast<double>(r) * inv_M, t).real();
            bound += std::numbers::pi * std::abs(t) * spectrum.total_mass();
        }
    }
    const double Td = static_cast<double>(T);
    WeylL2 out;
    out.T = T;
    out.depth = mu.depth();
    out.value = (Td * spectrum.total_mass() + 2.0 * off_diagonal) / (Td * Td);
    out.deviation = out.value - 1.0 / Td;
    out.error_bound = 2.0 * bound / (Td * Td);
    return out;
}

template <class S>
RigidityReport rigidity_chain(const CylinderMeasure<S>& mu, std::uint64_t m, std::uint64_t q, int n,
                              const OrderProfile& orders, const RigidityOptions& options)
{
    const auto p = static_cast<std::uint64_t>(mu.base());
    if (orders.a != m || orders.p != p || orders.q != q)
        throw InputError("order profile does not match (m, p, q)");
    if (n <= orders.n0)
        throw InputError("T_n not yet stabilized: need n > n0 = " + std::to_string(orders.n0));
    if (n >= mu.depth()) throw InputError("n must be below the measure depth");

    RigidityReport rep;
    rep.m = m;
    rep.p = p;
    rep.q = q;
    rep.n = n;
    rep.depth = mu.depth();
    rep.n0 = orders.n0;
    rep.c1 = orders.c1;
    rep.tolerance = options.tolerance;

    if (options.c0) {
        rep.c0 = *options.c0;
        rep.c0_exact = options.c0_exact;
    } else {
        auto profile = balance_profile(mu, mu.depth());
        if (profile.c0.infinite) throw DegenerateCylinder("no finite balance ratio; C0 undefined");
        rep.c0 = ScalarTraits<S>::to_double(profile.c0.value);
        if constexpr (ScalarTraits<S>::exact) rep.c0_exact = profile.c0.value;
    }
    if (!(rep.c0 > 0)) throw InputError("measure does not have balanced geometry (C0 = 0)");

    const WeylL2 weyl = weyl_l2_nu(mu, n, m, q, options.invariance_tolerance);
    rep.T = weyl.T;
    rep.weyl_l2 = weyl.value;
    rep.weyl_deviation = weyl.deviation;

    const CylinderSpectrum spectrum(mu);
    rep.beta_integral = orbit_average(spectrum, orbit_frequencies(m, q, rep.T));
    rep.lhs = std::norm(rep.beta_integral);
    rep.phi_integral = ScalarTraits<S>::to_double(integral_phi(mu, n, mu.depth()).value);

    const Rational c1_pn = orders.c1 * Rational(power(Integer(static_cast<unsigned long>(p)), static_cast<unsigned long>(n)));
    const double inv_T = 1.0 / static_cast<double>(rep.T);
    const Rational inv_c1_pn = Rational(1) / c1_pn;
    const Rational proportionality_gap = Rational(1, static_cast<unsigned long>(rep.T)) - inv_c1_pn;

    const double step = static_cast<double>(p) / (1.0 + rep.c0);
    const double phi_bound = std::pow(step, n);
    rep.final_bound = 1.0 / (orders.c1.get_d() * std::pow(1.0 + rep.c0, n));
    if (rep.c0_exact) {
        Rational grow = 1;
        for (int i = 0; i < n; ++i) grow *= Rational(1 + *rep.c0_exact);
        rep.final_bound_exact = 1 / Rational(orders.c1 * grow);
        rep.final_bound = rep.final_bound_exact->get_d();
    }

    const double cs_rhs = rep.weyl_l2 * rep.phi_integral;
    const double chain_rhs = rep.phi_integral / c1_pn.get_d();
    rep.links = std::vector<ChainLink>{
        ChainLink{"cauchy_schwarz", rep.lhs, cs_rhs, cs_rhs - rep.lhs},
        ChainLink{"weyl_identity", rep.weyl_l2, inv_T, -std::abs(rep.weyl_deviation)},
        ChainLink{"orbit_proportionality", inv_T, inv_c1_pn.get_d(), -std::abs(proportionality_gap.get_d())},
        ChainLink{"phi_bound", rep.phi_integral, phi_bound, phi_bound - rep.phi_integral},
        ChainLink{"chain", rep.lhs, chain_rhs, chain_rhs - rep.lhs},
        ChainLink{"final_bound", rep.lhs, rep.final_bound, rep.final_bound - rep.lhs},
    };
    rep.ok = true;
    for (const auto& link : rep.links)
        if (!(link.slack >= -options.tolerance)) rep.ok = false;
    return rep;
}

template <class S>
QTransfer q_invariance_transfer(const CylinderMeasure<S>& mu, std::uint64_t m, std::uint64_t q, int n)
{
    if (q < 2) throw InputError("q must exceed 1");
    if (m < 1) throw InputError("m must be at least 1");
    const std::uint64_t T = narrow_orbit(orbit_size(m, static_cast<std::uint64_t>(mu.base()), q, n));
    const CylinderSpectrum spectrum(mu);
    QTransfer out;
    out.T = T;
    out.beta_integral = orbit_average(spectrum, orbit_frequencies(m, q, T));
    out.f_m = spectrum.coefficient(Integer(static_cast<unsigned long>(m)));
    out.q_defect = std::abs(out.beta_integral - out.f_m);
    return out;
}

#define RIGIDITY_INSTANTIATE_HARMONIC(S)                                                                   \
    template FourierCoefficient fourier(const CylinderMeasure<S>&, const Integer&);                        \
    template WeylL2 weyl_l2_nu(const CylinderMeasure<S>&, int, std::uint64_t, std::uint64_t, double);      \
    template RigidityReport rigidity_chain(const CylinderMeasure<S>&, std::uint64_t, std::uint64_t, int,   \
                                           const OrderProfile&, const RigidityOptions&);                   \
    template QTransfer q_invariance_transfer(const CylinderMeasure<S>&, std::uint64_t, std::uint64_t, int);

RIGIDITY_INSTANTIATE_HARMONIC(Rational)
RIGIDITY_INSTANTIATE_HARMONIC(double)

} // namespace rigidity
