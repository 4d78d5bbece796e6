#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rigidity/dynamics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/measure.hpp"

using namespace rigidity;

namespace {

RationalMeasure bernoulli_two_thirds(int depth)
{
    return make_bernoulli<Rational>(2, {Rational(2, 3), Rational(1, 3)}, depth);
}

// Brute-force C0: the Definition ratio over every context and digit, with
// masses taken from the interval-sum oracle.
Rational brute_c0(const RationalMeasure& mu, int max_depth)
{
    bool set = false;
    Rational best;
    const int p = mu.base();
    for (int n = 2; n <= max_depth; ++n) {
        const auto contexts = checked_pow(static_cast<std::uint64_t>(p), n - 1);
        for (std::uint64_t c = 0; c < contexts; ++c) {
            const Word w = Word::from_index(p, n - 1, c);
            for (int i = 0; i < p; ++i) {
                const Rational den = oracle::interval_mass(mu, n, w.prepend(i).index());
                Rational num = 0;
                for (int j = 0; j < p; ++j)
                    if (j != i) num += oracle::interval_mass(mu, n, w.prepend(j).index());
                if (den == 0) continue;
                const Rational r = num / den;
                if (!set || r < best) best = r, set = true;
            }
        }
    }
    return best;
}

std::vector<RationalMeasure> random_fixtures(std::uint64_t seed, int count)
{
    std::mt19937_64 rng(seed);
    std::vector<RationalMeasure> out;
    for (int t = 0; t < count; ++t) {
        const int p = 2 + static_cast<int>(rng() % 2);
        const int depth = 3 + static_cast<int>(rng() % (p == 2 ? 6 : 4));
        if (t % 2 == 0) {
            out.push_back(make_bernoulli<Rational>(p, oracle::random_simplex(rng, p), depth));
        } else {
            std::vector<std::vector<Rational>> P;
            std::vector<Rational> pi;
            oracle::random_reversible_chain(rng, p, P, pi);
            out.push_back(make_markov<Rational>(p, P, pi, depth));
        }
    }
    return out;
}

} // namespace

TEST_CASE("masses and fixtures")
{
    const auto leb = make_uniform<Rational>(2, 4);
    CHECK(leb.mass(Word::parse(2, "10")) == Rational(1, 4));
    const auto mu = bernoulli_two_thirds(3);
    CHECK(mu.mass(Word::parse(2, "01")) == Rational(2, 9));
    CHECK(mu.mass(Word::parse(2, "010")) == Rational(4, 27));
    CHECK(mu.mass(Word::parse(2, "0")) + mu.mass(Word::parse(2, "1")) == 1);
    CHECK_THROWS_WITH_AS((void)mu.mass(Word::parse(2, "0101")), doctest::Contains("below resolution"), InputError);

    const auto fair = make_bernoulli<Rational>(2, {Rational(1, 2), Rational(1, 2)}, 6);
    const auto uni = make_uniform<Rational>(2, 6);
    for (std::uint64_t k = 0; k < uni.size(); ++k) CHECK(fair.weights()[k] == uni.weights()[k]);

    // Coarse masses equal sums of descendants.
    for (const auto& m : random_fixtures(41, 10))
        for (int n = 1; n <= m.depth(); ++n)
            for (std::uint64_t k = 0; k < m.level(n).size(); ++k) CHECK(m.mass(n, k) == oracle::interval_mass(m, n, k));

    CHECK_THROWS_AS(make_bernoulli<Rational>(2, {Rational(1, 2), Rational(1, 3)}, 3), InputError);
    CHECK_THROWS_AS(make_markov<Rational>(2, {{Rational(1, 2), Rational(1, 2)}, {Rational(1), Rational(0)}},
                                          {Rational(1, 2), Rational(1, 2)}, 3),
                    InputError);
    CHECK_THROWS_AS(RationalMeasure(2, 1, {Rational(1, 2), Rational(1, 3)}), InputError);
    CHECK_THROWS_AS(FloatMeasure(2, 1, {1.5, -0.5}), InputError);
}

TEST_CASE("stationary distribution solves pi P = pi")
{
    const std::vector<std::vector<Rational>> P{{Rational(1, 2), Rational(1, 2)}, {Rational(1, 3), Rational(2, 3)}};
    const auto pi = stationary_distribution(P);
    CHECK(pi[0] == Rational(2, 5));
    CHECK(pi[1] == Rational(3, 5));
}

TEST_CASE("p-invariance check")
{
    CHECK(check_p_invariance(make_uniform<Rational>(3, 5)).max_defect == 0);
    for (const auto& m : random_fixtures(7, 10)) CHECK(check_p_invariance(m).max_defect == 0);

    const RationalMeasure ok(2, 2, {Rational(2, 5), Rational(1, 5), Rational(1, 5), Rational(1, 5)});
    CHECK(check_p_invariance(ok).max_defect == 0);
    const RationalMeasure bad(2, 2, {Rational(1, 2), Rational(1, 10), Rational(1, 5), Rational(1, 5)});
    const auto report = check_p_invariance(bad);
    CHECK(report.max_defect == Rational(1, 10));
    REQUIRE(report.witness);
    CHECK(report.witness->str() == "0");
}

TEST_CASE("balance profile")
{
    CHECK(balance_profile(make_uniform<Rational>(3, 4), 4).c0.value == 2);
    CHECK(balance_profile(make_uniform<Rational>(2, 4), 4).c0.value == 1);

    const auto b = balance_profile(bernoulli_two_thirds(6), 6);
    CHECK(b.c0.value == Rational(1, 2));
    CHECK(b.positive());

    const RationalMeasure m(2, 2, {Rational(3, 10), Rational(1, 5), Rational(1, 5), Rational(3, 10)});
    const auto prof = balance_profile(m, 2);
    CHECK(prof.c0.value == Rational(2, 3));
    REQUIRE(prof.witness);
    CHECK(prof.witness->context.str() == "0");
    CHECK(prof.witness->digit == 0);

    for (const auto& mu : random_fixtures(99, 12)) {
        const auto got = balance_profile(mu, mu.depth());
        CHECK(got.c0.value == brute_c0(mu, mu.depth()));
        // Per-depth minima never increase once folded.
        Rational running = got.per_depth.front().minimum.value;
        for (const auto& row : got.per_depth) {
            running = std::min(running, row.minimum.value);
        }
        CHECK(running == got.c0.value);
    }

    // A zero digit produces infinite ratios and degenerate 0/0 groups.
    const auto zero = make_bernoulli<Rational>(3, {Rational(2, 3), Rational(1, 3), Rational(0)}, 4);
    const auto z = balance_profile(zero, 4);
    CHECK(z.c0.value == Rational(1, 2));
    CHECK(z.degenerate > 0);
    REQUIRE(z.first_degenerate);
}

TEST_CASE("smoothing: closed form equals the translation average")
{
    const auto mu = bernoulli_two_thirds(2);
    const auto nu = smooth_nu(mu, 1);
    CHECK(nu.mass(Word::parse(2, "10")) == Rational(1, 3));
    const auto direct = oracle::translation_average(mu, 1);
    CHECK(direct[Word::parse(2, "10").index()] == Rational(1, 3));

    for (const auto& m : random_fixtures(2024, 12)) {
        for (int n = 0; n < m.depth(); ++n) {
            const auto view = smooth_nu(m, n);
            const auto expected = oracle::translation_average(m, n);
            const auto materialized = view.to_measure();
            Rational total = 0;
            for (std::uint64_t K = 0; K < m.size(); ++K) {
                CHECK(materialized.weights()[K] == expected[K]);
                CHECK(view.mass(m.depth(), K) == expected[K]);
                total += expected[K];
            }
            CHECK(total == 1);
            // Coarse view masses agree with the materialized coarsening.
            for (int d = 1; d <= m.depth(); ++d)
                for (std::uint64_t k = 0; k < materialized.level(d).size(); ++k)
                    CHECK(view.mass(d, k) == materialized.mass(d, k));
            // nu_{n-1} <= p nu_n on every cylinder.
            if (n >= 1) {
                const auto coarser = smooth_nu(m, n - 1).to_measure();
                for (int d = 1; d <= m.depth(); ++d)
                    for (std::uint64_t k = 0; k < coarser.level(d).size(); ++k)
                        CHECK(coarser.mass(d, k) <= m.base() * materialized.mass(d, k));
            }
        }
    }

    const RationalMeasure bad(2, 2, {Rational(1, 2), Rational(1, 10), Rational(1, 5), Rational(1, 5)});
    CHECK_THROWS_AS(smooth_nu(bad, 1), NotInvariant);
    CHECK_THROWS_AS(smooth_nu(bernoulli_two_thirds(3), 3), InputError);
}

TEST_CASE("ratio step and phi estimate")
{
    const auto mu = bernoulli_two_thirds(4);
    CHECK(ratio_step(mu, 0, Word::parse(2, "00")) == Rational(4, 3));
    CHECK(phi_estimate(mu, 1, Word::parse(2, "00")) == Rational(4, 3));
    const auto leb = make_uniform<Rational>(3, 4);
    CHECK(ratio_step(leb, 1, Word::parse(3, "012")) == 1);
    CHECK(phi_estimate(leb, 2, Word::parse(3, "0121")) == 1);
    CHECK_THROWS_AS(ratio_step(mu, 1, Word::parse(2, "00")), InputError);

    std::mt19937_64 rng(77);
    int checked = 0;
    for (const auto& m : random_fixtures(5, 20)) {
        const int p = m.base();
        const Rational c0 = balance_profile(m, m.depth()).c0.value;
        const Rational bound = Rational(p) / (1 + c0);
        std::vector<std::vector<Rational>> nus;
        for (int n = 0; n < m.depth(); ++n) nus.push_back(oracle::translation_average(m, n));
        for (int trial = 0; trial < 50; ++trial, ++checked) {
            const int d = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(m.depth() - 1));
            const int step = static_cast<int>(rng() % static_cast<std::uint64_t>(d - 1));
            const Word w = Word::from_index(p, d, rng() % checked_pow(static_cast<std::uint64_t>(p), d));
            const Rational r = ratio_step(m, step, w);
            CHECK(r <= bound);
            // Oracle: nu_m(I_w) / nu_{m+1}(I_w) from translation averages.
            const std::uint64_t lo = w.index() * checked_pow(static_cast<std::uint64_t>(p), m.depth() - d);
            const std::uint64_t hi = (w.index() + 1) * checked_pow(static_cast<std::uint64_t>(p), m.depth() - d);
            Rational a = 0, b = 0;
            for (std::uint64_t K = lo; K < hi; ++K) {
                a += nus[static_cast<std::size_t>(step)][K];
                b += nus[static_cast<std::size_t>(step) + 1][K];
            }
            CHECK(r == a / b);

            const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(d - 1));
            Rational product = 1;
            for (int j = 0; j < n; ++j) product *= ratio_step(m, j, w);
            CHECK(phi_estimate(m, n, w) == product);
            Rational nu_w = 0;
            for (std::uint64_t K = lo; K < hi; ++K) nu_w += nus[static_cast<std::size_t>(n)][K];
            CHECK(phi_estimate(m, n, w) == m.mass(w) / nu_w);
        }
    }
    CHECK(checked == 1000);
}

TEST_CASE("phi bound check")
{
    const auto mu = bernoulli_two_thirds(6);
    for (int n = 1; n <= 4; ++n) {
        const auto rep = phi_bound_check(mu, n, 6);
        CHECK(rep.holds());
        Rational expected = 1;
        for (int i = 0; i < n; ++i) expected *= Rational(4, 3);
        CHECK(rep.bound == expected);
        // The all-zero word attains the bound.
        CHECK(rep.max_phi == expected);
    }
    const auto leb = phi_bound_check(make_uniform<Rational>(2, 5), 2, 5);
    CHECK(leb.max_phi == 1);
    CHECK(leb.bound == 1);
    for (const auto& m : random_fixtures(8, 10))
        for (int n = 1; n <= std::min(4, m.depth() - 1); ++n) CHECK(phi_bound_check(m, n, m.depth()).violations == 0);
}

TEST_CASE("integral of phi")
{
    const auto mu = bernoulli_two_thirds(4);
    CHECK(integral_phi(mu, 1, 2).value == Rational(10, 9));
    CHECK(integral_phi(make_uniform<Rational>(3, 4), 2, 4).value == 1);

    for (const auto& m : random_fixtures(31, 12)) {
        for (int n = 1; n < m.depth(); ++n) {
            const auto nu = oracle::translation_average(m, n);
            Rational previous = 1;
            for (int k = n + 1; k <= m.depth(); ++k) {
                // Oracle: sum mu(w)^2 / nu_n(w) with both masses summed from weights.
                Rational expected = 0;
                const auto scale = checked_pow(static_cast<std::uint64_t>(m.base()), m.depth() - k);
                for (std::uint64_t w = 0; w < checked_pow(static_cast<std::uint64_t>(m.base()), k); ++w) {
                    Rational a = 0, b = 0;
                    for (std::uint64_t K = w * scale; K < (w + 1) * scale; ++K) {
                        a += m.weights()[K];
                        b += nu[K];
                    }
                    expected += a * a / b;
                }
                const auto got = integral_phi(m, n, k);
                CHECK(got.value == expected);
                CHECK(got.value >= previous);
                previous = got.value;
            }
        }
    }
}

// Cylinder-averaged L1 distance between the depth-k and depth-(k+1)
// estimates of phi_n, weighted by nu_n = mu / phi_n.
template <class S>
double martingale_step(const CylinderMeasure<S>& mu, int n, int k)
{
    using T = ScalarTraits<S>;
    double total = 0;
    const int p = mu.base();
    for (std::uint64_t w = 0; w < checked_pow(static_cast<std::uint64_t>(p), k + 1); ++w) {
        const Word child = Word::from_index(p, k + 1, w);
        const double fine = T::to_double(phi_estimate(mu, n, child));
        const double coarse = T::to_double(phi_estimate(mu, n, child.prefix(k)));
        total += T::to_double(mu.mass(child)) / fine * std::abs(fine - coarse);
    }
    return total;
}

TEST_CASE("martingale densities settle")
{
    auto distance = [](const auto& mu, int n, int k) { return martingale_step(mu, n, k); };

    // Markov chains have memory one: the estimate is exact from depth n+1 on.
    for (const auto& m : random_fixtures(13, 8)) {
        if (m.depth() < 4) continue;
        double previous = distance(m, 1, 2);
        for (int k = 3; k < m.depth(); ++k) {
            const double d = distance(m, 1, k);
            CHECK(d <= previous + 1e-15);
            CHECK(d == doctest::Approx(0.0));
            previous = d;
        }
    }

    // A pex pushforward has long memory, and the distance decreases strictly.
    const auto pex = pushforward_measure(make_pex_branches(2, 0.2), 12);
    double previous = distance(pex, 1, 2);
    for (int k = 3; k < 11; ++k) {
        const double d = distance(pex, 1, k);
        CHECK(d < previous);
        previous = d;
    }
}
