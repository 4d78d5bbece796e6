// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "rigidity/dynamics.hpp"
#include "rigidity/harmonic.hpp"
#include "rigidity/measure.hpp"
#include "rigidity/orders.hpp"

using namespace rigidity;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

struct Criterion {
    int id;
    std::string name;
    double time_limit; // seconds, 0 for none
    std::function<Outcome()> body;
};

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::vector<RationalMeasure> random_fixtures()
{
    std::mt19937_64 rng(20240611);
    std::vector<RationalMeasure> out;
    for (int t = 0; t < 50; ++t) {
        const int p = t % 2 ? 3 : 2;
        const int depth = p == 2 ? 8 : 6;
        if (t % 4 < 2) {
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

Outcome smoothing_identity()
{
    Outcome o;
    std::uint64_t compared = 0;
    for (const auto& mu : random_fixtures()) {
        for (int n = 0; n < mu.depth(); ++n) {
            const auto view = smooth_nu(mu, n);
            const auto direct = oracle::translation_average(mu, n);
            for (std::uint64_t k = 0; k < mu.size(); ++k, ++compared)
                o.require(view.mass(mu.depth(), k) == direct[k], "mismatch at n=" + std::to_string(n));
        }
    }
    o.detail = o.pass ? std::to_string(compared) + " cylinder masses equal" : o.detail;
    return o;
}

Outcome central_inequality()
{
    Outcome o;
    std::uint64_t steps = 0, phis = 0;
    for (const auto& mu : random_fixtures()) {
        const int N = mu.depth();
        const int p = mu.base();
        const auto balance = balance_profile(mu, N);
        o.require(!balance.c0.infinite && balance.c0.value > 0, "C0 not positive and finite");
        const Rational bound = Rational(p) / (1 + balance.c0.value);
        for (int m = 0; m + 2 <= N; ++m)
            for (int d = m + 2; d <= N; ++d) {
                const std::uint64_t count = mu.level(d).size();
                for (std::uint64_t k = 0; k < count; ++k, ++steps)
                    o.require(ratio_step(mu, m, Word::from_index(p, d, k)) <= bound, "ratio_step above bound");
            }
        for (int n = 1; n <= 4; ++n) {
            const auto rep = phi_bound_check(mu, n, N);
            phis += rep.scanned;
            o.require(rep.holds(), "phi bound violated at n=" + std::to_string(n));
        }
    }
    if (o.pass) o.detail = std::to_string(steps) + " ratio steps, " + std::to_string(phis) + " phi estimates";
    return o;
}

Outcome orders()
{
    Outcome o;
    struct Case {
        std::uint64_t a, p, q;
    };
    const std::vector<Case> cases{{1, 3, 2}, {1, 2, 3}, {1, 2, 7}, {1, 5, 2}, {3, 5, 2}, {4, 2, 3}};
    for (const auto& c : cases) {
        const auto profile = order_profile(c.a, c.p, c.q, 24);
        const std::string tag = "(" + std::to_string(c.a) + "," + std::to_string(c.p) + "," + std::to_string(c.q) + ")";
        Integer pn = 1;
        for (int n = 1; n <= profile.n_max; ++n) {
            pn *= static_cast<unsigned long>(c.p);
            if (pn <= 1000000) {
                const auto orbit = enumerate_orbit(c.a, c.p, c.q, n);
                o.require(Integer(static_cast<unsigned long>(orbit.size())) == orbit_size(c.a, c.p, c.q, n),
                          tag + " orbit size mismatch at n=" + std::to_string(n));
                o.require(Integer(static_cast<unsigned long>(orbit.size())) == profile.T(n),
                          tag + " table mismatch at n=" + std::to_string(n));
            }
            if (n >= profile.n0)
                o.require(Rational(profile.T(n)) == profile.c1 * Rational(pn), tag + " not proportional");
        }
        if (c.a == 1 && c.p == 2 && c.q == 7) {
            o.require(profile.n0 == 4 && profile.c1 == Rational(1, 8), "(1,2,7) profile is not n0=4, C1=1/8");
            o.require(!profile.constructive_holds, "(1,2,7) constructive index unexpectedly valid");
        }
    }
    if (o.pass) o.detail = "6 profiles agree with brute force; (1,2,7) n0=4 C1=1/8";
    return o;
}

struct Fixture {
    std::string name;
    std::function<double(int n)> weyl_dev;
    std::function<RigidityReport(int n, const OrderProfile&)> chain;
    std::uint64_t p, q;
    double tol;
};

FloatMeasure pex_fixture()
{
    return pushforward_measure(make_pex_branches(2, 0.1), 12);
}

std::vector<Fixture> fixtures()
{
    static const auto leb2 = make_uniform<Rational>(2, 12);
    static const auto leb3 = make_uniform<Rational>(3, 12);
    static const auto bern = make_bernoulli<Rational>(3, {Rational(2, 3), Rational(1, 3), Rational(0)}, 12);
    static const auto pex = pex_fixture();
    auto make = [](const auto& mu, std::string name, std::uint64_t q, double tol) {
        const auto p = static_cast<std::uint64_t>(mu.base());
        return Fixture{
            std::move(name),
            [&mu, q](int n) { return weyl_l2_nu(mu, n, 1, q).deviation; },
            [&mu, q](int n, const OrderProfile& prof) { return rigidity_chain(mu, 1, q, n, prof); },
            p, q, tol};
    };
    return {make(leb2, "lebesgue p=2 q=3", 3, 1e-8), make(leb3, "lebesgue p=3 q=2", 2, 1e-8),
            make(bern, "bernoulli(2/3,1/3,0) p=3 q=2", 2, 1e-6), make(pex, "pex(0.1) p=2 q=3", 3, 1e-6)};
}

Outcome weyl_identity()
{
    Outcome o;
    double worst = 0;
    for (const auto& f : fixtures())
        for (int n = 1; n <= 3; ++n) {
            const double dev = std::abs(f.weyl_dev(n));
            worst = std::max(worst, dev);
            o.require(dev <= f.tol, f.name + " deviation " + fmt(dev) + " at n=" + std::to_string(n));
        }
    if (o.pass) o.detail = "max |deviation| " + fmt(worst);
    return o;
}

Outcome rigidity_chain_links()
{
    Outcome o;
    double worst = INFINITY;
    for (const auto& f : fixtures()) {
        const auto prof = order_profile(1, f.p, f.q, 32);
        std::optional<RigidityReport> previous;
        for (int n = prof.n0 + 1; n <= prof.n0 + 3; ++n) {
            const auto rep = f.chain(n, prof);
            for (const auto& link : rep.links) {
                worst = std::min(worst, link.slack);
                o.require(link.slack >= -1e-8, f.name + " link " + link.name + " slack " + fmt(link.slack));
            }
            if (previous) {
                if (rep.final_bound_exact && previous->final_bound_exact && rep.c0_exact) {
                    o.require(*rep.final_bound_exact / *previous->final_bound_exact == 1 / (1 + *rep.c0_exact),
                              f.name + " final bound ratio");
                } else {
                    const double ratio = rep.final_bound / previous->final_bound;
                    o.require(std::abs(ratio * (1 + rep.c0) - 1) < 1e-12, f.name + " final bound ratio");
                }
            }
            previous = rep;
        }
    }
    if (o.pass) o.detail = "min slack " + fmt(worst);
    return o;
}

Outcome lebesgue_fourier()
{
    Outcome o;
    double worst = 0;
    for (int p : {2, 3}) {
        const auto mu = make_uniform<Rational>(p, 12);
        for (int m = 1; m <= 64; ++m) {
            const double a = std::abs(fourier(mu, Integer(m)).value);
            worst = std::max(worst, a);
            o.require(a <= 1e-12, "p=" + std::to_string(p) + " |f_" + std::to_string(m) + "| = " + fmt(a));
        }
    }
    if (o.pass) o.detail = "max |f_m| " + fmt(worst);
    return o;
}

Outcome pex_example()
{
    Outcome o;
    std::string summary;
    for (double delta : {0.05, 0.1, 0.2}) {
        const auto mu = pushforward_measure(make_pex_branches(2, delta), 12);
        const double defect = check_p_invariance(mu).max_defect;
        o.require(defect < 1e-10, "invariance defect " + fmt(defect));
        const double a = 2 / (1 + 2 * delta);
        const double c0 = balance_profile(mu, 12).c0.value;
        o.require(c0 >= a - 1, "delta=" + fmt(delta) + " C0 " + fmt(c0) + " < " + fmt(a - 1));
        summary += (summary.empty() ? "" : ", ") + ("C0(" + fmt(delta) + ")=" + fmt(c0) + ">=" + fmt(a - 1));
    }
    if (o.pass) o.detail = summary;
    return o;
}

Outcome parabolic_example()
{
    Outcome o;
    const auto rows = imbalance_profile(0.5, 40);
    for (std::size_t i = 1; i < rows.size(); ++i)
        o.require(rows[i].ratio < rows[i - 1].ratio, "not strictly decreasing at n=" + std::to_string(rows[i].n));
    const double z1 = 0.5;
    const double r2 = std::pow(z1, 1.5) / 2 / (z1 - std::pow(z1, 1.5) / 2);
    o.require(std::abs(rows.front().ratio - r2) < 1e-12, "r_2 differs from closed form");
    o.require(std::abs(rows.front().ratio - 0.54693) < 1e-4, "r_2 = " + fmt(rows.front().ratio));
    const double r10 = rows[8].ratio, r40 = rows.back().ratio;
    o.require(r40 < r10 / 2, "r_40 not below r_10/2");
    if (o.pass) o.detail = "r_2=" + fmt(rows.front().ratio) + " r_10=" + fmt(r10) + " r_40=" + fmt(r40);
    return o;
}

Outcome transfer_route()
{
    Outcome o;
    const auto f = CircleLift::sine(2, 0.5);
    const auto rho = transfer_fixed_density(f, 1 << 14, 1e-8);
    o.require(rho.residual() <= 1e-8, "residual " + fmt(rho.residual()));
    o.require(std::abs(rho.mass() - 1) <= 1e-10, "mass " + fmt(rho.mass()));
    const auto g = conjugate_to_lebesgue(f, rho, 1e-6);
    const double dev = g.derivative_sum_deviation(1000);
    o.require(dev <= 1e-6, "derivative sum deviation " + fmt(dev));
    const auto mu = pushforward_measure(g, 8);
    const double defect = check_p_invariance(mu).max_defect;
    o.require(defect < 1e-6, "invariance defect " + fmt(defect));
    const double c0 = balance_profile(mu, 8).c0.value;
    o.require(c0 > 0, "C0 not positive");
    if (o.pass)
        o.detail = "residual " + fmt(rho.residual()) + ", sum G' dev " + fmt(dev) + ", defect " + fmt(defect) + ", C0 " +
                   fmt(c0);
    return o;
}

std::string run_cli(std::vector<std::string> args, int& code)
{
    args.insert(args.begin(), "rigidity");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return out.str();
}

Outcome determinism()
{
    Outcome o;
    const std::vector<std::vector<std::string>> commands{
        {"orders", "profile", "--p", "2", "--q", "7", "--nmax", "20", "--certify"},
        {"orders", "orbit", "--p", "3", "--q", "2", "--n", "6"},
        {"--depth", "10", "measure", "--family", "bernoulli", "--p", "3", "--pi", "2/3,1/3,0"},
        {"--depth", "12", "measure", "--family", "pex", "--delta", "0.1"},
        {"--depth", "8", "nu", "--family", "markov", "--p", "2", "--P", "1/2,1/2;1/3,2/3", "--n", "3"},
        {"--depth", "8", "phi", "--family", "bernoulli", "--p", "2", "--pi", "1/3,2/3", "--n", "2"},
        {"--depth", "12", "fourier", "--family", "pex", "--delta", "0.2", "--mmax", "16"},
        {"--depth", "12", "weyl", "--family", "bernoulli", "--p", "3", "--pi", "2/3,1/3,0", "--q", "2",
         "--backend", "float"},
        {"--depth", "12", "rigidity", "--family", "pex", "--delta", "0.1", "--q", "3", "--nmax", "7"},
        {"imbalance", "--alpha", "0.5", "--nmax", "40"},
        {"--depth", "8", "transfer", "--family", "transfer", "--epsilon", "0.5", "--grid", "4096"},
    };
    for (const auto& cmd : commands) {
        std::vector<std::string> outputs;
        for (const char* jobs : {"1", "8", "1", "8"}) {
            auto args = cmd;
            args.insert(args.begin(), {"--jobs", jobs});
            int code = 0;
            outputs.push_back(run_cli(args, code));
            o.require(code == 0, cmd[0] + " exited with " + std::to_string(code));
        }
        for (const auto& s : outputs) o.require(s == outputs.front(), "output differs for " + cmd[cmd[0] == "--depth" ? 2 : 0]);
    }
    if (o.pass) o.detail = std::to_string(commands.size()) + " commands identical across 4 runs";
    return o;
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "smoothing identity", 10, smoothing_identity},
        {2, "central inequality", 0, central_inequality},
        {3, "orbit orders", 30, orders},
        {4, "weyl L2 identity", 0, weyl_identity},
        {5, "rigidity chain", 0, rigidity_chain_links},
        {6, "lebesgue fourier coefficients", 0, lebesgue_fourier},
        {7, "pex balanced geometry", 60, pex_example},
        {8, "parabolic imbalance", 0, parabolic_example},
        {9, "transfer operator route", 0, transfer_route},
        {10, "cli determinism", 0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0 && secs > c.time_limit) {
            o.pass = false;
            o.detail += " (runtime " + fmt(secs) + " s over limit)";
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s criterion %d: %s [%.2f s] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    o.detail.c_str());
    }
    return failures == 0 ? 0 : 1;
}
