#include "rigidity/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

constexpr double endpoint_tolerance = 1e-12;
constexpr int bound_samples = 4097;

double sample_point(int j, int samples) { return static_cast<double>(j) / static_cast<double>(samples - 1); }

} // namespace

// ---------------------------------------------------------------------------
// BranchSystem

BranchSystem::BranchSystem(std::string family, std::vector<Branch> branches, double lebesgue_tolerance,
                           std::optional<Bounds> bounds)
    : family_(std::move(family)), branches_(std::move(branches))
{
    const int p = degree();
    if (p < 2) throw InputError("a branch system needs at least two branches");
    if (std::abs(value(0, 0.0)) > endpoint_tolerance) throw InputError("G_0(0) must be 0");
    if (std::abs(value(p - 1, 1.0) - 1.0) > endpoint_tolerance) throw InputError("G_{p-1}(1) must be 1");
    for (int i = 0; i + 1 < p; ++i)
        if (std::abs(value(i, 1.0) - value(i + 1, 0.0)) > endpoint_tolerance)
            throw InputError("branch images do not meet at division point " + std::to_string(i + 1));

    Bounds sampled{std::numeric_limits<double>::infinity(), 0.0};
    for (int i = 0; i < p; ++i) {
        double previous = value(i, 0.0);
        for (int j = 0; j < bound_samples; ++j) {
            const double x = sample_point(j, bound_samples);
            const double d = derivative(i, x);
            sampled.min_derivative = std::min(sampled.min_derivative, d);
            sampled.max_derivative = std::max(sampled.max_derivative, d);
            if (j > 0) {
                const double v = value(i, x);
                if (!(v > previous)) throw InputError("branch " + std::to_string(i) + " is not increasing");
                previous = v;
            }
        }
    }
    if (sampled.min_derivative < 0) throw InputError("negative branch derivative");
    bounds_ = bounds.value_or(sampled);
    lebesgue_preserving_ = derivative_sum_deviation() <= lebesgue_tolerance;
    parabolic_at_zero_ = std::abs(derivative(0, 0.0) - 1.0) <= endpoint_tolerance;
}

double BranchSystem::max_expansion() const noexcept
{
    return bounds_.min_derivative > 0 ? 1.0 / bounds_.min_derivative : std::numeric_limits<double>::infinity();
}

double BranchSystem::derivative_sum_deviation(int samples) const
{
    double worst = 0;
    for (int j = 0; j < samples; ++j) {
        const double x = sample_point(j, samples);
        double s = 0;
        for (int i = 0; i < degree(); ++i) s += derivative(i, x);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

BranchSystem make_pex_branches(int p, double delta)
{
    if (p < 2 || p > Word::max_base) throw InputError("p out of range");
    if (!(delta >= 0 && delta < 1.0 / p))
        throw InputError("delta must lie in [0, 1/p) so that every branch derivative stays in (0, 1)");
    const double inv_p = 1.0 / p;
    std::vector<Branch> branches;
    for (int i = 0; i < p; ++i) {
        const double sign = i == 0 ? 1.0 : (i == 1 ? -1.0 : 0.0);
        const double shift = static_cast<double>(i);
        branches.push_back({
            [=](double x) { return (x + shift) * inv_p + sign * delta * std::sin(std::numbers::pi * x) / std::numbers::pi; },
            [=](double x) { return inv_p + sign * delta * std::cos(std::numbers::pi * x); },
        });
    }
    const BranchSystem::Bounds bounds{inv_p - delta, inv_p + delta};
    return BranchSystem("pex", std::move(branches), 1e-12, bounds);
}

BranchSystem make_nex_branches(double alpha)
{
    if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0, 1)");
    const double e = 1.0 + alpha;
    std::vector<Branch> branches{
        {[=](double x) { return x - std::pow(x, e) / 2.0; }, [=](double x) { return 1.0 - e * std::pow(x, alpha) / 2.0; }},
        {[=](double x) { return (1.0 + std::pow(x, e)) / 2.0; }, [=](double x) { return e * std::pow(x, alpha) / 2.0; }},
    };
    return BranchSystem("nex", std::move(branches), 1e-12, BranchSystem::Bounds{0.0, 1.0});
}

// ---------------------------------------------------------------------------
// Cylinders of g

ConjugacyTable::ConjugacyTable(int p, int depth, std::vector<double> endpoints)
    : p_(p), depth_(depth), endpoints_(std::move(endpoints))
{
    if (endpoints_.size() != checked_pow(static_cast<std::uint64_t>(p), depth) + 1)
        throw InputError("conjugacy table needs p^n + 1 endpoints");
}

std::pair<double, double> ConjugacyTable::interval(const Word& w) const
{
    if (w.base() != p_ || w.depth() != depth_) throw InputError("word does not match the table's base and depth");
    const std::uint64_t k = w.index();
    return {endpoints_[k], endpoints_[k + 1]};
}

std::string ConjugacyTable::to_csv() const
{
    std::ostringstream out;
    out << "word,left,right,length\n";
    for (std::uint64_t k = 0; k + 1 < endpoints_.size(); ++k) {
        out << Word::from_index(p_, depth_, k).str() << ',' << format_double(endpoints_[k]) << ','
            << format_double(endpoints_[k + 1]) << ',' << format_double(length(k)) << '\n';
    }
    return out.str();
}

ConjugacyTable conjugacy_cylinders(const BranchSystem& system, int depth, std::uint64_t max_cylinders)
{
    const int p = system.degree();
    if (depth < 1) throw InputError("depth must be at least 1");
    if (checked_pow(static_cast<std::uint64_t>(p), depth) > max_cylinders)
        throw InputError("p^depth exceeds the cylinder cap");

    // G_{i w} = G_i o G_w, so level n is each branch applied to level n-1.
    std::vector<double> current{0.0, 1.0};
    for (int n = 1; n <= depth; ++n) {
        const std::uint64_t previous = current.size() - 1;
        std::vector<double> next(previous * static_cast<std::uint64_t>(p) + 1);
        parallel::for_blocks(previous * static_cast<std::uint64_t>(p), 4096, [&](std::size_t begin, std::size_t end) {
            for (std::size_t K = begin; K < end; ++K) {
                const int i = static_cast<int>(K / previous);
                next[K] = system.value(i, current[K % previous]);
            }
        });
        // h fixes 0 and 1, so the outer endpoints are pinned exactly.
        next.front() = 0.0;
        next.back() = 1.0;
        for (std::size_t K = 0; K + 1 < next.size(); ++K)
            if (next[K + 1] < next[K])
                throw InputError("non-monotone branch composition at depth " + std::to_string(n));
        current = std::move(next);
    }
    return ConjugacyTable(p, depth, std::move(current));
}

FloatMeasure pushforward_measure(const BranchSystem& system, int depth)
{
    const auto table = conjugacy_cylinders(system, depth);
    const auto e = table.endpoints();
    std::vector<double> weights(e.size() - 1);
    for (std::size_t k = 0; k < weights.size(); ++k) weights[k] = e[k + 1] - e[k];
    return FloatMeasure(system.degree(), depth, std::move(weights));
}

PexBoundReport verify_pex_bound(const BranchSystem& system, int depth, double tolerance)
{
    PexBoundReport rep;
    rep.a = system.min_expansion();
    rep.A = system.max_expansion();
    if (!(rep.a > 1)) throw InputError("not uniformly expanding (a = " + format_double(rep.a) + ")");
    if (!system.lebesgue_preserving()) throw InputError("branch system does not preserve Lebesgue measure");
    if (depth < 2) throw InputError("depth must be at least 2");
    const int p = system.degree();
    rep.D = 1.0 + (p - 2) * rep.A / rep.a;
    rep.floor = (rep.a - 1.0) / rep.D;
    rep.tolerance = tolerance;

    const auto mu = pushforward_measure(system, depth);
    rep.invariance_defect = check_p_invariance(mu).max_defect;
    auto profile = balance_profile(mu, depth);
    rep.measured_c0 = profile.c0.infinite ? std::numeric_limits<double>::infinity() : profile.c0.value;
    rep.witness = profile.witness;
    rep.per_depth = std::move(profile.per_depth);
    rep.holds = rep.measured_c0 >= rep.floor - tolerance;
    return rep;
}

std::vector<ImbalanceRow> imbalance_profile(double alpha, int n_max)
{
    if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0, 1)");
    if (n_max < 2) throw InputError("n_max must be at least 2");
    const double e = 1.0 + alpha;
    // z_n = G_0^n(1) is the right end of J_{0^n}; J_{1 0^{n-1}} = G_1(J_{0^{n-1}})
    // has length z_{n-1}^(1+alpha) / 2.
    std::vector<ImbalanceRow> rows;
    double z = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        const double head = std::pow(z, e) / 2.0;
        const double next = z - head;
        if (n >= 2) rows.push_back({n, head / next});
        z = next;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Transfer operator route

double solve_increasing(const std::function<double(double)>& f, const std::function<double(double)>& df,
                        double target, double lo, double hi)
{
    double flo = f(lo) - target, fhi = f(hi) - target;
    if (flo > 0 || fhi < 0) throw InputError("target outside the bracket of an increasing function");
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    double x = lo + (hi - lo) * (-flo) / (fhi - flo);
    for (int it = 0; it < 200; ++it) {
        const double fx = f(x) - target;
        if (fx == 0) return x;
        if (fx < 0)
            lo = x;
        else
            hi = x;
        const double slope = df(x);
        double next = slope > 0 ? x - fx / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-13 || hi - lo <= 1e-13) return next;
        x = next;
    }
    throw ConvergenceError("root finding did not converge", hi - lo);
}

CircleLift::CircleLift(int p, std::function<double(double)> lift, std::function<double(double)> derivative,
                       std::string name)
    : p_(p), lift_(std::move(lift)), derivative_(std::move(derivative)), name_(std::move(name))
{
    if (p_ < 2) throw InputError("degree must be at least 2");
    if (std::abs(lift_(0.0)) > endpoint_tolerance || std::abs(lift_(1.0) - p_) > endpoint_tolerance)
        throw InputError("lift must satisfy F(0) = 0 and F(1) = p");
    min_derivative_ = std::numeric_limits<double>::infinity();
    for (int j = 0; j < bound_samples; ++j)
        min_derivative_ = std::min(min_derivative_, derivative_(sample_point(j, bound_samples)));
    if (!(min_derivative_ > 1)) throw InputError("map is not expanding (min f' = " + format_double(min_derivative_) + ")");
}

CircleLift CircleLift::sine(int p, double epsilon)
{
    if (!(std::abs(epsilon) < p - 1))
        throw InputError("sine family is expanding only for |epsilon| < p - 1");
    const double amplitude = epsilon / (2.0 * std::numbers::pi);
    return CircleLift(
        p, [=](double x) { return p * x + amplitude * std::sin(2.0 * std::numbers::pi * x); },
        [=](double x) { return p + epsilon * std::cos(2.0 * std::numbers::pi * x); }, "sine");
}

double CircleLift::inverse_branch(int i, double x) const
{
    if (i < 0 || i >= p_) throw InputError("branch index out of range");
    return solve_increasing(lift_, derivative_, x + i, 0.0, 1.0);
}

DensityGrid::DensityGrid(std::vector<double> nodes, double residual, int iterations)
    : nodes_(std::move(nodes)), residual_(residual), iterations_(iterations)
{
    if (nodes_.size() < 2) throw InputError("density grid needs at least one cell");
    for (double v : nodes_)
        if (!(v >= 0)) throw InputError("density must be nonnegative");
    const auto G = static_cast<double>(grid());
    prefix_.resize(nodes_.size());
    prefix_[0] = 0;
    for (std::size_t j = 0; j + 1 < nodes_.size(); ++j)
        prefix_[j + 1] = prefix_[j] + 0.5 * (nodes_[j] + nodes_[j + 1]) / G;
    mass_ = prefix_.back();
}

double DensityGrid::operator()(double x) const
{
    const auto G = grid();
    const double s = std::clamp(x, 0.0, 1.0) * G;
    const int c = std::min(static_cast<int>(s), G - 1);
    const double t = s - c;
    return (1.0 - t) * nodes_[static_cast<std::size_t>(c)] + t * nodes_[static_cast<std::size_t>(c) + 1];
}

double DensityGrid::cumulative(double x) const
{
    const auto G = grid();
    const double s = std::clamp(x, 0.0, 1.0) * G;
    const int c = std::min(static_cast<int>(s), G - 1);
    const double t = s - c;
    const double lo = nodes_[static_cast<std::size_t>(c)], hi = nodes_[static_cast<std::size_t>(c) + 1];
    const double partial = prefix_[static_cast<std::size_t>(c)] + (lo * t + 0.5 * (hi - lo) * t * t) / G;
    return partial / mass_;
}

double DensityGrid::inverse_cumulative(double y) const
{
    const auto G = grid();
    const double target = std::clamp(y, 0.0, 1.0) * mass_;
    auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
    int c = static_cast<int>(it - prefix_.begin()) - 1;
    c = std::clamp(c, 0, G - 1);
    const double lo = nodes_[static_cast<std::size_t>(c)], hi = nodes_[static_cast<std::size_t>(c) + 1];
    // Solve (hi-lo)/2 t^2 + lo t = rest for t in [0,1].
    const double rest = (target - prefix_[static_cast<std::size_t>(c)]) * G;
    const double a = 0.5 * (hi - lo);
    const double disc = std::max(0.0, lo * lo + 4.0 * a * rest);
    const double denom = lo + std::sqrt(disc);
    const double t = denom > 0 ? std::clamp(2.0 * rest / denom, 0.0, 1.0) : 0.0;
    return (c + t) / G;
}

DensityGrid transfer_fixed_density(const CircleLift& f, int grid, double tolerance, int max_iterations)
{
    if (grid < 2) throw InputError("grid must have at least two cells");
    if (!(tolerance > 0)) throw InputError("tolerance must be positive");
    const int p = f.degree();
    const auto G = static_cast<std::size_t>(grid);

    // Preimages of every node, with interpolation cell and Jacobian weight.
    struct Tap {
        std::size_t cell;
        double frac;
        double weight;
    };
    std::vector<Tap> taps(G * static_cast<std::size_t>(p));
    parallel::for_blocks(G, 512, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const double x = static_cast<double>(j) / grid;
            for (int i = 0; i < p; ++i) {
                const double y = f.inverse_branch(i, x);
                const double s = y * grid;
                const std::size_t c = std::min(static_cast<std::size_t>(s), G - 1);
                taps[j * static_cast<std::size_t>(p) + static_cast<std::size_t>(i)] = {c, s - static_cast<double>(c),
                                                                                     1.0 / f.derivative(y)};
            }
        }
    });

    std::vector<double> rho(G + 1, 1.0), next(G + 1);
    auto apply = [&] {
        parallel::for_blocks(G, 4096, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                double s = 0;
                for (int i = 0; i < p; ++i) {
                    const Tap& t = taps[j * static_cast<std::size_t>(p) + static_cast<std::size_t>(i)];
                    s += t.weight * ((1.0 - t.frac) * rho[t.cell] + t.frac * rho[t.cell + 1]);
                }
                next[j] = s;
            }
        });
        next[G] = next[0];
    };
    auto mass = [&](const std::vector<double>& v) {
        double s = 0;
        for (std::size_t j = 0; j < G; ++j) s += v[j];
        return s / grid;
    };

    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iterations; ++it) {
        apply();
        residual = 0;
        for (std::size_t j = 0; j <= G; ++j) residual = std::max(residual, std::abs(next[j] - rho[j]));
        if (residual <= tolerance) return DensityGrid(rho, residual, it);
        const double m = mass(next);
        for (std::size_t j = 0; j <= G; ++j) rho[j] = next[j] / m;
    }
    throw ConvergenceError("transfer operator did not converge (residual " + format_double(residual) + ")", residual);
}

BranchSystem conjugate_to_lebesgue(const CircleLift& f, const DensityGrid& rho, double tolerance)
{
    auto lift = std::make_shared<const CircleLift>(f);
    auto density = std::make_shared<const DensityGrid>(rho);
    std::vector<Branch> branches;
    for (int i = 0; i < f.degree(); ++i) {
        branches.push_back({
            [=](double x) { return density->cumulative(lift->inverse_branch(i, density->inverse_cumulative(x))); },
            [=](double x) {
                const double u = density->inverse_cumulative(x);
                const double y = lift->inverse_branch(i, u);
                return (*density)(y) / (lift->derivative(y) * (*density)(u));
            },
        });
    }
    BranchSystem system("transfer", std::move(branches), tolerance);
    const double deviation = system.derivative_sum_deviation(1000);
    if (!(deviation <= tolerance))
        throw VerificationError("conjugated branches do not preserve Lebesgue measure (max |sum G' - 1| = " +
                                    format_double(deviation) + ")",
                                deviation);
    return system;
}

} // namespace rigidity
