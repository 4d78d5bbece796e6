#include "rigidity/measure.hpp"

#include <cmath>
#include <string>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

constexpr std::size_t scan_block = 2048;

template <class S>
S from_uint(std::uint64_t x)
{
    if constexpr (std::is_same_v<S, Rational>)
        return Rational(Integer(static_cast<unsigned long>(x)));
    else
        return static_cast<S>(x);
}

template <class S>
bool is_zero(const S& x)
{
    return x == 0;
}

std::uint64_t upow(int p, int n) { return checked_pow(static_cast<std::uint64_t>(p), n); }

template <class S>
void check_probability_vector(const std::vector<S>& v, std::size_t p, const char* what)
{
    if (v.size() != p)
        throw InputError(std::string(what) + " must have " + std::to_string(p) + " entries");
    S total = 0;
    for (const auto& x : v) {
        if (x < 0) throw InputError(std::string(what) + " has a negative entry");
        total += x;
    }
    if constexpr (ScalarTraits<S>::exact) {
        if (total != 1) throw InputError(std::string(what) + " does not sum to 1 (sum " + to_string(total) + ")");
    } else {
        if (std::abs(total - 1.0) > 1e-12) throw InputError(std::string(what) + " does not sum to 1");
    }
}

template <class S>
std::vector<S> markov_weights(int p, const std::vector<std::vector<S>>& transition, const std::vector<S>& initial,
                              int depth)
{
    const auto up = static_cast<std::uint64_t>(p);
    std::vector<S> current(initial.begin(), initial.end());
    for (int n = 1; n < depth; ++n) {
        std::vector<S> next(current.size() * up);
        for (std::uint64_t k = 0; k < current.size(); ++k) {
            const auto& row = transition[k % up];
            for (std::uint64_t i = 0; i < up; ++i) next[k * up + i] = current[k] * row[i];
        }
        current = std::move(next);
    }
    return current;
}

} // namespace

// ---------------------------------------------------------------------------
// CylinderMeasure

template <class S>
CylinderMeasure<S>::CylinderMeasure(int p, int depth, std::vector<S> weights, double tolerance)
{
    if (p < 2 || p > Word::max_base) throw InputError("base p out of range");
    if (depth < 1 || depth > Word::max_depth) throw InputError("measure depth out of range");
    const std::uint64_t size = upow(p, depth);
    if (weights.size() != size)
        throw InputError("expected " + std::to_string(size) + " weights for p=" + std::to_string(p) +
                         ", depth=" + std::to_string(depth) + ", got " + std::to_string(weights.size()));
    for (const auto& w : weights)
        if (w < 0) throw InputError("negative cylinder weight");

    auto data = std::make_shared<Data>();
    data->p = p;
    data->depth = depth;
    data->levels.resize(static_cast<std::size_t>(depth) + 1);
    data->levels.back() = std::move(weights);
    const auto up = static_cast<std::uint64_t>(p);
    for (int n = depth - 1; n >= 0; --n) {
        const auto& fine = data->levels[static_cast<std::size_t>(n) + 1];
        std::vector<S> coarse(fine.size() / up);
        for (std::uint64_t k = 0; k < coarse.size(); ++k) {
            S s = fine[k * up];
            for (std::uint64_t i = 1; i < up; ++i) s += fine[k * up + i];
            coarse[k] = std::move(s);
        }
        data->levels[static_cast<std::size_t>(n)] = std::move(coarse);
    }

    const S& total = data->levels[0][0];
    if constexpr (ScalarTraits<S>::exact) {
        if (total != 1) throw InputError("weights sum to " + to_string(total) + ", not 1");
    } else {
        if (!(std::abs(total - 1.0) <= tolerance))
            throw InputError("weights sum to " + format_double(total) + ", not 1");
    }
    data_ = std::move(data);
}

template <class S>
std::span<const S> CylinderMeasure<S>::level(int n) const
{
    if (n < 0 || n > depth()) throw InputError("level " + std::to_string(n) + " out of range");
    return data_->levels[static_cast<std::size_t>(n)];
}

template <class S>
const S& CylinderMeasure<S>::mass(int n, std::uint64_t k) const
{
    auto lv = level(n);
    if (k >= lv.size()) throw InputError("cylinder index out of range");
    return lv[k];
}

template <class S>
const S& CylinderMeasure<S>::mass(const Word& w) const
{
    if (w.base() != base()) throw InputError("word base does not match measure base");
    if (w.depth() > depth())
        throw InputError("below resolution: word depth " + std::to_string(w.depth()) + " exceeds measure depth " +
                         std::to_string(depth()));
    return data_->levels[static_cast<std::size_t>(w.depth())][w.index()];
}

template <class S>
std::vector<double> CylinderMeasure<S>::weights_as_double() const
{
    auto w = weights();
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = ScalarTraits<S>::to_double(w[i]);
    return out;
}

FloatMeasure to_float(const RationalMeasure& mu)
{
    return FloatMeasure(mu.base(), mu.depth(), mu.weights_as_double());
}

// ---------------------------------------------------------------------------
// Invariance

template <class S>
InvarianceReport<S> check_p_invariance(const CylinderMeasure<S>& mu)
{
    const int N = mu.depth();
    if (N < 2) throw InputError("invariance check needs depth >= 2");
    const auto up = static_cast<std::uint64_t>(mu.base());

    struct Best {
        S defect{};
        std::uint64_t k = 0;
        bool set = false;
    };

    InvarianceReport<S> report;
    report.max_depth = N - 1;
    for (int n = 1; n < N; ++n) {
        auto coarse = mu.level(n);
        auto fine = mu.level(n + 1);
        const std::uint64_t count = coarse.size();
        Best best = parallel::reduce_blocks(
            count, scan_block, Best{},
            [&](std::size_t begin, std::size_t end) {
                Best local;
                for (std::uint64_t k = begin; k < end; ++k) {
                    S s = fine[k];
                    for (std::uint64_t i = 1; i < up; ++i) s += fine[i * count + k];
                    S d = abs_value(S(s - coarse[k]));
                    if (!local.set || d > local.defect) local = {std::move(d), k, true};
                }
                return local;
            },
            [](Best a, Best b) { return (!a.set || (b.set && b.defect > a.defect)) ? b : a; });
        if (best.set && (!report.witness || best.defect > report.max_defect)) {
            report.max_defect = best.defect;
            report.witness = Word::from_index(mu.base(), n, best.k);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Balanced geometry

template <class S>
BalanceProfile<S> balance_profile(const CylinderMeasure<S>& mu, int max_depth)
{
    if (max_depth < 2 || max_depth > mu.depth())
        throw InputError("balance scan depth must lie in [2, " + std::to_string(mu.depth()) + "]");
    const auto up = static_cast<std::uint64_t>(mu.base());

    struct Scan {
        Ratio<S> best{S{}, true};
        std::uint64_t k = 0;
        int digit = 0;
        bool set = false;
        std::uint64_t degenerate = 0;
        std::uint64_t degenerate_k = 0;
        int degenerate_digit = 0;
    };

    BalanceProfile<S> profile;
    for (int n = 2; n <= max_depth; ++n) {
        auto masses = mu.level(n);
        const std::uint64_t contexts = upow(mu.base(), n - 1);
        Scan scan = parallel::reduce_blocks(
            contexts, scan_block, Scan{},
            [&](std::size_t begin, std::size_t end) {
                Scan local;
                for (std::uint64_t k = begin; k < end; ++k) {
                    for (std::uint64_t i = 0; i < up; ++i) {
                        const S& den = masses[i * contexts + k];
                        S num = 0;
                        for (std::uint64_t j = 0; j < up; ++j)
                            if (j != i) num += masses[j * contexts + k];
                        Ratio<S> r;
                        if (is_zero(den)) {
                            if (is_zero(num)) {
                                if (local.degenerate++ == 0) {
                                    local.degenerate_k = k;
                                    local.degenerate_digit = static_cast<int>(i);
                                }
                                continue;
                            }
                            r.infinite = true;
                        } else {
                            r.value = num / den;
                        }
                        if (!local.set || r < local.best) {
                            local.best = std::move(r);
                            local.k = k;
                            local.digit = static_cast<int>(i);
                            local.set = true;
                        }
                    }
                }
                return local;
            },
            [](Scan a, Scan b) {
                Scan out = (!a.set || (b.set && b.best < a.best)) ? b : a;
                out.degenerate = a.degenerate + b.degenerate;
                if (a.degenerate > 0) {
                    out.degenerate_k = a.degenerate_k;
                    out.degenerate_digit = a.degenerate_digit;
                } else {
                    out.degenerate_k = b.degenerate_k;
                    out.degenerate_digit = b.degenerate_digit;
                }
                return out;
            });

        DepthMinimum<S> row{n, scan.best, std::nullopt};
        if (scan.set) row.witness = BalanceWitness{Word::from_index(mu.base(), n - 1, scan.k), scan.digit};
        if (scan.set && (!profile.witness || scan.best < profile.c0)) {
            profile.c0 = scan.best;
            profile.witness = row.witness;
        }
        if (scan.degenerate > 0) {
            if (profile.degenerate == 0)
                profile.first_degenerate =
                    BalanceWitness{Word::from_index(mu.base(), n - 1, scan.degenerate_k), scan.degenerate_digit};
            profile.degenerate += scan.degenerate;
        }
        profile.per_depth.push_back(std::move(row));
    }
    return profile;
}

// ---------------------------------------------------------------------------
// Smoothing

template <class S>
SmoothedView<S>::SmoothedView(CylinderMeasure<S> base, int level) : base_(std::move(base)), level_(level)
{
    if (level_ < 0 || level_ >= base_.depth())
        throw InputError("smoothing level must lie in [0, " + std::to_string(base_.depth() - 1) + "]");
}

template <class S>
S SmoothedView<S>::mass(int depth, std::uint64_t k) const
{
    if (depth < 1 || depth > base_.depth()) throw InputError("below resolution");
    const int p = base_.base();
    const S scale = from_uint<S>(upow(p, level_));
    if (depth > level_) {
        const std::uint64_t tail = upow(p, depth - level_);
        return S(base_.mass(depth - level_, k % tail) / scale);
    }
    // Coarse cylinders: sum the closed form over the depth-(n+1) descendants.
    const std::uint64_t count = upow(p, level_ + 1 - depth);
    S total = 0;
    for (std::uint64_t j = 0; j < count; ++j) total += base_.mass(1, j % static_cast<std::uint64_t>(p));
    return S(total / scale);
}

template <class S>
S SmoothedView<S>::mass(const Word& w) const
{
    if (w.base() != base_.base()) throw InputError("word base does not match measure base");
    if (w.depth() > base_.depth()) throw InputError("below resolution");
    return mass(w.depth(), w.index());
}

template <class S>
CylinderMeasure<S> SmoothedView<S>::to_measure() const
{
    if (level_ == 0) return base_;
    const int N = base_.depth();
    const S scale = from_uint<S>(upow(base_.base(), level_));
    auto tail_level = base_.level(N - level_);
    const std::uint64_t tail = tail_level.size();
    std::vector<S> weights(base_.size());
    for (std::uint64_t K = 0; K < weights.size(); ++K) weights[K] = tail_level[K % tail] / scale;
    return CylinderMeasure<S>(base_.base(), N, std::move(weights));
}

template <class S>
SmoothedView<S> smooth_nu(const CylinderMeasure<S>& mu, int n, double tolerance)
{
    if (n < 0 || n >= mu.depth())
        throw InputError("smoothing level must lie in [0, " + std::to_string(mu.depth() - 1) + "]");
    if (n > 0) {
        auto inv = check_p_invariance(mu);
        const double defect = ScalarTraits<S>::to_double(inv.max_defect);
        bool ok;
        if constexpr (ScalarTraits<S>::exact)
            ok = inv.max_defect == 0;
        else
            ok = defect <= tolerance;
        if (!ok)
            throw NotInvariant("measure is not p-invariant (defect " + format_double(defect) + " at word " +
                                   (inv.witness ? inv.witness->str() : std::string("?")) + ")",
                               defect);
    }
    return SmoothedView<S>(mu, n);
}

template <class S>
S ratio_step(const CylinderMeasure<S>& mu, int m, const Word& w)
{
    const int d = w.depth();
    if (w.base() != mu.base()) throw InputError("word base does not match measure base");
    if (m < 0 || d <= m + 1) throw InputError("ratio_step needs depth(w) > m + 1");
    if (d > mu.depth()) throw InputError("below resolution");
    const int p = mu.base();
    const std::uint64_t k = w.index();
    const std::uint64_t shifted = k % upow(p, d - m);
    const std::uint64_t context = upow(p, d - m - 1);
    const std::uint64_t tail = k % context;
    S den = 0;
    for (std::uint64_t j = 0; j < static_cast<std::uint64_t>(p); ++j) den += mu.mass(d - m, j * context + tail);
    if (is_zero(den)) throw DegenerateCylinder("degenerate cylinder: preimage mass of " + w.shift(m + 1).str() + " is zero");
    return S(from_uint<S>(static_cast<std::uint64_t>(p)) * mu.mass(d - m, shifted) / den);
}

template <class S>
S phi_estimate(const CylinderMeasure<S>& mu, int n, const Word& w)
{
    const int d = w.depth();
    if (w.base() != mu.base()) throw InputError("word base does not match measure base");
    if (n < 0 || d <= n) throw InputError("phi_estimate needs depth(w) > n");
    if (d > mu.depth()) throw InputError("below resolution");
    const std::uint64_t k = w.index();
    const S& den = mu.mass(d - n, k % upow(mu.base(), d - n));
    if (is_zero(den)) throw DegenerateCylinder("degenerate cylinder: mass of " + w.shift(n).str() + " is zero");
    return S(from_uint<S>(upow(mu.base(), n)) * mu.mass(d, k) / den);
}

template <class S>
PhiBoundReport<S> phi_bound_check(const CylinderMeasure<S>& mu, int n, int max_depth, double tolerance)
{
    if (max_depth > mu.depth()) throw InputError("below resolution");
    if (n < 1 || n >= max_depth) throw InputError("phi bound check needs 1 <= n < max_depth");
    const int p = mu.base();

    PhiBoundReport<S> report;
    report.n = n;
    report.max_depth = max_depth;
    report.c0 = balance_profile(mu, max_depth).c0;
    if (report.c0.infinite) {
        report.bound = 0;
    } else {
        S step = from_uint<S>(static_cast<std::uint64_t>(p)) / S(1 + report.c0.value);
        S bound = 1;
        for (int i = 0; i < n; ++i) bound *= step;
        report.bound = bound;
    }
    S limit = report.bound;
    if constexpr (!ScalarTraits<S>::exact) limit = report.bound * (1.0 + tolerance);
    const S scale = from_uint<S>(upow(p, n));

    struct Scan {
        S max{};
        std::uint64_t arg = 0;
        bool has = false;
        std::uint64_t scanned = 0, violations = 0, degenerate = 0;
        std::uint64_t first_violation = 0;
    };

    for (int k = n + 1; k <= max_depth; ++k) {
        auto num = mu.level(k);
        auto den = mu.level(k - n);
        const std::uint64_t tail = den.size();
        Scan scan = parallel::reduce_blocks(
            num.size(), scan_block, Scan{},
            [&](std::size_t begin, std::size_t end) {
                Scan local;
                for (std::uint64_t idx = begin; idx < end; ++idx) {
                    ++local.scanned;
                    const S& d = den[idx % tail];
                    if (is_zero(d)) {
                        ++local.degenerate;
                        continue;
                    }
                    S phi = scale * num[idx] / d;
                    if (phi > limit && local.violations++ == 0) local.first_violation = idx;
                    if (!local.has || phi > local.max) {
                        local.max = std::move(phi);
                        local.arg = idx;
                        local.has = true;
                    }
                }
                return local;
            },
            [](Scan a, Scan b) {
                Scan out = (!a.has || (b.has && b.max > a.max)) ? b : a;
                out.scanned = a.scanned + b.scanned;
                out.degenerate = a.degenerate + b.degenerate;
                out.violations = a.violations + b.violations;
                out.first_violation = a.violations > 0 ? a.first_violation : b.first_violation;
                return out;
            });
        report.scanned += scan.scanned;
        report.degenerate += scan.degenerate;
        if (scan.violations > 0 && report.violations == 0)
            report.first_violation = Word::from_index(p, k, scan.first_violation);
        report.violations += scan.violations;
        if (scan.has && (!report.argmax || scan.max > report.max_phi)) {
            report.max_phi = scan.max;
            report.argmax = Word::from_index(p, k, scan.arg);
        }
    }
    return report;
}

template <class S>
PhiIntegral<S> integral_phi(const CylinderMeasure<S>& mu, int n, int k)
{
    if (n < 0 || k <= n) throw InputError("integral_phi needs n < k");
    if (k > mu.depth()) throw InputError("below resolution");
    auto num = mu.level(k);
    auto den = mu.level(k - n);
    const std::uint64_t tail = den.size();
    const S scale = from_uint<S>(upow(mu.base(), n));

    struct Sum {
        S value{};
        std::uint64_t excluded = 0;
    };
    Sum sum = parallel::reduce_blocks(
        num.size(), scan_block, Sum{},
        [&](std::size_t begin, std::size_t end) {
            Sum local;
            for (std::uint64_t idx = begin; idx < end; ++idx) {
                const S& d = den[idx % tail];
                if (is_zero(d)) {
                    ++local.excluded;
                    continue;
                }
                local.value += num[idx] * num[idx] / d;
            }
            return local;
        },
        [](Sum a, Sum b) {
            a.value += b.value;
            a.excluded += b.excluded;
            return a;
        });
    return {S(scale * sum.value), k, sum.excluded};
}

// ---------------------------------------------------------------------------
// Fixtures

template <class S>
CylinderMeasure<S> make_uniform(int p, int depth)
{
    if (p < 2 || p > Word::max_base) throw InputError("base p out of range");
    const std::uint64_t size = upow(p, depth);
    S w;
    if constexpr (ScalarTraits<S>::exact)
        w = Rational(Integer(1), Integer(static_cast<unsigned long>(size)));
    else
        w = 1.0 / static_cast<double>(size);
    return CylinderMeasure<S>(p, depth, std::vector<S>(size, w));
}

template <class S>
CylinderMeasure<S> make_bernoulli(int p, const std::vector<S>& pi, int depth)
{
    if (p < 2 || p > Word::max_base) throw InputError("base p out of range");
    check_probability_vector(pi, static_cast<std::size_t>(p), "digit distribution");
    std::vector<std::vector<S>> rows(static_cast<std::size_t>(p), pi);
    return CylinderMeasure<S>(p, depth, markov_weights(p, rows, pi, depth));
}

template <class S>
CylinderMeasure<S> make_markov(int p, const std::vector<std::vector<S>>& transition, const std::vector<S>& initial,
                               int depth)
{
    if (p < 2 || p > Word::max_base) throw InputError("base p out of range");
    const auto up = static_cast<std::size_t>(p);
    if (transition.size() != up) throw InputError("transition matrix must be p x p");
    for (const auto& row : transition) check_probability_vector(row, up, "transition row");
    check_probability_vector(initial, up, "initial distribution");
    for (std::size_t j = 0; j < up; ++j) {
        S s = 0;
        for (std::size_t i = 0; i < up; ++i) s += initial[i] * transition[i][j];
        bool ok;
        if constexpr (ScalarTraits<S>::exact)
            ok = s == initial[j];
        else
            ok = std::abs(s - initial[j]) <= 1e-12;
        if (!ok) throw InputError("initial distribution is not stationary for the transition matrix");
    }
    return CylinderMeasure<S>(p, depth, markov_weights(p, transition, initial, depth));
}

template <class S>
std::vector<S> stationary_distribution(const std::vector<std::vector<S>>& transition)
{
    const std::size_t p = transition.size();
    if (p == 0) throw InputError("empty transition matrix");
    for (const auto& row : transition) check_probability_vector(row, p, "transition row");

    // Rows 0..p-2: (P^T - I) pi = 0; last row: sum pi = 1.
    std::vector<std::vector<S>> a(p, std::vector<S>(p + 1));
    for (std::size_t r = 0; r + 1 < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) a[r][c] = transition[c][r] - (r == c ? S(1) : S(0));
        a[r][p] = 0;
    }
    for (std::size_t c = 0; c < p; ++c) a[p - 1][c] = 1;
    a[p - 1][p] = 1;

    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (abs_value(a[r][col]) > abs_value(a[pivot][col])) pivot = r;
        if (is_zero(a[pivot][col])) throw InputError("transition matrix is not irreducible");
        std::swap(a[col], a[pivot]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col || is_zero(a[r][col])) continue;
            S f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<S> pi(p);
    for (std::size_t i = 0; i < p; ++i) pi[i] = a[i][p] / a[i][i];
    return pi;
}

#define RIGIDITY_INSTANTIATE_MEASURE(S)                                                                      \
    template class CylinderMeasure<S>;                                                                       \
    template class SmoothedView<S>;                                                                          \
    template InvarianceReport<S> check_p_invariance(const CylinderMeasure<S>&);                              \
    template BalanceProfile<S> balance_profile(const CylinderMeasure<S>&, int);                              \
    template SmoothedView<S> smooth_nu(const CylinderMeasure<S>&, int, double);                              \
    template S ratio_step(const CylinderMeasure<S>&, int, const Word&);                                      \
    template S phi_estimate(const CylinderMeasure<S>&, int, const Word&);                                    \
    template PhiBoundReport<S> phi_bound_check(const CylinderMeasure<S>&, int, int, double);                 \
    template PhiIntegral<S> integral_phi(const CylinderMeasure<S>&, int, int);                               \
    template CylinderMeasure<S> make_uniform<S>(int, int);                                                   \
    template CylinderMeasure<S> make_bernoulli(int, const std::vector<S>&, int);                             \
    template CylinderMeasure<S> make_markov(int, const std::vector<std::vector<S>>&, const std::vector<S>&, \
                                            int);                                                            \
    template std::vector<S> stationary_distribution(const std::vector<std::vector<S>>&);

RIGIDITY_INSTANTIATE_MEASURE(Rational)
RIGIDITY_INSTANTIATE_MEASURE(double)

} // namespace rigidity
