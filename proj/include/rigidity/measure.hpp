#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rigidity/scalar.hpp"
#include "rigidity/symbolic.hpp"

namespace rigidity {

// A probability measure on the circle known through its masses on the
// depth-N cylinders. Only the finest level is supplied; every coarser level
// is summed from it at construction, so refinement consistency holds by
// construction. Copies share the (immutable) storage.
template <class Scalar>
class CylinderMeasure {
public:
    static constexpr Backend backend = ScalarTraits<Scalar>::backend;

    // `tolerance` bounds |sum - 1| for the float backend; the rational
    // backend requires the weights to sum to exactly one.
    CylinderMeasure(int p, int depth, std::vector<Scalar> weights, double tolerance = 1e-12);

    int base() const noexcept { return data_->p; }
    int depth() const noexcept { return data_->depth; }
    std::uint64_t size() const noexcept { return data_->levels.back().size(); }

    std::span<const Scalar> weights() const { return data_->levels.back(); }
    // Masses of all depth-n cylinders, 0 <= n <= depth(), indexed by k(w).
    std::span<const Scalar> level(int n) const;
    const Scalar& mass(int n, std::uint64_t k) const;
    // Throws InputError("below resolution") when w is deeper than the measure.
    const Scalar& mass(const Word& w) const;

    std::vector<double> weights_as_double() const;

private:
    struct Data {
        int p;
        int depth;
        std::vector<std::vector<Scalar>> levels;
    };
    std::shared_ptr<const Data> data_;
};

using RationalMeasure = CylinderMeasure<Rational>;
using FloatMeasure = CylinderMeasure<double>;

FloatMeasure to_float(const RationalMeasure& mu);

// A cylinder ratio; `infinite` is set when the denominator vanishes while the
// numerator does not.
template <class Scalar>
struct Ratio {
    Scalar value{};
    bool infinite = false;
};

template <class Scalar>
bool operator<(const Ratio<Scalar>& a, const Ratio<Scalar>& b)
{
    if (a.infinite) return false;
    if (b.infinite) return true;
    return a.value < b.value;
}

template <class Scalar>
struct InvarianceReport {
    Scalar max_defect{};
    std::optional<Word> witness;
    int max_depth = 0;
};

// defect(w) = |sum_i mass(i w) - mass(w)| over all w of depth 1..N-1.
// Ties keep the shallowest, then smallest-index, witness.
template <class Scalar>
InvarianceReport<Scalar> check_p_invariance(const CylinderMeasure<Scalar>& mu);

// The ratio for the cylinder `digit`·`context` against its p-1 siblings.
struct BalanceWitness {
    Word context;
    int digit;
};

template <class Scalar>
struct DepthMinimum {
    int depth;
    Ratio<Scalar> minimum;
    std::optional<BalanceWitness> witness;
};

template <class Scalar>
struct BalanceProfile {
    Ratio<Scalar> c0{Scalar{}, true};
    std::optional<BalanceWitness> witness;
    std::vector<DepthMinimum<Scalar>> per_depth;
    // Sibling groups whose masses all vanish (ratio 0/0).
    std::uint64_t degenerate = 0;
    std::optional<BalanceWitness> first_degenerate;

    bool positive() const { return c0.infinite || c0.value > 0; }
};

// Minimum over 2 <= n <= max_depth, contexts w of depth n-1 and digits i of
//     sum_{j != i} mass(j w) / mass(i w).
template <class Scalar>
BalanceProfile<Scalar> balance_profile(const CylinderMeasure<Scalar>& mu, int max_depth);

// The smoothed measure nu_n = p^-n sum_k mu(. + k/p^n). For a p-invariant mu
// it has the closed form nu_n(I_w) = mu(I_{sigma^n w}) / p^n on cylinders
// deeper than n; shallower cylinders are summed from depth n+1.
template <class Scalar>
class SmoothedView {
public:
    SmoothedView(CylinderMeasure<Scalar> base, int level);

    const CylinderMeasure<Scalar>& base() const noexcept { return base_; }
    int level() const noexcept { return level_; }

    Scalar mass(int depth, std::uint64_t k) const;
    Scalar mass(const Word& w) const;
    // nu_n as a depth-N cylinder measure.
    CylinderMeasure<Scalar> to_measure() const;

private:
    CylinderMeasure<Scalar> base_;
    int level_;
};

// Requires 0 <= n < N and a p-invariant mu: exact for the rational backend,
// defect <= tolerance for floats. Throws NotInvariant otherwise.
template <class Scalar>
SmoothedView<Scalar> smooth_nu(const CylinderMeasure<Scalar>& mu, int n, double tolerance = 1e-9);

// nu_m(I_w) / nu_{m+1}(I_w) = p mu(sigma^m w) / sum_j mu(j sigma^{m+1} w).
// Requires m+1 < depth(w) <= N. Invariance of mu is not re-checked here.
template <class Scalar>
Scalar ratio_step(const CylinderMeasure<Scalar>& mu, int m, const Word& w);

// mu(I_w) / nu_n(I_w) = p^n mu(w) / mu(sigma^n w), the depth-k estimate of
// the density d mu / d nu_n. Requires n < depth(w) <= N.
template <class Scalar>
Scalar phi_estimate(const CylinderMeasure<Scalar>& mu, int n, const Word& w);

template <class Scalar>
struct PhiBoundReport {
    int n = 0;
    int max_depth = 0;
    Ratio<Scalar> c0;
    // (p / (1 + C0))^n, or zero when no finite ratio was seen.
    Scalar bound{};
    Scalar max_phi{};
    std::optional<Word> argmax;
    std::uint64_t scanned = 0;
    std::uint64_t violations = 0;
    std::uint64_t degenerate = 0;
    std::optional<Word> first_violation;

    bool holds() const { return violations == 0; }
};

// Checks phi_estimate(mu, n, w) <= (p/(1+C0))^n for every w of depth
// n+1..max_depth, with C0 from balance_profile(mu, max_depth). Floats are
// compared with relative slack `tolerance`; rationals exactly.
template <class Scalar>
PhiBoundReport<Scalar> phi_bound_check(const CylinderMeasure<Scalar>& mu, int n, int max_depth,
                                       double tolerance = 1e-12);

template <class Scalar>
struct PhiIntegral {
    Scalar value{};
    int depth = 0;
    std::uint64_t excluded = 0;
};

// sum over depth-k words of mu(w)^2 / nu_n(w); cylinders with nu_n(w) = 0 are
// skipped and counted. Nondecreasing in k and >= 1.
template <class Scalar>
PhiIntegral<Scalar> integral_phi(const CylinderMeasure<Scalar>& mu, int n, int k);

template <class Scalar>
CylinderMeasure<Scalar> make_uniform(int p, int depth);

template <class Scalar>
CylinderMeasure<Scalar> make_bernoulli(int p, const std::vector<Scalar>& pi, int depth);

// Weights pi0(i0) P(i0,i1) ... P(i_{N-2}, i_{N-1}); pi0 must be stationary.
template <class Scalar>
CylinderMeasure<Scalar> make_markov(int p, const std::vector<std::vector<Scalar>>& transition,
                                    const std::vector<Scalar>& initial, int depth);

// The stationary vector of an irreducible row-stochastic matrix.
template <class Scalar>
std::vector<Scalar> stationary_distribution(const std::vector<std::vector<Scalar>>& transition);

} // namespace rigidity
