#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rigidity/measure.hpp"

namespace rigidity {

struct Branch {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

// A degree-p circle map g given by its p increasing inverse branches
// G_0, ..., G_{p-1} : [0,1] -> [0,1], where G_i(1) = G_{i+1}(0), G_0(0) = 0
// and G_{p-1}(1) = 1. The expansion constants of g are
//     a = min |g'| = 1 / max G_i',   A = max |g'| = 1 / min G_i'.
class BranchSystem {
public:
    struct Bounds {
        double min_derivative;
        double max_derivative;
    };

    // Derivative bounds are sampled when not supplied. The system is flagged
    // Lebesgue-preserving when |sum_i G_i' - 1| <= lebesgue_tolerance on samples.
    BranchSystem(std::string family, std::vector<Branch> branches, double lebesgue_tolerance = 1e-12,
                 std::optional<Bounds> bounds = std::nullopt);

    int degree() const noexcept { return static_cast<int>(branches_.size()); }
    const std::string& family() const noexcept { return family_; }
    double value(int i, double x) const { return branches_.at(static_cast<std::size_t>(i)).value(x); }
    double derivative(int i, double x) const { return branches_.at(static_cast<std::size_t>(i)).derivative(x); }

    bool lebesgue_preserving() const noexcept { return lebesgue_preserving_; }
    bool parabolic_at_zero() const noexcept { return parabolic_at_zero_; }
    double min_expansion() const noexcept { return 1.0 / bounds_.max_derivative; }
    double max_expansion() const noexcept;
    const Bounds& derivative_bounds() const noexcept { return bounds_; }

    // max over `samples` evenly spaced points of |sum_i G_i'(x) - 1|.
    double derivative_sum_deviation(int samples = 1001) const;

private:
    std::string family_;
    std::vector<Branch> branches_;
    Bounds bounds_{};
    bool lebesgue_preserving_ = false;
    bool parabolic_at_zero_ = false;
};

// Lebesgue-preserving expanding system: G_i(x) = (x+i)/p, with G_0 and G_1
// perturbed by +/- delta sin(pi x)/pi. Requires 0 <= delta < 1/p.
BranchSystem make_pex_branches(int p, double delta);

// Lebesgue-preserving degree-2 system with a parabolic fixed point at 0:
// G_0(x) = x - x^(1+alpha)/2, G_1(x) = (1 + x^(1+alpha))/2, 0 < alpha < 1.
BranchSystem make_nex_branches(double alpha);

// Endpoints of the g-cylinders J_w = G_{i0} o ... o G_{i_{n-1}}([0,1]) for all
// depth-n words, stored as one shared array of p^n + 1 points; J_w is
// [e[k(w)], e[k(w)+1]]. Endpoints shared between depths are bitwise equal.
class ConjugacyTable {
public:
    ConjugacyTable(int p, int depth, std::vector<double> endpoints);

    int base() const noexcept { return p_; }
    int depth() const noexcept { return depth_; }
    std::span<const double> endpoints() const noexcept { return endpoints_; }
    std::pair<double, double> interval(const Word& w) const;
    double length(std::uint64_t k) const { return endpoints_[k + 1] - endpoints_[k]; }

    // Columns: word,left,right,length.
    std::string to_csv() const;

private:
    int p_;
    int depth_;
    std::vector<double> endpoints_;
};

ConjugacyTable conjugacy_cylinders(const BranchSystem& system, int depth,
                                   std::uint64_t max_cylinders = std::uint64_t{1} << 24);

// mu(I_w) = |J_w|: the pullback of Lebesgue measure by the conjugacy h with
// g o h = h o f_p.
FloatMeasure pushforward_measure(const BranchSystem& system, int depth);

struct PexBoundReport {
    double a = 0;
    double A = 0;
    double D = 0;
    double floor = 0;  // (a - 1) / D
    double measured_c0 = 0;
    std::optional<BalanceWitness> witness;
    std::vector<DepthMinimum<double>> per_depth;
    double invariance_defect = 0;
    double tolerance = 0;
    bool holds = false;
};

// Measured C0 of the pushforward measure against (a-1)/D, D = 1 + (p-2)A/a.
PexBoundReport verify_pex_bound(const BranchSystem& system, int depth, double tolerance = 1e-12);

struct ImbalanceRow {
    int n;
    double ratio;
};

// r_n = |J_{1 0^{n-1}}| / |J_{0^n}| for the parabolic system, n = 2..n_max.
std::vector<ImbalanceRow> imbalance_profile(double alpha, int n_max);

// An expanding degree-p circle map given by an increasing lift
// F : [0,1] -> [0,p] with F(0) = 0, F(1) = p.
class CircleLift {
public:
    CircleLift(int p, std::function<double(double)> lift, std::function<double(double)> derivative,
               std::string name);

    // F(x) = p x + (epsilon / 2 pi) sin(2 pi x); expanding iff |epsilon| < p - 1.
    static CircleLift sine(int p, double epsilon);

    int degree() const noexcept { return p_; }
    const std::string& name() const noexcept { return name_; }
    double operator()(double x) const { return lift_(x); }
    double derivative(double x) const { return derivative_(x); }
    double min_derivative() const noexcept { return min_derivative_; }

    // The y in [0,1] with F(y) = x + i.
    double inverse_branch(int i, double x) const;

private:
    int p_;
    std::function<double(double)> lift_;
    std::function<double(double)> derivative_;
    std::string name_;
    double min_derivative_;
};

// A periodic piecewise-linear density on the nodes j/G, j = 0..G.
class DensityGrid {
public:
    DensityGrid(std::vector<double> nodes, double residual, int iterations);

    int grid() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }
    double mass() const noexcept { return mass_; }

    double operator()(double x) const;
    // h0(x) = int_0^x rho, normalized so that h0(1) = 1.
    double cumulative(double x) const;
    double inverse_cumulative(double y) const;
    // int_a^b rho for 0 <= a <= b <= 1.
    double integral(double a, double b) const { return cumulative(b) - cumulative(a); }

private:
    std::vector<double> nodes_;
    std::vector<double> prefix_;
    double residual_;
    int iterations_;
    double mass_;
};

// The transfer operator (L rho)(x) = sum_{f(y)=x} rho(y)/f'(y) applied on the
// grid, renormalized to unit mass each step, until ||L rho - rho||_inf <=
// tolerance. The returned density is the one whose residual was measured.
DensityGrid transfer_fixed_density(const CircleLift& f, int grid, double tolerance = 1e-8,
                                   int max_iterations = 10000);

// Inverse branches of g = h0 o f o h0^-1, G_i = h0 o F^{-1}(. + i) o h0^-1.
// Throws VerificationError when sum_i G_i' departs from 1 by more than
// `tolerance` on 1000 samples.
BranchSystem conjugate_to_lebesgue(const CircleLift& f, const DensityGrid& rho, double tolerance = 1e-6);

// Safeguarded Newton on an increasing function: the x in [lo, hi] with
// f(x) = target, to 1e-13.
double solve_increasing(const std::function<double(double)>& f, const std::function<double(double)>& df,
                        double target, double lo, double hi);

} // namespace rigidity
