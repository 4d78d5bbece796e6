#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace rigidity {

// Invalid arguments supplied by a caller (bad digit, out-of-range parameter,
// malformed file). The CLI maps these to exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A cylinder ratio whose denominator vanishes.
class DegenerateCylinder : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NotInvariant : public std::domain_error {
public:
    NotInvariant(const std::string& what, double defect)
        : std::domain_error(what), defect_(defect) {}
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

// Orbit sizes did not reach the proportional regime T_n = C1 p^n by n_max.
class NotStabilized : public std::runtime_error {
public:
    NotStabilized(const std::string& what, std::vector<mpz_class> partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const std::vector<mpz_class>& partial_table() const noexcept { return partial_; }

private:
    std::vector<mpz_class> partial_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// A numerically constructed object failed its self-check.
class VerificationError : public std::runtime_error {
public:
    VerificationError(const std::string& what, double deviation)
        : std::runtime_error(what), deviation_(deviation) {}
    double deviation() const noexcept { return deviation_; }

private:
    double deviation_;
};

} // namespace rigidity
