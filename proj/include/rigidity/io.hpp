#pragma once

#include <complex>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "rigidity/dynamics.hpp"
#include "rigidity/harmonic.hpp"
#include "rigidity/measure.hpp"
#include "rigidity/orders.hpp"

namespace rigidity {

using json = nlohmann::ordered_json;
using AnyMeasure = std::variant<RationalMeasure, FloatMeasure>;

// Measure files: {"p", "depth", "backend", "weights": [p^depth strings]}.
template <class Scalar>
json measure_to_json(const CylinderMeasure<Scalar>& mu);
json measure_to_json(const AnyMeasure& mu);

// Weights may be fractions or decimals. `backend` overrides the file's field.
AnyMeasure measure_from_json(const json& doc, std::optional<Backend> backend = std::nullopt);
AnyMeasure read_measure_file(const std::string& path, std::optional<Backend> backend = std::nullopt);

// {"family": "pex"|"nex"|"transfer", "p", "delta"|"alpha"|"epsilon", "grid"}.
struct MapSpec {
    std::string family = "pex";
    int p = 2;
    double delta = 0.1;
    double alpha = 0.5;
    double epsilon = 0.5;
    int grid = 1 << 14;
};

MapSpec map_spec_from_json(const json& doc);
json to_json(const MapSpec& spec);

// The Lebesgue-preserving branch system described by `spec`. For the
// transfer family the density is solved first and returned through `density`.
BranchSystem build_branch_system(const MapSpec& spec, std::optional<DensityGrid>* density = nullptr,
                                 double transfer_tolerance = 1e-8);

json to_json(const std::complex<double>& z);
json to_json(const Word& w);
json to_json(const BalanceWitness& w);
json to_json(const OrderProfile& profile);
json to_json(const RigidityReport& report);
json to_json(const WeylL2& report);
json to_json(const FourierCoefficient& coefficient);
json to_json(const PexBoundReport& report);
json to_json(const DensityGrid& rho);

template <class Scalar>
json to_json(const Ratio<Scalar>& r);
template <class Scalar>
json to_json(const InvarianceReport<Scalar>& report);
template <class Scalar>
json to_json(const BalanceProfile<Scalar>& profile);
template <class Scalar>
json to_json(const PhiBoundReport<Scalar>& report);
template <class Scalar>
json to_json(const PhiIntegral<Scalar>& integral);

// Scalars serialize as fraction strings (rational) or numbers (float).
template <class Scalar>
json scalar_json(const Scalar& x);

} // namespace rigidity
