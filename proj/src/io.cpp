#include "rigidity/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {

json number(double x)
{
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

template <class S>
AnyMeasure build_measure(int p, int depth, const json& weights)
{
    std::vector<S> w;
    w.reserve(weights.size());
    for (const auto& entry : weights) {
        if (entry.is_string())
            w.push_back(ScalarTraits<S>::parse(entry.get<std::string>()));
        else if (entry.is_number_integer())
            w.push_back(ScalarTraits<S>::parse(std::to_string(entry.get<long long>())));
        else if (entry.is_number())
            w.push_back(ScalarTraits<S>::parse(format_double(entry.get<double>())));
        else
            throw InputError("measure weights must be strings or numbers");
    }
    return CylinderMeasure<S>(p, depth, std::move(w), 1e-9);
}

int required_int(const json& doc, const char* key)
{
    if (!doc.contains(key) || !doc[key].is_number_integer())
        throw InputError(std::string("missing integer field \"") + key + "\"");
    return doc[key].get<int>();
}

double optional_double(const json& doc, const char* key, double fallback)
{
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw InputError(std::string("field \"") + key + "\" must be a number");
    return doc[key].get<double>();
}

} // namespace

template <class S>
json scalar_json(const S& x)
{
    if constexpr (ScalarTraits<S>::exact)
        return to_string(x);
    else
        return number(x);
}

template <class S>
json measure_to_json(const CylinderMeasure<S>& mu)
{
    json weights = json::array();
    for (const auto& w : mu.weights()) weights.push_back(ScalarTraits<S>::str(w));
    return json{{"p", mu.base()},
                {"depth", mu.depth()},
                {"backend", std::string(backend_name(CylinderMeasure<S>::backend))},
                {"weights", std::move(weights)}};
}

json measure_to_json(const AnyMeasure& mu)
{
    return std::visit([](const auto& m) { return measure_to_json(m); }, mu);
}

AnyMeasure measure_from_json(const json& doc, std::optional<Backend> backend)
{
    if (!doc.is_object()) throw InputError("measure file must hold a JSON object");
    const int p = required_int(doc, "p");
    const int depth = required_int(doc, "depth");
    if (!doc.contains("weights") || !doc["weights"].is_array()) throw InputError("missing array field \"weights\"");
    Backend b = Backend::rational;
    if (backend)
        b = *backend;
    else if (doc.contains("backend"))
        b = parse_backend(doc["backend"].get<std::string>());
    if (b == Backend::rational) return build_measure<Rational>(p, depth, doc["weights"]);
    return build_measure<double>(p, depth, doc["weights"]);
}

AnyMeasure read_measure_file(const std::string& path, std::optional<Backend> backend)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open measure file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("malformed measure file " + path + ": " + e.what());
    }
    try {
        return measure_from_json(doc, backend);
    } catch (const json::exception& e) {
        throw InputError("malformed measure file " + path + ": " + e.what());
    }
}

MapSpec map_spec_from_json(const json& doc)
{
    if (!doc.is_object()) throw InputError("map spec must be a JSON object");
    MapSpec spec;
    if (!doc.contains("family") || !doc["family"].is_string()) throw InputError("map spec needs a \"family\"");
    spec.family = doc["family"].get<std::string>();
    if (doc.contains("p")) spec.p = required_int(doc, "p");
    spec.delta = optional_double(doc, "delta", spec.delta);
    spec.alpha = optional_double(doc, "alpha", spec.alpha);
    spec.epsilon = optional_double(doc, "epsilon", spec.epsilon);
    if (doc.contains("grid")) spec.grid = required_int(doc, "grid");
    if (spec.family != "pex" && spec.family != "nex" && spec.family != "transfer")
        throw InputError("unknown map family \"" + spec.family + "\"");
    return spec;
}

json to_json(const MapSpec& spec)
{
    json doc{{"family", spec.family}, {"p", spec.family == "nex" ? 2 : spec.p}};
    if (spec.family == "pex") doc["delta"] = spec.delta;
    if (spec.family == "nex") doc["alpha"] = spec.alpha;
    if (spec.family == "transfer") {
        doc["epsilon"] = spec.epsilon;
        doc["grid"] = spec.grid;
    }
    return doc;
}

BranchSystem build_branch_system(const MapSpec& spec, std::optional<DensityGrid>* density, double transfer_tolerance)
{
    if (spec.family == "pex") return make_pex_branches(spec.p, spec.delta);
    if (spec.family == "nex") return make_nex_branches(spec.alpha);
    if (spec.family == "transfer") {
        const auto lift = CircleLift::sine(spec.p, spec.epsilon);
        auto rho = transfer_fixed_density(lift, spec.grid, transfer_tolerance);
        auto system = conjugate_to_lebesgue(lift, rho);
        if (density) *density = std::move(rho);
        return system;
    }
    throw InputError("unknown map family \"" + spec.family + "\"");
}

json to_json(const std::complex<double>& z) { return json{{"re", number(z.real())}, {"im", number(z.imag())}}; }

json to_json(const Word& w) { return w.str(); }

json to_json(const BalanceWitness& w) { return json{{"context", w.context.str()}, {"digit", w.digit}}; }

json to_json(const OrderProfile& profile)
{
    json table = json::array();
    for (const auto& t : profile.table) table.push_back(to_string(t));
    json doc{{"a", profile.a},
             {"p", profile.p},
             {"q", profile.q},
             {"r", profile.r},
             {"n_max", profile.n_max},
             {"table", std::move(table)},
             {"n0", profile.n0},
             {"c1", to_string(profile.c1)},
             {"certificate",
              {{"v", profile.certificate.v},
               {"unit_residue", to_string(profile.certificate.unit_residue)},
               {"modulus", to_string(profile.certificate.modulus)}}},
             {"constructive_n0", profile.constructive_n0}};
    if (profile.constructive_n0 <= profile.n_max) {
        doc["constructive_c1"] = to_string(profile.constructive_c1);
        doc["constructive_holds"] = profile.constructive_holds;
    }
    return doc;
}

json to_json(const RigidityReport& report)
{
    json links = json::array();
    for (const auto& l : report.links)
        links.push_back({{"name", l.name}, {"lhs", number(l.lhs)}, {"rhs", number(l.rhs)}, {"slack", number(l.slack)}});
    json doc{{"m", report.m},
             {"p", report.p},
             {"q", report.q},
             {"n", report.n},
             {"depth", report.depth},
             {"T_n", report.T},
             {"n0", report.n0},
             {"c1", to_string(report.c1)},
             {"c0", number(report.c0)}};
    if (report.c0_exact) doc["c0_exact"] = to_string(*report.c0_exact);
    doc["beta_integral"] = to_json(report.beta_integral);
    doc["lhs"] = number(report.lhs);
    doc["weyl_l2"] = number(report.weyl_l2);
    doc["weyl_deviation"] = number(report.weyl_deviation);
    doc["phi_integral"] = number(report.phi_integral);
    doc["final_bound"] = number(report.final_bound);
    if (report.final_bound_exact) doc["final_bound_exact"] = to_string(*report.final_bound_exact);
    doc["links"] = std::move(links);
    doc["tolerance"] = report.tolerance;
    doc["ok"] = report.ok;
    return doc;
}

json to_json(const WeylL2& report)
{
    return json{{"value", number(report.value)},
                {"T_n", report.T},
                {"deviation", number(report.deviation)},
                {"error_bound", number(report.error_bound)},
                {"depth", report.depth}};
}

json to_json(const FourierCoefficient& c)
{
    return json{{"m", to_string(c.m)},
                {"value", to_json(c.value)},
                {"abs", number(std::abs(c.value))},
                {"depth", c.depth},
                {"error_bound", number(c.error_bound)}};
}

json to_json(const PexBoundReport& report)
{
    json per_depth = json::array();
    for (const auto& d : report.per_depth) per_depth.push_back({{"depth", d.depth}, {"minimum", to_json(d.minimum)}});
    json doc{{"a", number(report.a)},
             {"A", number(report.A)},
             {"D", number(report.D)},
             {"floor", number(report.floor)},
             {"measured_c0", number(report.measured_c0)}};
    doc["witness"] = report.witness ? to_json(*report.witness) : json(nullptr);
    doc["per_depth"] = std::move(per_depth);
    doc["invariance_defect"] = number(report.invariance_defect);
    doc["tolerance"] = report.tolerance;
    doc["holds"] = report.holds;
    return doc;
}

json to_json(const DensityGrid& rho)
{
    double lo = rho.nodes()[0], hi = lo;
    for (double v : rho.nodes()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return json{{"grid", rho.grid()},
                {"residual", number(rho.residual())},
                {"iterations", rho.iterations()},
                {"mass", number(rho.mass())},
                {"min_density", number(lo)},
                {"max_density", number(hi)}};
}

template <class S>
json to_json(const Ratio<S>& r)
{
    if (r.infinite) return "inf";
    return scalar_json(r.value);
}

template <class S>
json to_json(const InvarianceReport<S>& report)
{
    return json{{"max_defect", scalar_json(report.max_defect)},
                {"witness", report.witness ? to_json(*report.witness) : json(nullptr)},
                {"max_depth", report.max_depth}};
}

template <class S>
json to_json(const BalanceProfile<S>& profile)
{
    json per_depth = json::array();
    for (const auto& d : profile.per_depth) {
        per_depth.push_back({{"depth", d.depth},
                             {"minimum", to_json(d.minimum)},
                             {"witness", d.witness ? to_json(*d.witness) : json(nullptr)}});
    }
    json doc{{"c0", to_json(profile.c0)}};
    if (!profile.c0.infinite) doc["c0_float"] = number(ScalarTraits<S>::to_double(profile.c0.value));
    doc["positive"] = profile.positive();
    doc["witness"] = profile.witness ? to_json(*profile.witness) : json(nullptr);
    doc["per_depth"] = std::move(per_depth);
    doc["degenerate"] = profile.degenerate;
    doc["first_degenerate"] = profile.first_degenerate ? to_json(*profile.first_degenerate) : json(nullptr);
    return doc;
}

template <class S>
json to_json(const PhiBoundReport<S>& report)
{
    return json{{"n", report.n},
                {"max_depth", report.max_depth},
                {"c0", to_json(report.c0)},
                {"bound", scalar_json(report.bound)},
                {"max_phi", scalar_json(report.max_phi)},
                {"argmax", report.argmax ? to_json(*report.argmax) : json(nullptr)},
                {"scanned", report.scanned},
                {"violations", report.violations},
                {"degenerate", report.degenerate},
                {"first_violation", report.first_violation ? to_json(*report.first_violation) : json(nullptr)},
                {"holds", report.holds()}};
}

template <class S>
json to_json(const PhiIntegral<S>& integral)
{
    return json{{"value", scalar_json(integral.value)},
                {"depth", integral.depth},
                {"excluded", integral.excluded}};
}

#define RIGIDITY_INSTANTIATE_IO(S)                                 \
    template json scalar_json<S>(const S&);                        \
    template json measure_to_json<S>(const CylinderMeasure<S>&);   \
    template json to_json<S>(const Ratio<S>&);                     \
    template json to_json<S>(const InvarianceReport<S>&);          \
    template json to_json<S>(const BalanceProfile<S>&);            \
    template json to_json<S>(const PhiBoundReport<S>&);            \
    template json to_json<S>(const PhiIntegral<S>&);

RIGIDITY_INSTANTIATE_IO(Rational)
RIGIDITY_INSTANTIATE_IO(double)

} // namespace rigidity
