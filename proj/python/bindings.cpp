#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cli.hpp"
#include "rigidity/dynamics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/harmonic.hpp"
#include "rigidity/io.hpp"
#include "rigidity/measure.hpp"
#include "rigidity/orders.hpp"

namespace py = pybind11;
using namespace rigidity;

namespace {

py::object json_to_py(const json& doc)
{
    return py::module_::import("json").attr("loads")(doc.dump());
}

py::object fraction(const Rational& x)
{
    return py::module_::import("fractions").attr("Fraction")(x.get_str());
}

py::object integer(const Integer& x)
{
    return py::int_(py::str(x.get_str()));
}

Rational to_rational(const py::handle& x)
{
    Rational r(py::str(x).cast<std::string>());
    r.canonicalize();
    return r;
}

// A cylinder measure in either backend.
class PyMeasure {
public:
    explicit PyMeasure(AnyMeasure mu) : mu_(std::move(mu)) {}

    const AnyMeasure& get() const { return mu_; }

    template <class F>
    decltype(auto) visit(F&& f) const
    {
        return std::visit(std::forward<F>(f), mu_);
    }

    int base() const
    {
        return visit([](const auto& m) { return m.base(); });
    }
    int depth() const
    {
        return visit([](const auto& m) { return m.depth(); });
    }
    std::string backend() const { return std::holds_alternative<RationalMeasure>(mu_) ? "rational" : "float"; }

    py::list weights() const
    {
        py::list out;
        if (const auto* r = std::get_if<RationalMeasure>(&mu_))
            for (const auto& w : r->weights()) out.append(fraction(w));
        else
            for (double w : std::get<FloatMeasure>(mu_).weights()) out.append(w);
        return out;
    }

    py::object mass(const std::string& word) const
    {
        const Word w = Word::parse(base(), word);
        if (const auto* r = std::get_if<RationalMeasure>(&mu_)) return fraction(r->mass(w));
        return py::float_(std::get<FloatMeasure>(mu_).mass(w));
    }

private:
    AnyMeasure mu_;
};

PyMeasure from_weights(int p, int depth, const py::sequence& weights, const std::string& backend)
{
    if (backend == "rational") {
        std::vector<Rational> w;
        for (const auto& x : weights) w.push_back(to_rational(x));
        return PyMeasure(RationalMeasure(p, depth, std::move(w)));
    }
    if (backend != "float") throw InputError("backend must be 'rational' or 'float'");
    std::vector<double> w;
    for (const auto& x : weights) w.push_back(py::float_(x).cast<double>());
    return PyMeasure(FloatMeasure(p, depth, std::move(w)));
}

PyMeasure bernoulli(int p, const py::sequence& pi, int depth, const std::string& backend)
{
    if (backend == "rational") {
        std::vector<Rational> v;
        for (const auto& x : pi) v.push_back(to_rational(x));
        return PyMeasure(make_bernoulli<Rational>(p, v, depth));
    }
    std::vector<double> v;
    for (const auto& x : pi) v.push_back(py::float_(x).cast<double>());
    return PyMeasure(make_bernoulli<double>(p, v, depth));
}

PyMeasure uniform(int p, int depth, const std::string& backend)
{
    if (backend == "rational") return PyMeasure(make_uniform<Rational>(p, depth));
    return PyMeasure(make_uniform<double>(p, depth));
}

PyMeasure markov(int p, const std::vector<py::sequence>& P, const py::object& initial, int depth)
{
    std::vector<std::vector<Rational>> rows;
    for (const auto& row : P) {
        rows.emplace_back();
        for (const auto& x : row) rows.back().push_back(to_rational(x));
    }
    std::vector<Rational> pi0;
    if (initial.is_none()) {
        pi0 = stationary_distribution(rows);
    } else {
        for (const auto& x : initial.cast<py::sequence>()) pi0.push_back(to_rational(x));
    }
    return PyMeasure(make_markov<Rational>(p, rows, pi0, depth));
}

py::tuple run_cli(const std::vector<std::string>& args)
{
    std::vector<std::string> full{"rigidity"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Cylinder measures under x -> px mod 1 and the rigidity estimates built on them.";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NotInvariant>(m, "NotInvariant", PyExc_ArithmeticError);
    py::register_exception<NotStabilized>(m, "NotStabilized", PyExc_ArithmeticError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<VerificationError>(m, "VerificationError", PyExc_RuntimeError);
    py::register_exception<DegenerateCylinder>(m, "DegenerateCylinder", PyExc_ArithmeticError);

    py::class_<PyMeasure>(m, "Measure")
        .def_property_readonly("p", &PyMeasure::base)
        .def_property_readonly("depth", &PyMeasure::depth)
        .def_property_readonly("backend", &PyMeasure::backend)
        .def("weights", &PyMeasure::weights, "Depth-N cylinder masses, indexed by k(w).")
        .def("mass", &PyMeasure::mass, py::arg("word"), "Mass of the cylinder of a digit string.")
        .def(
            "to_float", [](const PyMeasure& mu) {
                if (const auto* r = std::get_if<RationalMeasure>(&mu.get())) return PyMeasure(to_float(*r));
                return mu;
            })
        .def("to_json", [](const PyMeasure& mu) { return measure_to_json(mu.get()).dump(); })
        .def("invariance",
             [](const PyMeasure& mu) { return mu.visit([](const auto& x) { return json_to_py(to_json(check_p_invariance(x))); }); })
        .def(
            "balance",
            [](const PyMeasure& mu, std::optional<int> max_depth) {
                return mu.visit([&](const auto& x) {
                    return json_to_py(to_json(balance_profile(x, max_depth.value_or(x.depth()))));
                });
            },
            py::arg("max_depth") = py::none())
        .def(
            "nu",
            [](const PyMeasure& mu, int n) {
                return mu.visit([&](const auto& x) { return PyMeasure(smooth_nu(x, n).to_measure()); });
            },
            py::arg("n"), "The smoothed measure nu_n as a cylinder measure.")
        .def(
            "phi_bound",
            [](const PyMeasure& mu, int n) {
                return mu.visit([&](const auto& x) { return json_to_py(to_json(phi_bound_check(x, n, x.depth()))); });
            },
            py::arg("n"))
        .def(
            "fourier",
            [](const PyMeasure& mu, py::int_ freq) {
                const Integer f(py::str(freq).cast<std::string>());
                return mu.visit([&](const auto& x) { return fourier(x, f).value; });
            },
            py::arg("m"))
        .def(
            "weyl_l2",
            [](const PyMeasure& mu, int n, std::uint64_t q, std::uint64_t m) {
                return mu.visit([&](const auto& x) { return json_to_py(to_json(weyl_l2_nu(x, n, m, q))); });
            },
            py::arg("n"), py::arg("q"), py::arg("m") = 1)
        .def(
            "rigidity",
            [](const PyMeasure& mu, int n, std::uint64_t q, std::uint64_t m) {
                return mu.visit([&](const auto& x) {
                    const auto p = static_cast<std::uint64_t>(x.base());
                    const auto prof = order_profile(m, p, q, std::max(n + 2, 32));
                    return json_to_py(to_json(rigidity_chain(x, m, q, n, prof)));
                });
            },
            py::arg("n"), py::arg("q"), py::arg("m") = 1);

    m.def("uniform", &uniform, py::arg("p"), py::arg("depth"), py::arg("backend") = "rational");
    m.def("bernoulli", &bernoulli, py::arg("p"), py::arg("pi"), py::arg("depth"), py::arg("backend") = "rational");
    m.def("markov", &markov, py::arg("p"), py::arg("P"), py::arg("initial") = py::none(), py::arg("depth") = 8,
          "Stationary Markov measure (rational backend).");
    m.def("from_weights", &from_weights, py::arg("p"), py::arg("depth"), py::arg("weights"),
          py::arg("backend") = "rational");
    m.def("from_json", [](const std::string& text) { return PyMeasure(measure_from_json(json::parse(text))); });
    m.def(
        "pex", [](double delta, int depth, int p) { return PyMeasure(pushforward_measure(make_pex_branches(p, delta), depth)); },
        py::arg("delta"), py::arg("depth"), py::arg("p") = 2, "Pushforward measure of the perturbed expanding map.");
    m.def(
        "nex", [](double alpha, int depth) { return PyMeasure(pushforward_measure(make_nex_branches(alpha), depth)); },
        py::arg("alpha"), py::arg("depth"), "Pushforward measure of the parabolic map.");

    m.def(
        "orbit_size", [](std::uint64_t a, std::uint64_t p, std::uint64_t q, int n) { return integer(orbit_size(a, p, q, n)); },
        py::arg("a"), py::arg("p"), py::arg("q"), py::arg("n"));
    m.def(
        "order_profile",
        [](std::uint64_t a, std::uint64_t p, std::uint64_t q, int n_max) {
            return json_to_py(to_json(order_profile(a, p, q, n_max)));
        },
        py::arg("a"), py::arg("p"), py::arg("q"), py::arg("n_max") = 12);
    m.def(
        "imbalance_profile",
        [](double alpha, int n_max) {
            std::vector<std::pair<int, double>> out;
            for (const auto& row : imbalance_profile(alpha, n_max)) out.emplace_back(row.n, row.ratio);
            return out;
        },
        py::arg("alpha"), py::arg("n_max") = 40);
    m.def("cli", &run_cli, py::arg("args"), "Run the command-line tool in-process: (exit code, stdout, stderr).");
}
