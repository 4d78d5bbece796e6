#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rigidity/dynamics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/harmonic.hpp"
#include "rigidity/io.hpp"
#include "rigidity/measure.hpp"
#include "rigidity/orders.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity::cli {

namespace {

constexpr int exit_ok = 0;
constexpr int exit_violation = 1;
constexpr int exit_input = 2;
constexpr std::uint64_t certify_limit = 1'000'000;

struct RunConfig {
    // global
    std::string backend = "rational";
    int depth = 10;
    std::string out;
    unsigned jobs = 1;
    double tol = 1e-8;
    std::uint64_t cap = std::uint64_t{1} << 20;

    // measure source
    std::string family = "bernoulli";
    int p = 2;
    std::string pi = "1/2,1/2";
    std::string P;
    std::string pi0;
    double delta = 0.1;
    double alpha = 0.5;
    double epsilon = 0.5;
    int grid = 1 << 14;
    std::string in;
    std::string spec;
    std::string save;

    // orders / harmonic
    std::string mode = "profile";
    std::uint64_t a = 1;
    std::uint64_t m = 1;
    std::uint64_t q = 3;
    int nmax = 0;
    int nmin = 1;
    int n = 1;
    bool certify = false;
    std::vector<std::string> frequencies;
    int mmax = 0;
    std::string table;
    std::string report;
    double check_tol = 1e-6;
};

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) parts.push_back(item);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

template <class S>
std::vector<S> parse_vector(const std::string& text)
{
    std::vector<S> v;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) throw InputError("empty entry in list \"" + text + "\"");
        v.push_back(ScalarTraits<S>::parse(item));
    }
    return v;
}

class Output {
public:
    Output(const RunConfig& config, std::ostream& fallback) : config_(config), fallback_(fallback) {}

    void write(const std::string& text) const
    {
        if (config_.out.empty()) {
            fallback_ << text;
            return;
        }
        std::ofstream file(config_.out, std::ios::binary);
        if (!file) throw InputError("cannot write " + config_.out);
        file << text;
    }
    void write(const json& doc) const { write(doc.dump(2) + "\n"); }

private:
    const RunConfig& config_;
    std::ostream& fallback_;
};

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot write " + path);
    file << text;
}

void check_cap(const RunConfig& c, int p, int depth)
{
    if (depth < 1 || depth > Word::max_depth) throw InputError("depth out of range");
    if (p < 2 || p > Word::max_base) throw InputError("p out of range");
    // checked_pow throws on overflow, which is above any cap anyway.
    if (checked_pow(static_cast<std::uint64_t>(p), depth) > c.cap)
        throw InputError("p^depth = " + std::to_string(p) + "^" + std::to_string(depth) + " exceeds the cylinder cap " +
                         std::to_string(c.cap));
}

MapSpec map_spec(const RunConfig& c)
{
    if (!c.spec.empty()) {
        std::ifstream file(c.spec);
        if (!file) throw InputError("cannot open map spec " + c.spec);
        try {
            return map_spec_from_json(json::parse(file));
        } catch (const json::exception& e) {
            throw InputError(std::string("malformed map spec: ") + e.what());
        }
    }
    MapSpec spec;
    spec.family = c.family;
    spec.p = c.family == "nex" ? 2 : c.p;
    spec.delta = c.delta;
    spec.alpha = c.alpha;
    spec.epsilon = c.epsilon;
    spec.grid = c.grid;
    return spec;
}

template <class S>
CylinderMeasure<S> fixture(const RunConfig& c)
{
    if (c.family == "uniform") return make_uniform<S>(c.p, c.depth);
    if (c.family == "bernoulli") return make_bernoulli<S>(c.p, parse_vector<S>(c.pi), c.depth);
    if (c.family == "markov") {
        if (c.P.empty()) throw InputError("markov family needs --P \"row;row;...\"");
        std::vector<std::vector<S>> rows;
        for (const auto& row : split(c.P, ';')) rows.push_back(parse_vector<S>(row));
        const auto initial = c.pi0.empty() ? stationary_distribution(rows) : parse_vector<S>(c.pi0);
        return make_markov<S>(c.p, rows, initial, c.depth);
    }
    throw InputError("unknown measure family \"" + c.family + "\"");
}

AnyMeasure load_measure(const RunConfig& c)
{
    const Backend backend = parse_backend(c.backend);
    if (c.family == "file") {
        if (c.in.empty()) throw InputError("family file needs --in PATH");
        auto mu = read_measure_file(c.in, backend);
        std::visit([&](const auto& m) { check_cap(c, m.base(), m.depth()); }, mu);
        return mu;
    }
    if (c.family == "pex" || c.family == "nex" || c.family == "transfer") {
        const MapSpec spec = map_spec(c);
        check_cap(c, spec.p, c.depth);
        return pushforward_measure(build_branch_system(spec), c.depth);
    }
    check_cap(c, c.p, c.depth);
    if (backend == Backend::rational) return fixture<Rational>(c);
    return fixture<double>(c);
}

json source_json(const RunConfig& c, const AnyMeasure& mu)
{
    json doc{{"family", c.family}};
    if (c.family == "file") doc["path"] = c.in;
    if (c.family == "pex" || c.family == "nex" || c.family == "transfer") doc["map"] = to_json(map_spec(c));
    std::visit(
        [&](const auto& m) {
            doc["p"] = m.base();
            doc["depth"] = m.depth();
            doc["backend"] = std::string(backend_name(std::decay_t<decltype(m)>::backend));
        },
        mu);
    return doc;
}

template <class S>
bool defect_within(const S& defect, double tol)
{
    if constexpr (ScalarTraits<S>::exact)
        return defect == 0;
    else
        return defect <= tol;
}

// ---------------------------------------------------------------------------

int cmd_orders(const RunConfig& c, const Output& out)
{
    if (c.mode == "orbit") {
        const auto orbit = enumerate_orbit(c.a, static_cast<std::uint64_t>(c.p), c.q, c.n);
        out.write(json{{"a", c.a}, {"p", c.p}, {"q", c.q}, {"n", c.n}, {"size", orbit.size()}, {"orbit", orbit}});
        return exit_ok;
    }
    const int nmax = c.nmax > 0 ? c.nmax : 12;
    const auto profile = order_profile(c.a, static_cast<std::uint64_t>(c.p), c.q, nmax);
    json doc = to_json(profile);
    int code = exit_ok;
    if (c.certify) {
        json mismatches = json::array();
        int checked = 0;
        for (int n = 1; n <= nmax; ++n) {
            Integer pn;
            mpz_ui_pow_ui(pn.get_mpz_t(), static_cast<unsigned long>(c.p), static_cast<unsigned long>(n));
            if (pn > certify_limit) break;
            const auto brute = enumerate_orbit(c.a, static_cast<std::uint64_t>(c.p), c.q, n).size();
            if (Integer(static_cast<unsigned long>(brute)) != profile.T(n))
                mismatches.push_back({{"n", n}, {"brute_force", brute}, {"table", to_string(profile.T(n))}});
            checked = n;
        }
        bool proportional = true;
        for (int n = profile.n0; n <= nmax; ++n) {
            Integer pn;
            mpz_ui_pow_ui(pn.get_mpz_t(), static_cast<unsigned long>(c.p), static_cast<unsigned long>(n));
            if (Rational(profile.T(n)) != profile.c1 * Rational(pn)) proportional = false;
        }
        doc["certify"] = {{"brute_force_through_n", checked},
                          {"mismatches", mismatches},
                          {"proportional_from_n0", proportional},
                          {"agrees", mismatches.empty() && proportional}};
        if (!mismatches.empty() || !proportional) code = exit_violation;
    }
    out.write(doc);
    return code;
}

int cmd_measure(const RunConfig& c, const Output& out)
{
    const AnyMeasure any = load_measure(c);
    if (!c.save.empty()) write_file(c.save, measure_to_json(any).dump(2) + "\n");
    json doc{{"command", "measure"}, {"source", source_json(c, any)}};
    bool ok = std::visit(
        [&](const auto& mu) {
            const auto inv = check_p_invariance(mu);
            const auto balance = balance_profile(mu, mu.depth());
            doc["invariance"] = to_json(inv);
            doc["invariant"] = defect_within(inv.max_defect, c.tol);
            doc["balance"] = to_json(balance);
            return defect_within(inv.max_defect, c.tol);
        },
        any);
    if (c.family == "pex") {
        const auto bound = verify_pex_bound(build_branch_system(map_spec(c)), c.depth);
        doc["pex_bound"] = to_json(bound);
        ok = ok && bound.holds;
    }
    out.write(doc);
    return ok ? exit_ok : exit_violation;
}

int cmd_nu(const RunConfig& c, const Output& out)
{
    const AnyMeasure any = load_measure(c);
    json doc{{"command", "nu"}, {"source", source_json(c, any)}, {"n", c.n}};
    std::visit(
        [&](const auto& mu) {
            const auto view = smooth_nu(mu, c.n, std::max(c.tol, 1e-9));
            doc["measure"] = measure_to_json(view.to_measure());
        },
        any);
    out.write(doc);
    return exit_ok;
}

int cmd_phi(const RunConfig& c, const Output& out)
{
    const AnyMeasure any = load_measure(c);
    json doc{{"command", "phi"}, {"source", source_json(c, any)}, {"n", c.n}};
    const bool ok = std::visit(
        [&](const auto& mu) {
            const auto check = phi_bound_check(mu, c.n, mu.depth());
            json integrals = json::array();
            for (int k = c.n + 1; k <= mu.depth(); ++k) {
                auto integral = integral_phi(mu, c.n, k);
                integrals.push_back(to_json(integral));
            }
            doc["bound_check"] = to_json(check);
            doc["integrals"] = std::move(integrals);
            return check.holds();
        },
        any);
    out.write(doc);
    return ok ? exit_ok : exit_violation;
}

int cmd_fourier(const RunConfig& c, const Output& out)
{
    std::vector<Integer> ms;
    for (const auto& text : c.frequencies) {
        Integer m;
        if (m.set_str(text, 10) != 0) throw InputError("frequency \"" + text + "\" is not an integer");
        ms.push_back(m);
    }
    for (int m = 1; m <= c.mmax; ++m) ms.emplace_back(m);
    if (ms.empty()) ms.emplace_back(1);

    const AnyMeasure any = load_measure(c);
    json doc{{"command", "fourier"}, {"source", source_json(c, any)}};
    json coefficients = json::array();
    std::visit(
        [&](const auto& mu) {
            for (const auto& m : ms) coefficients.push_back(to_json(fourier(mu, m)));
        },
        any);
    doc["coefficients"] = std::move(coefficients);
    out.write(doc);
    return exit_ok;
}

int cmd_weyl(const RunConfig& c, const Output& out)
{
    const AnyMeasure any = load_measure(c);
    const int nmax = c.nmax > 0 ? c.nmax : 3;
    json doc{{"command", "weyl"}, {"source", source_json(c, any)}, {"m", c.m}, {"q", c.q}, {"tolerance", c.tol}};
    json rows = json::array();
    bool ok = true;
    std::visit(
        [&](const auto& mu) {
            for (int n = c.nmin; n <= nmax; ++n) {
                const auto w = weyl_l2_nu(mu, n, c.m, c.q);
                json row = to_json(w);
                row["n"] = n;
                row["within_tolerance"] = std::abs(w.deviation) <= c.tol;
                ok = ok && std::abs(w.deviation) <= c.tol;
                rows.push_back(std::move(row));
            }
        },
        any);
    doc["results"] = std::move(rows);
    out.write(doc);
    return ok ? exit_ok : exit_violation;
}

int cmd_rigidity(const RunConfig& c, const Output& out)
{
    const AnyMeasure any = load_measure(c);
    const int depth = std::visit([](const auto& mu) { return mu.depth(); }, any);
    const int p = std::visit([](const auto& mu) { return mu.base(); }, any);
    const int nmax = c.nmax > 0 ? c.nmax : depth - 1;
    if (c.nmin < 1 || nmax < c.nmin) throw InputError("empty n range");
    if (nmax >= depth) throw InputError("n must stay below the measure depth " + std::to_string(depth));

    const auto r = padic_valuation(Integer(static_cast<unsigned long>(c.m)), Integer(p)).valuation;
    const int table_max = std::max({nmax, static_cast<int>(r) + 2, 32});
    const auto orders = order_profile(c.m, static_cast<std::uint64_t>(p), c.q, table_max);

    RigidityOptions options;
    options.tolerance = c.tol;
    std::visit(
        [&](const auto& mu) {
            using S = std::decay_t<decltype(mu.weights()[0])>;
            const auto balance = balance_profile(mu, mu.depth());
            if (balance.c0.infinite) throw DegenerateCylinder("no finite balance ratio; C0 undefined");
            options.c0 = ScalarTraits<S>::to_double(balance.c0.value);
            if constexpr (ScalarTraits<S>::exact) options.c0_exact = balance.c0.value;
        },
        any);

    std::ostringstream csv;
    csv << "n,T_n,lhs,cs_slack,weyl_l2_dev,bound,status\n";
    json reports = json::array();
    bool ok = true;
    for (int n = c.nmin; n <= nmax; ++n) {
        if (n <= orders.n0) {
            csv << n << ',' << to_string(orders.T(n)) << ",,,,,skipped\n";
            continue;
        }
        const auto rep = std::visit([&](const auto& mu) { return rigidity_chain(mu, c.m, c.q, n, orders, options); }, any);
        csv << n << ',' << rep.T << ',' << format_double(rep.lhs) << ',' << format_double(rep.links.front().slack)
            << ',' << format_double(rep.weyl_deviation) << ',' << format_double(rep.final_bound) << ','
            << (rep.ok ? "ok" : "violation") << '\n';
        reports.push_back(to_json(rep));
        ok = ok && rep.ok;
    }
    if (!c.report.empty()) {
        json doc{{"command", "rigidity"}, {"source", source_json(c, any)}, {"orders", to_json(orders)},
                 {"reports", reports}};
        write_file(c.report, doc.dump(2) + "\n");
    }
    out.write(csv.str());
    return ok ? exit_ok : exit_violation;
}

int cmd_imbalance(const RunConfig& c, const Output& out)
{
    const int nmax = c.nmax > 0 ? c.nmax : 40;
    const auto rows = imbalance_profile(c.alpha, nmax);
    std::ostringstream csv;
    csv << "n,r_n\n";
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv << rows[i].n << ',' << format_double(rows[i].ratio) << '\n';
        if (i > 0 && !(rows[i].ratio < rows[i - 1].ratio)) decreasing = false;
    }
    out.write(csv.str());
    return decreasing ? exit_ok : exit_violation;
}

int cmd_transfer(const RunConfig& c, const Output& out)
{
    const MapSpec spec = map_spec(c);
    check_cap(c, spec.p, c.depth);
    std::optional<DensityGrid> density;
    const auto system = build_branch_system(spec, &density);
    const auto mu = pushforward_measure(system, c.depth);
    if (!c.table.empty()) write_file(c.table, conjugacy_cylinders(system, c.depth).to_csv());
    if (!c.save.empty()) write_file(c.save, measure_to_json(mu).dump(2) + "\n");

    const double deviation = system.derivative_sum_deviation(1000);
    const auto inv = check_p_invariance(mu);
    const auto balance = balance_profile(mu, mu.depth());
    json doc{{"command", "transfer"}, {"map", to_json(spec)}, {"depth", c.depth}};
    if (density) doc["density"] = to_json(*density);
    doc["lebesgue_deviation"] = deviation;
    doc["invariance"] = to_json(inv);
    doc["balance"] = to_json(balance);
    doc["check_tolerance"] = c.check_tol;
    const bool ok = deviation <= c.check_tol && inv.max_defect <= c.check_tol && balance.positive();
    doc["holds"] = ok;
    out.write(doc);
    return ok ? exit_ok : exit_violation;
}

void add_measure_options(CLI::App* sub, RunConfig& c)
{
    sub->add_option("--family", c.family, "uniform|bernoulli|markov|pex|nex|transfer|file")
        ->check(CLI::IsMember({"uniform", "bernoulli", "markov", "pex", "nex", "transfer", "file"}));
    sub->add_option("--p", c.p, "base of the x p map");
    sub->add_option("--pi", c.pi, "Bernoulli weights, e.g. 2/3,1/3");
    sub->add_option("--P", c.P, "Markov transition rows, e.g. \"1/2,1/2;1/3,2/3\"");
    sub->add_option("--pi0", c.pi0, "Markov initial law (default: stationary)");
    sub->add_option("--delta", c.delta, "pex perturbation");
    sub->add_option("--alpha", c.alpha, "nex exponent");
    sub->add_option("--epsilon", c.epsilon, "transfer sine amplitude");
    sub->add_option("--grid", c.grid, "transfer operator grid size");
    sub->add_option("--in", c.in, "measure file for --family file");
    sub->add_option("--spec", c.spec, "map spec JSON for pex/nex/transfer");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    RunConfig c;
    CLI::App app{"Cylinder measures, smoothing, orbit orders and rigidity estimates for the x p map"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--backend", c.backend, "rational|float")->check(CLI::IsMember({"rational", "float"}));
    app.add_option("--depth", c.depth, "cylinder depth N");
    app.add_option("--out", c.out, "report path (default: stdout)");
    app.add_option("--jobs", c.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--tol", c.tol, "check tolerance")->check(CLI::PositiveNumber);
    app.add_option("--cap", c.cap, "largest allowed p^depth")->check(CLI::PositiveNumber);

    auto* orders = app.add_subcommand("orders", "orbit sizes T_n of a q^k mod p^n");
    orders->add_option("mode", c.mode, "profile|orbit")->check(CLI::IsMember({"profile", "orbit"}));
    orders->add_option("--a", c.a, "residue a");
    orders->add_option("--p", c.p, "modulus base p");
    orders->add_option("--q", c.q, "multiplier q")->required();
    orders->add_option("--nmax", c.nmax, "table length (default 12)");
    orders->add_option("--n", c.n, "exponent for orbit mode");
    orders->add_flag("--certify", c.certify, "cross-check against brute-force orbits");

    auto* measure = app.add_subcommand("measure", "invariance and balanced-geometry report");
    add_measure_options(measure, c);
    measure->add_option("--save", c.save, "also write the measure file");

    auto* nu = app.add_subcommand("nu", "smoothed measure nu_n");
    add_measure_options(nu, c);
    nu->add_option("--n", c.n, "smoothing level");

    auto* phi = app.add_subcommand("phi", "density estimates phi_n and their integrals");
    add_measure_options(phi, c);
    phi->add_option("--n", c.n, "smoothing level");

    auto* fourier_cmd = app.add_subcommand("fourier", "Fourier coefficients of the measure");
    add_measure_options(fourier_cmd, c);
    fourier_cmd->add_option("--m", c.frequencies, "frequencies");
    fourier_cmd->add_option("--mmax", c.mmax, "all frequencies 1..mmax");

    auto* weyl = app.add_subcommand("weyl", "L2 norm of Weyl sums against nu_n");
    add_measure_options(weyl, c);
    weyl->add_option("--m", c.m, "frequency");
    weyl->add_option("--q", c.q, "multiplier")->required();
    weyl->add_option("--nmin", c.nmin, "first n");
    weyl->add_option("--nmax", c.nmax, "last n (default 3)");

    auto* rigidity = app.add_subcommand("rigidity", "rigidity chain series (CSV)");
    add_measure_options(rigidity, c);
    rigidity->add_option("--m", c.m, "frequency");
    rigidity->add_option("--q", c.q, "multiplier")->required();
    rigidity->add_option("--nmin", c.nmin, "first n");
    rigidity->add_option("--nmax", c.nmax, "last n (default depth-1)");
    rigidity->add_option("--report", c.report, "full JSON reports");

    auto* imbalance = app.add_subcommand("imbalance", "cylinder ratios of the parabolic example (CSV)");
    imbalance->add_option("--alpha", c.alpha, "exponent in (0,1)");
    imbalance->add_option("--nmax", c.nmax, "last n (default 40)");

    auto* transfer = app.add_subcommand("transfer", "conjugate an expanding map to a Lebesgue-preserving one");
    transfer->add_option("--family", c.family, "transfer|pex|nex")
        ->check(CLI::IsMember({"transfer", "pex", "nex"}));
    transfer->add_option("--p", c.p, "degree");
    transfer->add_option("--epsilon", c.epsilon, "sine amplitude");
    transfer->add_option("--delta", c.delta, "pex perturbation");
    transfer->add_option("--alpha", c.alpha, "nex exponent");
    transfer->add_option("--grid", c.grid, "grid size");
    transfer->add_option("--spec", c.spec, "map spec JSON");
    transfer->add_option("--table", c.table, "conjugacy cylinder CSV");
    transfer->add_option("--save", c.save, "pushforward measure file");
    transfer->add_option("--check-tol", c.check_tol, "tolerance for the self-checks")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\n";
        return exit_input;
    }
    if (transfer->parsed() && c.family == "bernoulli") c.family = "transfer";

    parallel::set_jobs(c.jobs);
    const Output output(c, out);
    const std::string command = app.get_subcommands().front()->get_name();
    const std::map<std::string, std::function<int(const RunConfig&, const Output&)>> commands{
        {"orders", cmd_orders}, {"measure", cmd_measure},   {"nu", cmd_nu},
        {"phi", cmd_phi},       {"fourier", cmd_fourier},   {"weyl", cmd_weyl},
        {"rigidity", cmd_rigidity}, {"imbalance", cmd_imbalance}, {"transfer", cmd_transfer},
    };
    auto report_failure = [&](const std::string& kind, const std::string& message, double value) {
        try {
            output.write(json{{"command", command}, {"failure", kind}, {"message", message}, {"value", value}});
        } catch (const std::exception&) {
        }
        err << kind << ": " << message << "\n";
        return exit_violation;
    };
    try {
        return commands.at(command)(c, output);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const NotStabilized& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const NotInvariant& e) {
        return report_failure("not_invariant", e.what(), e.defect());
    } catch (const ConvergenceError& e) {
        return report_failure("no_convergence", e.what(), e.residual());
    } catch (const VerificationError& e) {
        return report_failure("verification_failed", e.what(), e.deviation());
    } catch (const DegenerateCylinder& e) {
        return report_failure("degenerate", e.what(), 0.0);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    }
}

} // namespace rigidity::cli
