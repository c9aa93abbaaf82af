/// Command-line experiment runner.
///
///   pdirac <subcommand> [options]
///
/// Subcommands: algebra-selftest, kernel-residual, covariance, solve, sphere-check, cr-check.
/// Exit status: 0 when every gating check passes, 1 when a check fails, 2 on usage errors.

#include "pdirac/suites.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pdirac;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

/// Raised for invalid command-line input that CLI11 cannot detect itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (const auto* d = std::get_if<double>(&row[i])) os << format_double(*d);
            else os << csv_escape(std::get<std::string>(row[i]));
        }
        os << '\n';
    }
    return os.str();
}

json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
    return std::get<std::string>(c);
}

json checks_json(const std::vector<Check>& checks) {
    json arr = json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"value", std::isfinite(c.value) ? json(c.value) : json(format_double(c.value))},
                       {"relation", c.relation()}, {"bound", std::isfinite(c.bound) ? json(c.bound) : json(nullptr)},
                       {"gating", c.gating()}, {"passed", c.passed()}});
    return arr;
}

json table_json(const Table& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row = json::array();
        for (const auto& c : r) row.push_back(cell_json(c));
        rows.push_back(std::move(row));
    }
    return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open output file '" + path + "'");
    f << text;
}

void print_checks(const std::vector<Check>& checks) {
    for (const auto& c : checks)
        std::cerr << (c.gating() ? (c.passed() ? "PASS " : "FAIL ") : "INFO ") << c.name << ": " << format_double(c.value)
                  << (c.gating() ? std::string(" ") + c.relation() + " " + format_double(c.bound) : std::string()) << '\n';
}

/// Options shared by every subcommand.
struct Common {
    int n = 0;
    std::optional<double> p;
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "csv";
    std::string config;
};

void add_common(CLI::App* sub, Common& c, int default_n) {
    c.n = default_n;
    sub->add_option("--n", c.n, "dimension")->capture_default_str();
    sub->add_option("--p", c.p, "exponent p > 1");
    sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sub->add_option("--out", c.out, "output file (default: standard output)");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--config", c.config, "key = value file; command-line flags take precedence");
}

/// Emits a suite report in the requested format and returns the exit status.
int emit(const std::string& subcommand, const Common& c, const json& config, const SuiteReport& rep) {
    if (c.format == "json") {
        json doc = {{"subcommand", subcommand}, {"version", kVersion}, {"seed", c.seed}, {"config", config}};
        const json t = table_json(rep.table);
        doc["columns"] = t["columns"];
        doc["rows"] = t["rows"];
        doc["checks"] = checks_json(rep.checks);
        doc["passed"] = rep.passed();
        write_output(c.out, doc.dump(2) + "\n");
    } else {
        write_output(c.out, to_csv(rep.table));
    }
    print_checks(rep.checks);
    return rep.passed() ? 0 : 1;
}

double parse_number(const std::string& s) {
    // accepts plain decimals and simple fractions such as 1/32
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        }
        const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
        std::size_t ua = 0, ub = 0;
        const double num = std::stod(a, &ua), den = std::stod(b, &ub);
        if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument(s);
        return num / den;
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_number(item));
    return out;
}

/// Reads `key = value` lines ('#' starts a comment).
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty() || key == "config") throw UsageError(path + ":" + std::to_string(lineno) + ": invalid key");
        out.emplace_back(key, value);
    }
    return out;
}

/// Appends config-file entries whose flag is absent from the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    auto given = [&](const std::string& key) {
        for (const auto& a : args)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
        return false;
    };
    static const std::vector<std::string> flags{"weak", "refine", "gd"};
    for (const auto& [key, value] : read_config(path)) {
        if (given(key)) continue;
        if (std::find(flags.begin(), flags.end(), key) != flags.end()) {
            if (value == "true" || value == "1") args.push_back("--" + key);
            else if (value != "false" && value != "0") throw UsageError("config: flag '" + key + "' takes true or false");
        } else {
            args.push_back("--" + key);
            args.push_back(value);
        }
    }
    return args;
}

BoundaryFunction file_boundary(const std::string& path, int n, double h) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read boundary file '" + path + "'");
    std::vector<Point> pts;
    std::vector<double> vals;
    std::string line;
    while (std::getline(f, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto nums = parse_list(line);
        if (static_cast<int>(nums.size()) != n + 1) throw UsageError("boundary file: each line needs n coordinates and one value");
        pts.emplace_back(nums.begin(), nums.end() - 1);
        vals.push_back(nums.back());
    }
    return [pts, vals, n, h](std::span<const double> x) {
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (distance(x, pts[i]) <= 1e-6 * h) return Multivector::scalar(n, vals[i]);
        std::string where;
        for (double c : x) where += (where.empty() ? "" : ",") + format_double(c);
        throw UsageError("boundary file has no value for node (" + where + ")");
    };
}

int run_algebra(const Common& c, int trials) {
    const auto rep = suites::algebra_suite(c.n, trials, c.seed);
    return emit("algebra-selftest", c, {{"n", c.n}, {"trials", trials}}, rep);
}

int run_kernel(const Common& c, bool weak) {
    const double p = c.p.value_or(2.0);
    const auto rep = weak ? suites::weak_form_suite(c.n, p, c.seed) : suites::kernel_residual_suite(c.n, p, c.seed);
    return emit("kernel-residual", c, {{"n", c.n}, {"p", p}, {"weak", weak}}, rep);
}

int run_covariance(const Common& c, const std::string& theorem, const std::string& mobius_expr, int order, int cells, bool refine) {
    const json config = {{"theorem", theorem}, {"n", c.n}, {"p", c.p ? json(*c.p) : json(nullptr)}, {"mobius", mobius_expr},
                         {"quad_order", order}, {"cells", cells}, {"refine", refine}};
    if (theorem == "lemma1" || theorem == "invariance") {
        std::vector<std::pair<std::string, VahlenMatrix>> maps;
        if (mobius_expr.empty()) maps = suites::standard_maps(c.n);
        else maps.emplace_back(mobius_expr, parse_mobius(mobius_expr, c.n));
        SuiteReport rep;
        for (const auto& [label, M] : maps)
            rep.append(theorem == "lemma1" ? suites::lemma1_suite(c.n, label, M, 10, c.seed)
                                           : suites::invariance_suite(c.n, label, M, c.p.value_or(2.5), 20, c.seed));
        rep.name = theorem;
        return emit("covariance", c, config, rep);
    }
    int t = 0;
    if (theorem == "1") t = 1;
    else if (theorem == "2") t = 2;
    else if (theorem == "3") t = 3;
    else if (theorem == "4") t = 4;
    else throw UsageError("--theorem must be 1, 2, 3, 4, lemma1 or invariance");
    const double n = c.n;
    if ((t == 1 || t == 2) && c.p && *c.p != n) throw UsageError("theorems 1 and 2 are stated for p = n");
    const double p = c.p.value_or(n);
    ExperimentOptions opt;
    opt.rule = {order, cells};
    opt.refine = refine;
    const auto M = parse_mobius(mobius_expr.empty() ? "inversion" : mobius_expr, c.n);
    return emit("covariance", c, config, suites::covariance_suite(t, c.n, p, M, opt, c.seed));
}

int run_solve(const Common& c, const std::string& region, const std::string& h_text, const std::string& bc, const std::string& eps_text,
              int max_iter, double epsilon, bool full, bool gd, const std::string& diagnostics_path) {
    const double p = c.p.value_or(2.0);
    const double h = parse_number(h_text);
    const int n = c.n;
    std::shared_ptr<const LatticeDomain> domain;
    if (region == "box" || region.rfind("box:", 0) == 0) {
        double a = 0.0, b = 1.0;
        if (region != "box") {
            const auto v = parse_list(region.substr(4));
            if (v.size() != 2) throw UsageError("--region box:a,b needs two numbers");
            a = v[0];
            b = v[1];
        }
        domain = std::make_shared<const LatticeDomain>(LatticeDomain::box(Point(static_cast<std::size_t>(n), a), Point(static_cast<std::size_t>(n), b), h));
    } else if (region.rfind("annulus:", 0) == 0) {
        const auto v = parse_list(region.substr(8));
        if (v.size() != 2) throw UsageError("--region annulus:a,b needs two radii");
        domain = std::make_shared<const LatticeDomain>(LatticeDomain::annulus(n, v[0], v[1], h));
    } else {
        throw UsageError("--region must be box, box:a,b or annulus:a,b");
    }

    BoundaryFunction boundary;
    std::optional<BoundaryFunction> exact;
    if (bc == "radial") {
        const auto r = p_harmonic_radial(n, p);
        boundary = [r](std::span<const double> x) { return r.eval(x); };
        exact = boundary;
    } else if (bc == "linear") {
        boundary = [n](std::span<const double> x) {
            double v = 0.5;
            for (int j = 0; j < n; ++j) v += (j % 2 ? -1.0 : 1.0) * (j + 1) * x[static_cast<std::size_t>(j)];
            return Multivector::scalar(n, v);
        };
        exact = boundary;
    } else if (bc.rfind("file:", 0) == 0) {
        boundary = file_boundary(bc.substr(5), n, h);
    } else {
        throw UsageError("--bc must be radial, linear or file:<path>");
    }

    SolverConfig cfg;
    cfg.p = p;
    cfg.epsilon = p < 2.0 ? epsilon : 0.0;
    if (!eps_text.empty()) cfg.eps_schedule = parse_list(eps_text);
    if (max_iter > 0) cfg.max_iterations = max_iter;
    if (gd) cfg.method = Optimizer::gradient_descent;
    const int comps = full ? (1 << n) : 1;
    const auto res = solve_dirichlet(domain, boundary, cfg, comps);
    const auto& d = res.diagnostics;

    SuiteReport rep;
    rep.name = "solve";
    for (int j = 0; j < n; ++j) rep.table.columns.push_back("x" + std::to_string(j + 1));
    rep.table.columns.push_back("free");
    for (int k = 0; k < comps; ++k) rep.table.columns.push_back("c" + std::to_string(k));
    for (std::size_t idx = 0; idx < domain->grid_size(); ++idx) {
        if (!domain->in_node_set(idx)) continue;
        std::vector<Cell> row;
        for (double x : domain->coords(idx)) row.emplace_back(x);
        row.emplace_back(domain->is_free(idx) ? 1.0 : 0.0);
        for (double v : res.u.at(idx)) row.emplace_back(v);
        rep.table.add(std::move(row));
    }
    rep.checks.push_back(Check::flag("solver converged", d.converged));
    rep.checks.push_back(Check::flag("energy decreases on every accepted step", d.monotone()));
    if (exact) {
        rep.checks.push_back(Check::info("max relative error against the closed form", max_relative_error(res.u, *exact)));
        rep.checks.push_back(Check::info("max absolute error against the closed form", max_abs_error(res.u, *exact)));
    }
    json diag = {{"iterations", d.iterations}, {"final_energy", d.final_energy}, {"final_gradient_sup", d.final_gradient_sup},
                 {"tolerance", d.tolerance}, {"converged", d.converged}, {"stalled", d.stalled}, {"monotone", d.monotone()},
                 {"eps_stages", d.eps_stages}, {"energy_history", d.energy_history}, {"gradient_history", d.gradient_history}};
    const json config = {{"n", n}, {"p", p}, {"region", region}, {"h", h}, {"bc", bc}, {"eps_schedule", cfg.schedule()},
                         {"max_iter", cfg.max_iterations}, {"components", comps}, {"optimizer", gd ? "gradient_descent" : "conjugate_gradient"}};
    if (c.format == "json") {
        json doc = {{"subcommand", "solve"}, {"version", kVersion}, {"seed", c.seed}, {"config", config}, {"diagnostics", diag}};
        const json t = table_json(rep.table);
        doc["columns"] = t["columns"];
        doc["rows"] = t["rows"];
        doc["checks"] = checks_json(rep.checks);
        doc["passed"] = rep.passed();
        write_output(c.out, doc.dump(2) + "\n");
    } else {
        write_output(c.out, to_csv(rep.table));
        std::string dpath = diagnostics_path;
        if (dpath.empty() && !c.out.empty() && c.out != "-") dpath = c.out + ".diagnostics.json";
        if (!dpath.empty()) {
            json doc = {{"subcommand", "solve"}, {"version", kVersion}, {"config", config}, {"diagnostics", diag}, {"checks", checks_json(rep.checks)}};
            write_output(dpath, doc.dump(2) + "\n");
        }
    }
    print_checks(rep.checks);
    return rep.passed() ? 0 : 1;
}

int run_sphere(const Common& c, const std::string& y_text, double theta) {
    const double p = c.p.value_or(2.0);
    Point y(static_cast<std::size_t>(c.n + 1), 0.0);
    if (y_text.empty()) y.back() = 1.0;
    else y = parse_list(y_text);
    if (static_cast<int>(y.size()) != c.n + 1) throw UsageError("--y needs n + 1 coordinates");
    const auto rep = suites::sphere_suite(c.n, p, SpherePoint::normalized(y), theta, c.seed);
    return emit("sphere-check", c, {{"n", c.n}, {"p", p}, {"y", y}, {"theta", theta}}, rep);
}

int run_cr(const Common& c) {
    const double p = c.p.value_or(2.0);
    return emit("cr-check", c, {{"p", p}}, suites::cr_suite(p, c.seed));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for nonlinear Dirac operators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;

    auto* alg = app.add_subcommand("algebra-selftest", "random property checks of Cl_n, Pin(n) and the Lipschitz group");
    int trials = 1000;
    add_common(alg, common, 4);
    alg->add_option("--trials", trials, "random samples per property")->capture_default_str();

    auto* ker = app.add_subcommand("kernel-residual", "strong (or weak) residuals of the closed-form p-Dirac and p-harmonic solutions");
    bool weak = false;
    add_common(ker, common, 3);
    ker->add_flag("--weak", weak, "weak residuals against the bump test set instead");

    auto* cov = app.add_subcommand("covariance", "conformal covariance experiments under a Moebius map");
    std::string theorem = "1", mobius_expr;
    int order = 12, cells = 8;
    bool refine = false;
    add_common(cov, common, 3);
    cov->add_option("--theorem", theorem, "1, 2, 3, 4, lemma1 or invariance")->capture_default_str();
    cov->add_option("--mobius", mobius_expr, "map, e.g. inversion or inversion*translate:1,0,0 (default inversion)");
    cov->add_option("--quad-order", order, "Gauss points per cell")->capture_default_str();
    cov->add_option("--cells", cells, "cells per axis")->capture_default_str();
    cov->add_flag("--refine", refine, "also evaluate with doubled Gauss order");

    auto* sol = app.add_subcommand("solve", "Dirichlet problem for the discrete p-Dirichlet energy");
    std::string region = "annulus:1,2", h_text = "1/32", bc = "radial", eps_text, diag_path;
    int max_iter = 0;
    double epsilon = 1e-3;
    bool full = false, gd = false;
    add_common(sol, common, 2);
    sol->set_help_flag("--help", "print this help message and exit"); // frees -h for the grid spacing
    sol->add_option("--region", region, "box, box:a,b or annulus:a,b")->capture_default_str();
    sol->add_option("--h", h_text, "grid spacing, e.g. 0.03125 or 1/32")->capture_default_str();
    sol->add_option("--bc", bc, "radial, linear or file:<path>")->capture_default_str();
    sol->add_option("--eps-schedule", eps_text, "comma-separated regularisation stages");
    sol->add_option("--eps", epsilon, "final regularisation for p < 2")->capture_default_str();
    sol->add_option("--max-iter", max_iter, "iteration limit over all stages");
    sol->add_flag("--full", full, "solve for all 2^n Clifford components");
    sol->add_flag("--gd", gd, "plain gradient descent instead of conjugate gradients");
    sol->add_option("--diagnostics", diag_path, "diagnostics JSON path (csv format; default <out>.diagnostics.json)");

    auto* sph = app.add_subcommand("sphere-check", "spherical Dirac operator checks on S^n");
    std::string y_text;
    double theta = 1e-3;
    add_common(sph, common, 2);
    sph->add_option("--y", y_text, "pole y as n+1 comma-separated coordinates (default e_{n+1})");
    sph->add_option("--theta", theta, "angular step")->capture_default_str();

    auto* cr = app.add_subcommand("cr-check", "p-Cauchy-Riemann checks in the plane");
    add_common(cr, common, 2);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config(std::move(args));
        std::reverse(args.begin(), args.end()); // CLI11 consumes the vector from the back
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*alg) return run_algebra(common, trials);
        if (*ker) return run_kernel(common, weak);
        if (*cov) return run_covariance(common, theorem, mobius_expr, order, cells, refine);
        if (*sol) return run_solve(common, region, h_text, bc, eps_text, max_iter, epsilon, full, gd, diag_path);
        if (*sph) return run_sphere(common, y_text, theta);
        if (*cr) return run_cr(common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        // ContractViolation and ParameterError: the requested configuration is invalid
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        // hypothesis, pole or stencil violations caused by the chosen geometry
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
