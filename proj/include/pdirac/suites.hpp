#pragma once

/// Verification suites shared by the command-line runner and the acceptance binary.
///
/// Each suite returns a table of measurements plus a list of checks. A check either
/// gates the suite (it must pass) or is informational (a measured quantity that is
/// reported without a pass/fail expectation).

#include "pdirac/calculus.hpp"
#include "pdirac/cauchy_riemann.hpp"
#include "pdirac/clifford.hpp"
#include "pdirac/mobius.hpp"
#include "pdirac/quadrature.hpp"
#include "pdirac/solver.hpp"
#include "pdirac/sphere.hpp"
#include "pdirac/test_function.hpp"
#include "pdirac/weak_form.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace pdirac {

struct Check {
    enum class Kind { at_most, at_least, flag, info };

    std::string name;
    double value = 0.0;
    double bound = 0.0;
    Kind kind = Kind::at_most;

    static Check at_most(std::string name, double v, double tol) { return {std::move(name), v, tol, Kind::at_most}; }
    static Check at_least(std::string name, double v, double lo) { return {std::move(name), v, lo, Kind::at_least}; }
    static Check flag(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, 1.0, Kind::flag}; }
    static Check info(std::string name, double v) { return {std::move(name), v, std::numeric_limits<double>::quiet_NaN(), Kind::info}; }

    bool gating() const { return kind != Kind::info; }
    bool passed() const {
        switch (kind) {
        case Kind::at_most: return value <= bound; // NaN fails
        case Kind::at_least: return value >= bound;
        case Kind::flag: return value == 1.0;
        case Kind::info: return true;
        }
        return false;
    }
    const char* relation() const {
        switch (kind) {
        case Kind::at_most: return "<=";
        case Kind::at_least: return ">=";
        case Kind::flag: return "==";
        case Kind::info: return "info";
        }
        return "?";
    }
};

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw ContractViolation("Table::add: row width differs from the header");
        rows.push_back(std::move(row));
    }
};

struct SuiteReport {
    std::string name;
    Table table;
    std::vector<Check> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
    }
    void append(const SuiteReport& other) {
        if (table.columns.empty()) table.columns = other.table.columns;
        if (other.table.columns == table.columns) table.rows.insert(table.rows.end(), other.table.rows.begin(), other.table.rows.end());
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    }
};

namespace suites {

namespace detail {

inline Multivector random_multivector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Multivector m(n);
    for (auto& c : m.coeffs()) c = g(rng);
    return m;
}

inline Point random_point(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Point v(static_cast<std::size_t>(n));
    for (auto& c : v) c = g(rng);
    return v;
}

inline Multivector random_unit_vector(int n, std::mt19937_64& rng) {
    const Multivector v = Multivector::from_vector(random_point(n, rng));
    return v / norm(v);
}

/// Reference blade product: concatenate index lists, bubble-sort counting
/// transpositions, then cancel equal neighbours with e_j e_j = -1.
inline std::pair<double, Blade> blade_product_by_sorting(Blade a, Blade b) {
    std::vector<int> idx;
    for (int k = 0; k < 32; ++k)
        if (a >> k & 1u) idx.push_back(k);
    for (int k = 0; k < 32; ++k)
        if (b >> k & 1u) idx.push_back(k);
    double sign = 1.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
            if (idx[j] > idx[j + 1]) {
                std::swap(idx[j], idx[j + 1]);
                sign = -sign;
            }
    Blade out = 0;
    for (std::size_t i = 0; i < idx.size();) {
        if (i + 1 < idx.size() && idx[i] == idx[i + 1]) {
            sign = -sign;
            i += 2;
        } else {
            out |= Blade{1} << idx[i];
            ++i;
        }
    }
    return {sign, out};
}

/// Records the running maximum of a quantity, as one table row and one check.
struct MaxTracker {
    std::string name;
    double tolerance;
    double worst = 0.0;
    long count = 0;

    void add(double v) {
        worst = std::max(worst, std::isnan(v) ? std::numeric_limits<double>::infinity() : v);
        ++count;
    }
};

inline void emit(SuiteReport& rep, const MaxTracker& t, int n) {
    rep.table.add({t.name, double(n), double(t.count), t.worst, t.tolerance});
    rep.checks.push_back(Check::at_most(t.name + " n=" + std::to_string(n), t.worst, t.tolerance));
}

inline Point unit_axis(int n, int j, double s = 1.0) {
    Point v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(j)] = s;
    return v;
}

} // namespace detail

/// Ring axioms, involution laws, norm identities, the blade-sign oracle, and
/// reflection / Pin / Lipschitz-norm properties in Cl_n.
inline SuiteReport algebra_suite(int n, int trials = 1000, std::uint64_t seed = 42) {
    if (n < 1 || n > kMaxDim) throw ParameterError("algebra_suite: n must lie in [1, " + std::to_string(kMaxDim) + "]");
    if (trials < 1) throw ParameterError("algebra_suite: trials must be positive");
    SuiteReport rep;
    rep.name = "algebra";
    rep.table.columns = {"property", "n", "samples", "max_value", "tolerance"};
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(n));
    using detail::MaxTracker;
    MaxTracker assoc{"associativity", 1e-12}, rev{"reversion_anti_automorphism", 1e-12}, conj{"conjugation_anti_automorphism", 1e-12},
        inv{"grade_involution_automorphism", 1e-12}, nrm{"norm_identity", 1e-12}, vsq{"vector_square", 1e-12};
    for (int t = 0; t < trials; ++t) {
        const auto a = detail::random_multivector(n, rng), b = detail::random_multivector(n, rng), c = detail::random_multivector(n, rng);
        const double ab = norm(a) * norm(b);
        assoc.add(norm((a * b) * c - a * (b * c)) / (ab * norm(c)));
        rev.add(norm(reversion(a * b) - reversion(b) * reversion(a)) / ab);
        conj.add(norm(conjugation(a * b) - conjugation(b) * conjugation(a)) / ab);
        inv.add(norm(grade_involution(a * b) - grade_involution(a) * grade_involution(b)) / ab);
        nrm.add(std::abs(scalar_part(conjugation(a) * a) - norm_squared(a)) / norm_squared(a));
        const auto x = Multivector::from_vector(detail::random_point(n, rng));
        const auto xx = x * x;
        vsq.add((std::abs(xx[0] + norm_squared(x)) + xx.off_grade_mass(0)) / norm_squared(x));
    }
    for (const auto* t : {&assoc, &rev, &conj, &inv, &nrm, &vsq}) detail::emit(rep, *t, n);

    // the dense product on basis blades against the sorting oracle, exactly
    if (n <= 6) {
        long mismatches = 0, pairs = 0;
        for (Blade a = 0; a < (Blade{1} << n); ++a)
            for (Blade b = 0; b < (Blade{1} << n); ++b) {
                const auto [s, blade] = detail::blade_product_by_sorting(a, b);
                if (!(Multivector::blade(n, a) * Multivector::blade(n, b) == Multivector::blade(n, blade, s))) ++mismatches;
                ++pairs;
            }
        rep.table.add({"blade_oracle_mismatches", double(n), double(pairs), double(mismatches), 0.0});
        rep.checks.push_back(Check::at_most("blade_oracle_mismatches n=" + std::to_string(n), double(mismatches), 0.0));
    }

    // e_j x e_j flips the e_j component and keeps the rest, bit for bit
    long refl_mismatch = 0;
    MaxTracker refl{"reflection_formula", 1e-14}, pin{"pin_dot_products", 1e-12}, lip{"lipschitz_norm_multiplicative", 1e-12};
    for (int t = 0; t < std::min(trials, 200); ++t) {
        const Point xv = detail::random_point(n, rng);
        const auto x = Multivector::from_vector(xv);
        for (int j = 1; j <= n; ++j) {
            Point flipped = xv;
            flipped[static_cast<std::size_t>(j - 1)] = -flipped[static_cast<std::size_t>(j - 1)];
            if (!(reflect(Multivector::basis_vector(n, j), x) == Multivector::from_vector(flipped))) ++refl_mismatch;
        }
        // y x y = x - 2 (x . y) y for a unit vector y
        const auto y = detail::random_unit_vector(n, rng);
        refl.add(norm(reflect(y, x) - (x - y * (2.0 * coeff_dot(x, y)))) / norm(x));
        // Pin(n) acts orthogonally
        std::uniform_int_distribution<int> len(1, 4);
        std::vector<Multivector> unit;
        for (int k = len(rng); k > 0; --k) unit.push_back(detail::random_unit_vector(n, rng));
        const VectorFactorList pin_el(unit);
        const auto z = Multivector::from_vector(detail::random_point(n, rng));
        pin.add(std::abs(coeff_dot(pin_action(pin_el, x), pin_action(pin_el, z)) - coeff_dot(x, z)) / (norm(x) * norm(z)));
        // |a A| = |a| |A| for a in the Lipschitz group
        std::vector<Multivector> raw;
        for (int k = len(rng); k > 0; --k) raw.push_back(Multivector::from_vector(detail::random_point(n, rng)));
        const Multivector la = VectorFactorList(raw).product();
        const auto A = detail::random_multivector(n, rng);
        lip.add(std::abs(norm(la * A) - norm(la) * norm(A)) / (norm(la) * norm(A)));
    }
    rep.table.add({"basis_reflection_mismatches", double(n), double(std::min(trials, 200) * n), double(refl_mismatch), 0.0});
    rep.checks.push_back(Check::at_most("basis_reflection_mismatches n=" + std::to_string(n), double(refl_mismatch), 0.0));
    for (const auto* t : {&refl, &pin, &lip}) detail::emit(rep, *t, n);
    return rep;
}

/// `count` points with |x| uniform in [r0, r1] and uniformly random direction.
inline std::vector<Point> shell_samples(int n, int count, double r0, double r1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(r0, r1);
    std::vector<Point> out;
    while (static_cast<int>(out.size()) < count) {
        Point v = detail::random_point(n, rng);
        const double len = euclidean_norm(v);
        if (len < 1e-6) continue;
        const double r = uni(rng);
        for (auto& c : v) c *= r / len;
        out.push_back(std::move(v));
    }
    return out;
}

/// Strong residuals of the closed-form p-Dirac and p-harmonic solutions, and the
/// convergence order of the p-Dirac residual without Richardson extrapolation.
inline SuiteReport kernel_residual_suite(int n, double p, std::uint64_t seed = 42) {
    if (n < 2 || n > 6) throw ParameterError("kernel_residual_suite: n must lie in [2, 6]");
    pdirac::detail::require_p(p);
    SuiteReport rep;
    rep.name = "kernel-residual";
    rep.table.columns = {"quantity", "h", "residual", "fitted_order"};
    const auto f = p_dirac_solution(n, p);
    const auto h = p_harmonic_radial(n, p);
    const auto pts = shell_samples(n, 20, 1.0, 3.0, seed);

    double strong = 0.0, harmonic = 0.0;
    for (const auto& x : pts) {
        strong = std::max(strong, norm(p_dirac_residual(f, p, x, 1e-3)));
        harmonic = std::max(harmonic, norm(p_harmonic_residual(h, p, x, 1e-3)));
    }
    std::vector<std::pair<double, double>> series;
    for (double step : {0.1, 0.05, 0.025, 0.0125}) {
        double worst = 0.0;
        for (const auto& x : pts) worst = std::max(worst, norm(p_dirac_residual(f, p, x, step, false)));
        series.emplace_back(step, worst);
    }
    const double order = convergence_order(series);
    for (const auto& [step, r] : series) rep.table.add({"p_dirac_plain", step, r, order});
    rep.table.add({"p_dirac_richardson", 1e-3, strong, std::numeric_limits<double>::quiet_NaN()});
    rep.table.add({"p_harmonic_richardson", 1e-3, harmonic, std::numeric_limits<double>::quiet_NaN()});

    const std::string tag = " n=" + std::to_string(n) + " p=" + std::to_string(p).substr(0, 4);
    rep.checks.push_back(Check::at_most("p-Dirac strong residual" + tag, strong, 1e-8));
    rep.checks.push_back(Check::at_most("p-harmonic strong residual" + tag, harmonic, 1e-6));
    rep.checks.push_back(Check::at_most("|fitted order - 2|" + tag, std::abs(order - 2.0), 0.3));
    return rep;
}

/// The weak-form engine: the divergence theorem for every test bump, the weak residuals
/// of the closed-form solutions, and their decrease under doubling of the Gauss order.
inline SuiteReport weak_form_suite(int n, double p, std::uint64_t seed = 42) {
    if (n < 2 || n > 4) throw ParameterError("weak_form_suite: n must lie in [2, 4]");
    pdirac::detail::require_p(p);
    SuiteReport rep;
    rep.name = "weak-form";
    rep.table.columns = {"quantity", "eta", "normalized", "normalized_coarse", "ratio"};
    Point c(static_cast<std::size_t>(n), 0.0);
    c[0] = 1.5;
    c[1] = 0.3;
    const auto U = Domain::ball(c, 0.6);
    const auto etas = make_test_set(U, seed);
    const QuadratureRule fine = default_rule(n);
    const QuadratureRule coarse{fine.order / 2, fine.cells};
    const auto f = p_dirac_solution(n, p);
    const auto h = p_harmonic_radial(n, p);
    const std::string tag = " n=" + std::to_string(n) + " p=" + std::to_string(p).substr(0, 4);

    double div = 0.0, wd = 0.0, wh = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < etas.size(); ++i) {
        const auto& eta = etas[i];
        Point lo = eta.center, hi = eta.center;
        for (auto& v : lo) v -= eta.radius;
        for (auto& v : hi) v += eta.radius;
        const std::size_t blades = std::size_t{1} << n;
        const auto s = integrate_box(lo, hi, fine, blades + 1, [&](std::span<const double> x, double w, std::span<double> acc) {
            const Multivector d = eta.dirac(x);
            for (std::size_t b = 0; b < blades; ++b) acc[b] += w * d[static_cast<Blade>(b)];
            acc[blades] += w * norm(d);
        });
        const double dn = norm(Multivector::from_coeffs(n, std::span<const double>(s.data(), blades))) / s[blades];
        div = std::max(div, dn);
        rep.table.add({"integral_of_D_eta", double(i), dn, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()});

        auto record = [&](const char* what, double fine_v, double coarse_v, double& worst) {
            worst = std::max(worst, fine_v);
            // a residual already at rounding level cannot shrink further
            const double ratio = fine_v < 1e-12 ? std::numeric_limits<double>::infinity() : coarse_v / fine_v;
            worst_ratio = std::min(worst_ratio, ratio);
            rep.table.add({what, double(i), fine_v, coarse_v, ratio});
        };
        record("weak_p_dirac", weak_p_dirac_residual(f, p, U, eta, fine).normalized(),
               weak_p_dirac_residual(f, p, U, eta, coarse).normalized(), wd);
        record("weak_p_harmonic", weak_p_harmonic_residual(h, p, U, eta, fine).normalized(),
               weak_p_harmonic_residual(h, p, U, eta, coarse).normalized(), wh);
    }
    rep.checks.push_back(Check::at_most("normalized integral of D eta" + tag, div, 1e-10));
    rep.checks.push_back(Check::at_most("weak p-Dirac residual" + tag, wd, 1e-6));
    rep.checks.push_back(Check::at_most("weak p-harmonic residual" + tag, wh, 1e-6));
    rep.checks.push_back(Check::at_least("min decrease under order doubling" + tag, worst_ratio, 10.0));
    return rep;
}

/// Geometry for the covariance experiments: V = ball(0.375 e1, 0.125) and a field
/// singularity placed well outside M(V), at M(c) + 1.6 R e2 with R the image radius.
struct CovarianceGeometry {
    Domain V;
    Point singularity;
};

inline CovarianceGeometry covariance_geometry(const VahlenMatrix& M, int n) {
    Point c(static_cast<std::size_t>(n), 0.0);
    c[0] = 0.375;
    const double r = 0.125;
    const Point mc = map_point(M, c);
    double R = 0.0;
    for (int j = 0; j < n; ++j)
        for (double s : {-1.0, 1.0}) {
            Point x = c;
            x[static_cast<std::size_t>(j)] += s * r;
            R = std::max(R, distance(map_point(M, x), mc));
        }
    Point y = mc;
    y[1] += 1.6 * R;
    return {Domain::ball(c, r), y};
}

inline SuiteReport covariance_table(const CovarianceReport& r) {
    SuiteReport rep;
    rep.table.columns = {"theorem", "n", "p", "exponent", "eta", "residual", "normalization", "normalized", "normalized_refined",
                         "quadrature_warning"};
    for (const auto& row : r.rows)
        rep.table.add({double(row.theorem), double(row.n), row.p, row.exponent, double(row.eta_id), row.residual, row.normalization,
                       row.normalized, row.normalized_refined, double(row.quadrature_warning)});
    return rep;
}

/// Conformal covariance of weak solutions under the Moebius map M.
/// theorem 1: n-Dirac solution; 3: weighted p-Dirac; 2: unweighted D_M form of the
/// n-harmonic log; 4: weight-exponent scan for the p-harmonic radial solution.
inline SuiteReport covariance_suite(int theorem, int n, double p, const VahlenMatrix& M, const ExperimentOptions& opt = {},
                                    std::uint64_t seed = 42) {
    if (n < 2 || n > 6) throw ParameterError("covariance_suite: n must lie in [2, 6]");
    pdirac::detail::require_p(p);
    const auto geo = covariance_geometry(M, n);
    const auto etas = make_test_set(geo.V, seed);
    const std::string tag = " n=" + std::to_string(n) + " p=" + std::to_string(p).substr(0, 4);
    SuiteReport rep;
    switch (theorem) {
    case 1: {
        const auto r = theorem1_experiment(p_dirac_solution(n, n, geo.singularity), M, geo.V, etas, opt);
        rep = covariance_table(r);
        rep.checks.push_back(Check::at_most("theorem 1 max normalized residual" + tag, r.max_normalized(), 1e-5));
        break;
    }
    case 3: {
        const auto r = theorem3_experiment(p_dirac_solution(n, p, geo.singularity), p, M, geo.V, etas, opt);
        rep = covariance_table(r);
        rep.checks.push_back(Check::at_most("theorem 3 max normalized residual" + tag, r.max_normalized(), 1e-5));
        break;
    }
    case 2: {
        const auto r = theorem2_experiment(p_harmonic_radial(n, n, geo.singularity), M, geo.V, etas, opt);
        rep = covariance_table(r);
        rep.checks.push_back(Check::at_most("theorem 2 max normalized residual n=" + std::to_string(n), r.max_normalized(), 1e-5));
        break;
    }
    case 4: {
        const auto exps = default_exponent_scan(p, n);
        const auto r = theorem4_experiment(p_harmonic_radial(n, p, geo.singularity), p, M, geo.V, etas, opt);
        rep = covariance_table(r);
        const std::size_t expected = etas.size() * (exps.size() + (p == double(n) ? 1 : 0));
        const bool finite = std::all_of(r.rows.begin(), r.rows.end(), [](const CovarianceRow& row) { return std::isfinite(row.normalized); });
        rep.checks.push_back(Check::flag("theorem 4 table complete and finite" + tag, r.rows.size() == expected && finite));
        for (double s : exps) rep.checks.push_back(Check::info("theorem 4 max normalized, exponent " + std::to_string(s).substr(0, 5) + tag,
                                                               r.max_normalized(4, s)));
        break;
    }
    default: throw ParameterError("covariance_suite: theorem must be 1, 2, 3 or 4");
    }
    rep.name = "covariance";
    return rep;
}

/// A smooth test field on all of R^n (no singular set).
inline AnalyticField smooth_probe_field(int n) {
    AnalyticField f;
    f.dim = n;
    f.eval = [n](std::span<const double> y) {
        const Multivector v = Multivector::from_vector(y);
        const double r2 = norm_squared(v);
        Multivector out = v * Multivector::blade(n, 0b11, 1.0) * std::exp(-0.3 * r2);
        out[0] += std::sin(y[0]) * std::cos(0.5 * y[n - 1]);
        return out;
    };
    return f;
}

/// The four standard maps, as (label, map) pairs.
inline std::vector<std::pair<std::string, VahlenMatrix>> standard_maps(int n) {
    Point t(static_cast<std::size_t>(n), 0.0);
    t[0] = 0.2;
    t[1] = -0.3;
    if (n > 2) t[2] = 0.4;
    return {{"translation", mobius::translation(t)},
            {"dilation", mobius::dilation(n, 2.0)},
            {"inversion", mobius::inversion(n)},
            {"inversion*translation", mobius::inversion(n) * mobius::translation(detail::unit_axis(n, 0))}};
}

/// The transformation law of D under M, and D J_1 = 0, at `points` sample points.
inline SuiteReport lemma1_suite(int n, const std::string& label, const VahlenMatrix& M, int points = 10, std::uint64_t seed = 42) {
    SuiteReport rep;
    rep.name = "lemma1";
    rep.table.columns = {"map", "point", "lemma1_discrepancy", "dj1", "lhs_norm"};
    const auto psi = smooth_probe_field(n);
    std::mt19937_64 rng(seed);
    Point c(static_cast<std::size_t>(n), 0.0);
    c[0] = 0.6;
    c[1] = 0.3;
    const auto ball = Domain::ball(c, 0.5);
    double worst_l = 0.0, worst_j = 0.0;
    int k = 0;
    while (k < points) {
        const Point x = ball.sample(rng);
        if (norm(M.c * Multivector::from_vector(x) + M.d) < 0.3) continue;
        const auto l = lemma1_check(M, psi, x);
        const double dj = dj1_check(M, x);
        worst_l = std::max(worst_l, l.discrepancy);
        worst_j = std::max(worst_j, dj);
        rep.table.add({label, double(k), l.discrepancy, dj, l.lhs_norm});
        ++k;
    }
    rep.checks.push_back(Check::at_most("transformation law of D, " + label, worst_l, 1e-6));
    rep.checks.push_back(Check::at_most("D J_1 = 0, " + label, worst_j, 1e-6));
    return rep;
}

/// Pointwise scalar-part invariance and |D_M H| = |D H| at `points` points per map.
inline SuiteReport invariance_suite(int n, const std::string& label, const VahlenMatrix& M, double p = 2.5, int points = 20,
                                    std::uint64_t seed = 42) {
    SuiteReport rep;
    rep.name = "invariance";
    rep.table.columns = {"map", "point", "sc_invariance", "norm_frame_identity"};
    Point y0(static_cast<std::size_t>(n), 0.0);
    y0[0] = 0.2;
    y0[1] = -3.0;
    const auto h = p_harmonic_radial(n, p, y0);
    Point ec(static_cast<std::size_t>(n), 0.0);
    ec[0] = 0.6;
    ec[1] = 0.2;
    const BumpTestFunction eta(ec, 0.35, Multivector::scalar(n, 1.0));
    const auto support = Domain::ball(eta.center, 0.9 * eta.radius);
    const auto Minv = inverse(M);
    std::mt19937_64 rng(seed);
    double ws = 0.0, wn = 0.0;
    for (int k = 0; k < points; ++k) {
        const Point y = support.sample(rng);
        const Point x = map_point(Minv, y);
        const double s = sc_invariance_check(h, p, M, eta, x);
        const double q = norm_frame_identity_check(M, h, x);
        ws = std::max(ws, s);
        wn = std::max(wn, q);
        rep.table.add({label, double(k), s, q});
    }
    rep.checks.push_back(Check::at_most("scalar-part invariance, " + label, ws, 1e-8));
    rep.checks.push_back(Check::at_most("norm frame identity, " + label, wn, 1e-8));
    return rep;
}

/// Solver acceptance: gradient against finite differences, the radial annulus
/// recovery with its refinement ratio, the p = 2 harmonic quadratic and monotone descent.
inline SuiteReport solver_suite(std::uint64_t seed = 42) {
    SuiteReport rep;
    rep.name = "solver";
    rep.table.columns = {"quantity", "h", "p", "value"};
    auto box = [](double h) {
        return std::make_shared<const LatticeDomain>(LatticeDomain::box(Point{0.0, 0.0}, Point{1.0, 1.0}, h));
    };
    auto scalar = [](std::function<double(std::span<const double>)> f) -> BoundaryFunction {
        return [f](std::span<const double> x) { return Multivector::scalar(2, f(x)); };
    };
    bool monotone = true;

    // gradient vs Richardson central differences of the energy
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        const auto d = box(0.125);
        double worst = 0.0;
        for (int comps : {1, 4})
            for (double p : {1.5, 2.0, 3.0}) {
                LatticeField u(d, comps);
                for (std::size_t x = 0; x < d->grid_size(); ++x)
                    if (d->in_node_set(x))
                        for (auto& v : u.at(x)) v = g(rng);
                const auto grad = energy_gradient(u, p, 1e-3);
                const auto& free = d->free_nodes();
                std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1), comp(0, static_cast<std::size_t>(comps) - 1);
                for (int k = 0; k < 20; ++k) {
                    const std::size_t idx = free[pick(rng)] * static_cast<std::size_t>(comps) + comp(rng);
                    LatticeField w = u;
                    const double v0 = w.values[idx];
                    auto at = [&](double t) {
                        w.values[idx] = v0 + t;
                        return discrete_energy(w, p, 1e-3);
                    };
                    const double d1 = (at(1e-3) - at(-1e-3)) / 2e-3;
                    const double d2 = (at(5e-4) - at(-5e-4)) / 1e-3;
                    const double fd = (4.0 * d2 - d1) / 3.0;
                    worst = std::max(worst, std::abs(grad.values[idx] - fd) / std::abs(fd));
                }
            }
        rep.table.add({"gradient_vs_fd_relative", 0.125, std::numeric_limits<double>::quiet_NaN(), worst});
        rep.checks.push_back(Check::at_most("energy gradient vs finite differences (relative)", worst, 1e-6));
    }

    // n = 2, p = 1.5 annulus with data |x|^((p-n)/(p-1))
    {
        const double p = 1.5, alpha = (p - 2.0) / (p - 1.0);
        const auto exact = scalar([alpha](std::span<const double> x) { return std::pow(std::hypot(x[0], x[1]), alpha); });
        SolverConfig cfg;
        cfg.p = p;
        cfg.epsilon = 1e-3;
        std::vector<double> errs;
        bool converged = true;
        for (double h : {1.0 / 32, 1.0 / 64}) {
            const auto d = std::make_shared<const LatticeDomain>(LatticeDomain::annulus(2, 1.0, 2.0, h));
            const auto res = solve_dirichlet(d, exact, cfg);
            converged = converged && res.diagnostics.converged;
            monotone = monotone && res.diagnostics.monotone();
            errs.push_back(max_relative_error(res.u, exact));
            rep.table.add({"annulus_max_relative_error", h, p, errs.back()});
        }
        rep.checks.push_back(Check::flag("annulus solves converged", converged));
        rep.checks.push_back(Check::at_most("annulus max relative error at h = 1/32", errs[0], 0.05));
        rep.checks.push_back(Check::at_least("annulus error reduction 1/32 -> 1/64", errs[0] / errs[1], 2.5));
    }

    // p = 2 harmonic quadratic on the unit square
    {
        const auto q = scalar([](std::span<const double> x) { return x[0] * x[0] - x[1] * x[1]; });
        SolverConfig cfg;
        const auto res = solve_dirichlet(box(1.0 / 16), q, cfg);
        monotone = monotone && res.diagnostics.monotone();
        const double err = max_abs_error(res.u, q);
        rep.table.add({"harmonic_quadratic_max_error", 1.0 / 16, 2.0, err});
        rep.checks.push_back(Check::flag("harmonic quadratic solve converged", res.diagnostics.converged));
        rep.checks.push_back(Check::at_most("harmonic quadratic max error", err, 1e-6));
    }
    rep.checks.push_back(Check::flag("energy decreases on every accepted step", monotone));
    return rep;
}

/// Point on S^n from ambient coordinates (normalized).
inline SpherePoint sphere_point(std::span<const double> v) { return SpherePoint::normalized(v); }

/// D_S kernel residuals, the weak spherical residual, the shifted-operator and
/// p-spherical-harmonic reports, and the Cayley ratio test.
inline SuiteReport sphere_suite(int n, double p, const SpherePoint& y, double theta = 1e-3, std::uint64_t seed = 42) {
    if (n < 2 || n > 5) throw ParameterError("sphere_suite: n must lie in [2, 5]");
    pdirac::detail::require_p(p);
    if (y.sphere_dim() != n) throw ParameterError("sphere_suite: y must have n + 1 coordinates");
    SuiteReport rep;
    rep.name = "sphere";
    rep.table.columns = {"section", "item", "key", "value"};
    const std::string tag = " n=" + std::to_string(n) + " p=" + std::to_string(p).substr(0, 4);
    const auto samples = sphere_samples(n, 20, seed, y.x, 0.2);

    // p-spherical Dirac residual of the kernels at 20 points, for p and for p = 2
    std::vector<double> ps{2.0};
    if (p != 2.0) ps.push_back(p);
    for (double q : ps) {
        double worst = 0.0;
        const auto K = spherical_kernel(y, q);
        for (const auto& x : samples) worst = std::max(worst, norm(p_spherical_dirac_residual(K, q, x, theta)));
        rep.table.add({"kernel", "p=" + std::to_string(q).substr(0, 4), "max_residual", worst});
        rep.checks.push_back(Check::at_most("D_S p-kernel residual n=" + std::to_string(n) + " p=" + std::to_string(q).substr(0, 4), worst, 1e-6));
    }

    // weak residual on a cap around the antipode of y
    {
        Point a = y.x;
        for (auto& v : a) v = -v;
        const Cap U(SpherePoint(a), 0.6);
        const auto K = spherical_kernel(y, p);
        double worst = 0.0;
        const auto etas = make_cap_test_set(U, seed);
        for (std::size_t i = 0; i < etas.size(); ++i) {
            const double r = weak_spherical_residual(K, p, U, etas[i]).normalized();
            worst = std::max(worst, r);
            rep.table.add({"weak", "eta=" + std::to_string(i), "normalized", r});
        }
        rep.checks.push_back(Check::at_most("weak spherical residual" + tag, worst, 1e-5));
    }

    // (D_S + (p/2) x) |x - y|^(p-n): displayed right side and derived closed form
    {
        std::vector<SpherePoint> xs;
        // a point orthogonal to y, the antipode, and one generic sample
        const std::size_t axis = std::abs(y.x[0]) > 0.9 ? 1 : 0;
        Point o(y.x.size(), 0.0);
        o[axis] = 1.0;
        const double d = y.x[axis];
        for (std::size_t i = 0; i < o.size(); ++i) o[i] -= d * y.x[i];
        xs.push_back(SpherePoint::normalized(o));
        Point anti = y.x;
        for (auto& v : anti) v = -v;
        xs.push_back(SpherePoint(anti));
        xs.push_back(samples.front());
        double worst_closed = 0.0, worst_displayed = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const auto r = lr_identity_check(xs[i], y, p, theta);
            const std::string item = "x" + std::to_string(i);
            rep.table.add({"shifted_operator", item, "discrepancy_displayed", r.discrepancy});
            rep.table.add({"shifted_operator", item, "discrepancy_closed_form", r.closed_form_discrepancy});
            for (std::size_t b = 0; b < r.ratios.size(); ++b)
                if (r.lhs[static_cast<Blade>(b)] != 0.0 || r.rhs_displayed[static_cast<Blade>(b)] != 0.0)
                    rep.table.add({"shifted_operator", item, "ratio_blade_" + std::to_string(b), r.ratios[b]});
            worst_closed = std::max(worst_closed, r.closed_form_discrepancy);
            worst_displayed = std::max(worst_displayed, r.discrepancy);
        }
        rep.checks.push_back(Check::at_most("shifted operator vs derived closed form" + tag, worst_closed, 1e-6));
        rep.checks.push_back(Check::info("shifted operator vs displayed right side" + tag, worst_displayed));
    }

    // D_S |F|^(p-2) F with F = (D_S + (p/2) x) |x - y|^((p-n)/(p-1))
    {
        const std::vector<SpherePoint> xs(samples.begin(), samples.begin() + 5);
        const auto r = spherical_p_harmonic_check(y, p, xs, theta);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::string item = "x" + std::to_string(i);
            rep.table.add({"p_harmonic", item, "residual", r.residuals[i]});
            rep.table.add({"p_harmonic", item, "relative_residual", r.residuals[i] / r.flux_norms[i]});
            rep.table.add({"p_harmonic", item, "inner_vs_closed_form", r.closed_form_inner[i]});
        }
        rep.checks.push_back(Check::info("p-spherical-harmonic relative residual" + tag, r.max_relative()));
    }

    // the flat Cauchy kernel through the Cayley map
    {
        const auto c = cayley_kernel_check(n, 20, seed);
        rep.table.add({"cayley", "n=" + std::to_string(n), "ratio_mean", c.ratio_mean});
        rep.table.add({"cayley", "n=" + std::to_string(n), "ratio_spread", c.ratio_spread});
        rep.table.add({"cayley", "n=" + std::to_string(n), "max_residual", c.max_residual});
        rep.checks.push_back(Check::at_most("Cayley ratio spread n=" + std::to_string(n), c.ratio_spread, 1e-6));
    }
    return rep;
}

/// p-Cauchy-Riemann closed forms, the dbar transfer identity and the weak covariance
/// under f(zeta) = zeta^2 + 3 on the annulus 0.5 < |zeta| < 1.2.
inline SuiteReport cr_suite(double p, std::uint64_t seed = 42) {
    pdirac::detail::require_p(p);
    SuiteReport rep;
    rep.name = "cr";
    rep.table.columns = {"section", "item", "value"};
    const std::string tag = " p=" + std::to_string(p).substr(0, 4);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, 2.0 * std::numbers::pi);
    const auto g = p_cr_solution(p);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Complex z = std::polar(rad(rng), ang(rng));
        const double r = std::abs(p_cr_residual(g, p, z));
        worst = std::max(worst, r);
        rep.table.add({"p_cr_residual", "z" + std::to_string(k), r});
    }
    rep.checks.push_back(Check::at_most("p-CR residual of the derived solution" + tag, worst, 1e-8));

    ComplexField eta;
    eta.eval = [](Complex z) { return z * z * std::conj(z) + 3.0 * std::conj(z) + Complex(0.5, 1.0) * std::norm(z); };
    double wt = 0.0;
    const std::vector<std::pair<HolomorphicMap, Complex>> maps{{HolomorphicMap::identity(), {0.3, 0.4}},
                                                               {HolomorphicMap::scaling(2.0), {0.3, 0.4}},
                                                               {HolomorphicMap::square_plus(3.0), {1.0, 1.0}},
                                                               {HolomorphicMap::square_plus(3.0), {-0.6, 0.7}}};
    for (const auto& [f, z] : maps) {
        const auto t = transfer_identity_check(f, eta, z);
        wt = std::max(wt, t.discrepancy);
        rep.table.add({"transfer_identity", f.name, t.discrepancy});
        rep.table.add({"transfer_identity_literal", f.name, t.literal_discrepancy});
    }
    rep.checks.push_back(Check::at_most("dbar transfer identity", wt, 1e-6));

    const auto U = Domain::annulus({0.0, 0.0}, 0.5, 1.2);
    const auto f = HolomorphicMap::square_plus(3.0);
    double w5 = 0.0;
    const auto etas = make_complex_test_set(U, seed);
    for (std::size_t i = 0; i < etas.size(); ++i) {
        const double r = theorem5_check(g, f, p, U, etas[i]).normalized();
        w5 = std::max(w5, r);
        rep.table.add({"theorem5_normalized", "eta" + std::to_string(i), r});
    }
    rep.checks.push_back(Check::at_most("weak p-CR covariance under zeta^2 + 3" + tag, w5, 1e-6));
    return rep;
}

} // namespace suites
} // namespace pdirac
