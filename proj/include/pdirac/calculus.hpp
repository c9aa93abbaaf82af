#pragma once

/// Finite-difference Dirac operator D = sum_j e_j d/dx_j, closed-form solutions
/// of the p-Dirac and p-harmonic equations, and strong-form residuals.

#include "pdirac/field.hpp"
#include "pdirac/mobius.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace pdirac {

namespace detail {
inline void require_step(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("finite-difference step must be positive");
}
inline void require_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must satisfy p > 1");
}
inline void require_stencil(const AnalyticField& f, std::span<const double> x, double reach) {
    if (static_cast<int>(x.size()) != f.dim) throw ContractViolation("stencil: point dimension mismatch");
    if (f.distance_to_singular(x) <= reach) throw StencilError("stencil reaches the singular set of the field");
}
inline Multivector central_difference(const AnalyticField& f, std::span<const double> x, int j, double h) {
    Point xp(x.begin(), x.end()), xm(x.begin(), x.end());
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}
} // namespace detail

/// d f / d x_j (0-based j) by central differences; with Richardson the steps h
/// and h/2 are combined as (4 D_{h/2} - D_h) / 3.
inline Multivector partial_fd(const AnalyticField& f, std::span<const double> x, int j, double h, bool richardson = true) {
    detail::require_step(h);
    detail::require_stencil(f, x, h);
    if (j < 0 || j >= f.dim) throw ContractViolation("partial_fd: coordinate index out of range");
    if (!richardson) return detail::central_difference(f, x, j, h);
    return (4.0 * detail::central_difference(f, x, j, h / 2.0) - detail::central_difference(f, x, j, h)) / 3.0;
}

inline std::vector<Multivector> gradient_fd(const AnalyticField& f, std::span<const double> x, double h, bool richardson = true) {
    std::vector<Multivector> g;
    g.reserve(static_cast<std::size_t>(f.dim));
    for (int j = 0; j < f.dim; ++j) g.push_back(partial_fd(f, x, j, h, richardson));
    return g;
}

inline Multivector dirac_fd(const AnalyticField& f, std::span<const double> x, double h, bool richardson = true) {
    const auto g = gradient_fd(f, x, h, richardson);
    return dirac_from_partials(g);
}

/// x -> (x - y) / |x - y|^k with its analytic gradient; singular at y.
inline AnalyticField radial_vector_field(int n, double k, Point y = {}) {
    if (n < 2 || n > kMaxDim) throw ContractViolation("radial field: dimension out of range");
    if (y.empty()) y.assign(static_cast<std::size_t>(n), 0.0);
    if (static_cast<int>(y.size()) != n) throw ContractViolation("radial field: centre dimension mismatch");
    AnalyticField f;
    f.dim = n;
    f.eval = [n, k, y](std::span<const double> x) {
        Point d(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)];
        const double r = euclidean_norm(d);
        return Multivector::from_vector(d) * std::pow(r, -k);
    };
    f.grad = [n, k, y](std::span<const double> x) {
        Point d(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)];
        const double r = euclidean_norm(d);
        const Multivector dv = Multivector::from_vector(d);
        const double rk = std::pow(r, -k);
        std::vector<Multivector> g;
        for (int j = 0; j < n; ++j)
            g.push_back(Multivector::basis_vector(n, j + 1) * rk - dv * (k * d[static_cast<std::size_t>(j)] * rk / (r * r)));
        return g;
    };
    f.singular_distance = point_singularity(y);
    return f;
}

/// x -> (x - y)/|x - y|^n, the Cauchy kernel of D up to normalisation.
inline AnalyticField cauchy_kernel(int n, Point y = {}) { return radial_vector_field(n, n, std::move(y)); }

/// x -> x / |x|^((n+p-2)/(p-1)); its p-flux |f|^(p-2) f is the Cauchy kernel.
inline AnalyticField p_dirac_solution(int n, double p, Point y = {}) {
    detail::require_p(p);
    return radial_vector_field(n, (n + p - 2.0) / (p - 1.0), std::move(y));
}

/// Scalar field |x - y|^((p-n)/(p-1)), or ln|x - y| when p = n.
inline AnalyticField p_harmonic_radial(int n, double p, Point y = {}) {
    detail::require_p(p);
    if (n < 2 || n > kMaxDim) throw ContractViolation("p_harmonic_radial: dimension out of range");
    if (y.empty()) y.assign(static_cast<std::size_t>(n), 0.0);
    const bool log_case = p == static_cast<double>(n);
    const double alpha = (p - n) / (p - 1.0);
    AnalyticField f;
    f.dim = n;
    f.eval = [n, y, log_case, alpha](std::span<const double> x) {
        const double r = distance(x, y);
        return Multivector::scalar(n, log_case ? std::log(r) : std::pow(r, alpha));
    };
    f.grad = [n, y, log_case, alpha](std::span<const double> x) {
        const double r = distance(x, y);
        const double factor = log_case ? 1.0 / (r * r) : alpha * std::pow(r, alpha - 2.0);
        std::vector<Multivector> g;
        for (int j = 0; j < n; ++j)
            g.push_back(Multivector::scalar(n, factor * (x[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j)])));
        return g;
    };
    f.singular_distance = point_singularity(y);
    return f;
}

/// |F|^(p-2) F for a multivector value; rejects |F| < 1e-10 when p < 2.
inline Multivector p_flux(const Multivector& v, double p) {
    const double nv = norm(v);
    if (p < 2.0 && nv < 1e-10) throw StencilError("|f| vanishes where |f|^(p-2) is singular");
    if (p == 2.0) return v;
    if (nv == 0.0) return v;
    return v * std::pow(nv, p - 2.0);
}

/// The field x -> |f(x)|^(p-2) f(x).
inline AnalyticField flux_field(const AnalyticField& f, double p) {
    detail::require_p(p);
    AnalyticField g;
    g.dim = f.dim;
    g.eval = [f, p](std::span<const double> x) { return p_flux(f(x), p); };
    g.singular_distance = f.singular_distance;
    return g;
}

/// The field x -> D h(x), from the analytic gradient when available.
inline AnalyticField dirac_field(const AnalyticField& h, double step, bool richardson = true) {
    AnalyticField g;
    g.dim = h.dim;
    g.eval = [h, step, richardson](std::span<const double> x) {
        if (h.has_grad()) return dirac_from_partials(h.grad(x));
        return dirac_fd(h, x, step, richardson);
    };
    g.singular_distance = h.singular_distance;
    return g;
}

/// D(|f|^(p-2) f) at x by finite differences.
inline Multivector p_dirac_residual(const AnalyticField& f, double p, std::span<const double> x, double h,
                                    bool richardson = true) {
    return dirac_fd(flux_field(f, p), x, h, richardson);
}

/// D(|Dh|^(p-2) Dh) at x: outer finite difference, inner D analytic when possible.
inline Multivector p_harmonic_residual(const AnalyticField& h_field, double p, std::span<const double> x, double h,
                                       bool richardson = true) {
    return dirac_fd(flux_field(dirac_field(h_field, h, richardson), p), x, h, richardson);
}

/// Result of the conformal covariance check for D under a Moebius map M.
struct Lemma1Result {
    double discrepancy = 0.0;         ///< |D_y psi(y) - eps J_{-1}^{-1} D_x(J_1 psi(M(x)))|
    double literal_discrepancy = 0.0; ///< same with rev(cx+d)^{-1} D_x(rev(cx+d) psi(M(x)))
    int parity_sign = 1;              ///< eps = +1 for even cx+d, -1 for odd
    double lhs_norm = 0.0;            ///< |D_y psi(y)|
};

/// Compares D_y psi at y = M(x) with the pulled-back operator on the x side.
///
/// The identity that holds is D_y psi(y) = eps J_{-1}(M,x)^{-1} D_x(J_1(M,x) psi(M(x))),
/// with J_1 = rev(cx+d)/|cx+d|^n, J_{-1} = rev(cx+d)/|cx+d|^(n+2) and eps the parity
/// of cx+d. The normalisation-free form rev(cx+d)^{-1} D_x(rev(cx+d) psi(M(x))) drops the
/// factor |cx+d|^2 coming from the chain rule and the parity sign; its distance from
/// the left side is reported as `literal_discrepancy` for comparison.
inline Lemma1Result lemma1_check(const VahlenMatrix& M, const AnalyticField& psi, std::span<const double> x,
                                 double h = 1e-3, bool richardson = true) {
    if (psi.dim != M.dim()) throw ContractViolation("lemma1_check: dimension mismatch");
    const Point y = map_point(M, x);
    const Multivector lhs = dirac_fd(psi, y, h, richardson);

    AnalyticField pulled;
    pulled.dim = psi.dim;
    pulled.eval = [&](std::span<const double> z) { return jacobian_factors(M, z).j1 * psi(map_point(M, z)); };
    AnalyticField literal;
    literal.dim = psi.dim;
    literal.eval = [&](std::span<const double> z) { return reversion(denominator(M, z)) * psi(map_point(M, z)); };

    const int eps = denominator_parity(M, x);
    const Multivector rhs = invert_versor(jacobian_factors(M, x).jm1) * dirac_fd(pulled, x, h, richardson) * double(eps);
    const Multivector rhs_literal = invert_versor(reversion(denominator(M, x))) * dirac_fd(literal, x, h, richardson);

    return {norm(lhs - rhs), norm(lhs - rhs_literal), eps, norm(lhs)};
}

/// |D_x J_1(M, x)| by finite differences.
inline double dj1_check(const VahlenMatrix& M, std::span<const double> x, double h = 1e-3, bool richardson = true) {
    (void)denominator(M, x);
    AnalyticField j1;
    j1.dim = M.dim();
    j1.eval = [&](std::span<const double> z) { return jacobian_factors(M, z).j1; };
    return norm(dirac_fd(j1, x, h, richardson));
}

/// Least-squares slope of log(residual) against log(h).
inline double convergence_order(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 3) throw ContractViolation("convergence_order: need at least 3 samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].first < samples[i - 1].first)) throw ContractViolation("convergence_order: h must be strictly decreasing");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [h, r] : samples)
        if (h > 0.0 && r > 0.0 && std::isfinite(r)) pts.emplace_back(std::log(h), std::log(r));
    if (pts.size() < 2) throw EstimationError("convergence_order: fewer than 2 usable samples");
    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : pts) { mx += a; my += b; }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [a, b] : pts) { sxy += (a - mx) * (b - my); sxx += (a - mx) * (a - mx); }
    return sxy / sxx;
}

} // namespace pdirac
