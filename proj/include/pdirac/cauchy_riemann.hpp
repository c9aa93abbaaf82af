#pragma once

/// The two-dimensional case: complex fields, the p-Cauchy-Riemann operator
/// d/dzbar |g|^(p-2) g, and covariance under holomorphic changes of variable.
///
/// Conventions: d/dzbar = (d/dx + i d/dy)/2 and d/dz = (d/dx - i d/dy)/2. A complex
/// number u + iv corresponds to the even element u + v e2e1 of Cl_2; then
/// D = e1 d/dx + e2 d/dy acts on even fields as 2 e1 d/dzbar.

#include "pdirac/field.hpp"
#include "pdirac/quadrature.hpp"
#include "pdirac/test_function.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace pdirac {

using Complex = std::complex<double>;

struct ComplexField {
    std::function<Complex(Complex)> eval;
    std::function<Complex(Complex)> dz;    ///< optional analytic d/dz
    std::function<Complex(Complex)> dzbar; ///< optional analytic d/dzbar
    std::function<double(Complex)> singular_distance;

    Complex operator()(Complex z) const { return eval(z); }
    double distance_to_singular(Complex z) const {
        return singular_distance ? singular_distance(z) : std::numeric_limits<double>::infinity();
    }
};

/// u + iv -> u + v e2e1 in Cl_2.
inline Multivector encode_cl2(Complex g) {
    Multivector m = Multivector::scalar(2, g.real());
    // e2 e1 = -e1 e2, and blade 0b11 is e1 e2
    m[0b11] = -g.imag();
    return m;
}

inline Complex decode_cl2(const Multivector& m) {
    if (m.dim() != 2) throw ContractViolation("decode_cl2: expects a Cl_2 element");
    return {m[0], -m[0b11]};
}

namespace detail {
inline void require_complex_stencil(const ComplexField& g, Complex z, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("finite-difference step must be positive");
    if (g.distance_to_singular(z) <= h) throw StencilError("stencil reaches the singular set of the field");
}
inline std::pair<Complex, Complex> complex_partials(const ComplexField& g, Complex z, double h) {
    const Complex dx = (g(z + h) - g(z - h)) / (2.0 * h);
    const Complex dy = (g(z + Complex(0.0, h)) - g(z - Complex(0.0, h))) / (2.0 * h);
    return {dx, dy};
}
inline std::pair<Complex, Complex> complex_partials_richardson(const ComplexField& g, Complex z, double h, bool richardson) {
    auto [dx, dy] = complex_partials(g, z, h);
    if (!richardson) return {dx, dy};
    auto [dx2, dy2] = complex_partials(g, z, h / 2.0);
    return {(4.0 * dx2 - dx) / 3.0, (4.0 * dy2 - dy) / 3.0};
}
} // namespace detail

/// (d/dx + i d/dy) g / 2 by central differences.
inline Complex dbar_fd(const ComplexField& g, Complex z, double h = 1e-3, bool richardson = true) {
    detail::require_complex_stencil(g, z, h);
    const auto [dx, dy] = detail::complex_partials_richardson(g, z, h, richardson);
    return 0.5 * (dx + Complex(0.0, 1.0) * dy);
}

/// (d/dx - i d/dy) g / 2 by central differences.
inline Complex dz_fd(const ComplexField& g, Complex z, double h = 1e-3, bool richardson = true) {
    detail::require_complex_stencil(g, z, h);
    const auto [dx, dy] = detail::complex_partials_richardson(g, z, h, richardson);
    return 0.5 * (dx - Complex(0.0, 1.0) * dy);
}

/// |v|^(p-2) v; rejects |v| < 1e-10 when p < 2.
inline Complex p_cr_flux(Complex v, double p) {
    const double a = std::abs(v);
    if (p < 2.0 && a < 1e-10) throw StencilError("|g| vanishes where |g|^(p-2) is singular");
    if (p == 2.0 || a == 0.0) return v;
    return v * std::pow(a, p - 2.0);
}

inline ComplexField p_cr_flux_field(const ComplexField& g, double p) {
    if (!(p > 1.0)) throw ParameterError("exponent p must satisfy p > 1");
    ComplexField f;
    f.eval = [g, p](Complex z) { return p_cr_flux(g(z), p); };
    f.singular_distance = g.singular_distance;
    return f;
}

/// d/dzbar (|g|^(p-2) g) at z.
inline Complex p_cr_residual(const ComplexField& g, double p, Complex z, double h = 1e-3, bool richardson = true) {
    return dbar_fd(p_cr_flux_field(g, p), z, h, richardson);
}

/// g = d/dz of the radial p-harmonic function in the plane, about `center`:
/// 1/(2(z - c)) for p = 2, otherwise (alpha/2) conj(z - c) |z - c|^(alpha - 2) with
/// alpha = (p - 2)/(p - 1). Its flux |g|^(p-2) g is a multiple of 1/(z - c).
inline ComplexField p_cr_solution(double p, Complex center = {}) {
    if (!(p > 1.0)) throw ParameterError("exponent p must satisfy p > 1");
    ComplexField g;
    if (p == 2.0) {
        g.eval = [center](Complex z) { return 1.0 / (2.0 * (z - center)); };
    } else {
        const double alpha = (p - 2.0) / (p - 1.0);
        g.eval = [center, alpha](Complex z) {
            const Complex w = z - center;
            return 0.5 * alpha * std::conj(w) * std::pow(std::abs(w), alpha - 2.0);
        };
    }
    g.singular_distance = [center](Complex z) { return std::abs(z - center); };
    return g;
}

/// A holomorphic change of variables w = f(zeta) with its derivative.
struct HolomorphicMap {
    std::function<Complex(Complex)> f;
    std::function<Complex(Complex)> df;
    std::string name;

    static HolomorphicMap identity() {
        return {[](Complex z) { return z; }, [](Complex) { return Complex(1.0); }, "identity"};
    }
    static HolomorphicMap translation(Complex c) {
        return {[c](Complex z) { return z + c; }, [](Complex) { return Complex(1.0); }, "translate"};
    }
    static HolomorphicMap scaling(Complex k) {
        return {[k](Complex z) { return k * z; }, [k](Complex) { return k; }, "scale"};
    }
    /// zeta^2 + c
    static HolomorphicMap square_plus(Complex c) {
        return {[c](Complex z) { return z * z + c; }, [](Complex z) { return 2.0 * z; }, "square"};
    }
};

/// eta(z) = phi(|z - c| / rho) * coeff with phi(r) = exp(-1/(1 - r^2)).
struct ComplexBump {
    Complex center;
    double radius = 1.0;
    Complex coeff{1.0, 0.0};

    double profile(Complex z) const { return bump_profile_sq(std::norm(z - center) / (radius * radius)); }
    Complex value(Complex z) const { return coeff * profile(z); }

    /// coeff (d/dx + i d/dy) phi / 2
    Complex dbar(Complex z) const {
        const double s = std::norm(z - center) / (radius * radius);
        if (s >= 1.0) return 0.0;
        const double f = bump_profile_sq(s) * (-2.0 / ((1.0 - s) * (1.0 - s))) / (radius * radius);
        return coeff * 0.5 * f * (z - center);
    }

    ComplexField as_field() const {
        ComplexField g;
        g.eval = [b = *this](Complex z) { return b.value(z); };
        g.dzbar = [b = *this](Complex z) { return b.dbar(z); };
        return g;
    }
};

/// Test functions inside a planar domain: random bumps plus coefficients 1 and i at an interior point.
inline std::vector<ComplexBump> make_complex_test_set(const Domain& U, std::uint64_t seed = 42, int random_count = 5) {
    if (U.dim != 2) throw ContractViolation("make_complex_test_set: domain must be planar");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss;
    std::vector<ComplexBump> out;
    const double L = U.length_scale();
    for (int k = 0; k < random_count; ++k) {
        const Point c = U.sample(rng, 0.2 * L);
        const double rho = U.clearance(c) * (0.5 + 0.4 * uni(rng));
        Complex coeff(gauss(rng), gauss(rng));
        out.push_back({{c[0], c[1]}, rho, coeff / std::abs(coeff)});
    }
    const Point c = U.interior_point();
    const double rho = 0.9 * U.clearance(c);
    out.push_back({{c[0], c[1]}, rho, {1.0, 0.0}});
    out.push_back({{c[0], c[1]}, rho, {0.0, 1.0}});
    return out;
}

/// How the flux G is paired with d eta / dzbar in the weak p-Cauchy-Riemann form.
enum class CrPairing {
    /// integral of G d(eta)/dzbar: the Cl_2 form conj(F) D eta with F even, since
    /// conj(F) e1 = e1 F there; vanishes for every test function iff G is holomorphic.
    clifford,
    /// integral of conj(G) d(eta)/dzbar: vanishes iff G is antiholomorphic; kept
    /// as a diagnostic of the conjugated pairing.
    conjugate,
};

struct CrWeakResult {
    Complex residual;
    double normalization = 0.0; ///< integral of |G| |d eta / dzbar|

    double normalized() const {
        if (normalization == 0.0) return std::abs(residual) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::abs(residual) / normalization;
    }
};

/// Weak residual of G(zeta) = f'(zeta) |g(f(zeta))|^(p-2) g(f(zeta)) against eta, integrated
/// over the support of eta (which must lie in U). The identity map gives the plain weak
/// p-Cauchy-Riemann residual of g.
inline CrWeakResult theorem5_check(const ComplexField& g, const HolomorphicMap& f, double p, const Domain& U,
                                   const ComplexBump& eta, const QuadratureRule& rule = default_rule(2),
                                   CrPairing pairing = CrPairing::clifford, double margin = 1e-3) {
    if (U.dim != 2) throw ContractViolation("theorem5_check: domain must be planar");
    if (!(p > 1.0)) throw ParameterError("exponent p must satisfy p > 1");
    const Point c{eta.center.real(), eta.center.imag()};
    if (U.clearance(c) < eta.radius) throw ContractViolation("theorem5_check: test function support leaves the domain");
    for (const auto& s : U.scan_points()) {
        const Complex z(s[0], s[1]);
        if (std::abs(f.df(z)) < margin) throw HypothesisViolation("theorem5_check: f' vanishes on the domain closure");
        if (g.distance_to_singular(f.f(z)) < margin)
            throw HypothesisViolation("theorem5_check: f maps the domain onto the singular set of g");
    }
    const Point lo{c[0] - eta.radius, c[1] - eta.radius}, hi{c[0] + eta.radius, c[1] + eta.radius};
    const auto sums = integrate_box(lo, hi, rule, 3, [&](std::span<const double> x, double w, std::span<double> acc) {
        const Complex z(x[0], x[1]);
        const Complex de = eta.dbar(z);
        if (de == 0.0) return;
        const Complex G = f.df(z) * p_cr_flux(g(f.f(z)), p);
        const Complex term = (pairing == CrPairing::clifford ? G : std::conj(G)) * de;
        acc[0] += w * term.real();
        acc[1] += w * term.imag();
        acc[2] += w * std::abs(G) * std::abs(de);
    });
    return {{sums[0], sums[1]}, sums[2]};
}

struct TransferResult {
    double discrepancy = 0.0;         ///< |d eta/dwbar (w) - conj(f'(zeta))^{-1} d/dzetabar eta(f(zeta))|
    double literal_discrepancy = 0.0; ///< same with the left side d/dwbar (f'(zeta)^{-1} eta(w))
};

/// Chain rule for d/dzbar under w = f(zeta), evaluated by finite differences at w = f(zeta).
///
/// Because f is holomorphic, d/dzetabar (eta o f) = conj(f') (d eta/dwbar) o f. The variant
/// with the extra factor f'(zeta)^{-1} on the left (a holomorphic function of w, so it passes
/// through d/dwbar) differs by that factor and is reported as `literal_discrepancy`.
inline TransferResult transfer_identity_check(const HolomorphicMap& f, const ComplexField& eta, Complex zeta,
                                              double h = 1e-3) {
    const Complex d = f.df(zeta);
    if (std::abs(d) < 1e-12) throw HypothesisViolation("transfer_identity_check: f'(zeta) = 0");
    const Complex w = f.f(zeta);
    const Complex lhs = dbar_fd(eta, w, h);
    ComplexField pulled;
    pulled.eval = [&](Complex z) { return eta(f.f(z)); };
    const Complex rhs = dbar_fd(pulled, zeta, h) / std::conj(d);
    return {std::abs(lhs - rhs), std::abs(lhs / d - rhs)};
}

} // namespace pdirac
