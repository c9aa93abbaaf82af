#pragma once

/// The spherical Dirac operator D_S = x (Gamma + n/2) on S^n in R^{n+1}, with
/// Gamma = sum_{i<j} e_i e_j (x_i d/dx_j - x_j d/dx_i) over all ambient pairs,
/// its kernels, cap-supported test functions with a geodesic-polar quadrature,
/// and the Cayley correspondence with flat space.

#include "pdirac/mobius.hpp"
#include "pdirac/quadrature.hpp"
#include "pdirac/weak_form.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace pdirac {

/// A unit vector of R^{n+1}.
struct SpherePoint {
    Point x;

    SpherePoint() = default;
    /// Checks |x| = 1 to 1e-12.
    explicit SpherePoint(Point v) : x(std::move(v)) {
        if (x.size() < 2) throw ContractViolation("SpherePoint: need at least 2 coordinates");
        if (std::abs(euclidean_norm(x) - 1.0) > 1e-12) throw ContractViolation("SpherePoint: not a unit vector");
    }
    /// Scales a non-zero vector onto the sphere.
    static SpherePoint normalized(std::span<const double> v) {
        Point p(v.begin(), v.end());
        const double r = euclidean_norm(p);
        if (!(r > 0.0)) throw ContractViolation("SpherePoint: cannot normalize the zero vector");
        for (auto& c : p) c /= r;
        return SpherePoint(std::move(p));
    }

    int sphere_dim() const { return static_cast<int>(x.size()) - 1; }
    Multivector vector() const { return Multivector::from_vector(x); }
};

inline Point normalized_point(std::span<const double> v) { return SpherePoint::normalized(v).x; }

/// A Cl_{n+1}-valued field on S^n, extended to R^{n+1} \ {0} as a function of
/// x/|x| (degree-0 homogeneous), so rotational derivatives are tangential ones.
struct SphericalField {
    int n = 2; ///< sphere dimension
    std::function<Multivector(std::span<const double>)> on_sphere; ///< called with unit vectors only
    std::vector<Point> singular_points;

    Multivector operator()(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n + 1) throw ContractViolation("SphericalField: point dimension mismatch");
        // unit vectors (to rounding) pass through, which makes renormalization idempotent
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        if (std::abs(r2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return on_sphere(x);
        const Point u = normalized_point(x);
        return on_sphere(u);
    }

    /// Chordal distance from x/|x| to the nearest singular point (infinity if none).
    double distance_to_singular(std::span<const double> x) const {
        double d = std::numeric_limits<double>::infinity();
        if (singular_points.empty()) return d;
        const Point u = normalized_point(x);
        for (const auto& s : singular_points) d = std::min(d, distance(u, s));
        return d;
    }
};

enum class GammaStencil {
    rotation, ///< central differences along the plane rotations R_ij(t)
    ambient,  ///< ambient partial derivatives of the homogeneous extension, combined as x_i d_j - x_j d_i
};

namespace detail {

inline Point rotate_in_plane(std::span<const double> x, int i, int j, double t) {
    Point y(x.begin(), x.end());
    const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
    y[ii] = std::cos(t) * x[ii] - std::sin(t) * x[jj];
    y[jj] = std::sin(t) * x[ii] + std::cos(t) * x[jj];
    return y;
}

inline void require_sphere_stencil(const SphericalField& f, std::span<const double> x, double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ParameterError("angular step must be positive");
    if (f.distance_to_singular(x) <= 2.0 * theta) throw StencilError("rotational stencil reaches the singular set");
}

/// d/dt f(R_ij(t) x) at t = 0 = (x_i d_j - x_j d_i) f.
inline Multivector rotational_derivative(const SphericalField& f, std::span<const double> x, int i, int j, double theta,
                                         bool richardson) {
    auto cd = [&](double t) { return (f(rotate_in_plane(x, i, j, t)) - f(rotate_in_plane(x, i, j, -t))) / (2.0 * t); };
    if (!richardson) return cd(theta);
    return (4.0 * cd(theta / 2.0) - cd(theta)) / 3.0;
}

inline Multivector ambient_partial(const SphericalField& f, std::span<const double> x, int k, double step, bool richardson) {
    auto cd = [&](double s) {
        Point a(x.begin(), x.end()), b(x.begin(), x.end());
        a[static_cast<std::size_t>(k)] += s;
        b[static_cast<std::size_t>(k)] -= s;
        return (f(a) - f(b)) / (2.0 * s);
    };
    if (!richardson) return cd(step);
    return (4.0 * cd(step / 2.0) - cd(step)) / 3.0;
}

} // namespace detail

/// Gamma f at x (a point of S^n) by finite differences.
inline Multivector gamma_op(const SphericalField& f, const SpherePoint& x, double theta, bool richardson = true,
                            GammaStencil stencil = GammaStencil::rotation) {
    const int N = f.n + 1;
    if (static_cast<int>(x.x.size()) != N) throw ContractViolation("gamma_op: point dimension mismatch");
    detail::require_sphere_stencil(f, x.x, theta);
    Multivector out(N);
    std::vector<Multivector> partials;
    if (stencil == GammaStencil::ambient)
        for (int k = 0; k < N; ++k) partials.push_back(detail::ambient_partial(f, x.x, k, theta, richardson));
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            const Multivector L = stencil == GammaStencil::rotation
                                      ? detail::rotational_derivative(f, x.x, i, j, theta, richardson)
                                      : partials[static_cast<std::size_t>(j)] * x.x[static_cast<std::size_t>(i)] -
                                            partials[static_cast<std::size_t>(i)] * x.x[static_cast<std::size_t>(j)];
            out += Multivector::blade(N, (Blade{1} << i) | (Blade{1} << j)) * L;
        }
    return out;
}

/// D_S f = x (Gamma f + (n/2) f).
inline Multivector spherical_dirac(const SphericalField& f, const SpherePoint& x, double theta, bool richardson = true,
                                   GammaStencil stencil = GammaStencil::rotation) {
    return x.vector() * (gamma_op(f, x, theta, richardson, stencil) + f(x.x) * (0.5 * f.n));
}

/// D_S(|f|^(p-2) f): the residual of the p-spherical Dirac equation.
inline Multivector p_spherical_dirac_residual(const SphericalField& f, double p, const SpherePoint& x, double theta,
                                              bool richardson = true) {
    detail::require_p(p);
    SphericalField flux;
    flux.n = f.n;
    flux.singular_points = f.singular_points;
    flux.on_sphere = [f, p](std::span<const double> z) { return p_flux(f.on_sphere(z), p); };
    return spherical_dirac(flux, x, theta, richardson);
}

/// `count` deterministic points on S^n, each at chordal distance >= `min_distance` from `avoid`.
inline std::vector<SpherePoint> sphere_samples(int n, int count, std::uint64_t seed = 42, const Point& avoid = {},
                                               double min_distance = 0.1) {
    if (n < 1 || n >= kMaxDim) throw ContractViolation("sphere_samples: dimension out of range");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<SpherePoint> out;
    while (static_cast<int>(out.size()) < count) {
        Point v(static_cast<std::size_t>(n + 1));
        for (auto& c : v) c = gauss(rng);
        if (euclidean_norm(v) < 1e-3) continue;
        auto x = SpherePoint::normalized(v);
        if (!avoid.empty() && distance(x.x, avoid) < min_distance) continue;
        out.push_back(std::move(x));
    }
    return out;
}

/// The field x -> (x - y)/|x - y|^((n+p-2)/(p-1)). Its p-flux is (x - y)/|x - y|^n for every p,
/// the Cauchy kernel of D_S.
inline SphericalField spherical_kernel(const SpherePoint& y, double p) {
    detail::require_p(p);
    const int n = y.sphere_dim();
    const double k = (n + p - 2.0) / (p - 1.0);
    SphericalField f;
    f.n = n;
    f.singular_points = {y.x};
    f.on_sphere = [y, k](std::span<const double> x) {
        Point d(x.begin(), x.end());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= y.x[i];
        const double r = euclidean_norm(d);
        if (r == 0.0) throw PoleError("spherical kernel evaluated at its singular point");
        return Multivector::from_vector(d) * std::pow(r, -k);
    };
    return f;
}

/// The scalar field x -> |x - y|^s on S^n.
inline SphericalField chordal_power(const SpherePoint& y, double s) {
    const int n = y.sphere_dim();
    SphericalField f;
    f.n = n;
    if (s < 0.0) f.singular_points = {y.x};
    f.on_sphere = [y, s, n](std::span<const double> x) {
        const double r = distance(x, y.x);
        if (r == 0.0 && s < 0.0) throw PoleError("chordal power evaluated at its singular point");
        return Multivector::scalar(n + 1, s == 0.0 ? 1.0 : std::pow(r, s));
    };
    return f;
}

/// (D_S + (p/2) x) |x - y|^s in closed form:
/// -s |x-y|^(s-2) (x - y) + ((s + n + p)/2) |x-y|^s x, from Gamma |x-y|^s = -s |x-y|^(s-2) (x ^ y).
inline Multivector shifted_dirac_of_chordal_power(const SpherePoint& x, const SpherePoint& y, double s, double p) {
    const int n = x.sphere_dim();
    const double r = distance(x.x, y.x);
    const Multivector d = x.vector() - y.vector();
    return d * (-s * std::pow(r, s - 2.0)) + x.vector() * (0.5 * (s + n + p) * std::pow(r, s));
}

/// Comparison of (D_S + (p/2)x) |x-y|^(p-n), evaluated numerically, with the displayed
/// right side ((p-n)/2)(x-y)/|x-y|^(n-p) and with the closed form above.
struct LrIdentityReport {
    Multivector lhs;
    Multivector rhs_displayed;
    Multivector rhs_closed_form;
    double discrepancy = 0.0;            ///< |lhs - rhs_displayed|
    double closed_form_discrepancy = 0.0; ///< |lhs - rhs_closed_form|
    std::vector<double> ratios;          ///< lhs / rhs_displayed per blade, NaN where the right side is ~0
};

inline LrIdentityReport lr_identity_check(const SpherePoint& x, const SpherePoint& y, double p, double theta = 1e-3) {
    detail::require_p(p);
    if (x.x.size() != y.x.size()) throw ContractViolation("lr_identity_check: dimension mismatch");
    const int n = x.sphere_dim();
    if (distance(x.x, y.x) < 1e-8) throw PoleError("lr_identity_check: x coincides with y");
    const double s = p - n;
    const auto f = chordal_power(y, s);
    LrIdentityReport rep;
    rep.lhs = spherical_dirac(f, x, theta) + x.vector() * f(x.x) * (0.5 * p);
    const double r = distance(x.x, y.x);
    rep.rhs_displayed = (x.vector() - y.vector()) * (0.5 * (p - n) / std::pow(r, n - p));
    rep.rhs_closed_form = shifted_dirac_of_chordal_power(x, y, s, p);
    rep.discrepancy = norm(rep.lhs - rep.rhs_displayed);
    rep.closed_form_discrepancy = norm(rep.lhs - rep.rhs_closed_form);
    const double scale = std::max(norm(rep.lhs), norm(rep.rhs_displayed));
    for (std::size_t b = 0; b < rep.lhs.size(); ++b) {
        const double den = rep.rhs_displayed[static_cast<Blade>(b)];
        rep.ratios.push_back(std::abs(den) > 1e-12 * std::max(scale, 1.0) ? rep.lhs[static_cast<Blade>(b)] / den
                                                                           : std::numeric_limits<double>::quiet_NaN());
    }
    return rep;
}

/// D_S (|F|^(p-2) F) with F = (D_S + (p/2) x) |x-y|^((p-n)/(p-1)), at each sample.
struct SphericalPHarmonicReport {
    std::vector<double> residuals;     ///< |D_S(|F|^(p-2) F)|
    std::vector<double> flux_norms;    ///< |F|^(p-1), the scale of the residual
    std::vector<double> closed_form_inner; ///< |F_numeric - F_closed_form| (inner operator check)
    double max_residual() const { return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end()); }
    double max_relative() const {
        double m = 0.0;
        for (std::size_t i = 0; i < residuals.size(); ++i)
            m = std::max(m, flux_norms[i] > 0.0 ? residuals[i] / flux_norms[i] : residuals[i]);
        return m;
    }
};

inline SphericalPHarmonicReport spherical_p_harmonic_check(const SpherePoint& y, double p, const std::vector<SpherePoint>& samples,
                                                           double theta = 1e-3) {
    detail::require_p(p);
    const int n = y.sphere_dim();
    const double s = (p - n) / (p - 1.0);
    const auto h = chordal_power(y, s);
    // inner operator by finite differences, then the flux, then the outer D_S
    SphericalField inner;
    inner.n = n;
    inner.singular_points = {y.x};
    inner.on_sphere = [h, p, theta](std::span<const double> x) {
        const SpherePoint xs(Point(x.begin(), x.end()));
        return spherical_dirac(h, xs, theta) + xs.vector() * h(x) * (0.5 * p);
    };
    SphericalField flux;
    flux.n = n;
    flux.singular_points = {y.x};
    flux.on_sphere = [inner, p](std::span<const double> x) { return p_flux(inner(x), p); };

    SphericalPHarmonicReport rep;
    for (const auto& x : samples) {
        if (distance(x.x, y.x) <= 4.0 * theta) throw StencilError("spherical_p_harmonic_check: sample too close to y");
        const Multivector F = inner(x.x);
        rep.residuals.push_back(norm(spherical_dirac(flux, x, theta)));
        rep.flux_norms.push_back(std::pow(norm(F), p - 1.0));
        rep.closed_form_inner.push_back(norm(F - shifted_dirac_of_chordal_power(x, y, s, p)));
    }
    return rep;
}

/// Y_S f = D_S (D_S f - x f), by nested finite differences.
inline Multivector yamabe_op(const SphericalField& f, const SpherePoint& x, double theta) {
    SphericalField g;
    g.n = f.n;
    g.singular_points = f.singular_points;
    g.on_sphere = [f, theta](std::span<const double> z) {
        const SpherePoint zs(Point(z.begin(), z.end()));
        return spherical_dirac(f, zs, theta) - zs.vector() * f(z);
    };
    detail::require_sphere_stencil(f, x.x, 2.0 * theta);
    return spherical_dirac(g, x, theta);
}

/// Geodesic cap {x : angle(x, center) < radius} with radius in (0, pi).
struct Cap {
    SpherePoint center;
    double radius = 0.5;

    Cap() = default;
    Cap(SpherePoint c, double r) : center(std::move(c)), radius(r) {
        if (!(r > 0.0 && r < std::numbers::pi)) throw ContractViolation("Cap: angular radius must lie in (0, pi)");
    }
    int sphere_dim() const { return center.sphere_dim(); }
};

/// Geodesic angle between unit vectors, stable near 0 and pi.
inline double geodesic_angle(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, cross2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = a[i] - dot * b[i];
        cross2 += c * c;
    }
    return std::atan2(std::sqrt(cross2), dot);
}

/// eta(x) = exp(-1/(1 - (theta/rho)^2)) B with theta the geodesic distance to the centre.
struct CapBump {
    SpherePoint center;
    double radius = 0.3; ///< geodesic radius rho
    Multivector coeff;

    CapBump() = default;
    CapBump(SpherePoint c, double r, Multivector b) : center(std::move(c)), radius(r), coeff(std::move(b)) {
        if (!(radius > 0.0 && radius < std::numbers::pi)) throw ContractViolation("CapBump: radius must lie in (0, pi)");
        if (coeff.dim() != static_cast<int>(center.x.size())) throw ContractViolation("CapBump: coefficient dimension mismatch");
    }

    double profile(std::span<const double> x) const {
        const double s = geodesic_angle(x, center.x) / radius;
        return s < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
    }

    /// Gamma eta = psi'(theta) (-1/sin theta) (x ^ c) B, from Gamma(x . c) = x ^ c.
    Multivector gamma(std::span<const double> x) const {
        const int N = static_cast<int>(x.size());
        const double th = geodesic_angle(x, center.x);
        const double s = th / radius;
        if (s >= 1.0 || th == 0.0) return Multivector(N);
        const double psi = std::exp(-1.0 / (1.0 - s * s));
        const double th_over_sin = th < 1e-8 ? 1.0 : th / std::sin(th);
        const double factor = psi * 2.0 * th_over_sin / ((1.0 - s * s) * (1.0 - s * s) * radius * radius);
        Multivector wedge(N);
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j)
                wedge[(Blade{1} << i) | (Blade{1} << j)] = x[static_cast<std::size_t>(i)] * center.x[static_cast<std::size_t>(j)] -
                                                           x[static_cast<std::size_t>(j)] * center.x[static_cast<std::size_t>(i)];
        return wedge * factor * coeff;
    }

    /// D_S eta = x (Gamma eta + (n/2) eta).
    Multivector dirac_s(std::span<const double> x) const {
        const int n = static_cast<int>(x.size()) - 1;
        return Multivector::from_vector(x) * (gamma(x) + coeff * (0.5 * n * profile(x)));
    }

    SphericalField as_field() const {
        SphericalField f;
        f.n = center.sphere_dim();
        f.on_sphere = [b = *this](std::span<const double> x) { return b.coeff * b.profile(x); };
        return f;
    }
};

/// Bumps inside a cap: `random_count` with random centres and radii, then one per blade at the cap centre.
inline std::vector<CapBump> make_cap_test_set(const Cap& U, std::uint64_t seed = 42, int random_count = 5) {
    const int N = U.sphere_dim() + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss;
    std::vector<CapBump> out;
    for (int k = 0; k < random_count; ++k) {
        // centre within 0.6 of the cap radius, in a random tangent direction
        Point t(static_cast<std::size_t>(N));
        for (auto& c : t) c = gauss(rng);
        double dot = 0.0;
        for (int i = 0; i < N; ++i) dot += t[static_cast<std::size_t>(i)] * U.center.x[static_cast<std::size_t>(i)];
        for (int i = 0; i < N; ++i) t[static_cast<std::size_t>(i)] -= dot * U.center.x[static_cast<std::size_t>(i)];
        const double tn = euclidean_norm(t);
        const double ang = 0.6 * U.radius * uni(rng);
        Point c(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i)
            c[static_cast<std::size_t>(i)] = std::cos(ang) * U.center.x[static_cast<std::size_t>(i)] + std::sin(ang) * t[static_cast<std::size_t>(i)] / tn;
        const double room = U.radius - ang;
        Multivector b(N);
        for (auto& v : b.coeffs()) v = gauss(rng);
        b /= norm(b);
        out.emplace_back(SpherePoint::normalized(c), room * (0.5 + 0.4 * uni(rng)), b);
    }
    for (Blade bl = 0; bl < (Blade{1} << N); ++bl) out.emplace_back(U.center, 0.9 * U.radius, Multivector::blade(N, bl));
    return out;
}

/// Geodesic-polar rule around a bump centre: Gauss-Legendre in the geodesic radius and
/// the middle polar angles, trapezoid in the last angle.
struct SphereRule {
    int order = 12;   ///< Gauss points per cell
    int cells = 4;    ///< cells in the geodesic radius (and in each middle angle)
    int azimuth = 64; ///< trapezoid points in the last angle
    SphereRule refined() const { return {order + order / 3, cells + cells / 2, azimuth + azimuth / 2}; }
};

/// Integrates w(x) f(x) over a geodesic ball of radius rho around c on S^n, with
/// f(x, w, acc) accumulating into `width` slots.
template <class F>
std::vector<double> integrate_geodesic_ball(const SpherePoint& c, double rho, const SphereRule& rule, std::size_t width, F&& f) {
    const int n = c.sphere_dim();
    const int N = n + 1;
    if (n < 1) throw ContractViolation("integrate_geodesic_ball: sphere dimension must be >= 1");
    // orthonormal basis of the tangent space at c
    std::vector<Point> tangent;
    for (int k = 0; k < N && static_cast<int>(tangent.size()) < n; ++k) {
        Point v(static_cast<std::size_t>(N), 0.0);
        v[static_cast<std::size_t>(k)] = 1.0;
        for (const Point* b : {&c.x}) {
            double d = 0.0;
            for (int i = 0; i < N; ++i) d += v[static_cast<std::size_t>(i)] * (*b)[static_cast<std::size_t>(i)];
            for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] -= d * (*b)[static_cast<std::size_t>(i)];
        }
        for (const auto& b : tangent) {
            double d = 0.0;
            for (int i = 0; i < N; ++i) d += v[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
            for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] -= d * b[static_cast<std::size_t>(i)];
        }
        const double len = euclidean_norm(v);
        if (len < 1e-6) continue;
        for (auto& t : v) t /= len;
        tangent.push_back(v);
    }
    const GaussLegendre gl = gauss_legendre(rule.order);
    auto composite = [&](double a, double b, int cells) {
        std::vector<std::pair<double, double>> nodes;
        const double hc = (b - a) / cells;
        for (int ci = 0; ci < cells; ++ci)
            for (int k = 0; k < rule.order; ++k)
                nodes.emplace_back(a + hc * (ci + 0.5 * (gl.nodes[static_cast<std::size_t>(k)] + 1.0)),
                                   0.5 * hc * gl.weights[static_cast<std::size_t>(k)]);
        return nodes;
    };
    const auto radial = composite(0.0, rho, rule.cells);
    const auto middle = composite(0.0, std::numbers::pi, rule.cells);
    const int m = n - 2; // number of middle angles

    // directions omega on S^{n-1} with weights
    std::vector<std::pair<Point, double>> dirs;
    if (n == 1) {
        dirs.push_back({Point{1.0}, 1.0});
        dirs.push_back({Point{-1.0}, 1.0});
    } else {
        std::vector<std::size_t> idx(static_cast<std::size_t>(std::max(m, 0)), 0);
        while (true) {
            double w = 1.0, sprod = 1.0;
            Point om(static_cast<std::size_t>(n), 0.0);
            for (int a = 0; a < m; ++a) {
                const auto& [ang, wa] = middle[idx[static_cast<std::size_t>(a)]];
                om[static_cast<std::size_t>(a)] = sprod * std::cos(ang);
                w *= wa * std::pow(std::sin(ang), n - 2 - a);
                sprod *= std::sin(ang);
            }
            for (int k = 0; k < rule.azimuth; ++k) {
                const double phi = 2.0 * std::numbers::pi * k / rule.azimuth;
                Point o = om;
                o[static_cast<std::size_t>(n - 2)] = sprod * std::cos(phi);
                o[static_cast<std::size_t>(n - 1)] = sprod * std::sin(phi);
                dirs.push_back({o, w * 2.0 * std::numbers::pi / rule.azimuth});
            }
            int a = 0;
            while (a < m && ++idx[static_cast<std::size_t>(a)] == middle.size()) idx[static_cast<std::size_t>(a++)] = 0;
            if (a == m) break;
        }
    }

    std::vector<std::vector<double>> partial(width, std::vector<double>(radial.size(), 0.0));
    std::vector<double> acc(width);
    Point x(static_cast<std::size_t>(N));
    for (std::size_t ri = 0; ri < radial.size(); ++ri) {
        const auto& [th, wth] = radial[ri];
        std::fill(acc.begin(), acc.end(), 0.0);
        const double jac = std::pow(std::sin(th), n - 1);
        for (const auto& [om, wo] : dirs) {
            for (int i = 0; i < N; ++i) {
                double t = 0.0;
                for (int a = 0; a < n; ++a) t += om[static_cast<std::size_t>(a)] * tangent[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
                x[static_cast<std::size_t>(i)] = std::cos(th) * c.x[static_cast<std::size_t>(i)] + std::sin(th) * t;
            }
            f(std::span<const double>(x), wth * wo * jac, std::span<double>(acc));
        }
        for (std::size_t k = 0; k < width; ++k) partial[k][ri] = acc[k];
    }
    std::vector<double> out(width);
    for (std::size_t k = 0; k < width; ++k) out[k] = pairwise_sum(partial[k]);
    return out;
}

/// Integral over the cap of conj(|f|^(p-2) f) D_S eta, with its normalization.
inline WeakResidual weak_spherical_residual(const SphericalField& f, double p, const Cap& U, const CapBump& eta,
                                            const SphereRule& rule = {}) {
    detail::require_p(p);
    const int N = U.sphere_dim() + 1;
    if (f.n != U.sphere_dim() || eta.center.sphere_dim() != U.sphere_dim()) throw ContractViolation("weak_spherical_residual: dimension mismatch");
    if (geodesic_angle(eta.center.x, U.center.x) + eta.radius > U.radius * (1.0 + 1e-12))
        throw ContractViolation("weak_spherical_residual: test function support leaves the cap");
    for (const auto& s : f.singular_points)
        if (geodesic_angle(s, U.center.x) <= U.radius) throw HypothesisViolation("weak_spherical_residual: field singular inside the cap");
    const std::size_t blades = std::size_t{1} << N;
    const auto sums = integrate_geodesic_ball(eta.center, eta.radius, rule, blades + 1, [&](std::span<const double> x, double w, std::span<double> acc) {
        const Multivector phi = p_flux(f(x), p);
        const Multivector t = eta.dirac_s(x);
        const Multivector term = conjugation(phi) * t;
        for (std::size_t b = 0; b < blades; ++b) acc[b] += w * term[static_cast<Blade>(b)];
        acc[blades] += w * norm(phi) * norm(t);
    });
    return {Multivector::from_coeffs(N, std::span<const double>(sums.data(), blades)), sums[blades]};
}

/// Surface area of S^n, for quadrature checks.
inline double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

/// The Cayley transform R^n -> S^n \ {-e_{n+1}} as the Vahlen matrix (1, e_{n+1}; e_{n+1}, 1)/sqrt 2 in Cl_{n+1}.
inline VahlenMatrix cayley_matrix(int n) {
    const int N = n + 1;
    const double s = 1.0 / std::sqrt(2.0);
    const Multivector one = Multivector::scalar(N, s), e = Multivector::basis_vector(N, N) * s;
    return mobius::from_entries(one, e, e, one);
}

/// Result of comparing the flat Cauchy kernel with the spherical one through the Cayley map.
struct CayleyReport {
    double ratio_mean = 0.0;   ///< mean componentwise ratio flat / transformed-spherical
    double ratio_spread = 0.0; ///< max |ratio - mean| over components and sample pairs
    double max_residual = 0.0; ///< max |flat - mean * transformed| / |flat|
    int pairs = 0;
};

/// For u, v in R^n with x = C(u), y = C(v) on S^n, compares G(u - v) = (u-v)/|u-v|^n with
/// rev(cu + d)/|cu + d|^n G_S(x, y) (cv + d)/|cv + d|^n.
inline CayleyReport cayley_kernel_check(int n, int pairs = 20, std::uint64_t seed = 42) {
    if (n < 1 || n >= kMaxDim) throw ContractViolation("cayley_kernel_check: dimension out of range");
    const int N = n + 1;
    const VahlenMatrix C = cayley_matrix(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<double> ratios;
    std::vector<std::pair<Multivector, Multivector>> sides;
    for (int k = 0; k < pairs; ++k) {
        Point u(static_cast<std::size_t>(N), 0.0), v(static_cast<std::size_t>(N), 0.0);
        for (int i = 0; i < n; ++i) {
            u[static_cast<std::size_t>(i)] = gauss(rng);
            v[static_cast<std::size_t>(i)] = gauss(rng);
        }
        const SpherePoint x = SpherePoint::normalized(map_point(C, u));
        const SpherePoint y = SpherePoint::normalized(map_point(C, v));
        const Multivector gs = spherical_kernel(y, 2.0)(x.x);
        const Multivector qu = denominator(C, u), qv = denominator(C, v);
        const Multivector transformed = (reversion(qu) / std::pow(norm(qu), n)) * gs * (qv / std::pow(norm(qv), n));
        Point d(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) d[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(i)];
        const Multivector flat = Multivector::from_vector(d) * std::pow(euclidean_norm(d), -n);
        for (std::size_t b = 0; b < flat.size(); ++b)
            if (std::abs(flat[static_cast<Blade>(b)]) > 1e-6 * norm(flat)) ratios.push_back(flat[static_cast<Blade>(b)] / transformed[static_cast<Blade>(b)]);
        sides.emplace_back(flat, transformed);
    }
    CayleyReport rep;
    rep.pairs = pairs;
    for (double r : ratios) rep.ratio_mean += r;
    rep.ratio_mean /= static_cast<double>(ratios.size());
    for (double r : ratios) rep.ratio_spread = std::max(rep.ratio_spread, std::abs(r - rep.ratio_mean));
    for (const auto& [flat, tr] : sides) rep.max_residual = std::max(rep.max_residual, norm(flat - tr * rep.ratio_mean) / norm(flat));
    return rep;
}

} // namespace pdirac
