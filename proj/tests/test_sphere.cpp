#include "pdirac/sphere.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pdirac;

namespace {

SphericalField constant_field(const Multivector& c) {
    SphericalField f;
    f.n = c.dim() - 1;
    f.on_sphere = [c](std::span<const double>) { return c; };
    return f;
}

SphericalField coordinate_field(int n, int k) {
    SphericalField f;
    f.n = n;
    f.on_sphere = [n, k](std::span<const double> x) { return Multivector::scalar(n + 1, x[static_cast<std::size_t>(k)]); };
    return f;
}

SphericalField identity_field(int n) {
    SphericalField f;
    f.n = n;
    f.on_sphere = [](std::span<const double> x) { return Multivector::from_vector(x); };
    return f;
}

SpherePoint pole(int n, int k, double sign = 1.0) {
    Point v(static_cast<std::size_t>(n + 1), 0.0);
    v[static_cast<std::size_t>(k)] = sign;
    return SpherePoint(v);
}

Multivector e(int N, int i) { return Multivector::basis_vector(N, i); }

/// Gamma applied to the coordinate x_k, from d/dx_j x_k = delta_jk.
Multivector gamma_of_coordinate(const SpherePoint& x, int k) {
    const int N = static_cast<int>(x.x.size());
    Multivector out(N);
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            const double d = (j == k ? x.x[static_cast<std::size_t>(i)] : 0.0) - (i == k ? x.x[static_cast<std::size_t>(j)] : 0.0);
            out += e(N, i + 1) * e(N, j + 1) * d;
        }
    return out;
}

} // namespace

TEST(Gamma, ConstantIsAnnihilated) {
    const auto c = Multivector::blade(4, 0b1011, 2.5) + Multivector::scalar(4, -1.0);
    for (const auto& x : sphere_samples(3, 5)) {
        EXPECT_LE(norm(gamma_op(constant_field(c), x, 1e-3)), 1e-12);
        EXPECT_LE(norm(spherical_dirac(constant_field(c), x, 1e-3) - x.vector() * c * 1.5), 1e-12);
    }
}

TEST(Gamma, CoordinateFunctionMatchesClosedForm) {
    for (int n : {2, 3})
        for (const auto& x : sphere_samples(n, 6, 7))
            for (int k = 0; k <= n; ++k)
                EXPECT_LE(norm(gamma_op(coordinate_field(n, k), x, 1e-3) - gamma_of_coordinate(x, k)), 1e-10);
}

TEST(Gamma, IdentityFieldMatchesClosedForm) {
    // Gamma x = sum_k (Gamma x_k) e_k with the scalar factor on the left
    for (int n : {2, 3})
        for (const auto& x : sphere_samples(n, 4, 9)) {
            Multivector expected(n + 1);
            for (int k = 0; k <= n; ++k) expected += gamma_of_coordinate(x, k) * e(n + 1, k + 1);
            EXPECT_LE(norm(gamma_op(identity_field(n), x, 1e-3) - expected), 1e-10);
        }
}

TEST(Gamma, RotationAndAmbientStencilsAgree) {
    const auto y = pole(3, 0);
    const auto f = spherical_kernel(y, 1.5);
    for (const auto& x : sphere_samples(3, 10, 3, y.x, 0.5)) {
        const auto a = gamma_op(f, x, 1e-3, true, GammaStencil::rotation);
        const auto b = gamma_op(f, x, 1e-3, true, GammaStencil::ambient);
        EXPECT_LE(norm(a - b), 1e-8 * (1.0 + norm(a)));
    }
}

TEST(Gamma, StencilNearSingularSetIsRejected) {
    const auto y = pole(2, 2);
    const auto near = SpherePoint::normalized(Point{1e-3, 0.0, 1.0});
    EXPECT_THROW(gamma_op(spherical_kernel(y, 2.0), near, 1e-3), StencilError);
    EXPECT_THROW(gamma_op(spherical_kernel(y, 2.0), pole(2, 0), 0.0), ParameterError);
    EXPECT_THROW(spherical_kernel(y, 2.0)(y.x), PoleError);
}

TEST(SphericalField, DegreeZeroHomogeneity) {
    const auto f = spherical_kernel(pole(3, 1), 1.7);
    for (const auto& x : sphere_samples(3, 5, 11)) {
        Point scaled = x.x;
        for (auto& c : scaled) c *= 1.0000001;
        EXPECT_EQ(f(scaled), f(normalized_point(scaled)));
        EXPECT_LE(norm(f(scaled) - f(x.x)), 1e-14);
    }
}

TEST(SphericalKernel, ClosedFormValues) {
    const auto y = pole(3, 0);
    const auto x = pole(3, 0, -1.0);
    const double p = 1.5;
    const double k = (3 + p - 2) / (p - 1);
    EXPECT_LE(norm(spherical_kernel(y, p)(x.x) - (x.vector() - y.vector()) / std::pow(2.0, k)), 1e-15);
    const auto z = pole(3, 2);
    const double r = std::sqrt(2.0);
    EXPECT_LE(norm(spherical_kernel(y, 3.0)(z.x) - (z.vector() - y.vector()) / (r * r)), 1e-15);
    EXPECT_LE(norm(spherical_kernel(y, 2.0)(z.x) - (z.vector() - y.vector()) / std::pow(r, 3)), 1e-15);
}

TEST(SphericalKernel, CauchyKernelIsAnnihilated) {
    for (int n : {2, 3, 4}) {
        const auto y = sphere_samples(n, 1, 100).front();
        for (const auto& x : sphere_samples(n, 20, 5, y.x, 0.2))
            EXPECT_LE(norm(spherical_dirac(spherical_kernel(y, 2.0), x, 1e-3)), 1e-6) << n;
    }
}

TEST(SphericalKernel, PKernelsSolveThePEquation) {
    for (int n : {2, 3}) {
        const auto y = sphere_samples(n, 1, 100).front();
        for (double p : {1.5, 2.0, double(n), 3.5})
            for (const auto& x : sphere_samples(n, 20, 5, y.x, 0.2))
                EXPECT_LE(norm(p_spherical_dirac_residual(spherical_kernel(y, p), p, x, 1e-3)), 1e-6) << n << " " << p;
    }
    const auto y = pole(3, 0);
    EXPECT_LE(norm(p_spherical_dirac_residual(spherical_kernel(y, 1.5), 1.5, pole(3, 0, -1.0), 1e-3)), 1e-6);
    // the kernel itself is D_S-monogenic only when its exponent is n
    EXPECT_GT(norm(spherical_dirac(spherical_kernel(y, 1.5), pole(3, 1), 1e-3)), 1e-2);
}

TEST(ShiftedOperator, ChordalPowerClosedForm) {
    for (int n : {2, 3}) {
        const auto y = sphere_samples(n, 1, 1).front();
        for (double s : {-1.5, -0.5, 0.7, 2.0})
            for (const auto& x : sphere_samples(n, 5, 2, y.x, 0.3)) {
                const auto f = chordal_power(y, s);
                const double p = 1.8;
                const auto lhs = spherical_dirac(f, x, 1e-3) + x.vector() * f(x.x) * (0.5 * p);
                const auto rhs = shifted_dirac_of_chordal_power(x, y, s, p);
                EXPECT_LE(norm(lhs - rhs), 1e-8 * (1.0 + norm(rhs)));
            }
    }
}

TEST(ShiftedOperator, DisplayedRightSideIsNotReproduced) {
    // n = 2, p = 1.5, x . y = 0
    const auto r1 = lr_identity_check(pole(2, 0), pole(2, 1), 1.5);
    EXPECT_LE(r1.closed_form_discrepancy, 1e-8);
    EXPECT_GT(r1.discrepancy, 1e-1);
    ASSERT_EQ(r1.ratios.size(), 8u);
    // the e_3 component of the displayed side is 0, the scalar parts vanish on both sides
    EXPECT_TRUE(std::isnan(r1.ratios[0b100]));
    EXPECT_FALSE(std::isnan(r1.ratios[0b001]));
    // antipodal, n = 3, p = 2
    const auto r2 = lr_identity_check(pole(3, 0), pole(3, 0, -1.0), 2.0);
    EXPECT_LE(r2.closed_form_discrepancy, 1e-8);
    // p = n: the displayed side is 0 while the operator leaves n x
    const auto r3 = lr_identity_check(pole(3, 1), pole(3, 2), 3.0);
    EXPECT_EQ(norm(r3.rhs_displayed), 0.0);
    EXPECT_LE(norm(r3.lhs - pole(3, 1).vector() * 3.0), 1e-10);
    EXPECT_THROW(lr_identity_check(pole(2, 0), pole(2, 0), 1.5), PoleError);
}

TEST(SphericalPHarmonic, InnerOperatorMatchesClosedFormAndResidualIsReported) {
    const auto y = pole(3, 0);
    const auto samples = sphere_samples(3, 4, 8, y.x, 0.5);
    const auto rep = spherical_p_harmonic_check(y, 2.0, samples, 1e-3);
    ASSERT_EQ(rep.residuals.size(), samples.size());
    for (double d : rep.closed_form_inner) EXPECT_LE(d, 1e-8);
    // the outer equation is not satisfied by |x - y|^((p-n)/(p-1))
    EXPECT_GT(rep.max_relative(), 1e-1);
    // p = n: constant field, inner operator is n x and the residual is |D_S (n x)| = n |x Gamma x + (n/2)|
    const auto deg = spherical_p_harmonic_check(y, 3.0, samples, 1e-3);
    for (double d : deg.closed_form_inner) EXPECT_LE(d, 1e-10);
    EXPECT_THROW(spherical_p_harmonic_check(y, 2.0, {y}, 1e-3), StencilError);
}

TEST(Yamabe, KernelReducesToMinusXF) {
    const auto y = pole(2, 2);
    const auto K = spherical_kernel(y, 2.0);
    SphericalField xk;
    xk.n = 2;
    xk.singular_points = {y.x};
    xk.on_sphere = [K](std::span<const double> z) { return Multivector::from_vector(z) * K(z) * -1.0; };
    for (const auto& x : sphere_samples(2, 5, 4, y.x, 0.5)) {
        const auto a = yamabe_op(K, x, 1e-3);
        const auto b = spherical_dirac(xk, x, 1e-3);
        EXPECT_LE(norm(a - b), 1e-6 * (1.0 + norm(b)));
    }
}

TEST(Yamabe, ConstantAndLinearity) {
    const int n = 3;
    const auto c = Multivector::scalar(n + 1, 1.0) + Multivector::blade(n + 1, 0b0110, 0.5);
    const auto x = sphere_samples(n, 1, 12).front();
    // D_S c = (n/2) x c, D_S(x c) computed by the same operator
    SphericalField inner;
    inner.n = n;
    inner.on_sphere = [c, n](std::span<const double> z) { return Multivector::from_vector(z) * c * (0.5 * n - 1.0); };
    EXPECT_LE(norm(yamabe_op(constant_field(c), x, 1e-3) - spherical_dirac(inner, x, 1e-3)), 1e-7);
    const auto f = coordinate_field(n, 1);
    const auto g = spherical_kernel(pole(n, 0), 2.0);
    SphericalField combo;
    combo.n = n;
    combo.singular_points = g.singular_points;
    combo.on_sphere = [f, g](std::span<const double> z) { return f(z) * 2.0 - g(z) * 0.5; };
    const auto lhs = yamabe_op(combo, x, 1e-3);
    const auto rhs = yamabe_op(f, x, 1e-3) * 2.0 - yamabe_op(g, x, 1e-3) * 0.5;
    EXPECT_LE(norm(lhs - rhs), 1e-7 * (1.0 + norm(lhs)));
}

TEST(SphereQuadrature, AreaAndCapVolume) {
    for (int n : {1, 2, 3, 4}) {
        const auto c = pole(n, 0);
        const auto full = integrate_geodesic_ball(c, std::numbers::pi, {12, 4, 64}, 1,
                                                  [](std::span<const double>, double w, std::span<double> acc) { acc[0] += w; });
        EXPECT_NEAR(full[0], sphere_area(n), 1e-10 * sphere_area(n)) << n;
    }
    // cap of S^2 of angular radius a has area 2 pi (1 - cos a); mean of x_3 over it for the cap at e_3
    const auto cap = integrate_geodesic_ball(pole(2, 2), 0.7, {12, 4, 64}, 2, [](std::span<const double> x, double w, std::span<double> acc) {
        acc[0] += w;
        acc[1] += w * x[2];
    });
    EXPECT_NEAR(cap[0], 2 * std::numbers::pi * (1 - std::cos(0.7)), 1e-12);
    EXPECT_NEAR(cap[1], std::numbers::pi * std::sin(0.7) * std::sin(0.7), 1e-12);
}

TEST(CapBump, AnalyticGammaMatchesFiniteDifferences) {
    for (int n : {2, 3}) {
        const Cap U(pole(n, 0), 0.8);
        for (const auto& eta : make_cap_test_set(U)) {
            const auto field = eta.as_field();
            for (const auto& x : sphere_samples(n, 30, 6)) {
                if (geodesic_angle(x.x, eta.center.x) > eta.radius * 0.95) continue;
                EXPECT_LE(norm(eta.gamma(x.x) - gamma_op(field, x, 1e-3)), 1e-7);
                EXPECT_LE(norm(eta.dirac_s(x.x) - spherical_dirac(field, x, 1e-3)), 1e-7);
            }
            EXPECT_EQ(norm(eta.gamma(eta.center.x)), 0.0);
        }
    }
}

TEST(WeakSpherical, KernelIsAWeakSolution) {
    for (int n : {2, 3}) {
        const Cap U(pole(n, 0), 0.6);
        const auto y = pole(n, n);
        for (double p : {1.5, 2.0, double(n)}) {
            double worst = 0.0;
            for (const auto& eta : make_cap_test_set(U))
                worst = std::max(worst, weak_spherical_residual(spherical_kernel(y, p), p, U, eta).normalized());
            EXPECT_LE(worst, 1e-5) << n << " " << p;
        }
    }
}

TEST(WeakSpherical, ZeroConstantAndNonSolution) {
    const int n = 2;
    const Cap U(pole(n, 0), 0.6);
    const auto etas = make_cap_test_set(U);
    EXPECT_EQ(norm(weak_spherical_residual(constant_field(Multivector(3)), 2.5, U, etas[0]).residual), 0.0);
    // a constant field: direct quadrature of conj(c) D_S eta using the finite-difference operator
    const auto c = Multivector::scalar(3, 1.0) + Multivector::blade(3, 0b011, -0.5);
    const auto& eta = etas[2];
    const auto field = eta.as_field();
    const auto direct = integrate_geodesic_ball(eta.center, eta.radius, {12, 4, 64}, 8, [&](std::span<const double> x, double w, std::span<double> acc) {
        const auto t = conjugation(p_flux(c, 2.0)) * spherical_dirac(field, SpherePoint::normalized(x), 1e-3);
        for (std::size_t b = 0; b < 8; ++b) acc[b] += w * t[static_cast<Blade>(b)];
    });
    const auto weak = weak_spherical_residual(constant_field(c), 2.0, U, eta);
    EXPECT_LE(norm(weak.residual - Multivector::from_coeffs(3, direct)), 1e-7);
    EXPECT_GT(weak.normalized(), 1e-2);
    // the p = 2 kernel with exponent n - 1 is not a solution
    SphericalField wrong;
    wrong.n = n;
    const auto y = pole(n, n);
    wrong.on_sphere = [y](std::span<const double> x) {
        Point d(x.begin(), x.end());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= y.x[i];
        return Multivector::from_vector(d) * std::pow(euclidean_norm(d), -1.0);
    };
    double worst = 0.0;
    for (const auto& e2 : etas) worst = std::max(worst, weak_spherical_residual(wrong, 2.0, U, e2).normalized());
    EXPECT_GT(worst, 1e-3);
}

TEST(WeakSpherical, HypothesisAndSupportChecks) {
    const Cap U(pole(2, 0), 0.6);
    const auto eta = make_cap_test_set(U).front();
    EXPECT_THROW(weak_spherical_residual(spherical_kernel(pole(2, 0), 2.0), 2.0, U, eta), HypothesisViolation);
    const CapBump outside(pole(2, 1), 0.3, Multivector::scalar(3, 1.0));
    EXPECT_THROW(weak_spherical_residual(spherical_kernel(pole(2, 2), 2.0), 2.0, U, outside), ContractViolation);
    EXPECT_THROW(Cap(pole(2, 0), 4.0), ContractViolation);
}

TEST(Cayley, MatrixIsValidAndMapsOntoTheSphere) {
    for (int n : {2, 3}) {
        const auto C = cayley_matrix(n);
        EXPECT_TRUE(validate_vahlen(C).passes(1e-14));
        Point u(static_cast<std::size_t>(n + 1), 0.0);
        u[0] = 0.4;
        u[1] = -1.3;
        EXPECT_NEAR(euclidean_norm(map_point(C, u)), 1.0, 1e-14);
    }
}

TEST(Cayley, FlatKernelTransformsToSphericalKernel) {
    for (int n : {2, 3}) {
        const auto rep = cayley_kernel_check(n, 20);
        EXPECT_LE(rep.ratio_spread, 1e-6) << n;
        EXPECT_LE(rep.max_residual, 1e-6) << n;
        EXPECT_NEAR(rep.ratio_mean, 1.0, 1e-12);
    }
}
