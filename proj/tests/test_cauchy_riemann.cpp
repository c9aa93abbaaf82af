#include "pdirac/calculus.hpp"
#include "pdirac/cauchy_riemann.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pdirac;

namespace {

ComplexField field(std::function<Complex(Complex)> f) {
    ComplexField g;
    g.eval = std::move(f);
    return g;
}

const Complex I{0.0, 1.0};

} // namespace

TEST(Dbar, ElementaryFields) {
    const Complex z{0.3, -0.7};
    EXPECT_LE(std::abs(dbar_fd(field([](Complex w) { return w; }), z)), 1e-12);
    EXPECT_LE(std::abs(dbar_fd(field([](Complex w) { return std::conj(w); }), z) - 1.0), 1e-12);
    EXPECT_LE(std::abs(dbar_fd(field([](Complex w) { return std::norm(w); }), z) - z), 1e-12);
    EXPECT_LE(std::abs(dz_fd(field([](Complex w) { return w * w; }), z) - 2.0 * z), 1e-10);
}

TEST(Dbar, E2E1SquaresToMinusOne) {
    const auto j = Multivector::blade(2, 0b10) * Multivector::blade(2, 0b01);
    EXPECT_EQ(j * j, Multivector::scalar(2, -1.0));
    EXPECT_EQ(encode_cl2(I), j);
}

TEST(Dbar, CliffordDiracOnEvenFieldsIsTwoE1Dbar) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        const Complex a{gauss(rng), gauss(rng)}, b{gauss(rng), gauss(rng)}, c{gauss(rng), gauss(rng)};
        auto g = [=](Complex z) { return a * z * z + b * std::conj(z) * z + c * std::exp(std::conj(z)); };
        AnalyticField G;
        G.dim = 2;
        G.eval = [g](std::span<const double> x) { return encode_cl2(g({x[0], x[1]})); };
        const Point x{gauss(rng) * 0.5, gauss(rng) * 0.5};
        const Complex z{x[0], x[1]};
        const auto dirac = dirac_fd(G, x, 1e-3);
        const auto expected = Multivector::basis_vector(2, 1) * encode_cl2(2.0 * dbar_fd(field(g), z));
        EXPECT_LE(norm(dirac - expected), 1e-10 * (1.0 + norm(dirac)));
    }
}

TEST(PCauchyRiemann, DerivedSolutions) {
    EXPECT_LE(std::abs(p_cr_residual(p_cr_solution(2.0), 2.0, {0.8, 0.6})), 1e-10);
    EXPECT_LE(std::abs(p_cr_solution(2.0)({1.0, 0.0}) - 0.5), 1e-15);
    for (double p : {1.5, 1.3, 2.5, 4.0}) {
        const auto g = p_cr_solution(p);
        for (double t : {0.1, 1.0, 2.5}) {
            const Complex z = std::polar(1.0, t);
            EXPECT_LE(std::abs(p_cr_residual(g, p, z)), 1e-8) << p;
            // the flux is a constant multiple of 1/z
            const Complex k = p_cr_flux(g(z), p) * z;
            const Complex k2 = p_cr_flux(g(2.0 * z), p) * 2.0 * z;
            EXPECT_LE(std::abs(k - k2), 1e-12 * std::abs(k));
        }
    }
    EXPECT_EQ(p_cr_residual(field([](Complex) { return Complex(2.0, -1.0); }), 1.5, {0.2, 0.3}), Complex(0.0));
    EXPECT_THROW(p_cr_residual(p_cr_solution(1.5), 1.5, {5e-4, 0.0}), StencilError);
}

TEST(PCauchyRiemann, ZDerivativeOfPHarmonicIsSolution) {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto h = p_harmonic_radial(2, p);
        ComplexField hc = field([h](Complex z) { return Complex(h(Point{z.real(), z.imag()})[0], 0.0); });
        const auto g = p_cr_solution(p);
        for (const Complex z : {Complex(0.7, 0.2), Complex(-1.1, 0.9)}) {
            EXPECT_LE(std::abs(dz_fd(hc, z) - g(z)), 1e-9 * std::abs(g(z))) << p;
            // h is p-harmonic, so d h / dz solves the p-CR equation at the same point
            EXPECT_LE(norm(p_harmonic_residual(h, p, Point{z.real(), z.imag()}, 1e-3)), 1e-6);
            EXPECT_LE(std::abs(p_cr_residual(g, p, z)), 1e-8);
        }
    }
}

TEST(Theorem5, HolomorphicSquareMapPreservesWeakSolutions) {
    const auto U = Domain::annulus({0.0, 0.0}, 0.5, 1.2);
    const auto f = HolomorphicMap::square_plus(3.0);
    for (double p : {1.5, 2.0, 3.0}) {
        const auto g = p_cr_solution(p);
        double worst = 0.0, worst_conj = 0.0;
        for (const auto& eta : make_complex_test_set(U)) {
            worst = std::max(worst, theorem5_check(g, f, p, U, eta).normalized());
            worst_conj = std::max(worst_conj, theorem5_check(g, f, p, U, eta, default_rule(2), CrPairing::conjugate).normalized());
        }
        EXPECT_LE(worst, 1e-6) << p;
        EXPECT_GT(worst_conj, 1e-2) << p;
    }
}

TEST(Theorem5, TranslationReducesToBaseResidual) {
    const auto U = Domain::ball({0.5, 0.5}, 0.3);
    const auto g = p_cr_solution(1.5);
    const Complex c{0.4, -0.2};
    ComplexField shifted = field([g, c](Complex z) { return g(z + c); });
    for (const auto& eta : make_complex_test_set(U)) {
        const auto a = theorem5_check(g, HolomorphicMap::translation(c), 1.5, U, eta);
        const auto b = theorem5_check(shifted, HolomorphicMap::identity(), 1.5, U, eta);
        EXPECT_LE(std::abs(a.residual - b.residual), 1e-14);
        EXPECT_LE(a.normalized(), 1e-6);
    }
}

TEST(Theorem5, ZeroFieldAndHypotheses) {
    const auto U = Domain::ball({0.0, 0.0}, 0.5);
    const auto zero = field([](Complex) { return Complex(0.0); });
    const auto eta = make_complex_test_set(U).front();
    EXPECT_EQ(theorem5_check(zero, HolomorphicMap::identity(), 2.5, U, eta).residual, Complex(0.0));
    EXPECT_THROW(theorem5_check(p_cr_solution(2.0, {3.0, 0.0}), HolomorphicMap::square_plus(0.0), 2.0, U, eta), HypothesisViolation);
    const ComplexBump outside{{0.4, 0.0}, 0.3, 1.0};
    EXPECT_THROW(theorem5_check(zero, HolomorphicMap::identity(), 2.5, U, outside), ContractViolation);
}

TEST(TransferIdentity, ChainRuleForDbar) {
    const auto eta = field([](Complex z) { return z * z * std::conj(z) + 3.0 * std::conj(z) + Complex(0.5, 1.0) * std::norm(z); });
    const auto id = transfer_identity_check(HolomorphicMap::identity(), eta, {0.3, 0.4});
    EXPECT_LE(id.discrepancy, 1e-10);
    EXPECT_LE(id.literal_discrepancy, 1e-10);
    const auto sc = transfer_identity_check(HolomorphicMap::scaling(2.0), eta, {0.3, 0.4});
    EXPECT_LE(sc.discrepancy, 1e-8);
    EXPECT_GT(sc.literal_discrepancy, 1e-1);
    const auto sq = transfer_identity_check(HolomorphicMap::square_plus(0.0), eta, {1.0, 1.0});
    EXPECT_LE(sq.discrepancy, 1e-6);
    EXPECT_GT(sq.literal_discrepancy, 1e-1);
    EXPECT_THROW(transfer_identity_check(HolomorphicMap::square_plus(0.0), eta, {0.0, 0.0}), HypothesisViolation);
}
