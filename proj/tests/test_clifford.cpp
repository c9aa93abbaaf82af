#include "pdirac/clifford.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace pdirac;

namespace {

/// Reference product of basis blades: concatenate the index lists, bubble-sort
/// counting transpositions, then cancel adjacent equal pairs with e_j e_j = -1.
std::pair<double, Blade> blade_product_by_sorting(Blade a, Blade b) {
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

Multivector random_multivector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Multivector m(n);
    for (auto& c : m.coeffs()) c = g(rng);
    return m;
}

Multivector random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& c : v) c = g(rng);
    return Multivector::from_vector(v);
}

} // namespace

TEST(Clifford, BladeSignsMatchSortingOracle) {
    for (int n = 1; n <= 6; ++n)
        for (Blade a = 0; a < (Blade{1} << n); ++a)
            for (Blade b = 0; b < (Blade{1} << n); ++b) {
                const auto [s, blade] = blade_product_by_sorting(a, b);
                ASSERT_EQ(blade, a ^ b);
                ASSERT_EQ(blade_product_sign(a, b), s) << "a=" << a << " b=" << b;
            }
}

TEST(Clifford, BasisVectorsSquareToMinusOne) {
    for (int n = 1; n <= 8; ++n)
        for (int j = 1; j <= n; ++j) {
            const auto e = Multivector::basis_vector(n, j);
            EXPECT_EQ(e * e, Multivector::scalar(n, -1.0));
            for (int k = j + 1; k <= n; ++k) {
                const auto f = Multivector::basis_vector(n, k);
                EXPECT_EQ(e * f + f * e, Multivector(n));
            }
        }
}

TEST(Clifford, ProductIsAssociative) {
    std::mt19937_64 rng(1);
    for (int n = 1; n <= 5; ++n) {
        const auto a = random_multivector(n, rng), b = random_multivector(n, rng), c = random_multivector(n, rng);
        EXPECT_LE(norm((a * b) * c - a * (b * c)), 1e-12 * norm(a) * norm(b) * norm(c));
    }
}

TEST(Clifford, VectorSquareIsMinusNormSquared) {
    std::mt19937_64 rng(2);
    for (int n = 1; n <= 8; ++n) {
        const auto x = random_vector(n, rng);
        const auto xx = x * x;
        EXPECT_NEAR(xx[0], -norm_squared(x), 1e-12 * norm_squared(x));
        EXPECT_LE(xx.off_grade_mass(0), 1e-12 * norm_squared(x));
    }
}

TEST(Clifford, InvolutionsAreAntiOrHomomorphisms) {
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 5; ++n) {
        const auto a = random_multivector(n, rng), b = random_multivector(n, rng);
        const double tol = 1e-12 * norm(a) * norm(b);
        EXPECT_LE(norm(reversion(a * b) - reversion(b) * reversion(a)), tol);
        EXPECT_LE(norm(conjugation(a * b) - conjugation(b) * conjugation(a)), tol);
        EXPECT_LE(norm(grade_involution(a * b) - grade_involution(a) * grade_involution(b)), tol);
        EXPECT_LE(norm(conjugation(a) - reversion(grade_involution(a))), 1e-15 * norm(a));
    }
}

TEST(Clifford, BivectorReversionAndConjugation) {
    const auto e12 = Multivector::blade(3, 0b011);
    EXPECT_EQ(reversion(e12), -e12);
    EXPECT_EQ(conjugation(e12), -e12);
    const auto e1 = Multivector::basis_vector(3, 1);
    EXPECT_EQ(conjugation(e1), -e1);
    EXPECT_EQ(reversion(e1), e1);
    EXPECT_EQ(reversion(Multivector::blade(3, 0b111)), -Multivector::blade(3, 0b111));
    EXPECT_EQ(conjugation(Multivector::blade(3, 0b111)), Multivector::blade(3, 0b111));
}

TEST(Clifford, CoefficientNormIsScalarOfConjugateProduct) {
    std::mt19937_64 rng(4);
    for (int n = 1; n <= 6; ++n) {
        const auto a = random_multivector(n, rng);
        EXPECT_NEAR(scalar_part(conjugation(a) * a), norm_squared(a), 1e-12 * norm_squared(a));
        EXPECT_NEAR(scalar_part(clifford_inner(a, a)), norm_squared(a), 1e-12 * norm_squared(a));
    }
}

TEST(Clifford, LipschitzElementsAreMultiplicativeAndInvertible) {
    std::mt19937_64 rng(5);
    for (int n = 2; n <= 6; ++n) {
        std::vector<Multivector> f;
        for (int k = 0; k < 4; ++k) f.push_back(random_vector(n, rng));
        const VectorFactorList list(f);
        const auto a = list.product();
        double prod = 1.0;
        for (const auto& v : f) prod *= norm(v);
        EXPECT_NEAR(norm(a), prod, 1e-12 * prod);
        const auto inv = lipschitz_inverse(list);
        EXPECT_LE(norm(a * inv - Multivector::scalar(n, 1.0)), 1e-12);
        EXPECT_LE(norm(invert_versor(a) - inv), 1e-12 * norm(inv));
        EXPECT_LE((a * conjugation(a)).off_grade_mass(0), 1e-12 * prod * prod);
    }
}

TEST(Clifford, InvertVersorRejectsNonLipschitz) {
    const auto m = Multivector::scalar(3, 1.0) + Multivector::basis_vector(3, 1) + Multivector::blade(3, 0b110);
    EXPECT_THROW(invert_versor(m), SingularElementError);
    EXPECT_THROW(invert_versor(Multivector(3)), SingularElementError);
}

TEST(Clifford, VectorInverse) {
    const auto x = Multivector::from_vector(std::vector<double>{1.0, 2.0, 2.0});
    EXPECT_LE(norm(vector_inverse(x) + x / 9.0), 1e-15);
    EXPECT_THROW(vector_inverse(Multivector(3)), SingularElementError);
    EXPECT_THROW(vector_inverse(Multivector::scalar(3, 1.0)), ContractViolation);
}

TEST(Clifford, ReflectionFlipsNormalAndKeepsPlane) {
    const auto e1 = Multivector::basis_vector(3, 1);
    const auto e2 = Multivector::basis_vector(3, 2);
    EXPECT_EQ(reflect(e1, e1), -e1);
    EXPECT_EQ(reflect(e1, e2), e2);
    EXPECT_THROW(reflect(e1 * 2.0, e2), ContractViolation);
}

TEST(Clifford, PinActionIsOrthogonal) {
    std::mt19937_64 rng(6);
    for (int n = 2; n <= 6; ++n) {
        std::vector<Multivector> f;
        for (int k = 0; k < 3; ++k) {
            auto v = random_vector(n, rng);
            f.push_back(v / norm(v));
        }
        const VectorFactorList list(f);
        const auto x = random_vector(n, rng), y = random_vector(n, rng);
        const auto px = pin_action(list, x), py = pin_action(list, y);
        EXPECT_LE(px.off_grade_mass(1), 1e-12 * norm(x));
        EXPECT_NEAR(coeff_dot(px, py), coeff_dot(x, y), 1e-12 * norm(x) * norm(y));
    }
}

TEST(Clifford, FactorListValidation) {
    EXPECT_THROW(VectorFactorList({Multivector::scalar(3, 1.0)}), ContractViolation);
    EXPECT_THROW(VectorFactorList({Multivector(3)}), SingularElementError);
    EXPECT_THROW(Multivector(0), ContractViolation);
    EXPECT_THROW(Multivector(kMaxDim + 1), ContractViolation);
    EXPECT_THROW(Multivector(2) + Multivector(3), ContractViolation);
}
