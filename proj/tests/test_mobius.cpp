#include "pdirac/mobius.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace pdirac;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return std::vector<double>(v); }

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> random_point(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = g(rng);
    return x;
}

/// A random generator: translation, dilation, plane rotation, reflection or inversion.
VahlenMatrix random_generator(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 4);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    switch (kind(rng)) {
    case 0: return mobius::translation(random_point(n, rng));
    case 1: return mobius::dilation(n, u(rng));
    case 2: {
        std::uniform_int_distribution<int> ax(1, n);
        int i = ax(rng), j = ax(rng);
        if (i == j) j = i % n + 1;
        return mobius::plane_rotation(n, i, j, u(rng));
    }
    case 3: return mobius::reflection(random_point(n, rng));
    default: return mobius::inversion(n);
    }
}

/// Central-difference Jacobian of map_point, columns d/dx_j (oracle independent of the Clifford formula).
std::vector<std::vector<double>> fd_jacobian(const VahlenMatrix& m, const std::vector<double>& x, double h = 1e-5) {
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < x.size(); ++j) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const auto fp = map_point(m, xp), fm = map_point(m, xm);
        std::vector<double> c(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) c[i] = (fp[i] - fm[i]) / (2.0 * h);
        cols.push_back(c);
    }
    return cols;
}

double determinant(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
        if (piv != k) {
            std::swap(a[piv], a[k]);
            det = -det;
        }
        det *= a[k][k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
        }
    }
    return det;
}

} // namespace

TEST(Mobius, GeneratorsMatchClosedForms) {
    const auto x = vec({0.3, -1.2, 2.0});
    const auto t = vec({1.0, 2.0, -0.5});
    EXPECT_LE(dist(map_point(mobius::translation(t), x), vec({1.3, 0.8, 1.5})), 1e-14);
    EXPECT_LE(dist(map_point(mobius::dilation(3, 2.5), x), vec({0.75, -3.0, 5.0})), 1e-14);
    const double r2 = 0.09 + 1.44 + 4.0;
    EXPECT_LE(dist(map_point(mobius::inversion(3), x), vec({0.3 / r2, -1.2 / r2, 2.0 / r2})), 1e-14);
    EXPECT_LE(dist(map_point(mobius::inversion(3), vec({2.0, 0.0, 0.0})), vec({0.5, 0.0, 0.0})), 1e-15);
    EXPECT_LE(dist(map_point(mobius::identity(3), x), x), 0.0);
    // quarter turn in the (e1, e2) plane sends e1 to e2
    EXPECT_LE(dist(map_point(mobius::plane_rotation(3, 1, 2, M_PI / 2), vec({1.0, 0.0, 0.0})), vec({0.0, 1.0, 0.0})), 1e-14);
    // reflection in the plane orthogonal to e3
    EXPECT_LE(dist(map_point(mobius::reflection(vec({0.0, 0.0, 2.0})), x), vec({0.3, -1.2, -2.0})), 1e-14);
}

TEST(Mobius, GeneratorsAndCompositionsAreValid) {
    std::mt19937_64 rng(11);
    for (int n = 2; n <= 5; ++n)
        for (int trial = 0; trial < 20; ++trial) {
            VahlenMatrix m = random_generator(n, rng);
            for (int k = 0; k < 3; ++k) m = m * random_generator(n, rng);
            const auto rep = validate_vahlen(m);
            EXPECT_TRUE(rep.passes()) << "n=" << n << " residual=" << rep.max_residual();
            EXPECT_TRUE(rep.certified);
        }
}

TEST(Mobius, ValidationReportsDeterminantDefect) {
    const auto m = mobius::from_entries(Multivector::scalar(3, 1.0), Multivector(3), Multivector(3), Multivector::scalar(3, 2.0));
    const auto rep = validate_vahlen(m);
    EXPECT_NEAR(rep.pseudo_determinant, 1.0, 1e-15);
    EXPECT_FALSE(rep.passes());
    EXPECT_FALSE(rep.certified);
    EXPECT_EQ(validate_vahlen(mobius::identity(4)).max_residual(), 0.0);
}

TEST(Mobius, CompositionIsMatrixProduct) {
    std::mt19937_64 rng(12);
    for (int n = 2; n <= 4; ++n)
        for (int trial = 0; trial < 30; ++trial) {
            const auto m1 = random_generator(n, rng), m2 = random_generator(n, rng);
            const auto x = random_point(n, rng);
            const auto direct = map_point(m1, map_point(m2, x));
            const auto composed = map_point(m1 * m2, x);
            EXPECT_LE(dist(direct, composed), 1e-10 * (1.0 + std::sqrt(std::inner_product(direct.begin(), direct.end(), direct.begin(), 0.0))));
        }
}

TEST(Mobius, InverseUndoesMap) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        VahlenMatrix m = random_generator(3, rng) * random_generator(3, rng);
        const auto x = random_point(3, rng);
        EXPECT_LE(dist(map_point(inverse(m), map_point(m, x)), x), 1e-9 * (1.0 + dist(x, vec({0, 0, 0}))));
    }
}

TEST(Mobius, PoleIsRejected) {
    EXPECT_THROW(map_point(mobius::inversion(3), vec({0.0, 0.0, 0.0})), PoleError);
    const auto m = mobius::inversion(3) * mobius::translation(vec({1.0, 0.0, 0.0}));
    EXPECT_THROW(jacobian_factors(m, vec({-1.0, 0.0, 0.0})), PoleError);
}

TEST(Mobius, JacobianFactors) {
    const auto x = vec({0.5, 1.0, -2.0});
    const double r = std::sqrt(0.25 + 1.0 + 4.0);
    const auto jf = jacobian_factors(mobius::inversion(3), x);
    EXPECT_LE(norm(jf.j1 - Multivector::from_vector(x) / std::pow(r, 3)), 1e-15);
    EXPECT_LE(norm(jf.j1 - jf.jm1 * (r * r)), 1e-15);
    const auto id = jacobian_factors(mobius::identity(3), x);
    EXPECT_EQ(id.j1, Multivector::scalar(3, 1.0));
    EXPECT_EQ(id.jm1, Multivector::scalar(3, 1.0));
    // dilation: cx + d = 1/sqrt(lambda), constant in x
    const auto dl = jacobian_factors(mobius::dilation(3, 4.0), x);
    EXPECT_NEAR(dl.j1[0], std::pow(0.5, 1.0 - 3.0), 1e-14);
}

TEST(Mobius, JacobianDeterminantMatchesFiniteDifferences) {
    std::mt19937_64 rng(14);
    EXPECT_NEAR(jacobian_determinant(mobius::dilation(3, 1.7), vec({1, 2, 3})), std::pow(1.7, 3), 1e-12);
    EXPECT_NEAR(jacobian_determinant(mobius::inversion(3), vec({2, 0, 0})), std::pow(2.0, -6), 1e-15);
    for (int n = 2; n <= 4; ++n)
        for (int trial = 0; trial < 10; ++trial) {
            const auto m = random_generator(n, rng) * random_generator(n, rng);
            const auto x = random_point(n, rng);
            const double det = std::abs(determinant(fd_jacobian(m, x)));
            const double ref = jacobian_determinant(m, x);
            EXPECT_NEAR(det / ref, 1.0, 1e-6);
        }
}

TEST(Mobius, AnalyticPartialsMatchFiniteDifferencesAndAreConformal) {
    std::mt19937_64 rng(15);
    for (int n = 2; n <= 4; ++n)
        for (int trial = 0; trial < 10; ++trial) {
            const auto m = random_generator(n, rng) * random_generator(n, rng) * random_generator(n, rng);
            const auto x = random_point(n, rng);
            const auto cols = mobius_partials(m, x);
            const auto ref = fd_jacobian(m, x);
            const double scale = 1.0 / std::pow(norm(denominator(m, x)), 2);
            for (int j = 0; j < n; ++j) {
                EXPECT_LE(dist(cols[j], ref[j]), 1e-6 * scale);
                for (int k = 0; k < n; ++k) {
                    const double dot = std::inner_product(cols[j].begin(), cols[j].end(), cols[k].begin(), 0.0);
                    EXPECT_NEAR(dot, j == k ? scale * scale : 0.0, 1e-10 * scale * scale);
                }
            }
        }
}

TEST(Mobius, FrameIsUnitAndOrthogonal) {
    std::mt19937_64 rng(16);
    const auto fe1 = frame_at(mobius::inversion(3), vec({1, 0, 0}));
    EXPECT_LE(norm(fe1.u - Multivector::basis_vector(3, 1)), 1e-15);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_generator(3, rng) * random_generator(3, rng);
        const auto fp = frame_at(m, random_point(3, rng));
        EXPECT_NEAR(norm(fp.u), 1.0, 1e-12);
        for (int j = 1; j <= 3; ++j)
            for (int k = 1; k <= 3; ++k) {
                const auto fj = fp.frame_vector(j), fk = fp.frame_vector(k);
                EXPECT_LE(fj.off_grade_mass(1), 1e-12);
                EXPECT_NEAR(coeff_dot(fj, fk), j == k ? 1.0 : 0.0, 1e-12);
            }
    }
}

TEST(Mobius, FrameMapPreservesScalarPairing) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_generator(3, rng) * random_generator(3, rng);
        const auto fp = frame_at(m, random_point(3, rng));
        Multivector a(3), b(3);
        for (auto& c : a.coeffs()) c = g(rng);
        for (auto& c : b.coeffs()) c = g(rng);
        const double lhs = scalar_part(conjugation(fp.apply(a)) * fp.apply(b));
        EXPECT_NEAR(lhs, scalar_part(conjugation(a) * b), 1e-12 * norm(a) * norm(b));
    }
}

TEST(Mobius, DenominatorParity) {
    EXPECT_EQ(denominator_parity(mobius::inversion(3), vec({1, 2, 3})), -1);
    EXPECT_EQ(denominator_parity(mobius::dilation(3, 2.0), vec({1, 2, 3})), 1);
    EXPECT_EQ(denominator_parity(mobius::identity(3), vec({1, 2, 3})), 1);
}

TEST(Mobius, ParserBuildsCompositions) {
    const auto m = parse_mobius("inversion * translate:1,0,0", 3);
    const auto x = vec({1.0, 1.0, 0.0});
    EXPECT_LE(dist(map_point(m, x), vec({0.4, 0.2, 0.0})), 1e-15);
    EXPECT_LE(dist(map_point(parse_mobius("dilate:2", 3), x), vec({2, 2, 0})), 1e-15);
    EXPECT_LE(dist(map_point(parse_mobius("rotate:1,2,3.141592653589793", 2), vec({1, 0})), vec({-1, 0})), 1e-15);
    EXPECT_THROW(parse_mobius("shear:1", 3), ParameterError);
    EXPECT_THROW(parse_mobius("translate:1,2", 3), ParameterError);
    EXPECT_THROW(parse_mobius("dilate:x", 3), ParameterError);
    EXPECT_THROW(parse_mobius("", 3), ParameterError);
    EXPECT_THROW(parse_mobius("dilate:-1", 3), ContractViolation);
}

TEST(Mobius, TransposedDeterminantFormIsNotMultiplicative) {
    const auto m = mobius::translation(vec({1.851, -1.10438})) * mobius::dilation(2, 1.3288) * mobius::inversion(2) *
                   mobius::translation(vec({-1.89456, -0.580995}));
    const auto rep = validate_vahlen(m);
    EXPECT_TRUE(rep.passes());
    EXPECT_GT(rep.transposed_pseudo_determinant, 1.0);
    EXPECT_EQ(validate_vahlen(mobius::inversion(2)).transposed_pseudo_determinant, 0.0);
}
