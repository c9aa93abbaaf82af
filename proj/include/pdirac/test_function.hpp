#pragma once

/// Compactly supported smooth test functions eta(x) = phi(|x - c| / rho) B.

#include "pdirac/field.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pdirac {

/// phi(s) = exp(-1 / (1 - s)) for s = r^2 < 1, else 0.
inline double bump_profile_sq(double s) { return s < 1.0 ? std::exp(-1.0 / (1.0 - s)) : 0.0; }

/// phi(r) = exp(-1/(1 - r^2)) times a constant multivector blade B,
/// supported in the closed ball of radius `radius` about `center`.
struct BumpTestFunction {
    Point center;
    double radius = 1.0;
    Multivector coeff;

    BumpTestFunction() = default;
    BumpTestFunction(Point c, double rho, Multivector b) : center(std::move(c)), radius(rho), coeff(std::move(b)) {
        if (!(radius > 0.0)) throw ContractViolation("BumpTestFunction: radius must be positive");
        if (coeff.dim() != static_cast<int>(center.size())) throw ContractViolation("BumpTestFunction: coefficient dimension mismatch");
    }

    int dim() const { return static_cast<int>(center.size()); }

    double profile(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
        return bump_profile_sq(s / (radius * radius));
    }

    /// Gradient of the scalar profile.
    void profile_gradient(std::span<const double> x, std::span<double> g) const {
        double s = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
        s /= radius * radius;
        if (s >= 1.0) {
            for (auto& v : g) v = 0.0;
            return;
        }
        const double f = bump_profile_sq(s) * (-2.0 / ((1.0 - s) * (1.0 - s))) / (radius * radius);
        for (std::size_t i = 0; i < center.size(); ++i) g[i] = f * (x[i] - center[i]);
    }

    Multivector value(std::span<const double> x) const { return coeff * profile(x); }

    /// D eta = (sum_j e_j d phi / dx_j) B.
    Multivector dirac(std::span<const double> x) const {
        std::vector<double> g(center.size());
        profile_gradient(x, g);
        return Multivector::from_vector(g) * coeff;
    }

    AnalyticField as_field() const {
        AnalyticField f;
        f.dim = dim();
        f.eval = [b = *this](std::span<const double> x) { return b.value(x); };
        f.grad = [b = *this](std::span<const double> x) {
            std::vector<double> g(b.center.size());
            b.profile_gradient(x, g);
            std::vector<Multivector> out;
            for (double v : g) out.push_back(b.coeff * v);
            return out;
        };
        return f;
    }
};

/// Deterministic family of test functions inside U: `random_count` bumps with
/// random centres, radii and multivector coefficients, followed by one bump per
/// basis blade at a fixed interior point (2^n of them).
inline std::vector<BumpTestFunction> make_test_set(const Domain& U, std::uint64_t seed = 42, int random_count = 5) {
    const int n = U.dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss;
    std::vector<BumpTestFunction> out;
    const double L = U.length_scale();
    for (int k = 0; k < random_count; ++k) {
        const Point c = U.sample(rng, 0.2 * L);
        const double room = U.clearance(c);
        const double rho = room * (0.5 + 0.4 * uni(rng));
        Multivector b(n);
        for (auto& v : b.coeffs()) v = gauss(rng);
        b /= norm(b);
        out.emplace_back(c, rho, b);
    }
    const Point c = U.interior_point();
    const double rho = 0.9 * U.clearance(c);
    for (Blade bl = 0; bl < (Blade{1} << n); ++bl) out.emplace_back(c, rho, Multivector::blade(n, bl));
    return out;
}

} // namespace pdirac
