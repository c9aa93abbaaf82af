#pragma once

/// Tensor-product Gauss-Legendre quadrature on boxes, with per-cell partial
/// sums combined by pairwise summation so results do not depend on loop order.

#include "pdirac/errors.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace pdirac {

struct GaussLegendre {
    std::vector<double> nodes;   ///< on [-1, 1], ascending
    std::vector<double> weights;
};

/// q-point Gauss-Legendre rule by Newton iteration on P_q.
inline GaussLegendre gauss_legendre(int q) {
    if (q < 1 || q > 512) throw ParameterError("gauss_legendre: order must lie in [1, 512]");
    GaussLegendre r;
    r.nodes.assign(static_cast<std::size_t>(q), 0.0);
    r.weights.assign(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < (q + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute the derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= q; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = q * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = -x;
        r.nodes[static_cast<std::size_t>(q - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(i)] = w;
        r.weights[static_cast<std::size_t>(q - 1 - i)] = w;
    }
    return r;
}

/// Composite rule: `cells` equal sub-intervals per axis, `order` Gauss points in each.
struct QuadratureRule {
    int order = 12;
    int cells = 8;

    QuadratureRule refined() const { return {2 * order, cells}; }
};

/// Defaults sized so the bump test functions integrate to ~1e-10 relative in n <= 3.
inline QuadratureRule default_rule(int n) { return n <= 3 ? QuadratureRule{12, 8} : QuadratureRule{8, 6}; }

/// Sum by recursive halving; error grows like log(N) instead of N.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Integrates a vector-valued integrand over the box [lo, hi].
///
/// `f(x, w, acc)` must add w * value(x) into acc (length `width`); it may skip
/// points where the integrand vanishes. Returns the `width` integrals.
template <class F>
std::vector<double> integrate_box(std::span<const double> lo, std::span<const double> hi, const QuadratureRule& rule,
                                  std::size_t width, F&& f) {
    const int n = static_cast<int>(lo.size());
    if (n < 1 || hi.size() != lo.size()) throw ContractViolation("integrate_box: bad box");
    if (rule.order < 1 || rule.cells < 1) throw ParameterError("integrate_box: order and cells must be positive");
    const GaussLegendre gl = gauss_legendre(rule.order);
    const int q = rule.order, m = rule.cells;

    // 1-D composite nodes/weights per axis
    std::vector<std::vector<double>> ax_nodes(static_cast<std::size_t>(n)), ax_weights(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        const double hcell = (hi[ia] - lo[ia]) / m;
        for (int c = 0; c < m; ++c)
            for (int k = 0; k < q; ++k) {
                ax_nodes[ia].push_back(lo[ia] + hcell * (c + 0.5 * (gl.nodes[static_cast<std::size_t>(k)] + 1.0)));
                ax_weights[ia].push_back(0.5 * hcell * gl.weights[static_cast<std::size_t>(k)]);
            }
    }

    std::size_t total_cells = 1;
    for (int a = 0; a < n; ++a) total_cells *= static_cast<std::size_t>(m);
    std::vector<std::vector<double>> cell_sums(width, std::vector<double>(total_cells, 0.0));
    std::vector<double> acc(width), x(static_cast<std::size_t>(n));
    std::vector<int> cell(static_cast<std::size_t>(n), 0), pt(static_cast<std::size_t>(n), 0);

    for (std::size_t ci = 0; ci < total_cells; ++ci) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::fill(pt.begin(), pt.end(), 0);
        while (true) {
            double w = 1.0;
            for (int a = 0; a < n; ++a) {
                const auto ia = static_cast<std::size_t>(a);
                const auto idx = static_cast<std::size_t>(cell[ia] * q + pt[ia]);
                x[ia] = ax_nodes[ia][idx];
                w *= ax_weights[ia][idx];
            }
            f(std::span<const double>(x), w, std::span<double>(acc));
            int a = 0;
            while (a < n && ++pt[static_cast<std::size_t>(a)] == q) pt[static_cast<std::size_t>(a++)] = 0;
            if (a == n) break;
        }
        for (std::size_t k = 0; k < width; ++k) cell_sums[k][ci] = acc[k];
        int a = 0;
        while (a < n && ++cell[static_cast<std::size_t>(a)] == m) cell[static_cast<std::size_t>(a++)] = 0;
    }

    std::vector<double> out(width);
    for (std::size_t k = 0; k < width; ++k) out[k] = pairwise_sum(cell_sums[k]);
    return out;
}

} // namespace pdirac
