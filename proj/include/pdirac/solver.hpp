#pragma once

/// Minimisation of a discrete p-Dirichlet energy over lattice fields with
/// Dirichlet boundary data.
///
/// The energy at an interior node averages the 2^n one-sided difference Dirac
/// operators G_sigma = sum_j e_j sigma_j (u(x + sigma_j h e_j) - u(x)) / h:
///
///   E(u) = h^n 2^{-n} sum_x sum_sigma (|G_sigma|^2 + eps^2)^{p/2}.
///
/// Every one-sided operator is exact on linear fields, and the average makes the
/// discrete Euler-Lagrange operator symmetric, so the scheme is second order.

#include "pdirac/clifford.hpp"
#include "pdirac/errors.hpp"
#include "pdirac/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pdirac {

/// Nodes origin + i h of a rectangular grid, classified against a region.
///
/// The node set holds the region's nodes plus one layer of neighbours. Energy
/// nodes have all 2n neighbours in the node set; free nodes are region nodes
/// with all 2n neighbours in the region. Every other node carries boundary data.
class LatticeDomain {
public:
    enum class Region { box, annulus };

    static LatticeDomain box(Point lo, Point hi, double h) {
        const int n = static_cast<int>(lo.size());
        check(n, h);
        if (hi.size() != lo.size()) throw ContractViolation("LatticeDomain::box: corner dimension mismatch");
        LatticeDomain d(Region::box, n, h);
        d.lo_ = lo;
        d.hi_ = hi;
        for (int j = 0; j < n; ++j) {
            const auto ij = static_cast<std::size_t>(j);
            const double cells = (hi[ij] - lo[ij]) / h;
            if (!(cells >= 2.0) || std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
                throw ParameterError("LatticeDomain::box: each side must be an integer multiple (>= 2) of h");
            d.origin_.push_back(lo[ij] - 2.0 * h);
            d.shape_.push_back(static_cast<int>(std::lround(cells)) + 5);
        }
        d.classify();
        return d;
    }

    static LatticeDomain annulus(int n, double inner, double outer, double h, Point center = {}) {
        check(n, h);
        if (!(inner > 0.0) || !(outer > inner)) throw ParameterError("LatticeDomain::annulus: need 0 < inner < outer");
        if (center.empty()) center.assign(static_cast<std::size_t>(n), 0.0);
        if (static_cast<int>(center.size()) != n) throw ContractViolation("LatticeDomain::annulus: centre dimension mismatch");
        LatticeDomain d(Region::annulus, n, h);
        d.center_ = center;
        d.inner_ = inner;
        d.outer_ = outer;
        const int m = static_cast<int>(std::ceil(outer / h)) + 2;
        for (int j = 0; j < n; ++j) {
            d.origin_.push_back(center[static_cast<std::size_t>(j)] - m * h);
            d.shape_.push_back(2 * m + 1);
        }
        d.classify();
        return d;
    }

    int dim() const { return n_; }
    double spacing() const { return h_; }
    Region region() const { return region_; }
    std::size_t grid_size() const { return kind_.size(); }
    const std::vector<int>& shape() const { return shape_; }
    std::ptrdiff_t stride(int j) const { return stride_[static_cast<std::size_t>(j)]; }

    bool in_node_set(std::size_t idx) const { return kind_[idx] != 0; }
    bool is_free(std::size_t idx) const { return kind_[idx] == 2; }
    const std::vector<std::size_t>& energy_nodes() const { return energy_; }
    const std::vector<std::size_t>& free_nodes() const { return free_; }
    const std::vector<std::size_t>& boundary_nodes() const { return boundary_; }

    Point coords(std::size_t idx) const {
        Point x(static_cast<std::size_t>(n_));
        for (int j = n_ - 1; j >= 0; --j) {
            const auto ij = static_cast<std::size_t>(j);
            x[ij] = origin_[ij] + h_ * static_cast<double>(idx % static_cast<std::size_t>(shape_[ij]));
            idx /= static_cast<std::size_t>(shape_[ij]);
        }
        return x;
    }

    bool in_region(std::span<const double> x) const {
        const double tol = 1e-9 * h_;
        if (region_ == Region::box) {
            for (int j = 0; j < n_; ++j) {
                const auto ij = static_cast<std::size_t>(j);
                if (x[ij] < lo_[ij] - tol || x[ij] > hi_[ij] + tol) return false;
            }
            return true;
        }
        const double r = distance(x, center_);
        return r >= inner_ - tol && r <= outer_ + tol;
    }

    std::string describe() const {
        if (region_ == Region::box) return "box";
        return "annulus:" + std::to_string(inner_) + "," + std::to_string(outer_);
    }

private:
    LatticeDomain(Region r, int n, double h) : region_(r), n_(n), h_(h) {}

    static void check(int n, double h) {
        if (n < 1 || n > 4) throw ContractViolation("LatticeDomain: dimension must lie in [1, 4]");
        if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("LatticeDomain: spacing must be positive");
    }

    void classify() {
        stride_.assign(static_cast<std::size_t>(n_), 1);
        for (int j = n_ - 2; j >= 0; --j)
            stride_[static_cast<std::size_t>(j)] = stride_[static_cast<std::size_t>(j) + 1] * shape_[static_cast<std::size_t>(j) + 1];
        std::size_t total = 1;
        for (int s : shape_) total *= static_cast<std::size_t>(s);

        std::vector<std::uint8_t> region(total, 0), on_edge(total, 0);
        for (std::size_t i = 0; i < total; ++i) {
            region[i] = in_region(coords(i)) ? 1 : 0;
            std::size_t rest = i;
            for (int j = n_ - 1; j >= 0; --j) {
                const auto s = static_cast<std::size_t>(shape_[static_cast<std::size_t>(j)]);
                const std::size_t c = rest % s;
                rest /= s;
                if (c == 0 || c + 1 == s) on_edge[i] = 1;
            }
        }
        auto neighbours_all = [&](std::size_t i, auto&& pred) {
            for (int j = 0; j < n_; ++j) {
                const auto s = static_cast<std::size_t>(stride_[static_cast<std::size_t>(j)]);
                if (!pred(i + s) || !pred(i - s)) return false;
            }
            return true;
        };
        std::vector<std::uint8_t> nodes(total, 0);
        for (std::size_t i = 0; i < total; ++i) {
            if (on_edge[i]) continue;
            if (region[i]) nodes[i] = 1;
            else if (!neighbours_all(i, [&](std::size_t k) { return !region[k]; })) nodes[i] = 1;
        }
        kind_.assign(total, 0);
        for (std::size_t i = 0; i < total; ++i) {
            if (!nodes[i]) continue;
            kind_[i] = 1;
            if (on_edge[i]) continue;
            if (neighbours_all(i, [&](std::size_t k) { return nodes[k] != 0; })) energy_.push_back(i);
            if (region[i] && neighbours_all(i, [&](std::size_t k) { return region[k] != 0; })) kind_[i] = 2;
        }
        for (std::size_t i = 0; i < total; ++i) {
            if (kind_[i] == 2) free_.push_back(i);
            else if (kind_[i] == 1) boundary_.push_back(i);
        }
        if (free_.empty()) throw ParameterError("LatticeDomain: no free nodes at this spacing");
    }

    Region region_;
    int n_;
    double h_;
    Point lo_, hi_, center_;
    double inner_ = 0.0, outer_ = 0.0;
    Point origin_;
    std::vector<int> shape_;
    std::vector<std::ptrdiff_t> stride_;
    std::vector<std::uint8_t> kind_; ///< 0 outside, 1 boundary, 2 free
    std::vector<std::size_t> energy_, free_, boundary_;
};

/// Values on a lattice: `components` = 1 for scalar fields, 2^n for Cl_n-valued ones.
struct LatticeField {
    std::shared_ptr<const LatticeDomain> domain;
    int components = 1;
    std::vector<double> values; ///< grid_size * components, row per node

    LatticeField() = default;
    LatticeField(std::shared_ptr<const LatticeDomain> d, int comps) : domain(std::move(d)), components(comps) {
        if (!domain) throw ContractViolation("LatticeField: null domain");
        if (comps != 1 && comps != (1 << domain->dim())) throw ContractViolation("LatticeField: components must be 1 or 2^n");
        values.assign(domain->grid_size() * static_cast<std::size_t>(comps), 0.0);
    }

    std::span<double> at(std::size_t idx) {
        return {values.data() + idx * static_cast<std::size_t>(components), static_cast<std::size_t>(components)};
    }
    std::span<const double> at(std::size_t idx) const {
        return {values.data() + idx * static_cast<std::size_t>(components), static_cast<std::size_t>(components)};
    }

    Multivector multivector(std::size_t idx) const {
        const int n = domain->dim();
        if (components == 1) return Multivector::scalar(n, values[idx]);
        return Multivector::from_coeffs(n, at(idx));
    }

    void set(std::size_t idx, const Multivector& v) {
        if (components == 1) {
            if (v.off_grade_mass(0) > 0.0) throw ContractViolation("LatticeField: scalar field given a non-scalar value");
            values[idx] = v[0];
            return;
        }
        const auto c = v.coeffs();
        std::copy(c.begin(), c.end(), at(idx).begin());
    }
};

/// Value of a Dirichlet problem at a point.
using BoundaryFunction = std::function<Multivector(std::span<const double>)>;

namespace detail {

/// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0, carry = 0.0;
    void add(double v) {
        const double t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

/// (a + t)^q - a^q computed as a^q expm1(q log1p(t / a)), free of cancellation.
inline double power_increment(double a, double t, double q) {
    if (a == 0.0) return std::pow(t, q);
    return std::pow(a, q) * std::expm1(q * std::log1p(t / a));
}

inline void require_energy_args(const LatticeField& u, double p, double eps) {
    if (!u.domain) throw ContractViolation("lattice field has no domain");
    if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must satisfy p > 1");
    if (!(eps >= 0.0)) throw ParameterError("regularisation eps must be non-negative");
}

/// Signs of e_j e_a = sgn(j, a) e_{a xor 2^j}, table[j * 2^n + a].
inline std::vector<double> left_vector_signs(int n) {
    std::vector<double> t(static_cast<std::size_t>(n) << n);
    for (int j = 0; j < n; ++j)
        for (Blade a = 0; a < (Blade{1} << n); ++a)
            t[(static_cast<std::size_t>(j) << n) + a] = blade_product_sign(Blade{1} << j, a);
    return t;
}

/// Adds sum_j e_j sigma_j (v(nb_j) - v(x)) / h into G for Cl_n-valued `vals` (K = 2^n).
inline void one_sided_dirac(const std::vector<double>& vals, int n, int K, std::size_t x, unsigned sigma,
                            std::span<const std::size_t> nb, double inv_h, const std::vector<double>& signs,
                            std::span<double> G) {
    const double* ux = vals.data() + x * static_cast<std::size_t>(K);
    for (int j = 0; j < n; ++j) {
        const double sj = ((sigma >> j) & 1u) ? -inv_h : inv_h;
        const double* uy = vals.data() + nb[static_cast<std::size_t>(j)] * static_cast<std::size_t>(K);
        const double* sg = signs.data() + (static_cast<std::size_t>(j) << n);
        const Blade bit = Blade{1} << j;
        for (Blade a = 0; a < static_cast<Blade>(K); ++a) {
            const double d = uy[a] - ux[a];
            if (d != 0.0) G[a ^ bit] += sj * sg[a] * d;
        }
    }
}

} // namespace detail

/// The discrete p-Dirichlet energy (see the file comment).
inline double discrete_energy(const LatticeField& u, double p, double eps) {
    detail::require_energy_args(u, p, eps);
    const LatticeDomain& dom = *u.domain;
    const int n = dom.dim();
    const int K = u.components;
    const double inv_h = 1.0 / dom.spacing();
    const double w = std::pow(dom.spacing(), n) / static_cast<double>(1u << n);
    const auto signs = detail::left_vector_signs(n);
    std::vector<double> G(static_cast<std::size_t>(K));
    std::vector<std::size_t> nb(static_cast<std::size_t>(n));
    detail::CompensatedSum total;
    for (std::size_t x : dom.energy_nodes()) {
        for (unsigned sigma = 0; sigma < (1u << n); ++sigma) {
            for (int j = 0; j < n; ++j) {
                const auto s = static_cast<std::size_t>(dom.stride(j));
                nb[static_cast<std::size_t>(j)] = ((sigma >> j) & 1u) ? x - s : x + s;
            }
            double g2 = 0.0;
            if (K == 1) {
                for (int j = 0; j < n; ++j) {
                    const double d = (u.values[nb[static_cast<std::size_t>(j)]] - u.values[x]) * inv_h;
                    g2 += d * d;
                }
            } else {
                std::fill(G.begin(), G.end(), 0.0);
                detail::one_sided_dirac(u.values, n, K, x, sigma, nb, inv_h, signs, G);
                for (double v : G) g2 += v * v;
            }
            total.add(std::pow(g2 + eps * eps, 0.5 * p));
        }
    }
    return w * total.value();
}

/// Exact derivative of discrete_energy with respect to every free coefficient;
/// entries at non-free nodes are zero.
inline LatticeField energy_gradient(const LatticeField& u, double p, double eps) {
    detail::require_energy_args(u, p, eps);
    const LatticeDomain& dom = *u.domain;
    const int n = dom.dim();
    const int K = u.components;
    const double inv_h = 1.0 / dom.spacing();
    const double w = std::pow(dom.spacing(), n) / static_cast<double>(1u << n);
    const auto signs = detail::left_vector_signs(n);
    LatticeField g(u.domain, K);
    std::vector<double> G(static_cast<std::size_t>(K)), D(static_cast<std::size_t>(n));
    std::vector<std::size_t> nb(static_cast<std::size_t>(n));
    for (std::size_t x : dom.energy_nodes()) {
        for (unsigned sigma = 0; sigma < (1u << n); ++sigma) {
            for (int j = 0; j < n; ++j) {
                const auto s = static_cast<std::size_t>(dom.stride(j));
                nb[static_cast<std::size_t>(j)] = ((sigma >> j) & 1u) ? x - s : x + s;
            }
            double g2 = 0.0;
            if (K == 1) {
                for (int j = 0; j < n; ++j) {
                    D[static_cast<std::size_t>(j)] = (u.values[nb[static_cast<std::size_t>(j)]] - u.values[x]) * inv_h;
                    g2 += D[static_cast<std::size_t>(j)] * D[static_cast<std::size_t>(j)];
                }
            } else {
                std::fill(G.begin(), G.end(), 0.0);
                detail::one_sided_dirac(u.values, n, K, x, sigma, nb, inv_h, signs, G);
                for (double v : G) g2 += v * v;
            }
            const double base = g2 + eps * eps;
            if (base == 0.0) continue; // p > 1: the term is differentiable with zero derivative here
            const double c = w * p * std::pow(base, 0.5 * p - 1.0);
            for (int j = 0; j < n; ++j) {
                const std::size_t y = nb[static_cast<std::size_t>(j)];
                const double sj = ((sigma >> j) & 1u) ? -inv_h : inv_h;
                if (K == 1) {
                    // d/dD_j of (|D|^2 + eps^2)^{p/2} is p (...)^{p/2-1} D_j; D_j = sigma_j-free difference / h
                    const double f = c * D[static_cast<std::size_t>(j)] * inv_h;
                    if (dom.is_free(y)) g.values[y] += f;
                    if (dom.is_free(x)) g.values[x] -= f;
                    continue;
                }
                const double* sg = signs.data() + (static_cast<std::size_t>(j) << n);
                const Blade bit = Blade{1} << j;
                const bool fy = dom.is_free(y), fx = dom.is_free(x);
                if (!fy && !fx) continue;
                for (Blade a = 0; a < static_cast<Blade>(K); ++a) {
                    const double f = c * sj * sg[a] * G[a ^ bit];
                    if (fy) g.values[y * static_cast<std::size_t>(K) + a] += f;
                    if (fx) g.values[x * static_cast<std::size_t>(K) + a] -= f;
                }
            }
        }
    }
    return g;
}

/// E(u + alpha d) - E(u), evaluated term by term without cancellation so that
/// line searches keep resolving decreases far below E(u) * machine epsilon.
inline double energy_delta(const LatticeField& u, const LatticeField& d, double alpha, double p, double eps) {
    detail::require_energy_args(u, p, eps);
    if (d.domain != u.domain || d.components != u.components) throw ContractViolation("energy_delta: field layouts differ");
    const LatticeDomain& dom = *u.domain;
    const int n = dom.dim();
    const int K = u.components;
    const double inv_h = 1.0 / dom.spacing();
    const double w = std::pow(dom.spacing(), n) / static_cast<double>(1u << n);
    const auto signs = detail::left_vector_signs(n);
    std::vector<double> G(static_cast<std::size_t>(K)), Gd(static_cast<std::size_t>(K));
    std::vector<std::size_t> nb(static_cast<std::size_t>(n));
    detail::CompensatedSum total;
    const double e2 = eps * eps;
    for (std::size_t x : dom.energy_nodes()) {
        for (unsigned sigma = 0; sigma < (1u << n); ++sigma) {
            for (int j = 0; j < n; ++j) {
                const auto s = static_cast<std::size_t>(dom.stride(j));
                nb[static_cast<std::size_t>(j)] = ((sigma >> j) & 1u) ? x - s : x + s;
            }
            double g2 = 0.0, cross = 0.0;
            if (K == 1) {
                for (int j = 0; j < n; ++j) {
                    const std::size_t y = nb[static_cast<std::size_t>(j)];
                    const double a = (u.values[y] - u.values[x]) * inv_h;
                    const double b = alpha * (d.values[y] - d.values[x]) * inv_h;
                    g2 += a * a;
                    cross += b * (2.0 * a + b);
                }
            } else {
                std::fill(G.begin(), G.end(), 0.0);
                std::fill(Gd.begin(), Gd.end(), 0.0);
                detail::one_sided_dirac(u.values, n, K, x, sigma, nb, inv_h, signs, G);
                detail::one_sided_dirac(d.values, n, K, x, sigma, nb, inv_h, signs, Gd);
                for (std::size_t k = 0; k < G.size(); ++k) {
                    const double b = alpha * Gd[k];
                    g2 += G[k] * G[k];
                    cross += b * (2.0 * G[k] + b);
                }
            }
            if (cross == 0.0) continue;
            const double a0 = g2 + e2;
            total.add(detail::power_increment(a0, cross, 0.5 * p));
        }
    }
    return w * total.value();
}

/// Sum over free coefficients of a * b.
inline double lattice_dot(const LatticeField& a, const LatticeField& b) {
    detail::CompensatedSum s;
    const auto K = static_cast<std::size_t>(a.components);
    for (std::size_t x : a.domain->free_nodes())
        for (std::size_t k = 0; k < K; ++k) s.add(a.values[x * K + k] * b.values[x * K + k]);
    return s.value();
}

/// Largest |coefficient| over free nodes.
inline double lattice_sup(const LatticeField& a) {
    double m = 0.0;
    const auto K = static_cast<std::size_t>(a.components);
    for (std::size_t x : a.domain->free_nodes())
        for (std::size_t k = 0; k < K; ++k) m = std::max(m, std::abs(a.values[x * K + k]));
    return m;
}

enum class Optimizer { gradient_descent, conjugate_gradient };

struct SolverConfig {
    double p = 2.0;
    double epsilon = 0.0;              ///< final regularisation; must be > 0 when p < 2
    std::vector<double> eps_schedule;  ///< continuation stages; empty = default (halving 0.1 -> epsilon when p < 2)
    double tolerance = 1e-8;           ///< stop when sup |gradient| <= tolerance * h^n
    double stage_tolerance = 1e-5;     ///< looser criterion for intermediate continuation stages
    int max_iterations = 20000;        ///< total over all stages
    double backtrack = 0.5;            ///< step reduction factor
    double armijo = 1e-4;              ///< sufficient-decrease constant
    Optimizer method = Optimizer::conjugate_gradient;

    /// The continuation stages actually run.
    std::vector<double> schedule() const {
        if (!(p > 1.0)) throw ParameterError("SolverConfig: p must exceed 1");
        if (p < 2.0 && !(epsilon > 0.0)) throw ParameterError("SolverConfig: eps > 0 is required when p < 2");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw ParameterError("SolverConfig: backtrack factor must lie in (0, 1)");
        if (!(armijo > 0.0 && armijo < 0.5)) throw ParameterError("SolverConfig: sufficient-decrease constant must lie in (0, 1/2)");
        if (!eps_schedule.empty()) {
            for (double e : eps_schedule)
                if (!(e >= 0.0) || (p < 2.0 && e == 0.0)) throw ParameterError("SolverConfig: invalid eps stage");
            return eps_schedule;
        }
        std::vector<double> s;
        if (p < 2.0)
            for (double e = 0.1; e > epsilon * (1.0 + 1e-12); e *= 0.5) s.push_back(e);
        s.push_back(epsilon);
        return s;
    }
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_energy = 0.0;
    double final_gradient_sup = 0.0;
    double tolerance = 0.0;                ///< absolute sup-norm tolerance of the last stage
    bool converged = false;
    bool stalled = false;                  ///< the line search could not decrease the energy
    std::vector<double> eps_stages;
    std::vector<double> energy_history;    ///< after each accepted step (and the start of each stage)
    std::vector<double> gradient_history;  ///< sup |gradient| alongside energy_history
    std::vector<int> stage_of_entry;
    std::vector<double> step_decrease;     ///< E(u_new) - E(u_old) of each accepted step, measured accurately

    /// Every accepted step decreased the energy of its stage.
    bool monotone() const {
        return std::all_of(step_decrease.begin(), step_decrease.end(), [](double d) { return d <= 0.0; });
    }
};

struct SolveResult {
    LatticeField u;
    SolveDiagnostics diagnostics;
};

/// Sets every non-free node of u from the boundary function.
inline void apply_boundary(LatticeField& u, const BoundaryFunction& boundary) {
    for (std::size_t x : u.domain->boundary_nodes()) u.set(x, boundary(u.domain->coords(x)));
}

/// Minimises the discrete energy with the boundary nodes held at `boundary`.
/// The default initial guess is the mean of the boundary values on the free nodes.
inline SolveResult solve_dirichlet(std::shared_ptr<const LatticeDomain> domain, const BoundaryFunction& boundary,
                                   const SolverConfig& config, int components = 1,
                                   const std::optional<LatticeField>& initial = std::nullopt) {
    if (!domain) throw ContractViolation("solve_dirichlet: null domain");
    if (!boundary) throw ContractViolation("solve_dirichlet: no boundary data");
    const auto stages = config.schedule();
    const double hn = std::pow(domain->spacing(), domain->dim());

    SolveResult res{LatticeField(domain, components), {}};
    LatticeField& u = res.u;
    auto& diag = res.diagnostics;
    diag.eps_stages = stages;
    apply_boundary(u, boundary);
    const auto K = static_cast<std::size_t>(components);
    if (initial) {
        if (initial->domain != domain || initial->components != components) throw ContractViolation("solve_dirichlet: initial guess layout differs");
        for (std::size_t x : domain->free_nodes())
            for (std::size_t k = 0; k < K; ++k) u.values[x * K + k] = initial->values[x * K + k];
    } else {
        std::vector<double> mean(K, 0.0);
        for (std::size_t x : domain->boundary_nodes())
            for (std::size_t k = 0; k < K; ++k) mean[k] += u.values[x * K + k];
        for (auto& m : mean) m /= static_cast<double>(domain->boundary_nodes().size());
        for (std::size_t x : domain->free_nodes())
            for (std::size_t k = 0; k < K; ++k) u.values[x * K + k] = mean[k];
    }

    const double p = config.p;
    for (std::size_t st = 0; st < stages.size(); ++st) {
        const double eps = stages[st];
        const bool last = st + 1 == stages.size();
        const double tol = (last ? config.tolerance : config.stage_tolerance) * hn;
        diag.tolerance = tol;
        double energy = discrete_energy(u, p, eps);
        LatticeField g = energy_gradient(u, p, eps);
        double gsup = lattice_sup(g);
        diag.energy_history.push_back(energy);
        diag.gradient_history.push_back(gsup);
        diag.stage_of_entry.push_back(static_cast<int>(st));
        diag.stalled = false;

        LatticeField dir = g;
        for (auto& v : dir.values) v = -v;
        double gd = lattice_dot(g, dir);
        double alpha = 1.0;
        LatticeField g_prev = g;
        while (gsup > tol && diag.iterations < config.max_iterations) {
            if (!(gd < 0.0)) { // not a descent direction: restart along -g
                for (std::size_t i = 0; i < dir.values.size(); ++i) dir.values[i] = -g.values[i];
                gd = lattice_dot(g, dir);
            }
            // Armijo backtracking, then one quadratic-interpolation refinement so the
            // step is close to the exact line minimiser (which keeps CG directions conjugate)
            double delta = energy_delta(u, dir, alpha, p, eps);
            int tries = 0;
            while (!(delta <= config.armijo * alpha * gd) && tries < 200) {
                alpha *= config.backtrack;
                delta = energy_delta(u, dir, alpha, p, eps);
                ++tries;
            }
            if (!(delta <= config.armijo * alpha * gd)) {
                diag.stalled = true;
                break;
            }
            const double curvature = delta - gd * alpha; // phi(a) - phi'(0) a, positive when convex
            if (curvature > 0.0) {
                const double aq = -gd * alpha * alpha / (2.0 * curvature);
                if (aq > 0.0 && std::isfinite(aq) && std::abs(aq - alpha) > 1e-3 * alpha) {
                    const double dq = energy_delta(u, dir, aq, p, eps);
                    if (dq < delta && dq <= config.armijo * aq * gd) {
                        alpha = aq;
                        delta = dq;
                    }
                }
            }
            for (std::size_t x : domain->free_nodes())
                for (std::size_t k = 0; k < K; ++k) u.values[x * K + k] += alpha * dir.values[x * K + k];
            ++diag.iterations;
            energy += delta;
            diag.step_decrease.push_back(delta);
            g_prev = std::move(g);
            g = energy_gradient(u, p, eps);
            gsup = lattice_sup(g);
            diag.energy_history.push_back(energy);
            diag.gradient_history.push_back(gsup);
            diag.stage_of_entry.push_back(static_cast<int>(st));

            double beta = 0.0;
            if (config.method == Optimizer::conjugate_gradient) {
                // Polak-Ribiere with restart: beta = max(0, <g, g - g_prev> / <g_prev, g_prev>)
                const double gg_prev = lattice_dot(g_prev, g_prev);
                double num = 0.0;
                detail::CompensatedSum s;
                for (std::size_t x : domain->free_nodes())
                    for (std::size_t k = 0; k < K; ++k)
                        s.add(g.values[x * K + k] * (g.values[x * K + k] - g_prev.values[x * K + k]));
                num = s.value();
                beta = gg_prev > 0.0 ? std::max(0.0, num / gg_prev) : 0.0;
            }
            for (std::size_t i = 0; i < dir.values.size(); ++i) dir.values[i] = -g.values[i] + beta * dir.values[i];
            const double gd_new = lattice_dot(g, dir);
            // scale the next trial step by the ratio of directional derivatives, allowing growth
            alpha = std::min(alpha * gd / gd_new, 4.0 * alpha);
            if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = 1.0;
            gd = gd_new;
        }
        diag.final_energy = discrete_energy(u, p, eps);
        diag.final_gradient_sup = gsup;
        diag.converged = gsup <= tol; // the final stage decides convergence
    }
    return res;
}

/// Largest |u(x) - exact(x)| / |exact(x)| over free nodes.
inline double max_relative_error(const LatticeField& u, const BoundaryFunction& exact) {
    double m = 0.0;
    for (std::size_t x : u.domain->free_nodes()) {
        const Multivector e = exact(u.domain->coords(x));
        m = std::max(m, norm(u.multivector(x) - e) / norm(e));
    }
    return m;
}

/// Largest |u(x) - exact(x)| over free nodes.
inline double max_abs_error(const LatticeField& u, const BoundaryFunction& exact) {
    double m = 0.0;
    for (std::size_t x : u.domain->free_nodes()) m = std::max(m, norm(u.multivector(x) - exact(u.domain->coords(x))));
    return m;
}

/// Largest |sum_j (u(x + h e_j) + u(x - h e_j) - 2 u(x))| / h^2 over free nodes and coefficients.
inline double discrete_laplace_residual(const LatticeField& u) {
    const LatticeDomain& dom = *u.domain;
    const auto K = static_cast<std::size_t>(u.components);
    const double h2 = dom.spacing() * dom.spacing();
    double m = 0.0;
    for (std::size_t x : dom.free_nodes())
        for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (int j = 0; j < dom.dim(); ++j) {
                const auto st = static_cast<std::size_t>(dom.stride(j));
                s += u.values[(x + st) * K + k] + u.values[(x - st) * K + k] - 2.0 * u.values[x * K + k];
            }
            m = std::max(m, std::abs(s) / h2);
        }
    return m;
}

} // namespace pdirac
