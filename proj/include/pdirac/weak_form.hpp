#pragma once

/// Weak formulations of the p-Dirac, A,p-Dirac and p-harmonic equations by
/// quadrature against bump test functions, and the conformal covariance
/// experiments built on them.

#include "pdirac/calculus.hpp"
#include "pdirac/mobius.hpp"
#include "pdirac/quadrature.hpp"
#include "pdirac/test_function.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pdirac {

/// A positive weight A(x); `exponent` records s when A = |cx+d|^s.
struct WeightFunction {
    std::function<double(std::span<const double>)> eval;
    double exponent = 0.0;
    std::string description = "1";

    double operator()(std::span<const double> x) const { return eval ? eval(x) : 1.0; }

    static WeightFunction constant(double c = 1.0) {
        if (!(c > 0.0)) throw ContractViolation("WeightFunction: weight must be positive");
        return {[c](std::span<const double>) { return c; }, 0.0, std::to_string(c)};
    }

    /// A(x) = |cx + d|^s
    static WeightFunction denominator_power(const VahlenMatrix& M, double s) {
        return {[M, s](std::span<const double> x) { return std::pow(norm(denominator(M, x)), s); }, s,
                "|cx+d|^" + std::to_string(s)};
    }
};

/// Clifford-valued weak residual and its scale: `normalization` integrates
/// |flux| |test derivative| over the same support.
struct WeakResidual {
    Multivector residual;
    double normalization = 0.0;

    double normalized() const {
        const double r = norm(residual);
        if (normalization == 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return r / normalization;
    }
};

namespace detail {

inline void require_support(const Domain& U, const BumpTestFunction& eta) {
    if (eta.dim() != U.dim) throw ContractViolation("weak residual: test function dimension differs from the domain");
    if (U.clearance(eta.center) < eta.radius * (1.0 - 1e-12))
        throw ContractViolation("weak residual: test function support leaves the domain");
}

/// Integrates w_k conj(Phi(x)) T(x) over the support of eta for k weights at once,
/// where `pair(x, phi, t, w)` fills Phi, T and the weights at points inside the support.
template <class Pair>
std::vector<WeakResidual> integrate_weighted_pairing(const Domain& U, const BumpTestFunction& eta, const QuadratureRule& rule,
                                                     std::size_t k, Pair&& pair) {
    require_support(U, eta);
    const int n = U.dim;
    const std::size_t blades = std::size_t{1} << n;
    const std::size_t width = blades + 1;
    Point lo(eta.center), hi(eta.center);
    for (auto& v : lo) v -= eta.radius;
    for (auto& v : hi) v += eta.radius;
    Multivector phi(n), t(n);
    std::vector<double> w(k, 1.0);
    const double r2 = eta.radius * eta.radius;
    const auto sums = integrate_box(lo, hi, rule, width * k, [&](std::span<const double> x, double qw, std::span<double> acc) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = x[static_cast<std::size_t>(i)] - eta.center[static_cast<std::size_t>(i)];
            s += d * d;
        }
        if (s >= r2) return;
        pair(x, phi, t, std::span<double>(w));
        const Multivector term = conjugation(phi) * t;
        const double scale = norm(phi) * norm(t);
        for (std::size_t m = 0; m < k; ++m) {
            const double f = qw * w[m];
            double* a = acc.data() + m * width;
            for (std::size_t b = 0; b < blades; ++b) a[b] += f * term[static_cast<Blade>(b)];
            a[blades] += std::abs(f) * scale;
        }
    });
    std::vector<WeakResidual> out;
    for (std::size_t m = 0; m < k; ++m)
        out.push_back({Multivector::from_coeffs(n, std::span<const double>(sums.data() + m * width, blades)), sums[m * width + blades]});
    return out;
}

/// Integrates conj(Phi(x)) T(x) over the support of eta, where `pair(x, phi, t)`
/// fills Phi and T at points inside the support.
template <class Pair>
WeakResidual integrate_pairing(const Domain& U, const BumpTestFunction& eta, const QuadratureRule& rule, Pair&& pair) {
    return integrate_weighted_pairing(U, eta, rule, 1, [&](std::span<const double> x, Multivector& phi, Multivector& t,
                                                          std::span<double>) { pair(x, phi, t); })
        .front();
}

} // namespace detail

/// Integral over U of conj(A |g|^(p-2) g) D eta.
inline WeakResidual weak_Ap_dirac_residual(const AnalyticField& g, double p, const WeightFunction& A, const Domain& U,
                                           const BumpTestFunction& eta, const QuadratureRule& rule) {
    detail::require_p(p);
    return detail::integrate_pairing(U, eta, rule, [&](std::span<const double> x, Multivector& phi, Multivector& t) {
        phi = p_flux(g(x), p) * A(x);
        t = eta.dirac(x);
    });
}

/// Integral over U of conj(|f|^(p-2) f) D eta.
inline WeakResidual weak_p_dirac_residual(const AnalyticField& f, double p, const Domain& U, const BumpTestFunction& eta,
                                          const QuadratureRule& rule) {
    return weak_Ap_dirac_residual(f, p, WeightFunction{}, U, eta, rule);
}

/// Integral over U of conj(|Dh|^(p-2) Dh) D eta with Dh from the analytic gradient.
inline WeakResidual weak_p_harmonic_residual(const AnalyticField& h, double p, const Domain& U, const BumpTestFunction& eta,
                                             const QuadratureRule& rule) {
    detail::require_p(p);
    if (!h.has_grad()) throw ContractViolation("weak_p_harmonic_residual: needs an analytic gradient");
    return detail::integrate_pairing(U, eta, rule, [&](std::span<const double> x, Multivector& phi, Multivector& t) {
        phi = p_flux(dirac_from_partials(h.grad(x)), p);
        t = eta.dirac(x);
    });
}

/// Rejects Moebius maps whose pole -c^{-1}d lies within `margin` of the closure of V,
/// and fields whose singular set comes within `margin` of M(V). The singular-set test
/// scans V and pads each sample by the distance a scan cell can move under M.
inline void require_regular_pullback(const VahlenMatrix& M, const Domain& V, const AnalyticField* f = nullptr,
                                     double margin = 1e-3) {
    if (M.dim() != V.dim) throw ContractViolation("require_regular_pullback: dimension mismatch");
    if (!M.c.is_zero()) {
        const Multivector pole = -(invert_versor(M.c) * M.d);
        const auto pv = pole.vector_coords();
        if (pole.off_grade_mass(1) <= 1e-8 * std::max(1.0, norm(pole)) && V.clearance(pv) > -margin)
            throw HypothesisViolation("cx + d vanishes on the closure of the domain");
    }
    constexpr int per_axis = 17;
    const auto lo = V.bbox_lo(), hi = V.bbox_hi();
    double half_diag = 0.0;
    for (int i = 0; i < V.dim; ++i) {
        const double step = (hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]) / (per_axis - 1);
        half_diag += 0.25 * step * step;
    }
    half_diag = std::sqrt(half_diag);
    for (const auto& x : V.scan_points(per_axis)) {
        const double q = norm(M.c * Multivector::from_vector(x) + M.d);
        if (q < margin) throw HypothesisViolation("cx + d vanishes on the closure of the domain");
        if (f && f->singular_distance && f->distance_to_singular(map_point(M, x)) < margin + 2.0 * half_diag / (q * q))
            throw HypothesisViolation("the image domain meets the singular set of the field");
    }
}

/// g(x) = (cx + d)^{-1} f(M(x)).
inline AnalyticField transformed_field(const AnalyticField& f, const VahlenMatrix& M) {
    if (f.dim != M.dim()) throw ContractViolation("transformed_field: dimension mismatch");
    AnalyticField g;
    g.dim = f.dim;
    g.eval = [f, M](std::span<const double> x) {
        return invert_versor(denominator(M, x)) * f(map_point(M, x));
    };
    return g;
}

/// One line of a covariance experiment.
struct CovarianceRow {
    int theorem = 0;
    int n = 0;
    double p = 0.0;
    double exponent = std::numeric_limits<double>::quiet_NaN(); ///< weight exponent s, NaN when unweighted
    int eta_id = 0;
    double residual = 0.0;      ///< |weak residual|
    double normalization = 0.0;
    double normalized = 0.0;
    double normalized_refined = std::numeric_limits<double>::quiet_NaN(); ///< with doubled Gauss order, when requested
    bool quadrature_warning = false; ///< doubling the order changed a non-negligible residual by > 10 %
};

struct CovarianceReport {
    std::vector<CovarianceRow> rows;

    /// Largest normalized residual, optionally restricted to one theorem and one exponent.
    double max_normalized(std::optional<int> theorem = std::nullopt, std::optional<double> exponent = std::nullopt) const {
        double m = 0.0;
        for (const auto& r : rows) {
            if (theorem && r.theorem != *theorem) continue;
            if (exponent && !(r.exponent == *exponent)) continue;
            m = std::max(m, r.normalized);
        }
        return m;
    }
};

namespace detail {

inline CovarianceRow make_row(int theorem, int n, double p, double exponent, int id, const WeakResidual& r) {
    CovarianceRow row;
    row.theorem = theorem;
    row.n = n;
    row.p = p;
    row.exponent = exponent;
    row.eta_id = id;
    row.residual = norm(r.residual);
    row.normalization = r.normalization;
    row.normalized = r.normalized();
    return row;
}

inline void attach_refined(CovarianceRow& row, const WeakResidual& refined) {
    row.normalized_refined = refined.normalized();
    const double floor = 1e-12;
    if (row.normalized > floor || row.normalized_refined > floor) {
        const double change = std::abs(row.normalized - row.normalized_refined) / std::max(row.normalized, row.normalized_refined);
        // a converged residual stays put; a residual that is pure quadrature error must drop sharply
        row.quadrature_warning = change > 0.1 && row.normalized_refined > 0.1 * row.normalized;
    }
}

} // namespace detail

/// Options shared by the covariance experiments.
struct ExperimentOptions {
    QuadratureRule rule{12, 8};
    bool refine = false;      ///< also evaluate with doubled Gauss order
    double margin = 1e-3;     ///< pole / singular-set clearance on the closure of V
};

/// Weak n-Dirac residuals of g(x) = (cx+d)^{-1} f(M(x)) on V = M^{-1}(U).
inline CovarianceReport theorem1_experiment(const AnalyticField& f, const VahlenMatrix& M, const Domain& V,
                                            const std::vector<BumpTestFunction>& etas, const ExperimentOptions& opt = {}) {
    require_regular_pullback(M, V, &f, opt.margin);
    const int n = V.dim;
    const AnalyticField g = transformed_field(f, M);
    CovarianceReport rep;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        auto row = detail::make_row(1, n, n, std::numeric_limits<double>::quiet_NaN(), static_cast<int>(i),
                                    weak_p_dirac_residual(g, n, V, etas[i], opt.rule));
        if (opt.refine) detail::attach_refined(row, weak_p_dirac_residual(g, n, V, etas[i], opt.rule.refined()));
        rep.rows.push_back(row);
    }
    return rep;
}

/// Weak A,p-Dirac residuals of g(x) = (cx+d)^{-1} f(M(x)) with A = |cx+d|^(p-n) on V = M^{-1}(U).
inline CovarianceReport theorem3_experiment(const AnalyticField& f, double p, const VahlenMatrix& M, const Domain& V,
                                            const std::vector<BumpTestFunction>& etas, const ExperimentOptions& opt = {}) {
    detail::require_p(p);
    require_regular_pullback(M, V, &f, opt.margin);
    const int n = V.dim;
    const AnalyticField g = transformed_field(f, M);
    const auto A = WeightFunction::denominator_power(M, p - n);
    CovarianceReport rep;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        auto row = detail::make_row(3, n, p, p - n, static_cast<int>(i), weak_Ap_dirac_residual(g, p, A, V, etas[i], opt.rule));
        if (opt.refine) detail::attach_refined(row, weak_Ap_dirac_residual(g, p, A, V, etas[i], opt.rule.refined()));
        rep.rows.push_back(row);
    }
    return rep;
}

/// Twisted derivatives of H = h o M at x: D_x H = sum e_j dH/dx_j and
/// D_M H = sum u e_j rev(u) dH/dx_j with u = (cx+d)/|cx+d|, via the chain rule.
struct TwistedDerivative {
    Multivector dx;
    Multivector dm;
    FramePoint frame;
};

inline TwistedDerivative twisted_derivative(const AnalyticField& h, const VahlenMatrix& M, std::span<const double> x) {
    const int n = M.dim();
    const Point y = map_point(M, x);
    const auto grad = h.grad(y);
    const auto cols = mobius_partials(M, x);
    TwistedDerivative out{Multivector(n), Multivector(n), frame_at(M, x)};
    for (int j = 0; j < n; ++j) {
        Multivector dj(n);
        for (int k = 0; k < n; ++k) dj.add_scaled(grad[static_cast<std::size_t>(k)], cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
        out.dx += Multivector::basis_vector(n, j + 1) * dj;
        out.dm += out.frame.frame_vector(j + 1) * dj;
    }
    return out;
}

/// Integrals over V of conj(A |D H|^(p-2) D_M H) D_M xi for H = h o M, xi = eta (a test
/// function on V) and A = |cx+d|^s, one result per exponent s, from a single quadrature pass.
inline std::vector<WeakResidual> weak_ApM_harmonic_residuals(const AnalyticField& h, double p, const VahlenMatrix& M,
                                                             const std::vector<double>& exponents, const Domain& V,
                                                             const BumpTestFunction& eta, const QuadratureRule& rule) {
    detail::require_p(p);
    if (!h.has_grad()) throw ContractViolation("weak_ApM_harmonic_residual: needs an analytic gradient");
    if (exponents.empty()) throw ContractViolation("weak_ApM_harmonic_residual: empty exponent list");
    const int n = V.dim;
    std::vector<double> g(static_cast<std::size_t>(n));
    return detail::integrate_weighted_pairing(
        V, eta, rule, exponents.size(), [&](std::span<const double> x, Multivector& phi, Multivector& t, std::span<double> w) {
            const auto td = twisted_derivative(h, M, x);
            const double nd = norm(td.dx);
            if (p < 2.0 && nd < 1e-10) throw StencilError("|Dh| vanishes where |Dh|^(p-2) is singular");
            phi = p == 2.0 ? td.dm : td.dm * std::pow(nd, p - 2.0);
            eta.profile_gradient(x, g);
            Multivector dm_eta(n);
            for (int j = 0; j < n; ++j) dm_eta.add_scaled(td.frame.frame_vector(j + 1), g[static_cast<std::size_t>(j)]);
            t = dm_eta * eta.coeff;
            for (std::size_t k = 0; k < exponents.size(); ++k) w[k] = std::pow(td.frame.scale, exponents[k]);
        });
}

inline WeakResidual weak_ApM_harmonic_residual(const AnalyticField& h, double p, const VahlenMatrix& M, double s,
                                               const Domain& V, const BumpTestFunction& eta, const QuadratureRule& rule) {
    return weak_ApM_harmonic_residuals(h, p, M, {s}, V, eta, rule).front();
}

/// Weight exponents scanned by theorem4_experiment by default.
inline std::vector<double> default_exponent_scan(double p, int n) {
    return {2.0 * (p + 2.0 - n), 2.0 * (p - n), p - n, 0.0};
}

/// A,p,M-harmonic weak residuals of h o M on V for each weight exponent in the scan.
/// For p = n the unweighted D_M form is also reported, as theorem 2 rows.
inline CovarianceReport theorem4_experiment(const AnalyticField& h, double p, const VahlenMatrix& M, const Domain& V,
                                            const std::vector<BumpTestFunction>& etas, const ExperimentOptions& opt = {},
                                            std::vector<double> exponents = {}) {
    detail::require_p(p);
    require_regular_pullback(M, V, &h, opt.margin);
    const int n = V.dim;
    if (exponents.empty()) exponents = default_exponent_scan(p, n);
    const bool with_theorem2 = p == static_cast<double>(n);
    std::vector<double> all = exponents;
    if (with_theorem2) all.push_back(0.0);
    std::vector<std::vector<CovarianceRow>> by_exponent(all.size());
    for (std::size_t i = 0; i < etas.size(); ++i) {
        const auto res = weak_ApM_harmonic_residuals(h, p, M, all, V, etas[i], opt.rule);
        std::vector<WeakResidual> fine;
        if (opt.refine) fine = weak_ApM_harmonic_residuals(h, p, M, all, V, etas[i], opt.rule.refined());
        for (std::size_t k = 0; k < all.size(); ++k) {
            const bool t2 = with_theorem2 && k + 1 == all.size();
            auto row = detail::make_row(t2 ? 2 : 4, n, p, t2 ? std::numeric_limits<double>::quiet_NaN() : all[k],
                                        static_cast<int>(i), res[k]);
            if (opt.refine) detail::attach_refined(row, fine[k]);
            by_exponent[k].push_back(row);
        }
    }
    CovarianceReport rep;
    for (auto& rows : by_exponent) rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    return rep;
}

/// The unweighted D_M form at p = n.
inline CovarianceReport theorem2_experiment(const AnalyticField& h, const VahlenMatrix& M, const Domain& V,
                                            const std::vector<BumpTestFunction>& etas, const ExperimentOptions& opt = {}) {
    const int n = V.dim;
    require_regular_pullback(M, V, &h, opt.margin);
    CovarianceReport rep;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        auto row = detail::make_row(2, n, n, std::numeric_limits<double>::quiet_NaN(), static_cast<int>(i),
                                    weak_ApM_harmonic_residual(h, n, M, 0.0, V, etas[i], opt.rule));
        if (opt.refine) detail::attach_refined(row, weak_ApM_harmonic_residual(h, n, M, 0.0, V, etas[i], opt.rule.refined()));
        rep.rows.push_back(row);
    }
    return rep;
}

namespace detail {
struct FdTwisted {
    Multivector dx, dm;
};
/// Finite-difference D_x and D_M of the composite x -> F(M(x)).
inline FdTwisted fd_twisted(const AnalyticField& F, const VahlenMatrix& M, std::span<const double> x, double step) {
    AnalyticField comp;
    comp.dim = F.dim;
    comp.eval = [&](std::span<const double> z) { return F(map_point(M, z)); };
    const auto g = gradient_fd(comp, x, step);
    const auto fp = frame_at(M, x);
    FdTwisted out{Multivector(F.dim), Multivector(F.dim)};
    for (int j = 0; j < F.dim; ++j) {
        out.dx += Multivector::basis_vector(F.dim, j + 1) * g[static_cast<std::size_t>(j)];
        out.dm += fp.frame_vector(j + 1) * g[static_cast<std::size_t>(j)];
    }
    return out;
}
} // namespace detail

/// |Sc(|DH|^(p-2) conj(D_M H) D_M Xi) - Sc(|DH|^(p-2) conj(D_x H) D_x Xi)| at x, with
/// H = h o M and Xi = eta o M by finite differences. The two agree when h and eta
/// are scalar-valued; with multivector coefficients the frame rotation leaves a
/// bivector contribution in the scalar part.
inline double sc_invariance_check(const AnalyticField& h, double p, const VahlenMatrix& M, const BumpTestFunction& eta,
                                  std::span<const double> x, double step = 1e-3) {
    detail::require_p(p);
    const auto dh = detail::fd_twisted(h, M, x, step);
    const auto de = detail::fd_twisted(eta.as_field(), M, x, step);
    const double w = std::pow(norm(dh.dx), p - 2.0);
    const double lhs = w * scalar_part(conjugation(dh.dm) * de.dm);
    const double rhs = w * scalar_part(conjugation(dh.dx) * de.dx);
    return std::abs(lhs - rhs);
}

/// |Sc(conj(u A rev u) u B rev u) - Sc(conj(A) B)| for a unit Lipschitz u.
inline double frame_scalar_invariance(const Multivector& u, const Multivector& A, const Multivector& B) {
    const FramePoint fp{u, 1.0};
    return std::abs(scalar_part(conjugation(fp.apply(A)) * fp.apply(B)) - scalar_part(conjugation(A) * B));
}

/// | |D_M H| - |D_x H| | at x for H = h o M, both by finite differences.
inline double norm_frame_identity_check(const VahlenMatrix& M, const AnalyticField& h, std::span<const double> x,
                                        double step = 1e-3) {
    const auto d = detail::fd_twisted(h, M, x, step);
    return std::abs(norm(d.dm) - norm(d.dx));
}

} // namespace pdirac
