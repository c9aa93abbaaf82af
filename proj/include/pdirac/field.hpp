#pragma once

#include "pdirac/clifford.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pdirac {

using Point = std::vector<double>;

inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double euclidean_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

/// A Cl_n-valued function on (part of) R^n.
///
/// `grad`, when set, returns the n partial derivatives d/dx_j. `singular_distance`,
/// when set, returns the distance from a point to the excluded set; stencils
/// reaching that set are rejected.
struct AnalyticField {
    int dim = 0;
    std::function<Multivector(std::span<const double>)> eval;
    std::function<std::vector<Multivector>(std::span<const double>)> grad;
    std::function<double(std::span<const double>)> singular_distance;

    Multivector operator()(std::span<const double> x) const { return eval(x); }
    bool has_grad() const { return static_cast<bool>(grad); }
    double distance_to_singular(std::span<const double> x) const {
        return singular_distance ? singular_distance(x) : std::numeric_limits<double>::infinity();
    }
};

/// Distance function for a single excluded point.
inline std::function<double(std::span<const double>)> point_singularity(Point center) {
    return [c = std::move(center)](std::span<const double> x) { return distance(x, c); };
}

/// D f = sum_j e_j df/dx_j from a list of partial derivatives.
inline Multivector dirac_from_partials(std::span<const Multivector> partials) {
    Multivector out = partials.front();
    std::fill(out.coeffs().begin(), out.coeffs().end(), 0.0);
    for (std::size_t j = 0; j < partials.size(); ++j)
        out += Multivector::basis_vector(out.dim(), static_cast<int>(j) + 1) * partials[j];
    return out;
}

/// Working domain U in R^n: an axis-aligned box, a ball, or an annulus about `center`.
struct Domain {
    enum class Kind { box, ball, annulus };

    int dim = 0;
    Kind kind = Kind::ball;
    Point center;        // ball / annulus
    double inner = 0.0;  // annulus inner radius
    double outer = 1.0;  // ball / annulus outer radius
    Point lo, hi;        // box

    static Domain box(Point lo, Point hi) {
        if (lo.size() != hi.size() || lo.empty()) throw ContractViolation("Domain::box: corner dimensions differ");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw ContractViolation("Domain::box: empty box");
        Domain d;
        d.dim = static_cast<int>(lo.size());
        d.kind = Kind::box;
        d.lo = std::move(lo);
        d.hi = std::move(hi);
        return d;
    }

    static Domain ball(Point center, double radius) {
        if (!(radius > 0.0)) throw ContractViolation("Domain::ball: radius must be positive");
        Domain d;
        d.dim = static_cast<int>(center.size());
        d.kind = Kind::ball;
        d.center = std::move(center);
        d.outer = radius;
        return d;
    }

    static Domain annulus(Point center, double inner, double outer) {
        if (!(inner > 0.0 && inner < outer)) throw ContractViolation("Domain::annulus: need 0 < inner < outer");
        Domain d;
        d.dim = static_cast<int>(center.size());
        d.kind = Kind::annulus;
        d.center = std::move(center);
        d.inner = inner;
        d.outer = outer;
        return d;
    }

    /// Signed distance to the complement: positive inside.
    double clearance(std::span<const double> x) const {
        switch (kind) {
        case Kind::box: {
            double c = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < lo.size(); ++i) c = std::min({c, x[i] - lo[i], hi[i] - x[i]});
            return c;
        }
        case Kind::ball: return outer - distance(x, center);
        case Kind::annulus: {
            const double r = distance(x, center);
            return std::min(r - inner, outer - r);
        }
        }
        return -1.0;
    }

    bool contains(std::span<const double> x) const { return clearance(x) >= 0.0; }

    Point bbox_lo() const {
        if (kind == Kind::box) return lo;
        Point p = center;
        for (double& v : p) v -= outer;
        return p;
    }
    Point bbox_hi() const {
        if (kind == Kind::box) return hi;
        Point p = center;
        for (double& v : p) v += outer;
        return p;
    }

    /// A point deep inside U: the centre, or the mid-radius point along e_1 for an annulus.
    Point interior_point() const {
        switch (kind) {
        case Kind::box: {
            Point p(lo.size());
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * (lo[i] + hi[i]);
            return p;
        }
        case Kind::ball: return center;
        case Kind::annulus: {
            Point p = center;
            p[0] += 0.5 * (inner + outer);
            return p;
        }
        }
        return center;
    }

    /// Length scale used to size finite-difference steps.
    double length_scale() const {
        if (kind == Kind::box) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < lo.size(); ++i) m = std::min(m, hi[i] - lo[i]);
            return 0.5 * m;
        }
        return kind == Kind::ball ? outer : 0.5 * (outer - inner);
    }

    /// Uniform sample by rejection from the bounding box.
    template <class Rng>
    Point sample(Rng& rng, double min_clearance = 0.0) const {
        const Point a = bbox_lo(), b = bbox_hi();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Point x(a.size());
        for (int tries = 0; tries < 100000; ++tries) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = a[i] + (b[i] - a[i]) * u(rng);
            if (clearance(x) >= min_clearance) return x;
        }
        throw ContractViolation("Domain::sample: no point with the requested clearance");
    }

    /// Points of a uniform grid over the bounding box that fall inside U, plus
    /// boundary-hugging points; used to scan hypotheses on the closure of U.
    std::vector<Point> scan_points(int per_axis = 17) const {
        const Point a = bbox_lo(), b = bbox_hi();
        std::vector<Point> out;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        Point x(static_cast<std::size_t>(dim));
        while (true) {
            for (int i = 0; i < dim; ++i)
                x[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] +
                    (b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)]) * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
            if (contains(x)) out.push_back(x);
            else if (kind != Kind::box) {
                // project onto the nearest boundary sphere so the closure is covered
                Point d(x);
                double r = distance(x, center);
                if (r > 0.0) {
                    const double target = (kind == Kind::annulus && r < inner) ? inner : outer;
                    for (int i = 0; i < dim; ++i) {
                        const auto k = static_cast<std::size_t>(i);
                        d[k] = center[k] + (x[k] - center[k]) * target / r;
                    }
                    out.push_back(d);
                }
            }
            int k = 0;
            while (k < dim && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == dim) break;
        }
        return out;
    }
};

} // namespace pdirac
