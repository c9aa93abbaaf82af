#pragma once

/// Moebius transformations x -> (ax + b)(cx + d)^{-1} of R^n u {inf} in Vahlen form.

#include "pdirac/clifford.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pdirac {

/// Four Clifford entries with pseudo-determinant a rev(d) - b rev(c) = 1.
///
/// `certified` records that every entry is a product of vectors or zero because
/// the matrix was assembled from generators; it is not decided from coefficients.
struct VahlenMatrix {
    Multivector a, b, c, d;
    bool certified = false;

    int dim() const { return a.dim(); }
};

struct VahlenReport {
    double ac = 0.0; ///< off-grade-1 mass of rev(a) c
    double cd = 0.0; ///< rev(c) d
    double db = 0.0; ///< rev(d) b
    double ba = 0.0; ///< rev(b) a
    double pseudo_determinant = 0.0; ///< |a rev(d) - b rev(c) - 1|
    /// |rev(a) d - rev(b) c - 1|. Agrees with the above on generators but is not
    /// preserved by matrix products (e.g. translation * dilation * inversion *
    /// translation), so it is reported for comparison and not used in passes().
    double transposed_pseudo_determinant = 0.0;
    bool certified = false;

    double max_residual() const { return std::max({ac, cd, db, ba, pseudo_determinant}); }
    bool passes(double tol = 1e-10) const { return max_residual() <= tol; }
};

namespace mobius {

inline VahlenMatrix identity(int n) {
    return {Multivector::scalar(n, 1.0), Multivector(n), Multivector(n), Multivector::scalar(n, 1.0), true};
}

/// x -> x + t
inline VahlenMatrix translation(std::span<const double> t) {
    const int n = static_cast<int>(t.size());
    return {Multivector::scalar(n, 1.0), Multivector::from_vector(t), Multivector(n), Multivector::scalar(n, 1.0), true};
}

/// x -> lambda x
inline VahlenMatrix dilation(int n, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ContractViolation("dilation: lambda must be positive");
    const double s = std::sqrt(lambda);
    return {Multivector::scalar(n, s), Multivector(n), Multivector(n), Multivector::scalar(n, 1.0 / s), true};
}

/// x -> r x rev(r) for a unit Pin element r = y_1 ... y_J.
inline VahlenMatrix rotation(const VectorFactorList& r) {
    if (r.empty() || !r.is_unit()) throw ContractViolation("rotation: expects a non-empty list of unit vectors");
    const int n = r.dim();
    std::vector<Multivector> rev(r.factors().rbegin(), r.factors().rend());
    const Multivector d = lipschitz_inverse(VectorFactorList(std::move(rev)));
    return {r.product(), Multivector(n), Multivector(n), d, true};
}

/// Rotation by `angle` in the (e_i, e_j) plane, turning e_i towards e_j (1-based indices).
inline VahlenMatrix plane_rotation(int n, int i, int j, double angle) {
    if (i == j) throw ContractViolation("plane_rotation: plane indices must differ");
    const Multivector ei = Multivector::basis_vector(n, i);
    const Multivector ej = Multivector::basis_vector(n, j);
    const Multivector half = ei * std::cos(angle / 2.0) + ej * std::sin(angle / 2.0);
    return rotation(VectorFactorList({half, ei}));
}

/// Reflection x -> y x y in the hyperplane orthogonal to v (normalised here).
inline VahlenMatrix reflection(std::span<const double> v) {
    Multivector y = Multivector::from_vector(v);
    const double len = norm(y);
    if (len == 0.0) throw ContractViolation("reflection: zero normal");
    return rotation(VectorFactorList({y / len}));
}

/// x -> x / |x|^2, entries (0, -1, 1, 0).
inline VahlenMatrix inversion(int n) {
    return {Multivector(n), Multivector::scalar(n, -1.0), Multivector::scalar(n, 1.0), Multivector(n), true};
}

/// Entries taken as given; condition (i) is not certified.
inline VahlenMatrix from_entries(Multivector a, Multivector b, Multivector c, Multivector d) {
    a.require_same_dim(b);
    a.require_same_dim(c);
    a.require_same_dim(d);
    return {std::move(a), std::move(b), std::move(c), std::move(d), false};
}

} // namespace mobius

/// Matrix product; compose(outer, inner) maps x to outer(inner(x)).
inline VahlenMatrix compose(const VahlenMatrix& m1, const VahlenMatrix& m2) {
    return {m1.a * m2.a + m1.b * m2.c, m1.a * m2.b + m1.b * m2.d,
            m1.c * m2.a + m1.d * m2.c, m1.c * m2.b + m1.d * m2.d,
            m1.certified && m2.certified};
}

inline VahlenMatrix operator*(const VahlenMatrix& m1, const VahlenMatrix& m2) { return compose(m1, m2); }

/// Inverse of a pseudo-determinant-one Vahlen matrix: (rev d, -rev b, -rev c, rev a).
inline VahlenMatrix inverse(const VahlenMatrix& m) {
    return {reversion(m.d), -reversion(m.b), -reversion(m.c), reversion(m.a), m.certified};
}

inline VahlenReport validate_vahlen(const VahlenMatrix& m) {
    VahlenReport r;
    r.ac = (reversion(m.a) * m.c).off_grade_mass(1);
    r.cd = (reversion(m.c) * m.d).off_grade_mass(1);
    r.db = (reversion(m.d) * m.b).off_grade_mass(1);
    r.ba = (reversion(m.b) * m.a).off_grade_mass(1);
    Multivector det = m.a * reversion(m.d) - m.b * reversion(m.c);
    det[0] -= 1.0;
    r.pseudo_determinant = norm(det);
    Multivector tdet = reversion(m.a) * m.d - reversion(m.b) * m.c;
    tdet[0] -= 1.0;
    r.transposed_pseudo_determinant = norm(tdet);
    r.certified = m.certified;
    return r;
}

namespace detail {
inline Multivector as_vector(const VahlenMatrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.dim()) throw ContractViolation("Moebius map: point dimension mismatch");
    return Multivector::from_vector(x);
}
} // namespace detail

/// cx + d at x; throws PoleError where it vanishes.
inline Multivector denominator(const VahlenMatrix& m, std::span<const double> x, double pole_tol = 1e-13) {
    Multivector q = m.c * detail::as_vector(m, x) + m.d;
    if (norm(q) <= pole_tol) throw PoleError("Moebius map: cx + d vanishes at the evaluation point");
    return q;
}

/// (ax + b)(cx + d)^{-1} as a full multivector (grade 1 up to rounding for valid matrices).
inline Multivector apply_mobius(const VahlenMatrix& m, std::span<const double> x) {
    const Multivector xv = detail::as_vector(m, x);
    const Multivector q = denominator(m, x);
    return (m.a * xv + m.b) * invert_versor(q);
}

/// apply_mobius projected to coordinates; rejects results that are not vectors.
inline std::vector<double> map_point(const VahlenMatrix& m, std::span<const double> x) {
    const Multivector y = apply_mobius(m, x);
    if (y.off_grade_mass(1) > 1e-8 * std::max(1.0, norm(y)))
        throw ContractViolation("map_point: image is not a vector; matrix violates the Vahlen conditions");
    return y.vector_coords();
}

/// Columns dM/dx_j of the derivative of the map, from
/// d/dx_j (ax+b)(cx+d)^{-1} = a e_j q^{-1} - (ax+b) q^{-1} c e_j q^{-1}, q = cx+d.
inline std::vector<std::vector<double>> mobius_partials(const VahlenMatrix& m, std::span<const double> x) {
    const int n = m.dim();
    const Multivector xv = detail::as_vector(m, x);
    const Multivector qi = invert_versor(denominator(m, x));
    const Multivector num_qi = (m.a * xv + m.b) * qi;
    std::vector<std::vector<double>> cols;
    for (int j = 1; j <= n; ++j) {
        const Multivector ej = Multivector::basis_vector(n, j);
        cols.push_back((m.a * ej * qi - num_qi * m.c * ej * qi).vector_coords());
    }
    return cols;
}

struct JacobianFactors {
    Multivector j1;  ///< rev(cx+d) / |cx+d|^n
    Multivector jm1; ///< rev(cx+d) / |cx+d|^(n+2)
};

inline JacobianFactors jacobian_factors(const VahlenMatrix& m, std::span<const double> x) {
    const Multivector q = denominator(m, x);
    const double s = norm(q);
    const int n = m.dim();
    const Multivector rq = reversion(q);
    return {rq / std::pow(s, n), rq / std::pow(s, n + 2)};
}

/// u = (cx+d)/|cx+d| and scale = |cx+d| at a point; the operator frame of D_M.
struct FramePoint {
    Multivector u;
    double scale = 1.0;

    /// u A rev(u)
    Multivector apply(const Multivector& a) const { return u * a * reversion(u); }

    /// u e_j rev(u), 1-based j.
    Multivector frame_vector(int j) const { return apply(Multivector::basis_vector(u.dim(), j)); }
};

inline FramePoint frame_at(const VahlenMatrix& m, std::span<const double> x) {
    const Multivector q = denominator(m, x);
    const double s = norm(q);
    return {q / s, s};
}

/// |cx+d|^(-2n), the Jacobian determinant of the map.
inline double jacobian_determinant(const VahlenMatrix& m, std::span<const double> x) {
    return std::pow(norm(denominator(m, x)), -2.0 * m.dim());
}

/// Parity of cx+d at x: +1 when it is even, -1 when odd. Throws when the
/// element mixes parities beyond tol (relative), which a Lipschitz element cannot.
inline int denominator_parity(const VahlenMatrix& m, std::span<const double> x, double tol = 1e-10) {
    const Multivector q = denominator(m, x);
    double even = 0.0, odd = 0.0;
    for (Blade b = 0; b < q.size(); ++b) (blade_grade(b) & 1 ? odd : even) += q[b] * q[b];
    const double total = even + odd;
    if (std::min(even, odd) > tol * tol * total)
        throw ContractViolation("denominator_parity: cx + d has mixed parity");
    return even >= odd ? 1 : -1;
}

namespace detail {
inline std::vector<double> parse_numbers(std::string_view s) {
    std::vector<double> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        std::string token(s.substr(0, comma));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != token.size()) throw ParameterError("bad number '" + token + "' in Moebius expression");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline VahlenMatrix parse_generator(std::string_view term, int n) {
    term = trim(term);
    const auto colon = term.find(':');
    const std::string_view head = term.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : term.substr(colon + 1);
    const auto nums = parse_numbers(args);
    auto expect = [&](std::size_t count) {
        if (nums.size() != count)
            throw ParameterError("Moebius generator '" + std::string(head) + "' expects " + std::to_string(count) +
                                 " numbers, got " + std::to_string(nums.size()));
    };
    if (head == "identity") { expect(0); return mobius::identity(n); }
    if (head == "inversion") { expect(0); return mobius::inversion(n); }
    if (head == "translate") { expect(static_cast<std::size_t>(n)); return mobius::translation(nums); }
    if (head == "dilate") { expect(1); return mobius::dilation(n, nums[0]); }
    if (head == "reflect") { expect(static_cast<std::size_t>(n)); return mobius::reflection(nums); }
    if (head == "rotate") {
        expect(3);
        const int i = static_cast<int>(nums[0]), j = static_cast<int>(nums[1]);
        if (i != nums[0] || j != nums[1] || i < 1 || j < 1 || i > n || j > n)
            throw ParameterError("rotate: plane indices must be integers in [1, n]");
        return mobius::plane_rotation(n, i, j, nums[2]);
    }
    throw ParameterError("unknown Moebius generator '" + std::string(head) + "'");
}
} // namespace detail

/// Parses a composition of generators, e.g. "inversion*translate:1,0,0".
///
/// Grammar:
///   expr      := generator ('*' generator)*
///   generator := identity | inversion | translate:t1,..,tn | dilate:lambda
///              | rotate:i,j,angle | reflect:v1,..,vn
/// "A*B" is the Vahlen matrix product, i.e. the map x -> A(B(x)).
inline VahlenMatrix parse_mobius(std::string_view expr, int n) {
    expr = detail::trim(expr);
    if (expr.empty()) throw ParameterError("empty Moebius expression");
    std::optional<VahlenMatrix> acc;
    while (true) {
        const auto star = expr.find('*');
        VahlenMatrix g = detail::parse_generator(expr.substr(0, star), n);
        acc = acc ? compose(*acc, g) : g;
        if (star == std::string_view::npos) break;
        expr.remove_prefix(star + 1);
    }
    return *acc;
}

} // namespace pdirac
