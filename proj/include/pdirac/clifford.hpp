#pragma once

/// Dense Clifford algebra Cl_n with e_i e_j + e_j e_i = -2 delta_ij.
///
/// A blade e_{j1} ... e_{jr} (j1 < ... < jr) is addressed by the bitmask with
/// bit (j - 1) set for every factor e_j; index 0 is the scalar 1. A Multivector
/// stores all 2^n coefficients in that order.

#include "pdirac/errors.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pdirac {

inline constexpr int kMaxDim = 10;

using Blade = std::uint32_t;

constexpr int blade_grade(Blade b) noexcept { return std::popcount(b); }

/// Sign s with e_a e_b = s e_(a xor b): one factor -1 per transposition needed to
/// bring the concatenated index list into ascending order, and one per e_j e_j.
constexpr double blade_product_sign(Blade a, Blade b) noexcept {
    int flips = std::popcount(a & b);
    for (Blade x = a >> 1; x != 0; x >>= 1) flips += std::popcount(x & b);
    return (flips & 1) ? -1.0 : 1.0;
}

constexpr double reversion_sign(int grade) noexcept {
    return ((grade * (grade - 1) / 2) & 1) ? -1.0 : 1.0;
}

constexpr double conjugation_sign(int grade) noexcept {
    return ((grade * (grade + 1) / 2) & 1) ? -1.0 : 1.0;
}

class Multivector {
public:
    using Storage = boost::container::small_vector<double, 16>;

    /// Placeholder of dimension 0 (the reals); meant to be assigned over.
    Multivector() : dim_(0), c_(1, 0.0) {}

    explicit Multivector(int dim) : dim_(checked_dim(dim)), c_(std::size_t{1} << dim, 0.0) {}

    static Multivector scalar(int dim, double s) {
        Multivector m(dim);
        m.c_[0] = s;
        return m;
    }

    static Multivector blade(int dim, Blade b, double coeff = 1.0) {
        Multivector m(dim);
        if (b >= m.size()) throw ContractViolation("blade index outside Cl_" + std::to_string(dim));
        m.c_[b] = coeff;
        return m;
    }

    /// e_j with 1-based j.
    static Multivector basis_vector(int dim, int j) {
        if (j < 1 || j > dim) throw ContractViolation("basis vector index out of range");
        return blade(dim, Blade{1} << (j - 1));
    }

    /// x_1 e_1 + ... + x_n e_n with n = x.size().
    static Multivector from_vector(std::span<const double> x) {
        Multivector m(static_cast<int>(x.size()));
        for (std::size_t j = 0; j < x.size(); ++j) m.c_[std::size_t{1} << j] = x[j];
        return m;
    }

    static Multivector from_coeffs(int dim, std::span<const double> coeffs) {
        Multivector m(dim);
        if (coeffs.size() != m.size()) throw ContractViolation("coefficient count must be 2^dim");
        std::copy(coeffs.begin(), coeffs.end(), m.c_.begin());
        return m;
    }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return c_.size(); }

    double operator[](Blade b) const { return c_[b]; }
    double& operator[](Blade b) { return c_[b]; }

    std::span<const double> coeffs() const noexcept { return {c_.data(), c_.size()}; }
    std::span<double> coeffs() noexcept { return {c_.data(), c_.size()}; }

    Multivector grade_part(int r) const {
        Multivector out = *this;
        for (Blade b = 0; b < size(); ++b)
            if (blade_grade(b) != r) out.c_[b] = 0.0;
        return out;
    }

    /// Euclidean norm of all coefficients outside grade r.
    double off_grade_mass(int r) const {
        double s = 0.0;
        for (Blade b = 0; b < size(); ++b)
            if (blade_grade(b) != r) s += c_[b] * c_[b];
        return std::sqrt(s);
    }

    /// Coefficients of e_1 .. e_n.
    std::vector<double> vector_coords() const {
        std::vector<double> x(static_cast<std::size_t>(dim_));
        for (int j = 0; j < dim_; ++j) x[static_cast<std::size_t>(j)] = c_[std::size_t{1} << j];
        return x;
    }

    bool is_zero() const noexcept {
        return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
    }

    Multivector& operator+=(const Multivector& o) {
        require_same_dim(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Multivector& operator-=(const Multivector& o) {
        require_same_dim(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Multivector& operator*=(double s) noexcept {
        for (double& v : c_) v *= s;
        return *this;
    }
    Multivector& operator/=(double s) noexcept {
        for (double& v : c_) v /= s;
        return *this;
    }

    /// this += s * o
    Multivector& add_scaled(const Multivector& o, double s) {
        require_same_dim(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
        return *this;
    }

    void require_same_dim(const Multivector& o) const {
        if (o.dim_ != dim_)
            throw ContractViolation("multivector dimension mismatch: Cl_" + std::to_string(dim_) +
                                    " vs Cl_" + std::to_string(o.dim_));
    }

    friend bool operator==(const Multivector& a, const Multivector& b) {
        return a.dim_ == b.dim_ && std::equal(a.c_.begin(), a.c_.end(), b.c_.begin());
    }

private:
    static int checked_dim(int dim) {
        if (dim < 1 || dim > kMaxDim)
            throw ContractViolation("Clifford dimension must lie in [1, 10], got " + std::to_string(dim));
        return dim;
    }

    int dim_;
    Storage c_;
};

inline Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
inline Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
inline Multivector operator-(Multivector a) { return a *= -1.0; }
inline Multivector operator*(Multivector a, double s) { return a *= s; }
inline Multivector operator*(double s, Multivector a) { return a *= s; }
inline Multivector operator/(Multivector a, double s) { return a /= s; }

namespace detail {
/// Row-major table of blade_product_sign(i, j) for one dimension, built once.
inline const std::vector<double>& sign_table(int dim) {
    static const std::array<std::vector<double>, kMaxDim + 1> tables = [] {
        std::array<std::vector<double>, kMaxDim + 1> t;
        for (int d = 0; d <= 7; ++d) {
            const Blade sz = Blade{1} << d;
            t[static_cast<std::size_t>(d)].resize(std::size_t{sz} * sz);
            for (Blade i = 0; i < sz; ++i)
                for (Blade j = 0; j < sz; ++j) t[static_cast<std::size_t>(d)][std::size_t{i} * sz + j] = blade_product_sign(i, j);
        }
        return t;
    }();
    static thread_local std::array<std::vector<double>, kMaxDim + 1> large;
    if (dim <= 7) return tables[static_cast<std::size_t>(dim)];
    auto& t = large[static_cast<std::size_t>(dim)];
    if (t.empty()) {
        const Blade sz = Blade{1} << dim;
        t.resize(std::size_t{sz} * sz);
        for (Blade i = 0; i < sz; ++i)
            for (Blade j = 0; j < sz; ++j) t[std::size_t{i} * sz + j] = blade_product_sign(i, j);
    }
    return t;
}
} // namespace detail

inline Multivector geometric_product(const Multivector& a, const Multivector& b) {
    a.require_same_dim(b);
    Multivector out = a;
    std::fill(out.coeffs().begin(), out.coeffs().end(), 0.0);
    const std::size_t sz = a.size();
    const auto& signs = detail::sign_table(a.dim());
    for (Blade i = 0; i < sz; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const double* row = signs.data() + i * sz;
        for (Blade j = 0; j < sz; ++j) {
            const double bj = b[j];
            if (bj == 0.0) continue;
            out[i ^ j] += row[j] * ai * bj;
        }
    }
    return out;
}

inline Multivector operator*(const Multivector& a, const Multivector& b) { return geometric_product(a, b); }

template <class... Rest>
Multivector geometric_product(const Multivector& a, const Multivector& b, const Rest&... rest) {
    return geometric_product(geometric_product(a, b), rest...);
}

inline Multivector reversion(Multivector a) {
    for (Blade b = 0; b < a.size(); ++b) a[b] *= reversion_sign(blade_grade(b));
    return a;
}

inline Multivector conjugation(Multivector a) {
    for (Blade b = 0; b < a.size(); ++b) a[b] *= conjugation_sign(blade_grade(b));
    return a;
}

/// Main involution: grade-r part multiplied by (-1)^r.
inline Multivector grade_involution(Multivector a) {
    for (Blade b = 0; b < a.size(); ++b)
        if (blade_grade(b) & 1) a[b] = -a[b];
    return a;
}

inline double scalar_part(const Multivector& a) { return a[0]; }

inline double norm_squared(const Multivector& a) {
    double s = 0.0;
    for (double v : a.coeffs()) s += v * v;
    return s;
}

inline double norm(const Multivector& a) { return std::sqrt(norm_squared(a)); }

/// Coefficient-array dot product on R^(2^n).
inline double coeff_dot(const Multivector& a, const Multivector& b) {
    a.require_same_dim(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.coeffs()[i] * b.coeffs()[i];
    return s;
}

/// Clifford-valued inner product conj(A) B; its scalar part is coeff_dot(A, B).
inline Multivector clifford_inner(const Multivector& a, const Multivector& b) {
    return geometric_product(conjugation(a), b);
}

namespace detail {
inline void require_grade1(const Multivector& x, const char* who) {
    if (x.off_grade_mass(1) > 1e-12 * std::max(1.0, norm(x)))
        throw ContractViolation(std::string(who) + ": argument must be pure grade 1");
}
} // namespace detail

/// x^{-1} = -x / |x|^2 for a nonzero vector.
inline Multivector vector_inverse(const Multivector& x) {
    detail::require_grade1(x, "vector_inverse");
    const double n2 = norm_squared(x);
    if (n2 == 0.0) throw SingularElementError("vector_inverse: zero vector");
    return x * (-1.0 / n2);
}

/// An element of the Lipschitz group stored as its factorisation x_1 x_2 ... x_J.
class VectorFactorList {
public:
    VectorFactorList() = default;

    explicit VectorFactorList(std::vector<Multivector> factors) : factors_(std::move(factors)) {
        for (const auto& f : factors_) {
            if (f.dim() != factors_.front().dim()) throw ContractViolation("VectorFactorList: mixed dimensions");
            detail::require_grade1(f, "VectorFactorList");
            if (norm(f) == 0.0) throw SingularElementError("VectorFactorList: zero factor");
        }
    }

    const std::vector<Multivector>& factors() const noexcept { return factors_; }
    std::size_t length() const noexcept { return factors_.size(); }
    bool empty() const noexcept { return factors_.empty(); }
    int dim() const { return factors_.empty() ? 0 : factors_.front().dim(); }

    bool is_unit(double tol = 1e-12) const {
        return std::all_of(factors_.begin(), factors_.end(),
                           [tol](const Multivector& f) { return std::abs(norm(f) - 1.0) <= tol; });
    }

    /// The product x_1 ... x_J as a multivector in Cl_dim.
    Multivector product(int dim) const {
        Multivector p = Multivector::scalar(dim, 1.0);
        for (const auto& f : factors_) p = geometric_product(p, f);
        return p;
    }
    Multivector product() const {
        if (factors_.empty()) throw ContractViolation("VectorFactorList::product: empty list has no dimension");
        return product(dim());
    }

private:
    std::vector<Multivector> factors_;
};

/// (x_1 ... x_J)^{-1} = x_J^{-1} ... x_1^{-1}.
inline Multivector lipschitz_inverse(const VectorFactorList& a) {
    if (a.empty()) throw ContractViolation("lipschitz_inverse: empty factor list");
    Multivector inv = Multivector::scalar(a.dim(), 1.0);
    for (auto it = a.factors().rbegin(); it != a.factors().rend(); ++it)
        inv = geometric_product(inv, vector_inverse(*it));
    return inv;
}

/// Inverse of an element known to lie in the Lipschitz group, from its coefficients.
/// For a = x_1 ... x_J the product a conj(a) is the positive scalar |a|^2, so
/// a^{-1} = conj(a) / (a conj(a)). Both that scalar-ness and a a^{-1} = 1 are
/// checked against tol (relative).
inline Multivector invert_versor(const Multivector& a, double tol = 1e-10) {
    const Multivector ca = conjugation(a);
    const Multivector aca = geometric_product(a, ca);
    const double s = scalar_part(aca);
    const double scale = norm_squared(a);
    if (!(scale > 0.0) || !(s > 0.0)) throw SingularElementError("invert_versor: element is not invertible");
    if (aca.off_grade_mass(0) > tol * scale)
        throw SingularElementError("invert_versor: a conj(a) is not scalar; element is not in the Lipschitz group");
    Multivector inv = ca / s;
    Multivector check = geometric_product(a, inv);
    check[0] -= 1.0;
    if (norm(check) > tol) throw SingularElementError("invert_versor: a a^{-1} differs from 1");
    return inv;
}

/// y x y for a unit vector y; reflects x in the hyperplane orthogonal to y.
inline Multivector reflect(const Multivector& y, const Multivector& x) {
    y.require_same_dim(x);
    detail::require_grade1(y, "reflect");
    detail::require_grade1(x, "reflect");
    if (std::abs(norm(y) - 1.0) > 1e-12) throw ContractViolation("reflect: mirror vector must have unit norm");
    return geometric_product(y, x, y);
}

/// a x reversion(a) for a = y_1 ... y_J with unit y_i.
inline Multivector pin_action(const VectorFactorList& a, const Multivector& x) {
    detail::require_grade1(x, "pin_action");
    if (!a.is_unit()) throw ContractViolation("pin_action: all factors must be unit vectors");
    if (a.empty()) return x;
    if (a.dim() != x.dim()) throw ContractViolation("pin_action: dimension mismatch");
    const Multivector p = a.product();
    return geometric_product(p, x, reversion(p));
}

} // namespace pdirac
