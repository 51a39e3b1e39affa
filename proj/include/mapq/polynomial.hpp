#pragma once

// Dense univariate polynomials over the complex numbers, plus the rational
// functions built from them. Roots are computed from the companion matrix;
// coefficients of implicitly defined polynomials (determinants of
// polynomial matrices) are recovered by evaluation on a scaled circle and an
// inverse DFT, which is exact for the correct degree bound.

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <vector>

#include "mapq/numeric.hpp"

namespace mapq {

class Poly {
public:
    Poly() : c_{0.0} {}
    explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_ = {0.0};
    }
    static Poly constant(cplx a) { return Poly({a}); }
    /// (z - root)
    static Poly linear_root(cplx root) { return Poly({-root, 1.0}); }

    const std::vector<cplx>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    cplx operator()(cplx z) const {
        cplx acc = 0.0;
        for (int k = degree(); k >= 0; --k) acc = acc * z + c_[k];
        return acc;
    }

    Poly derivative() const {
        if (degree() == 0) return Poly();
        std::vector<cplx> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
        return Poly(std::move(d));
    }

    Poly operator*(const Poly& o) const {
        std::vector<cplx> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
        return Poly(std::move(r));
    }
    Poly operator+(const Poly& o) const {
        std::vector<cplx> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
        return Poly(std::move(r));
    }
    Poly operator-(const Poly& o) const { return *this + o * Poly::constant(-1.0); }
    Poly operator*(cplx a) const {
        std::vector<cplx> r = c_;
        for (auto& x : r) x *= a;
        return Poly(std::move(r));
    }

    /// Drops trailing coefficients that are negligible relative to the largest.
    Poly trimmed(double rel_tol = 1e-12) const {
        double scale = 0.0;
        for (const auto& x : c_) scale = std::max(scale, std::abs(x));
        if (scale == 0.0) return Poly();
        std::size_t n = c_.size();
        while (n > 1 && std::abs(c_[n - 1]) < rel_tol * scale) --n;
        return Poly(std::vector<cplx>(c_.begin(), c_.begin() + n));
    }

    /// Exact division by (z - a); the caller asserts that a is a root.
    Poly deflate(cplx a) const {
        std::vector<cplx> q(c_.size() - 1);
        cplx carry = c_.back();
        for (int k = degree() - 1; k >= 0; --k) {
            q[k] = carry;
            carry = c_[k] + carry * a;
        }
        return Poly(std::move(q));
    }

    /// All roots via the companion matrix of the trimmed polynomial.
    std::vector<cplx> roots() const {
        Poly p = trimmed();
        int n = p.degree();
        if (n < 1) return {};
        Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) comp(i, n - 1) = -p.c_[i] / p.c_[n];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, /*computeEigenvectors=*/false);
        std::vector<cplx> out(n);
        for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
        return out;
    }

private:
    std::vector<cplx> c_;  // ascending powers
};

/// Recovers a polynomial of degree <= deg_bound from point evaluations on the
/// circle of radius r (inverse DFT; exact up to roundoff).
template <class F>
Poly interpolate_on_circle(F&& eval, int deg_bound, double r = 1.0) {
    const int m = deg_bound + 1;
    std::vector<cplx> vals(m);
    for (int j = 0; j < m; ++j) {
        double th = 2.0 * kPi * j / m;
        vals[j] = eval(r * cplx(std::cos(th), std::sin(th)));
    }
    std::vector<cplx> coeff(m);
    for (int k = 0; k < m; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < m; ++j) {
            double th = -2.0 * kPi * j * k / m;
            acc += vals[j] * cplx(std::cos(th), std::sin(th));
        }
        coeff[k] = acc / (double(m) * std::pow(r, k));
    }
    return Poly(std::move(coeff)).trimmed(1e-11);
}

/// Ratio of two polynomials. Denominator roots are the only poles; callers
/// keep numerator/denominator factored rather than expanded when stability
/// depends on it.
struct RationalFn {
    Poly num;
    Poly den;

    cplx operator()(cplx z) const {
        cplx d = den(z);
        if (std::abs(d) < 1e-300) throw NumericalError("exponent pole: rational function evaluated at a pole");
        return num(z) / d;
    }
    /// Derivative via the quotient rule, evaluated pointwise.
    cplx derivative_at(cplx z) const {
        cplx n = num(z), d = den(z), np = num.derivative()(z), dp = den.derivative()(z);
        return (np * d - n * dp) / (d * d);
    }
    RationalFn operator+(const RationalFn& o) const { return {num * o.den + o.num * den, den * o.den}; }
    RationalFn operator*(const RationalFn& o) const { return {num * o.num, den * o.den}; }
    RationalFn operator*(cplx a) const { return {num * a, den}; }
};

}  // namespace mapq
