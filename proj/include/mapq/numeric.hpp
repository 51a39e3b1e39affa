#pragma once

// Small numeric utilities shared across the library.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mapq {

using cplx = std::complex<double>;

/// Input/validation problems (bad model files, bad arguments). CLI exit code 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failures of the numerical machinery (lost roots, singular systems,
/// diverging inversions). CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr double kPi = 3.14159265358979323846;

inline bool almost_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Checks that a nominally real quantity has negligible imaginary part and
/// returns its real part.
inline double expect_real(cplx z, double tol = 1e-9, const char* what = "value") {
    double scale = std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) > tol * scale)
        throw NumericalError(std::string(what) + ": imaginary part " + std::to_string(z.imag()) +
                             " exceeds tolerance");
    return z.real();
}

/// Gauss-Legendre nodes and weights on [-1,1], computed by Newton iteration
/// on the Legendre recurrence. Cached per order.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        nodes.resize(n);
        weights.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
    }

    /// Integrates f over [a,b].
    template <class F>
    auto integrate(double a, double b, F&& f) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        auto acc = f(mid) * 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            acc += weights[i] * f(mid + half * nodes[i]);
        return acc * half;
    }
};

inline const GaussLegendre& gauss_legendre(int n) {
    static GaussLegendre g64(64), g128(128), g256(256), g512(512);
    switch (n) {
        case 64: return g64;
        case 128: return g128;
        case 256: return g256;
        case 512: return g512;
        default: throw std::logic_error("unsupported Gauss-Legendre order");
    }
}

}  // namespace mapq
