#pragma once

// Numerical Laplace inversion by Bromwich-contour trapezoid sums with Euler
// (binomial) acceleration. The same machinery serves the outer inversion to
// deterministic time and the inner inversion of workload-CDF transforms; for
// the inner case the transform is complex-valued (it is itself evaluated at a
// complex outer node), so the two-sided sum is kept without the conjugate
// shortcut.

#include <functional>
#include <vector>

#include "mapq/numeric.hpp"

namespace mapq {

struct InversionConfig {
    int terms = 18;        // Euler averaging terms M
    int burn = 0;          // plain partial sums N before averaging; 0 = 2M + 4
    double target = 1e-8;  // precision target; drives the default contour shift
    double shift = 0.0;    // contour parameter A; 0 = derived from target

    void check() const {
        if (terms < 10) throw InputError("inversion terms must be >= 10");
        if (!(target > 1e-12)) throw InputError("inversion target must exceed 1e-12");
    }
    int burn_terms() const { return burn > 0 ? burn : 2 * terms + 4; }
    double contour() const { return shift > 0.0 ? shift : -std::log(target) + 6.6; }
};

struct Inverted {
    cplx value;
    double err_estimate = 0.0;  // last-binomial-difference magnitude
};

namespace detail_inv {

inline Inverted euler_accelerate(const std::vector<cplx>& partial, int M, double scale) {
    // binomial average of the last M+1 partial sums, plus the same with M-1
    // terms for the error estimate
    auto average = [&](int terms) {
        cplx acc = 0.0;
        double coeff = std::pow(0.5, terms);  // binom(terms,0)/2^terms
        std::size_t base = partial.size() - (std::size_t)terms - 1;
        for (int j = 0; j <= terms; ++j) {
            acc += coeff * partial[base + j];
            coeff *= double(terms - j) / double(j + 1);
        }
        return acc;
    };
    Inverted out;
    out.value = average(M);
    out.err_estimate = std::abs(out.value - average(M - 1));
    for (const auto& s : partial)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()) ||
            std::abs(s) > 1e12 * (1.0 + scale))
            throw NumericalError("inversion diverged: unbounded partial sums");
    return out;
}

}  // namespace detail_inv

/// Inverts several transforms sharing their contour nodes: eval(s) returns
/// the vector of transform values at the node s. `conjugate_symmetric` is the
/// real-valued-function fast path (nodes with k >= 0 only).
inline std::vector<Inverted> invert_many(
    const std::function<std::vector<cplx>(cplx)>& eval, std::size_t count, double t,
    const InversionConfig& cfg, bool conjugate_symmetric = true) {
    cfg.check();
    if (!(t > 0.0)) throw InputError("inversion time must be positive");
    const int M = cfg.terms, N = cfg.burn_terms();
    const double A = cfg.contour();

    std::vector<std::vector<cplx>> partial(count);
    for (auto& p : partial) p.reserve(N + M + 1);
    std::vector<cplx> running(count, 0.0);

    if (conjugate_symmetric) {
        std::vector<cplx> base = eval(cplx(A / (2.0 * t), 0.0));
        for (std::size_t q = 0; q < count; ++q) running[q] = 0.5 * base[q];
        for (int k = 1; k <= N + M; ++k) {
            cplx s(A / (2.0 * t), kPi * k / t);
            std::vector<cplx> v = eval(s);
            double sign = (k % 2 == 0) ? 1.0 : -1.0;
            for (std::size_t q = 0; q < count; ++q) {
                running[q] += sign * v[q].real();
                if (k >= N) partial[q].push_back(running[q]);
            }
        }
    } else {
        std::vector<cplx> base = eval(cplx(A / (2.0 * t), 0.0));
        for (std::size_t q = 0; q < count; ++q) running[q] = 0.5 * base[q];
        for (int k = 1; k <= N + M; ++k) {
            cplx sp(A / (2.0 * t), kPi * k / t), sm(A / (2.0 * t), -kPi * k / t);
            std::vector<cplx> vp = eval(sp), vm = eval(sm);
            double sign = (k % 2 == 0) ? 1.0 : -1.0;
            for (std::size_t q = 0; q < count; ++q) {
                running[q] += sign * (vp[q] + vm[q]) * 0.5;
                if (k >= N) partial[q].push_back(running[q]);
            }
        }
    }

    std::vector<Inverted> out(count);
    const double factor = std::exp(A / 2.0) / t;
    for (std::size_t q = 0; q < count; ++q) {
        double scale = 0.0;
        for (const auto& s : partial[q]) scale = std::max(scale, std::abs(s));
        Inverted iv = detail_inv::euler_accelerate(partial[q], M, scale);
        iv.value *= factor;
        iv.err_estimate *= factor;
        out[q] = iv;
    }
    return out;
}

/// Single-transform inversion of a real-valued function of time.
inline Inverted invert(const std::function<cplx(cplx)>& transform, double t,
                       const InversionConfig& cfg = {}) {
    auto many = invert_many([&](cplx s) { return std::vector<cplx>{transform(s)}; }, 1, t, cfg,
                            /*conjugate_symmetric=*/true);
    return many[0];
}

/// Inversion of a complex-valued function (no conjugate symmetry assumed).
inline Inverted invert_complex(const std::function<cplx(cplx)>& transform, double t,
                               const InversionConfig& cfg = {}) {
    auto many = invert_many([&](cplx s) { return std::vector<cplx>{transform(s)}; }, 1, t, cfg,
                            /*conjugate_symmetric=*/false);
    return many[0];
}

}  // namespace mapq
