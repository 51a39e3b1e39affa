#pragma once

// Per-state spectrally-positive Levy components. The Laplace exponent follows
// the convention phi(a) = -r a + (1/2) s^2 a^2 - lambda (1 - B(a)), so that r
// is the literal drift of the path and jumps are upward.

#include <cmath>
#include <string>

#include "mapq/jump_dist.hpp"

namespace mapq {

struct LevyComponent {
    double drift = 0.0;       // r
    double sigma = 0.0;       // Brownian coefficient
    double jump_rate = 0.0;   // lambda
    JumpDistribution jumps;   // law of a single upward jump

    void check() const {
        if (sigma < 0.0) throw InputError("sigma must be nonnegative");
        if (jump_rate < 0.0) throw InputError("jump rate must be nonnegative");
        if (jump_rate == 0.0 && !jumps.is_zero())
            throw InputError("jump_rate = 0 requires a zero jump distribution");
    }

    /// Non-decreasing paths: no Brownian part and nonnegative drift.
    bool is_subordinator() const { return sigma == 0.0 && drift >= 0.0; }

    /// True when the component is identically zero (frozen state).
    bool is_null() const { return sigma == 0.0 && drift == 0.0 && jump_rate == 0.0; }

    cplx exponent(cplx a) const {
        cplx phi = -drift * a + 0.5 * sigma * sigma * a * a;
        if (jump_rate > 0.0) phi -= jump_rate * (1.0 - jumps.lst(a));
        return phi;
    }

    cplx exponent_derivative(cplx a) const {
        RationalFn b = jumps.lst_rational();
        cplx bp = jump_rate > 0.0 ? b.derivative_at(a) : cplx(0.0);
        return -drift + sigma * sigma * a + jump_rate * bp;
    }

    /// phi as a rational function of the transform variable.
    RationalFn exponent_rational() const {
        RationalFn b = jumps.lst_rational();
        // (-r a + s^2 a^2/2 - lambda) * den + lambda * num, over den.
        Poly head({-jump_rate, -drift, 0.5 * sigma * sigma});
        return {head * b.den + b.num * jump_rate, b.den};
    }

    /// Right inverse of phi: the unique root of phi(a) = b with phi increasing
    /// there. Defined only for non-subordinators (spec: "psi undefined").
    double right_inverse(double b) const {
        if (is_subordinator()) throw NumericalError("psi undefined: component is a subordinator");
        if (!(b > 0.0)) throw InputError("right inverse requires beta > 0");
        // phi is convex with phi(a) -> inf; bracket the increasing branch and bisect.
        double hi = 1.0;
        while (!(exponent(hi).real() > b && exponent_derivative(hi).real() > 0.0)) {
            hi *= 2.0;
            if (hi > 1e12) throw NumericalError("psi bracket failure");
        }
        double lo = 0.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double v = exponent(mid).real();
            bool increasing_above = v > b && exponent_derivative(mid).real() > 0.0;
            (increasing_above ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    }
};

}  // namespace mapq
