#pragma once

// d = 1 fluctuation layer: scale functions W and Z of a single spectrally
// positive component, two-sided exit probabilities, the reflected workload
// law and LST at an exponential time, the overshoot transform, and the law of
// a subordinator at an exponential time.
//
// Everything is driven by partial fractions of 1/(phi(a) - b): with rational
// jump transforms the scale function is an exact finite sum of exponentials
// W(y) = sum_k c_k exp(theta_k y) over the simple roots theta_k of the
// cleared polynomial. Evaluators that mix growing and decaying modes are
// regrouped so that the dominant exponential cancels analytically instead of
// numerically; this keeps them usable at large levels and at the complex
// killing rates coming from the Bromwich contour.

#include <functional>
#include <vector>

#include "mapq/levy.hpp"
#include "mapq/model.hpp"

namespace mapq {

/// Finite sum of complex exponentials sum_k c_k exp(p_k y).
struct ExpSum {
    std::vector<cplx> coef;
    std::vector<cplx> expo;

    cplx eval(double y) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) acc += coef[k] * std::exp(expo[k] * y);
        return acc;
    }
    /// int_0^u of the sum.
    cplx integral(double u) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) {
            if (std::abs(expo[k]) < 1e-14)
                acc += coef[k] * u;
            else
                acc += coef[k] * (std::exp(expo[k] * u) - 1.0) / expo[k];
        }
        return acc;
    }
    /// int_z^inf of the sum; requires all Re p_k < 0.
    cplx tail(double z) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) acc -= coef[k] * std::exp(expo[k] * z) / expo[k];
        return acc;
    }
    /// int_0^u e^{-a y} * sum dy.
    cplx weighted_integral(double u, cplx a) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) {
            cplx q = expo[k] - a;
            if (std::abs(q) < 1e-12)
                acc += coef[k] * u;
            else
                acc += coef[k] * (std::exp(q * u) - 1.0) / q;
        }
        return acc;
    }
};

/// Partial-fraction representation of the scale function of a non-subordinator
/// component: W(y) = sum_k c_k exp(theta_k y), transform 1/(phi - beta).
/// For Re(beta) > 0 exactly one root lies in the right half-plane; it is the
/// dominant one and the continuation of the right inverse psi(beta).
struct ScaleFunctionRep {
    cplx beta;  // killing rate actually used (possibly perturbed)
    cplx beta_requested;
    bool perturbed = false;
    std::vector<cplx> roots;     // theta_k, simple
    std::vector<cplx> residues;  // c_k
    int dominant = 0;            // index of the root with maximal real part

    cplx theta_hat() const { return roots[dominant]; }

    cplx W(double y) const {
        if (y < 0.0) return 0.0;
        cplx acc = 0.0;
        for (std::size_t k = 0; k < roots.size(); ++k) acc += residues[k] * std::exp(roots[k] * y);
        return acc;
    }
    cplx dW(double y) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < roots.size(); ++k) acc += roots[k] * residues[k] * std::exp(roots[k] * y);
        return acc;
    }
    cplx Z(double u) const {
        cplx acc = 1.0;
        for (std::size_t k = 0; k < roots.size(); ++k)
            acc += beta * residues[k] * (std::exp(roots[k] * u) - 1.0) / roots[k];
        return acc;
    }
    /// e^{-theta_hat y} W(y); bounded for y in [0, inf).
    cplx W_hat(double y) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < roots.size(); ++k)
            acc += residues[k] * std::exp((roots[k] - theta_hat()) * y);
        return acc;
    }
    /// e^{-theta_hat u} Z(u); bounded for u in [0, inf).
    cplx Z_hat(double u) const {
        cplx th = theta_hat();
        cplx acc = std::exp(-th * u);
        for (std::size_t k = 0; k < roots.size(); ++k)
            acc += beta * residues[k] * (std::exp((roots[k] - th) * u) - std::exp(-th * u)) / roots[k];
        return acc;
    }
    /// W(u)/W(v) for 0 <= u <= v, with the dominant mode factored out.
    cplx W_ratio(double u, double v) const {
        return std::exp(theta_hat() * (u - v)) * W_hat(u) / W_hat(v);
    }
    /// Z(u)/W(v) for u <= v.
    cplx Z_over_W(double u, double v) const {
        return std::exp(theta_hat() * (u - v)) * Z_hat(u) / W_hat(v);
    }
};

namespace detail {

inline std::vector<cplx> polish_roots(const Poly& p, std::vector<cplx> rts) {
    Poly dp = p.derivative();
    for (auto& r : rts)
        for (int it = 0; it < 3; ++it) {
            cplx d = dp(r);
            if (std::abs(d) < 1e-300) break;
            r -= p(r) / d;
        }
    return rts;
}

}  // namespace detail

/// Builds the partial-fraction scale function. Roots closer than the
/// multiplicity tolerance trigger one beta perturbation and then an error,
/// matching the simple-roots assumption of the analytic engine.
inline ScaleFunctionRep scale_function(const LevyComponent& comp, cplx beta, bool allow_retry = true) {
    if (comp.is_subordinator())
        throw NumericalError("scale function undefined for subordinator components");
    if (!comp.jumps.has_rational_lst())
        throw InputError("analytic engine requires rational jump transforms");

    RationalFn phi = comp.exponent_rational();
    Poly cleared = (phi.num - phi.den * beta).trimmed();  // roots of phi(a) = beta
    std::vector<cplx> rts = detail::polish_roots(cleared, cleared.roots());

    double scale = 0.0;
    for (const auto& r : rts) scale = std::max(scale, std::abs(r));
    for (std::size_t a = 0; a < rts.size(); ++a)
        for (std::size_t b = a + 1; b < rts.size(); ++b)
            if (std::abs(rts[a] - rts[b]) < 1e-8 * std::max(1.0, scale)) {
                if (!allow_retry) throw NumericalError("multiple root: phi(a)-beta has a repeated root");
                cplx jitter = 1e-6 * (1.0 + std::abs(beta));
                ScaleFunctionRep rep = scale_function(comp, beta + jitter, /*allow_retry=*/false);
                rep.perturbed = true;
                rep.beta_requested = beta;
                return rep;
            }

    ScaleFunctionRep rep;
    rep.beta = beta;
    rep.beta_requested = beta;
    rep.roots = rts;
    rep.residues.resize(rts.size());
    Poly dcleared = cleared.derivative();
    for (std::size_t k = 0; k < rts.size(); ++k) rep.residues[k] = phi.den(rts[k]) / dcleared(rts[k]);
    rep.dominant = 0;
    for (std::size_t k = 1; k < rts.size(); ++k)
        if (rts[k].real() > rts[rep.dominant].real()) rep.dominant = static_cast<int>(k);
    return rep;
}

/// Law of a subordinator at an exponential time T: an atom at zero (driftless
/// compound Poisson only) plus a density that is an exact exponential sum,
/// obtained from the residues of omega/(omega - phi(a)).
struct SubordinatorLaw {
    cplx atom0;
    ExpSum density;

    cplx cdf(double y) const { return atom0 + density.integral(y); }
    cplx tail(double y) const { return density.tail(y); }  // P(Y > y), y >= 0
};

inline SubordinatorLaw subordinator_law(const LevyComponent& comp, cplx omega) {
    if (!comp.is_subordinator()) throw InputError("subordinator_law requires a subordinator component");
    RationalFn phi = comp.exponent_rational();
    Poly num = (phi.den * omega).trimmed();
    Poly den = (phi.den * omega - phi.num).trimmed();  // poles of the transform

    SubordinatorLaw law;
    if (num.degree() == den.degree())
        law.atom0 = num.coeffs().back() / den.coeffs().back();
    else if (num.degree() < den.degree())
        law.atom0 = 0.0;
    else
        throw NumericalError("subordinator transform is not proper");

    std::vector<cplx> poles = detail::polish_roots(den, den.roots());
    Poly dden = den.derivative();
    for (const auto& p : poles) {
        if (p.real() > -1e-12 && std::abs(omega.imag()) < 1e-12 * std::abs(omega))
            throw NumericalError("subordinator law pole with nonnegative real part");
        law.density.coef.push_back(num(p) / dden(p));
        law.density.expo.push_back(p);
    }
    return law;
}

struct ScalarExitProbs {
    double delta_minus = 0.0;
    double delta_plus = 0.0;
};

/// Two-sided exit probabilities with killing (real beta). Subordinators never
/// cross the lower level, so delta_minus vanishes identically and the upper
/// crossing reduces to a tail probability of Y(T_beta).
inline ScalarExitProbs exit_probs_scalar(const LevyComponent& comp, double u_minus, double u_plus,
                                         double beta) {
    if (!(u_minus >= 0.0 && u_plus >= 0.0 && u_minus + u_plus > 0.0))
        throw InputError("exit levels must be nonnegative with u_minus + u_plus > 0");
    if (!(beta > 0.0)) throw InputError("beta must be positive");

    ScalarExitProbs out;
    if (comp.is_subordinator()) {
        SubordinatorLaw law = subordinator_law(comp, beta);
        out.delta_minus = 0.0;
        out.delta_plus = expect_real(law.tail(u_plus), 1e-9, "delta_plus");
        return out;
    }

    ScaleFunctionRep rep = scale_function(comp, beta);
    double S = u_minus + u_plus;
    cplx dm = rep.W_ratio(u_plus, S);

    // delta_plus = [Z(u+)W(S) - Z(S)W(u+)] / W(S). In the pairwise expansion
    // the diagonal double modes and all single modes cancel exactly (the
    // latter against W(S) - W(u+), using sum_k c_k/theta_k = 1/beta), leaving
    // only cross terms whose exponents are nonpositive after scaling by
    // e^{-theta_hat S}.
    cplx th = rep.theta_hat();
    const auto& r = rep.roots;
    const auto& c = rep.residues;
    cplx corr = 1.0;
    for (std::size_t k = 0; k < r.size(); ++k) corr -= beta * c[k] / r[k];
    cplx num = corr * (rep.W_hat(S) - std::exp(th * (u_plus - S)) * rep.W_hat(u_plus));
    for (std::size_t k = 0; k < r.size(); ++k)
        for (std::size_t l = 0; l < r.size(); ++l) {
            if (k == l) continue;
            cplx term = std::exp(r[k] * u_plus + r[l] * S - th * S) -
                        std::exp(r[k] * S + r[l] * u_plus - th * S);
            num += beta * c[k] * c[l] * term / r[k];
        }
    out.delta_minus = expect_real(dm, 1e-9, "delta_minus");
    out.delta_plus = expect_real(num / rep.W_hat(S), 1e-9, "delta_plus");
    return out;
}

/// Workload law at an exponential time for the doubly reflected process on
/// [0,K]: atoms plus an absolutely continuous part on (0,K).
struct ScalarLaw {
    struct Atom {
        double location;
        cplx mass;
    };
    std::vector<Atom> atoms;
    std::function<cplx(double)> density;

    cplx atom_at(double y, double tol = 1e-12) const {
        cplx acc = 0.0;
        for (const auto& a : atoms)
            if (std::abs(a.location - y) <= tol) acc += a.mass;
        return acc;
    }
};

/// Reflected workload law started from x for a non-subordinator component:
/// atom Z(K-x) W(0)/W(K) at zero and density Z(K-x)/W(K) W'(y) - beta W(y-x)
/// on (0,K). The dominant-mode coefficient of the density is regrouped via
///   T = Z(K-x) - (beta/theta_hat) e^{-theta_hat x} W(K),
/// whose dominant parts cancel exactly, so the evaluation stays accurate for
/// complex killing rates where the raw difference loses all digits.
inline ScalarLaw reflected_law_nonsub(const ScaleFunctionRep& rep, double x, double K) {
    if (!(x >= 0.0 && x <= K)) throw InputError("initial level must lie in [0,K]");
    const cplx beta = rep.beta;
    const cplx th = rep.theta_hat();
    const int dom = rep.dominant;
    const double u = K - x;
    const auto r = rep.roots;
    const auto c = rep.residues;

    const cplx w_hat_K = rep.W_hat(K);
    const cplx z_hat_u = rep.Z_hat(u);
    const cplx RZ = std::exp(-th * x) * z_hat_u / w_hat_K;  // Z(K-x)/W(K)

    cplx corr = 1.0;  // 1 - beta sum_k c_k/theta_k; analytically zero
    for (std::size_t k = 0; k < r.size(); ++k) corr -= beta * c[k] / r[k];
    cplx T = corr;
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (static_cast<int>(k) == dom) continue;
        T += beta * c[k] * (std::exp(r[k] * u) / r[k] - std::exp(th * u + (r[k] - th) * K) / th);
    }

    ScalarLaw law;
    cplx atom0 = RZ * rep.W(0.0);
    law.atoms.push_back({0.0, atom0});

    law.density = [r, c, beta, th, dom, x, K, RZ, T, w_hat_K, z_hat_u](double y) -> cplx {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (static_cast<int>(k) == dom) {
                if (y >= x)
                    acc += c[k] * th * T * std::exp(th * (y - K)) / w_hat_K;
                else
                    acc += c[k] * th * std::exp(th * (y - x)) * z_hat_u / w_hat_K;
            } else {
                acc += c[k] * r[k] * RZ * std::exp(r[k] * y);
                if (y >= x) acc -= beta * c[k] * std::exp(r[k] * (y - x));
            }
        }
        return acc;
    };
    return law;
}

/// Reflected workload law for a subordinator component started from x: the
/// path is non-decreasing, so the law is the shifted law of Y(T) truncated at
/// K, with an interior atom at x when Y(T) has an atom at zero.
inline ScalarLaw reflected_law_sub(const LevyComponent& comp, double x, double K, cplx omega) {
    if (!(x >= 0.0 && x <= K)) throw InputError("initial level must lie in [0,K]");
    ScalarLaw law;
    if (x >= K) {
        law.atoms.push_back({K, 1.0});
        law.density = [](double) { return cplx(0.0); };
        return law;
    }
    SubordinatorLaw sub = subordinator_law(comp, omega);
    if (std::abs(sub.atom0) > 0.0) law.atoms.push_back({x, sub.atom0});
    law.atoms.push_back({K, sub.tail(K - x)});
    law.density = [sub, x](double y) { return y > x ? sub.density.eval(y - x) : cplx(0.0); };
    return law;
}

inline ScalarLaw reflected_law(const LevyComponent& comp, double x, cplx beta, double K) {
    if (comp.is_subordinator()) return reflected_law_sub(comp, x, K, beta);
    return reflected_law_nonsub(scale_function(comp, beta), x, K);
}

/// LST of the reflected workload at an exponential time, started from x
/// (non-subordinator case). All exponentially growing modes are cancelled
/// analytically; the expression is exact at a = 0 and stays stable for large
/// K and complex killing rates.
inline cplx reflected_lst_nonsub(const ScaleFunctionRep& rep, double x, cplx a, double K) {
    if (!(x >= 0.0 && x <= K)) throw InputError("initial level must lie in [0,K]");
    const auto& r = rep.roots;
    const auto& c = rep.residues;
    const cplx beta = rep.beta;
    const cplx th = rep.theta_hat();

    // Keep a away from the roots (removable singularities of the grouping).
    for (std::size_t k = 0; k < r.size(); ++k)
        if (std::abs(a - r[k]) < 1e-9) a += cplx(1e-7, 1e-7);

    const cplx w_hat_K = rep.W_hat(K);
    // R = I(K)/W(K) with I(u) = int_0^u e^{-a y} W(y) dy.
    cplx R = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k)
        R += c[k] * (std::exp((r[k] - a - th) * K) - std::exp(-th * K)) / (r[k] - a);
    R /= w_hat_K;

    cplx out = std::exp(-a * K) + a * R;
    for (std::size_t m = 0; m < r.size(); ++m)
        out += beta * c[m] * (std::exp(-a * x) / (r[m] - a) - std::exp(-a * K) / r[m] - a * R / r[m]);

    // Products of the growing Z-mode with D_m = R - e^{-aK}/(theta_m - a);
    // the m-th own term cancels exactly and is dropped from the sum.
    for (std::size_t m = 0; m < r.size(); ++m) {
        cplx sd = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k != m)
                sd += c[k] * std::exp((r[k] - a) * K + r[m] * (K - x) - th * K) * (r[m] - r[k]) /
                      ((r[k] - a) * (r[m] - a));
            sd -= c[k] / (r[k] - a) * std::exp(r[m] * (K - x) - th * K);
        }
        out += a * beta * (c[m] / r[m]) * sd / w_hat_K;
    }
    return out;
}

/// LST of the reflected workload for a subordinator component started from x.
inline cplx reflected_lst_sub(const LevyComponent& comp, double x, cplx a, double K, cplx omega) {
    if (x >= K) return std::exp(-a * K);
    SubordinatorLaw sub = subordinator_law(comp, omega);
    cplx tail_mass = 1.0 - sub.atom0 - sub.density.integral(K - x);
    return std::exp(-a * K) * tail_mass +
           std::exp(-a * x) * (sub.atom0 + sub.density.weighted_integral(K - x, a));
}

/// Dispatching reflected LST for any component.
inline cplx reflected_lst(const LevyComponent& comp, double x, cplx a, cplx beta, double K) {
    if (comp.is_subordinator()) return reflected_lst_sub(comp, x, a, K, beta);
    return reflected_lst_nonsub(scale_function(comp, beta), x, a, K);
}

/// Overshoot transform eta(u, a, beta) = E[e^{-a (Y(tau(u)) - u)}; tau(u) <= T].
/// In the non-subordinator case, cancelling the dominant root collapses the
/// scale-function expression to a sum over the decaying modes only.
inline cplx eta_scalar(const LevyComponent& comp, double u, cplx a, cplx beta) {
    if (u < 0.0) throw InputError("level must be nonnegative");
    if (comp.is_subordinator()) {
        SubordinatorLaw law = subordinator_law(comp, beta);
        cplx phi_a = comp.exponent(a);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < law.density.coef.size(); ++j)
            acc += law.density.coef[j] * std::exp(law.density.expo[j] * u) / (a - law.density.expo[j]);
        return (beta - phi_a) / beta * acc;
    }
    ScaleFunctionRep rep = scale_function(comp, beta);
    cplx th = rep.theta_hat();
    cplx dq;  // (phi(a) - beta)/(a - theta_hat) with its analytic limit
    if (std::abs(a - th) < 1e-8)
        dq = comp.exponent_derivative(th);
    else
        dq = (comp.exponent(a) - beta) / (a - th);
    cplx acc = 0.0;
    for (std::size_t k = 0; k < rep.roots.size(); ++k) {
        if (static_cast<int>(k) == rep.dominant) continue;
        acc += rep.residues[k] * std::exp(rep.roots[k] * u) * (rep.roots[k] - th) / (rep.roots[k] - a);
    }
    return -dq * acc;
}

/// u-transform of eta: zeta(a, beta, g) = int_0^inf e^{-g u} eta(u, a, beta) du.
inline cplx zeta_scalar(const LevyComponent& comp, cplx a, cplx beta, cplx g) {
    cplx phi_a = comp.exponent(a), phi_g = comp.exponent(g);
    cplx dq = (std::abs(g - a) < 1e-9) ? comp.exponent_derivative(a) : (phi_a - phi_g) / (g - a);
    if (comp.is_subordinator()) return dq / (beta - phi_g);
    double psi = comp.right_inverse(expect_real(beta, 1e-12, "beta"));
    cplx dq2 = (std::abs(cplx(psi) - a) < 1e-9) ? comp.exponent_derivative(psi)
                                                : (phi_a - beta) / (psi - a);
    return (dq - dq2) / (beta - phi_g);
}

}  // namespace mapq
