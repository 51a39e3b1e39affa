#pragma once

// Matrix-level fluctuation objects for the Markov additive input: the
// right-half-plane roots of det(F(g) - b I), the kappa matrices of the
// overshoot system, the scale matrix, and the hitting-probability matrices.
//
// The engine clears the rational denominators row by row, G(g) :=
// diag(R_i(g)) (F(g) - b I), recovers N(g) = det G(g) by evaluation and
// inverse DFT, and works with the exact residue expansions at the simple
// roots of N. For Re(b) > 0 no root of N crosses the imaginary axis (the
// Laplace exponents have nonpositive real part there while the diagonal of
// b I - F dominates by Gershgorin), so the right-half-plane root count stays
// d_- on the whole Bromwich contour and selection by sign of the real part
// is exact; homotopy continuation from the real axis is provided as an
// independent cross-check.

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "mapq/scalar_levy.hpp"

namespace mapq {

struct RootSet {
    cplx beta;
    std::vector<cplx> roots;  // the tracked d_- roots
    enum class Provenance { DirectSelection, HomotopyFromReal } provenance =
        Provenance::DirectSelection;
};

namespace detail {

/// Adjugate via cofactors; valid for singular matrices.
inline ComplexMatrix adjugate(const ComplexMatrix& A) {
    const int n = static_cast<int>(A.rows());
    ComplexMatrix adj(n, n);
    if (n == 1) {
        adj(0, 0) = 1.0;
        return adj;
    }
    ComplexMatrix minor(n - 1, n - 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            for (int r = 0, rr = 0; r < n; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(rr, cc) = A(r, c);
                    ++cc;
                }
                ++rr;
            }
            cplx m = (n == 1) ? cplx(1.0) : minor.determinant();
            adj(j, i) = (((i + j) & 1) ? -1.0 : 1.0) * m;
        }
    return adj;
}

/// Difference quotient (f(g) - f(a))/(g - a) with its analytic limit.
template <class F, class DF>
cplx diff_quotient(F&& f, DF&& df, cplx a, cplx g) {
    if (std::abs(g - a) < 1e-7 * (1.0 + std::abs(a))) return df(0.5 * (a + g));
    return (f(g) - f(a)) / (g - a);
}

}  // namespace detail

/// kappa_check(a, g) = (F(g) - F(a))/(g - a), entrywise difference quotients
/// with the derivative F'(a) as the g -> a limit.
inline ComplexMatrix kappa_check(const ModelSpec& m, cplx a, cplx g) {
    ComplexMatrix out(m.d, m.d);
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) {
            if (i == j) {
                const auto& comp = m.components[i];
                out(i, j) = detail::diff_quotient([&](cplx z) { return comp.exponent(z); },
                                                  [&](cplx z) { return comp.exponent_derivative(z); }, a, g);
            } else if (m.Q(i, j) != 0.0) {
                const auto& b = m.transition_jumps[i][j];
                RationalFn lr = b.lst_rational();
                out(i, j) = m.Q(i, j) * detail::diff_quotient([&](cplx z) { return b.lst(z); },
                                                              [&](cplx z) { return lr.derivative_at(z); }, a, g);
            } else {
                out(i, j) = 0.0;
            }
        }
    return out;
}

struct KappaBar {
    cplx alpha;
    cplx beta;
    ComplexMatrix matrix;  // d x d, rows of subordinator states identically zero
};

/// Everything that depends on the model and beta only. Construction performs
/// the denominator clearing, determinant interpolation, root finding, and the
/// factorizations reused across alpha.
class FluctuationCache {
public:
    FluctuationCache(const OrderedModel& om, cplx beta, bool allow_retry = true)
        : model_(&om), beta_(beta) {
        build(allow_retry);
    }

    const OrderedModel& ordered() const { return *model_; }
    const ModelSpec& spec() const { return model_->spec; }
    cplx beta() const { return beta_; }
    int d() const { return spec().d; }
    int d_minus() const { return model_->d_minus; }
    bool beta_perturbed() const { return perturbed_; }

    const Poly& det_poly() const { return N_; }
    const std::vector<cplx>& all_roots() const { return roots_; }
    const std::vector<int>& rhp_indices() const { return rhp_; }

    RootSet root_set() const {
        RootSet rs;
        rs.beta = beta_;
        for (int j : rhp_) rs.roots.push_back(roots_[j]);
        return rs;
    }

    /// Residual |det(F(g) - b I)| / scale for a candidate root.
    double det_residual(cplx g) const {
        ComplexMatrix A = f_matrix(spec(), g) - beta_ * ComplexMatrix::Identity(d(), d());
        double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
        return std::abs(A.determinant()) / std::pow(scale, d());
    }

    // --- scale matrix -----------------------------------------------------

    double rho() const { return rho_; }

    /// e^{-rho y} W(y); d x d_- and bounded on [0, inf).
    ComplexMatrix W_hat(double y) const {
        ComplexMatrix acc = ComplexMatrix::Zero(d(), d_minus());
        for (std::size_t j = 0; j < roots_.size(); ++j)
            acc += std::exp((roots_[j] - rho_) * y) * scale_residues_[j];
        return acc;
    }
    ComplexMatrix W(double y) const { return std::exp(rho_ * y) * W_hat(y); }

    /// int_0^u W(y) dy, exact.
    ComplexMatrix W_integral(double u) const {
        ComplexMatrix acc = ComplexMatrix::Zero(d(), d_minus());
        for (std::size_t j = 0; j < roots_.size(); ++j)
            acc += (std::exp(roots_[j] * u) - 1.0) / roots_[j] * scale_residues_[j];
        return acc;
    }

    /// Secondary scale matrix Z(u) = I - int_0^u W dy (Q - b I); square only
    /// without subordinator states.
    ComplexMatrix Z(double u) const {
        if (d_minus() != d())
            throw NumericalError("secondary scale matrix requires all states non-subordinator");
        ComplexMatrix QB = spec().Q.cast<cplx>() - beta_ * ComplexMatrix::Identity(d(), d());
        return ComplexMatrix::Identity(d(), d()) - W_integral(u) * QB;
    }

    /// delta_minus(u-, u+) = [ W(u+) W_-(u-+u+)^{-1}, 0 ]; the subordinator
    /// columns are identically zero.
    ComplexMatrix delta_minus(double u_minus, double u_plus) const {
        if (!(u_minus >= 0.0 && u_plus >= 0.0 && u_minus + u_plus > 0.0))
            throw InputError("exit levels must be nonnegative with u_minus + u_plus > 0");
        ComplexMatrix out = ComplexMatrix::Zero(d(), d());
        if (d_minus() == 0) return out;
        double S = u_minus + u_plus;
        // Per-state root scales differ wildly at large |beta|, so a single
        // exponential factor leaves some columns underflowed relative to
        // others. Column equilibration cancels exactly in the product
        // W(u+) W_-(S)^{-1} and restores conditioning.
        ComplexMatrix whS = W_hat(S);
        ComplexMatrix whU = W_hat(u_plus);
        Eigen::VectorXd colnorm = whS.topRows(d_minus()).cwiseAbs().colwise().maxCoeff();
        for (int k = 0; k < d_minus(); ++k) {
            if (!(colnorm(k) > 0.0)) throw NumericalError("scale matrix W_- not invertible");
            whS.col(k) /= colnorm(k);
            whU.col(k) /= colnorm(k);
        }
        Eigen::FullPivLU<ComplexMatrix> lu(whS.topRows(d_minus()).eval());
        if (!lu.isInvertible() || !(lu.rcond() > 1e-14))
            throw NumericalError("scale matrix W_- ill-conditioned");
        out.leftCols(d_minus()) = std::exp(-rho_ * u_minus) * whU * lu.inverse();
        return out;
    }

    // --- kappa-bar system ---------------------------------------------------

    /// Solves the boundary constants from pole cancellation at the tracked
    /// roots, then verifies the full set of redundancy residuals.
    KappaBar solve_kappa_bar(cplx alpha) const {
        KappaBar kb;
        kb.alpha = alpha;
        kb.beta = beta_;
        kb.matrix = ComplexMatrix::Zero(d(), d());
        if (d_minus() == 0) return kb;

        const int dm = d_minus();
        ComplexMatrix A(dm, dm);
        ComplexMatrix rhs(dm, d());
        std::vector<ComplexMatrix> kchecks(dm);
        for (int k = 0; k < dm; ++k) {
            const ComplexMatrix& adj = rhp_adjugates_[k];
            kchecks[k] = kappa_check(spec(), alpha, roots_[rhp_[k]]);
            for (int i = 0; i < dm; ++i) A(k, i) = adj(0, i);
            rhs.row(k) = -(adj.row(0) * kchecks[k]);
        }
        Eigen::FullPivLU<ComplexMatrix> lu(A);
        if (!lu.isInvertible())
            throw NumericalError("kappa system singular: root multiplicity or special alpha");
        kb.matrix.topRows(dm) = lu.solve(rhs);

        // Redundancy claim: det F_{kappa_j, i} vanishes at every tracked root
        // for every column i, not just the first.
        for (int k = 0; k < dm; ++k) {
            ComplexMatrix kappa = kchecks[k] + kb.matrix;
            ComplexMatrix resid = rhp_adjugates_[k] * kappa;
            double scale = std::max(1.0, rhp_adjugates_[k].cwiseAbs().maxCoeff() *
                                             kappa.cwiseAbs().maxCoeff() * d());
            if (resid.cwiseAbs().maxCoeff() > 1e-7 * scale)
                throw NumericalError("kappa system residual: pole cancellation failed");
        }
        return kb;
    }

    /// Largest pole-cancellation residual over all tracked roots and columns,
    /// normalized; exposed for the property tests.
    double pole_cancellation_residual(const KappaBar& kb) const {
        double worst = 0.0;
        for (std::size_t k = 0; k < rhp_.size(); ++k) {
            ComplexMatrix kappa = kappa_check(spec(), kb.alpha, roots_[rhp_[k]]) + kb.matrix;
            ComplexMatrix resid = rhp_adjugates_[k] * kappa;
            double scale = std::max(1.0, rhp_adjugates_[k].cwiseAbs().maxCoeff() *
                                             kappa.cwiseAbs().maxCoeff() * d());
            worst = std::max(worst, resid.cwiseAbs().maxCoeff() / scale);
        }
        return worst;
    }

    // --- zeta and eta -------------------------------------------------------

    /// zeta(a, b, g) = (F(g) - b I)^{-1} (kappa_check + kappa_bar).
    ComplexMatrix zeta(const KappaBar& kb, cplx g) const {
        ComplexMatrix Fb = f_matrix(spec(), g) - beta_ * ComplexMatrix::Identity(d(), d());
        Eigen::FullPivLU<ComplexMatrix> lu(Fb);
        if (!lu.isInvertible()) throw NumericalError("zeta pole: gamma is a root of det(F - beta I)");
        return lu.solve(kappa_check(spec(), kb.alpha, g) + kb.matrix);
    }

    /// Residue representation of eta(u) = sum_j e^{p_j u} Res_j over the
    /// non-tracked (left half-plane) roots; the tracked residues vanish by
    /// construction of kappa_bar.
    struct EtaRep {
        std::vector<cplx> poles;
        std::vector<ComplexMatrix> residues;

        ComplexMatrix eval(double u, int dim) const {
            ComplexMatrix acc = ComplexMatrix::Zero(dim, dim);
            for (std::size_t j = 0; j < poles.size(); ++j) {
                if (poles[j].real() * u > 600.0) throw NumericalError("eta residue overflow");
                acc += std::exp(poles[j] * u) * residues[j];
            }
            return acc;
        }
    };

    EtaRep eta_rep(const KappaBar& kb) const {
        EtaRep rep;
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            if (std::find(rhp_.begin(), rhp_.end(), static_cast<int>(j)) != rhp_.end()) continue;
            ComplexMatrix kappa = kappa_check(spec(), kb.alpha, roots_[j]) + kb.matrix;
            ComplexMatrix res = adjugates_[j] * row_scaling_[j].asDiagonal() * kappa / dN_[j];
            rep.poles.push_back(roots_[j]);
            rep.residues.push_back(std::move(res));
        }
        return rep;
    }

    /// eta(u, alpha, beta) via the exact residue inversion.
    ComplexMatrix eta(const KappaBar& kb, double u) const { return eta_rep(kb).eval(u, d()); }

    /// P_+(u, beta) = eta(u, 0, beta), cached per beta.
    const EtaRep& upcross_rep() const {
        if (!p_plus_rep_) {
            KappaBar kb0 = solve_kappa_bar(0.0);
            p_plus_rep_ = eta_rep(kb0);
        }
        return *p_plus_rep_;
    }
    ComplexMatrix P_plus(double u) const { return upcross_rep().eval(u, d()); }

    /// delta_plus(u-, u+) = P_+(u+) - delta_minus(u-,u+) P_+(u-+u+).
    ComplexMatrix delta_plus(double u_minus, double u_plus) const {
        return P_plus(u_plus) - delta_minus(u_minus, u_plus) * P_plus(u_minus + u_plus);
    }

private:
    void build(bool allow_retry) {
        const ModelSpec& m = spec();
        const int dd = m.d;

        // Row denominators as factor lists; entries are assembled with the
        // complementary factors so the clearing is exact.
        std::vector<Poly> phinum(dd), phiden(dd);
        std::vector<std::vector<Poly>> bnum(dd, std::vector<Poly>(dd)), bden(dd, std::vector<Poly>(dd));
        for (int i = 0; i < dd; ++i) {
            RationalFn phi = m.components[i].exponent_rational();
            phinum[i] = phi.num;
            phiden[i] = phi.den;
            for (int j = 0; j < dd; ++j)
                if (j != i && m.Q(i, j) != 0.0) {
                    RationalFn b = m.transition_jumps[i][j].lst_rational();
                    bnum[i][j] = b.num;
                    bden[i][j] = b.den;
                }
        }

        std::vector<std::vector<Poly>> entries(dd, std::vector<Poly>(dd));
        row_mult_.assign(dd, Poly::constant(1.0));
        int deg_bound = 0;
        for (int i = 0; i < dd; ++i) {
            Poly others = Poly::constant(1.0);
            for (int j = 0; j < dd; ++j)
                if (j != i && m.Q(i, j) != 0.0) others = others * bden[i][j];
            row_mult_[i] = others * phiden[i];
            // diagonal: others * (N_phi + (q_ii - beta) D_phi)
            entries[i][i] = others * (phinum[i] + phiden[i] * (cplx(m.Q(i, i)) - beta_));
            for (int j = 0; j < dd; ++j) {
                if (j == i || m.Q(i, j) == 0.0) {
                    if (j != i) entries[i][j] = Poly::constant(0.0);
                    continue;
                }
                Poly comp = phiden[i];
                for (int l = 0; l < dd; ++l)
                    if (l != i && l != j && m.Q(i, l) != 0.0) comp = comp * bden[i][l];
                entries[i][j] = comp * bnum[i][j] * cplx(m.Q(i, j));
            }
            int row_deg = 0;
            for (int j = 0; j < dd; ++j) row_deg = std::max(row_deg, entries[i][j].degree());
            deg_bound += row_deg;
        }

        auto det_at = [&](cplx g) {
            ComplexMatrix G(dd, dd);
            for (int i = 0; i < dd; ++i)
                for (int j = 0; j < dd; ++j) G(i, j) = entries[i][j](g);
            return cplx(G.determinant());
        };
        double radius = std::max(1.0, std::sqrt(std::abs(beta_)) + 1.0);
        N_ = interpolate_on_circle(det_at, deg_bound, radius);
        // Validate the interpolation off the sampling circle.
        for (cplx t : {cplx(0.37, 0.91) * radius * 1.7, cplx(-1.21, 0.33) * radius * 0.6}) {
            cplx direct = det_at(t);
            double scale = std::max({1.0, std::abs(direct), std::abs(N_(t))});
            if (std::abs(N_(t) - direct) > 1e-7 * scale)
                throw NumericalError("determinant interpolation failed validation");
        }

        roots_ = detail::polish_roots(N_, N_.roots());
        double rscale = 1.0;
        for (const auto& r : roots_) rscale = std::max(rscale, std::abs(r));
        for (std::size_t a = 0; a < roots_.size(); ++a)
            for (std::size_t b = a + 1; b < roots_.size(); ++b)
                if (std::abs(roots_[a] - roots_[b]) < 1e-7 * rscale) {
                    if (!allow_retry)
                        throw NumericalError("multiple root: det(F - beta I) has a repeated root");
                    cplx jitter = 1e-6 * (1.0 + std::abs(beta_));
                    beta_ = beta_ + jitter;
                    perturbed_ = true;
                    build(false);
                    return;
                }

        Poly dN = N_.derivative();
        dN_.resize(roots_.size());
        adjugates_.resize(roots_.size());
        row_scaling_.resize(roots_.size());
        scale_residues_.assign(roots_.size(), ComplexMatrix());
        rho_ = -1e300;
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            cplx p = roots_[j];
            rho_ = std::max(rho_, p.real());
            dN_[j] = dN(p);
            ComplexMatrix G(dd, dd);
            for (int r = 0; r < dd; ++r)
                for (int cidx = 0; cidx < dd; ++cidx) G(r, cidx) = entries[r][cidx](p);
            adjugates_[j] = detail::adjugate(G);
            Eigen::VectorXcd rs(dd);
            for (int r = 0; r < dd; ++r) rs(r) = row_mult_[r](p);
            row_scaling_[j] = rs;
            // scale-matrix residue: columns k < d_-: R_k(p) adj(G(p)) e_k / N'(p)
            ComplexMatrix om(dd, model_->d_minus);
            for (int k = 0; k < model_->d_minus; ++k) om.col(k) = rs(k) * adjugates_[j].col(k) / dN_[j];
            scale_residues_[j] = std::move(om);
        }

        rhp_.clear();
        for (std::size_t j = 0; j < roots_.size(); ++j)
            if (roots_[j].real() > 0.0) rhp_.push_back(static_cast<int>(j));
        if (static_cast<int>(rhp_.size()) != model_->d_minus)
            throw NumericalError("root count mismatch: expected " + std::to_string(model_->d_minus) +
                                 " right-half-plane roots, found " + std::to_string(rhp_.size()));
        for (int j : rhp_)
            if (det_residual(roots_[j]) > 1e-9)
                throw NumericalError("right-half-plane root failed the determinant residual check");

        rhp_adjugates_.clear();
        for (int j : rhp_) {
            ComplexMatrix Fb =
                f_matrix(m, roots_[j]) - beta_ * ComplexMatrix::Identity(dd, dd);
            rhp_adjugates_.push_back(detail::adjugate(Fb));
        }
    }

    const OrderedModel* model_;
    cplx beta_;
    bool perturbed_ = false;
    Poly N_;
    std::vector<Poly> row_mult_;
    std::vector<cplx> roots_;
    std::vector<cplx> dN_;
    std::vector<ComplexMatrix> adjugates_;      // adj(G(p_j)) of the cleared matrix
    std::vector<Eigen::VectorXcd> row_scaling_; // R_i(p_j)
    std::vector<ComplexMatrix> scale_residues_; // d x d_- residues of the scale matrix
    std::vector<int> rhp_;
    std::vector<ComplexMatrix> rhp_adjugates_;  // adj(F(gamma_k) - beta I)
    double rho_ = 0.0;
    mutable std::optional<EtaRep> p_plus_rep_;
};

/// Tracked roots for complex beta by homotopy from the real anchor; kept as
/// an independent cross-check of the direct right-half-plane selection.
inline RootSet homotopy_roots(const OrderedModel& om, cplx beta, int max_steps = 64) {
    if (!(beta.real() > 0.0)) throw InputError("homotopy requires Re(beta) > 0");
    FluctuationCache anchor(om, cplx(beta.real(), 0.0));
    std::vector<cplx> tracked;
    for (int j : anchor.rhp_indices()) tracked.push_back(anchor.all_roots()[j]);

    double s = 0.0, step = 1.0 / 8.0;
    int steps_used = 0;
    while (s < 1.0 - 1e-12) {
        double s_next = std::min(1.0, s + step);
        cplx b = cplx(beta.real(), beta.imag() * s_next);
        FluctuationCache node(om, b);
        const auto& all = node.all_roots();
        std::vector<cplx> next(tracked.size());
        std::vector<int> used;
        bool ambiguous = false;
        for (std::size_t t = 0; t < tracked.size(); ++t) {
            int best = -1;
            double bestd = 1e300;
            for (std::size_t j = 0; j < all.size(); ++j) {
                double dd = std::abs(all[j] - tracked[t]);
                if (dd < bestd) {
                    bestd = dd;
                    best = static_cast<int>(j);
                }
            }
            if (std::find(used.begin(), used.end(), best) != used.end()) ambiguous = true;
            used.push_back(best);
            next[t] = all[best];
        }
        if (ambiguous) {
            step *= 0.5;
            if (++steps_used > max_steps)
                throw NumericalError("root tracking lost: ambiguous matching at s = " + std::to_string(s));
            continue;
        }
        for (const auto& r : next)
            if (node.det_residual(r) > 1e-8)
                throw NumericalError("root tracking lost: determinant residual at s = " + std::to_string(s));
        tracked = std::move(next);
        s = s_next;
        if (++steps_used > max_steps)
            throw NumericalError("root tracking lost: step budget exhausted at s = " + std::to_string(s));
    }
    RootSet rs;
    rs.beta = beta;
    rs.roots = tracked;
    rs.provenance = RootSet::Provenance::HomotopyFromReal;
    return rs;
}

/// Right-half-plane roots of det(F(g) - b I). Direct selection is valid for
/// every beta with positive real part; see the header comment.
inline RootSet rhp_roots(const OrderedModel& om, cplx beta) {
    FluctuationCache cache(om, beta);
    return cache.root_set();
}

}  // namespace mapq
