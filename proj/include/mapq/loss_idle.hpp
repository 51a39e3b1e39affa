#pragma once

// Joint transform of workload, cumulative idle time and cumulative lost work
// for Markov-modulated compound Poisson input with strictly negative drifts.
// Between events the workload drains deterministically, idle time accrues at
// the empty boundary, and every upward jump that overflows K sheds the excess
// into the lost-work functional.

#include "mapq/transient_workload.hpp"

namespace mapq {

struct TriLST {
    cplx alpha1, alpha2, alpha3;
    cplx beta;
    double x = 0.0;
    ComplexMatrix chi0, chiK, chi_x;
};

class LossIdleContext {
public:
    explicit LossIdleContext(TransientContext& ctx) : ctx_(&ctx) {
        for (const auto& c : ctx.spec().components)
            if (!(c.sigma == 0.0 && c.drift < 0.0))
                throw InputError("loss_idle requires negative-drift MM-CPP");
    }

    const TransientContext& transient() const { return *ctx_; }
    int d() const { return ctx_->d(); }
    double K() const { return ctx_->K(); }
    cplx beta() const { return ctx_->beta(); }

    /// eta_tilde(u, a, beta) = eta(u) - delta_minus(K-u) eta(K): the overshoot
    /// transform restricted to crossings that precede the empty boundary.
    ComplexMatrix eta_tilde(double u, cplx alpha3) const {
        if (!(u >= 0.0 && u <= K())) throw InputError("level must lie in [0,K]");
        const auto& fl = ctx_->fluctuation();
        KappaBar kb = fl.solve_kappa_bar(alpha3);
        auto rep = fl.eta_rep(kb);
        ComplexMatrix etaK = rep.eval(K(), d());
        if (u >= K()) {
            // delta_minus(0) = I for negative drifts: nothing survives
            return rep.eval(u, d()) - ctx_->delta_minus_at(0.0) * etaK;
        }
        return rep.eval(u, d()) - ctx_->delta_minus_at(K() - u) * etaK;
    }

    TriLST chi_tilde(double x, cplx a1, cplx a2, cplx a3) const {
        if (!(x >= 0.0 && x <= K())) throw InputError("initial workload must lie in [0,K]");
        TriLST out;
        out.alpha1 = a1;
        out.alpha2 = a2;
        out.alpha3 = a3;
        out.beta = beta();
        out.x = x;

        const auto& fl = ctx_->fluctuation();
        const ModelSpec& m = ctx_->spec();
        const int dd = d();

        // eta (at alpha3) sampled where needed, and delta_star (at alpha1).
        KappaBar kb3 = fl.solve_kappa_bar(a3);
        auto rep3 = fl.eta_rep(kb3);
        ComplexMatrix etaK3 = rep3.eval(K(), dd);

        KappaBar kb1 = fl.solve_kappa_bar(a1);
        auto rep1 = fl.eta_rep(kb1);
        ComplexMatrix phi1 = phi_matrix(m, a1, beta());

        const auto& nodes = ctx_->grid_nodes();
        const auto& wts = ctx_->grid_weights();
        const auto& dm_grid = ctx_->delta_minus_grid();
        const auto& dp_grid = ctx_->delta_plus_grid();
        const std::size_t n = nodes.size();

        // eta_tilde(K - y, a3) over the grid; the symmetric Gauss grid gives
        // delta_minus(K - y) by index reflection.
        std::vector<ComplexMatrix> etat_grid(n);
        for (std::size_t mI = 0; mI < n; ++mI)
            etat_grid[mI] = rep3.eval(K() - nodes[mI], dd) - dm_grid[n - 1 - mI] * etaK3;
        std::vector<ComplexMatrix> ds_grid(n);
        for (std::size_t mI = 0; mI < n; ++mI)
            ds_grid[mI] = ctx_->delta_star_impl(nodes[mI], a1, rep1, phi1, &dm_grid[mI]);
        ComplexMatrix ds0 = ctx_->delta_star_impl(0.0, a1, rep1, phi1, nullptr);
        ComplexMatrix dsK = ctx_->delta_star_impl(K(), a1, rep1, phi1, nullptr);
        ComplexMatrix dm0 = ctx_->delta_minus_at(0.0), dmK = ctx_->delta_minus_at(K());
        ComplexMatrix dp0 = ctx_->delta_plus_at(0.0), dpK = ctx_->delta_plus_at(K());
        ComplexMatrix etat0 = rep3.eval(K(), dd) - dm0 * etaK3;   // u = K at y = 0
        ComplexMatrix etatK = rep3.eval(0.0, dd) - dmK * etaK3;   // u = 0 at y = K

        // First-event expansion from the empty boundary: a job arrival (rate
        // lambda_i, law B_i), a background transition (rate q_ik, law B_ik),
        // or killing; the idle factor omega~/(omega~ + a2) premultiplies.
        ComplexMatrix P00 = ComplexMatrix::Zero(dd, dd), P0K = ComplexMatrix::Zero(dd, dd);
        ComplexMatrix b0 = ComplexMatrix::Zero(dd, dd);
        auto add_jump_terms = [&](int row, int cont, const JumpDistribution& B, cplx rate) {
            if (B.is_zero()) {
                // the post-event level stays 0
                P00.row(row) += (rate * dm0.row(cont)).eval();
                P0K.row(row) += (rate * etat0.row(cont)).eval();
                b0.row(row) += (rate * ds0.row(cont)).eval();
                return;
            }
            ComplexMatrix accm = ComplexMatrix::Zero(1, dd), accp = ComplexMatrix::Zero(1, dd),
                          accs = ComplexMatrix::Zero(1, dd);
            for (std::size_t mI = 0; mI < n; ++mI) {
                double w = wts[mI] * B.pdf(nodes[mI]);
                accm += w * dm_grid[mI].row(cont);
                accp += w * etat_grid[mI].row(cont);
                accs += w * ds_grid[mI].row(cont);
            }
            P00.row(row) += (rate * accm).eval();
            P0K.row(row) += (rate * accp).eval();
            b0.row(row) += (rate * accs).eval();
            // tail beyond K: workload restarts at K, the excess is lost work
            P0K(row, cont) += rate * B.tail_lst(K(), a3);
        };
        for (int i = 0; i < dd; ++i) {
            cplx omt = beta() + m.exit_rate(i) + m.components[i].jump_rate;
            cplx pref = 1.0 / (omt + a2);
            b0(i, i) += pref * beta();
            if (m.components[i].jump_rate > 0.0)
                add_jump_terms(i, i, m.components[i].jumps, pref * m.components[i].jump_rate);
            for (int k = 0; k < dd; ++k) {
                if (k == i || m.Q(i, k) == 0.0) continue;
                add_jump_terms(i, k, m.transition_jumps[i][k], pref * m.Q(i, k));
            }
        }

        // Upper-boundary block from the decomposition at x = K.
        ComplexMatrix PK0 = dmK, PKK = etatK, bK = dsK;

        ComplexMatrix P(2 * dd, 2 * dd);
        P.topLeftCorner(dd, dd) = P00;
        P.topRightCorner(dd, dd) = P0K;
        P.bottomLeftCorner(dd, dd) = PK0;
        P.bottomRightCorner(dd, dd) = PKK;

        if (std::abs(beta().imag()) < 1e-12 * std::max(1.0, std::abs(beta())) &&
            std::abs(a2.imag()) + std::abs(a3.imag()) < 1e-12) {
            for (int r = 0; r < 2 * dd; ++r)
                if (P.row(r).cwiseAbs().sum() > 1.0 - 1e-12)
                    throw NumericalError("loss/idle boundary system violates diagonal dominance");
        }

        ComplexMatrix rhs(2 * dd, dd);
        rhs.topRows(dd) = b0;
        rhs.bottomRows(dd) = bK;
        Eigen::FullPivLU<ComplexMatrix> lu(ComplexMatrix::Identity(2 * dd, 2 * dd) - P);
        ComplexMatrix sol = lu.solve(rhs);
        out.chi0 = sol.topRows(dd);
        out.chiK = sol.bottomRows(dd);

        if (x <= 0.0)
            out.chi_x = out.chi0;
        else if (x >= K())
            out.chi_x = out.chiK;
        else {
            ComplexMatrix etat_x = rep3.eval(K() - x, dd) - ctx_->delta_minus_at(x) * etaK3;
            out.chi_x = ctx_->delta_minus_at(x) * out.chi0 + etat_x * out.chiK +
                        ctx_->delta_star_impl(x, a1, rep1, phi1, nullptr);
        }
        return out;
    }

    /// E[I(T)] and E[L(T)] by central differences of the joint transform.
    struct Functionals {
        ComplexMatrix idle, lost;  // d x d matrices E[.; J(T)=j]
    };
    Functionals functionals(double x, double h = 1e-4) const {
        Functionals out;
        TriLST ip = chi_tilde(x, 0.0, h, 0.0), im = chi_tilde(x, 0.0, -h, 0.0);
        out.idle = (im.chi_x - ip.chi_x) / (2.0 * h);
        TriLST lp = chi_tilde(x, 0.0, 0.0, h), lm = chi_tilde(x, 0.0, 0.0, -h);
        out.lost = (lm.chi_x - lp.chi_x) / (2.0 * h);
        return out;
    }

private:
    TransientContext* ctx_;
};

}  // namespace mapq
