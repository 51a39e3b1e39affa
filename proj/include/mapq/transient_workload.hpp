#pragma once

// The main pipeline: the kill-first matrix delta_star, the first-event
// boundary system for chi(0) and chi(K), the transient workload transform
// chi(x), direct moments, and the boundary-atom probabilities.
//
// The boundary system conditions on the first background jump. Its P blocks
// integrate the hitting-probability matrices against the law of the workload
// just after that jump and do not depend on the workload transform variable,
// so they are assembled once per killing rate; only the b vectors are
// rebuilt per alpha. All [0,K] integrals use shared Gauss-Legendre grids with
// explicit handling of the atoms at 0, at the starting level and at K, and a
// two-level refinement check.

#include <array>
#include <memory>

#include "mapq/map_fluctuation.hpp"

namespace mapq {

struct BoundarySystem {
    ComplexMatrix P;        // 2d x 2d, alpha-independent
    ComplexMatrix b0, bK;   // d x d right-hand blocks for the current alpha
    Eigen::VectorXcd omega; // omega_i = beta + q_i
};

struct ChiResult {
    cplx alpha;
    cplx beta;
    double x = 0.0;
    ComplexMatrix chi0, chiK, chi_x;
};

namespace detail {

/// Law of min(V + B, K): interior atoms, a density sampled on the quadrature
/// grids, and the mass lumped at K by truncation.
struct RestartMeasure {
    std::vector<double> atom_loc;  // locations in [0, K)
    std::vector<cplx> atom_mass;
    cplx mass_K = 0.0;
    std::vector<cplx> dens_lo, dens_hi;
};

}  // namespace detail

/// Per-(model, beta) state for the transient pipeline.
class TransientContext {
public:
    TransientContext(const OrderedModel& om, cplx beta, int grid_lo = 128, int grid_hi = 256)
        : om_(&om), beta_(beta), fluct_(om, beta), grid_lo_(grid_lo), grid_hi_(grid_hi) {
        if (fluct_.beta_perturbed()) beta_ = fluct_.beta();
        build();
    }

    const OrderedModel& ordered() const { return *om_; }
    const ModelSpec& spec() const { return om_->spec; }
    const FluctuationCache& fluctuation() const { return fluct_; }
    cplx beta() const { return beta_; }
    int d() const { return spec().d; }
    double K() const { return spec().capacity; }

    // --- hitting matrices at the standing levels (u- = x, u+ = K - x) ------

    ComplexMatrix delta_minus_at(double x) const { return fluct_.delta_minus(x, K() - x); }
    ComplexMatrix delta_plus_at(double x) const { return fluct_.delta_plus(x, K() - x); }

    /// delta_star(x, alpha): transform of the kill-first paths.
    ComplexMatrix delta_star(double x, cplx alpha) const {
        KappaBar kb = fluct_.solve_kappa_bar(alpha);
        auto rep = fluct_.eta_rep(kb);
        ComplexMatrix phi = phi_matrix(spec(), alpha, beta_);
        return delta_star_impl(x, alpha, rep, phi, nullptr);
    }

    /// Assembled boundary system at alpha (P is shared across alpha).
    BoundarySystem boundary_system(cplx alpha) const {
        BoundarySystem bs;
        bs.P = P_;
        bs.omega.resize(d());
        for (int i = 0; i < d(); ++i) bs.omega(i) = beta_ + spec().exit_rate(i);
        auto b = b_vectors(alpha);
        bs.b0 = b.first;
        bs.bK = b.second;
        return bs;
    }

    /// Solves the 2d x 2d system for the boundary transforms chi(0), chi(K).
    std::pair<ComplexMatrix, ComplexMatrix> chi_boundary(cplx alpha) const {
        auto b = b_vectors(alpha);
        return solve_system(b.first, b.second);
    }

    ChiResult chi(double x, cplx alpha) const {
        require_level(x);
        ChiResult out;
        out.alpha = alpha;
        out.beta = beta_;
        out.x = x;
        auto bnd = chi_boundary(alpha);
        out.chi0 = bnd.first;
        out.chiK = bnd.second;
        if (x <= 0.0)
            out.chi_x = out.chi0;
        else if (x >= K())
            out.chi_x = out.chiK;
        else {
            KappaBar kb = fluct_.solve_kappa_bar(alpha);
            auto rep = fluct_.eta_rep(kb);
            ComplexMatrix phi = phi_matrix(spec(), alpha, beta_);
            out.chi_x = delta_minus_at(x) * out.chi0 + delta_plus_at(x) * out.chiK +
                        delta_star_impl(x, alpha, rep, phi, nullptr);
        }
        return out;
    }

    struct Moments {
        ComplexMatrix m1, m2;
    };

    /// First and second workload moment matrices E_{x,i}[V(T)^n; J(T)=j] by
    /// central differences of chi in alpha with Richardson extrapolation and
    /// an adaptive step.
    Moments moments(double x) const {
        ComplexMatrix c0 = chi(x, 0.0).chi_x;
        for (double h : {1e-3, 1e-4}) {
            ComplexMatrix cp = chi(x, h).chi_x, cm = chi(x, -h).chi_x;
            ComplexMatrix cp2 = chi(x, 0.5 * h).chi_x, cm2 = chi(x, -0.5 * h).chi_x;
            ComplexMatrix D = (cm - cp) / (2.0 * h), D2 = (cm2 - cp2) / h;
            ComplexMatrix S = (cp - 2.0 * c0 + cm) / (h * h);
            ComplexMatrix S2 = (cp2 - 2.0 * c0 + cm2) / (0.25 * h * h);
            Moments out;
            out.m1 = (4.0 * D2 - D) / 3.0;
            out.m2 = (4.0 * S2 - S) / 3.0;
            double r1 = (out.m1 - D2).cwiseAbs().maxCoeff() / std::max(1.0, out.m1.cwiseAbs().maxCoeff());
            double r2 = (out.m2 - S2).cwiseAbs().maxCoeff() / std::max(1.0, out.m2.cwiseAbs().maxCoeff());
            if (r1 < 1e-5 && r2 < 1e-5) return out;
        }
        throw NumericalError("differentiation-step instability in moment computation");
    }

    ComplexMatrix moment(double x, int n) const {
        if (n < 1 || n > 2) throw InputError("moments implemented for n in {1,2}");
        Moments m = moments(x);
        return n == 1 ? m.m1 : m.m2;
    }

    /// Zero-chain kill-first matrix: probability that the free process is
    /// still exactly at its starting level at killing, having moved only
    /// through driftless compound-Poisson states over zero-size transition
    /// jumps. Equals the alpha -> infinity limit of Phi(alpha, beta).
    ComplexMatrix zero_chain_matrix() const {
        ComplexMatrix A = ComplexMatrix::Zero(d(), d());
        std::vector<int> zs;
        for (int i = 0; i < d(); ++i) {
            const auto& c = spec().components[i];
            if (c.sigma == 0.0 && c.drift == 0.0) zs.push_back(i);
        }
        if (zs.empty()) return A;
        const int nz = static_cast<int>(zs.size());
        ComplexMatrix M = ComplexMatrix::Zero(nz, nz);
        for (int a = 0; a < nz; ++a) {
            int i = zs[a];
            M(a, a) = beta_ + spec().exit_rate(i) + spec().components[i].jump_rate;
            for (int b = 0; b < nz; ++b) {
                int k = zs[b];
                if (k != i && spec().transition_jumps[i][k].is_zero()) M(a, b) -= spec().Q(i, k);
            }
        }
        ComplexMatrix inv = M.fullPivLu().inverse() * beta_;
        for (int a = 0; a < nz; ++a)
            for (int b = 0; b < nz; ++b) A(zs[a], zs[b]) = inv(a, b);
        return A;
    }

    /// P_{x,i}(V(T) = 0, J(T) = j): the alpha -> infinity limit of the
    /// boundary system. The kill-first contribution vanishes on (0, K] and
    /// reduces to the zero-chain matrix at x = 0.
    ComplexMatrix empty_prob(double x) const {
        require_level(x);
        auto bnd = atom_boundary(/*at_upper=*/false);
        if (x <= 0.0) return bnd.first;
        if (x >= K()) return bnd.second;
        return delta_minus_at(x) * bnd.first + delta_plus_at(x) * bnd.second;
    }

    /// P_{x,i}(V(T) = K, J(T) = j): the same first-event construction at the
    /// upper boundary; the kill-first term lives on {x = K} only.
    ComplexMatrix full_prob(double x) const {
        require_level(x);
        auto bnd = atom_boundary(/*at_upper=*/true);
        if (x <= 0.0) return bnd.first;
        if (x >= K()) return bnd.second;
        return delta_minus_at(x) * bnd.first + delta_plus_at(x) * bnd.second;
    }

    const std::vector<double>& grid_nodes() const { return nodes_hi_; }
    const std::vector<double>& grid_weights() const { return weights_hi_; }
    const std::vector<ComplexMatrix>& delta_minus_grid() const { return dm_hi_; }
    const std::vector<ComplexMatrix>& delta_plus_grid() const { return dp_hi_; }

    /// Reflected-workload LST of the single state i killed at omega_i,
    /// started from x in {0, K}; building block of the b vectors.
    cplx state_lst(int i, int which_x, cplx alpha) const {
        const auto& ss = scalars_[i];
        double x = which_x == 0 ? 0.0 : K();
        if (ss.subordinator) return reflected_lst_sub(spec().components[i], x, alpha, K(), ss.omega);
        return reflected_lst_nonsub(*ss.rep, x, alpha, K());
    }

    const ScalarLaw& state_law(int i, int which_x) const { return scalars_[i].law_from[which_x]; }

private:
    friend class LossIdleContext;

    void require_level(double x) const {
        if (!(x >= 0.0 && x <= K())) throw InputError("initial workload must lie in [0,K]");
    }

    ComplexMatrix delta_star_impl(double x, cplx alpha, const FluctuationCache::EtaRep& rep,
                                  const ComplexMatrix& phi, const ComplexMatrix* dm_cached) const {
        ComplexMatrix I = ComplexMatrix::Identity(d(), d());
        ComplexMatrix dm = dm_cached ? *dm_cached : delta_minus_at(x);
        ComplexMatrix etaKx = rep.eval(K() - x, d());
        ComplexMatrix etaK = rep.eval(K(), d());
        return (std::exp(-alpha * x) * I - dm - std::exp(-alpha * K()) * etaKx +
                std::exp(-alpha * K()) * (dm * etaK)) *
               phi;
    }

    // Scalar data for state i at its first-event killing rate omega_i.
    struct StateScalar {
        cplx omega;
        bool subordinator = false;
        std::optional<ScaleFunctionRep> rep;
        std::optional<SubordinatorLaw> sub;
        std::array<ScalarLaw, 2> law_from;  // from x = 0 and x = K
    };

    void build() {
        const int dd = d();
        const double Kc = K();

        scalars_.resize(dd);
        for (int i = 0; i < dd; ++i) {
            auto& ss = scalars_[i];
            ss.omega = beta_ + spec().exit_rate(i);
            ss.subordinator = spec().components[i].is_subordinator();
            if (ss.subordinator) {
                ss.sub = subordinator_law(spec().components[i], ss.omega);
                ss.law_from[0] = reflected_law_sub(spec().components[i], 0.0, Kc, ss.omega);
                ss.law_from[1] = reflected_law_sub(spec().components[i], Kc, Kc, ss.omega);
            } else {
                ss.rep = scale_function(spec().components[i], ss.omega);
                ss.law_from[0] = reflected_law_nonsub(*ss.rep, 0.0, Kc);
                ss.law_from[1] = reflected_law_nonsub(*ss.rep, Kc, Kc);
            }
        }

        fill_grid(grid_lo_, nodes_lo_, weights_lo_);
        fill_grid(grid_hi_, nodes_hi_, weights_hi_);
        sample_delta_grids(nodes_lo_, dm_lo_, dp_lo_);
        sample_delta_grids(nodes_hi_, dm_hi_, dp_hi_);

        measures_.resize(2);
        for (int wx = 0; wx < 2; ++wx) {
            measures_[wx].assign(dd, std::vector<detail::RestartMeasure>(dd));
            for (int i = 0; i < dd; ++i)
                for (int k = 0; k < dd; ++k) {
                    if (k == i || spec().Q(i, k) == 0.0) continue;
                    measures_[wx][i][k] =
                        restart_measure(i, wx, spec().transition_jumps[i][k], nodes_lo_, nodes_hi_);
                }
        }

        ComplexMatrix P_lo = assemble_P(/*hi=*/false);
        ComplexMatrix P_hi = assemble_P(/*hi=*/true);
        if ((P_lo - P_hi).cwiseAbs().maxCoeff() > 1e-7) {
            refine_to(512);
            ComplexMatrix P_512 = assemble_P(/*hi=*/true);
            if ((P_hi - P_512).cwiseAbs().maxCoeff() > 1e-7)
                throw NumericalError("quadrature non-convergence in the boundary system" +
                                     offending_pair(P_hi, P_512));
            P_hi = std::move(P_512);
        }
        P_ = std::move(P_hi);

        // Diagonal dominance of I - P (real killing rates): row sums must
        // stay below q_i/(q_i + beta).
        if (std::abs(beta_.imag()) < 1e-12 * std::max(1.0, std::abs(beta_))) {
            for (int r = 0; r < 2 * dd; ++r) {
                int i = r % dd;
                double qi = spec().exit_rate(i);
                double bound = qi / (qi + beta_.real()) + 1e-10;
                if (P_.row(r).cwiseAbs().sum() > bound)
                    throw NumericalError("boundary system row " + std::to_string(r) +
                                         " violates diagonal dominance");
            }
        }
        ip_lu_.compute(ComplexMatrix::Identity(2 * dd, 2 * dd) - P_);
    }

    void fill_grid(int n, std::vector<double>& nodes, std::vector<double>& wts) const {
        const auto& gl = gauss_legendre(n);
        nodes.resize(n);
        wts.resize(n);
        for (int m = 0; m < n; ++m) {
            nodes[m] = 0.5 * K() * (1.0 + gl.nodes[m]);
            wts[m] = 0.5 * K() * gl.weights[m];
        }
    }

    void sample_delta_grids(const std::vector<double>& nodes, std::vector<ComplexMatrix>& dm,
                            std::vector<ComplexMatrix>& dp) const {
        dm.resize(nodes.size());
        dp.resize(nodes.size());
        for (std::size_t m = 0; m < nodes.size(); ++m) {
            dm[m] = delta_minus_at(nodes[m]);
            dp[m] = delta_plus_at(nodes[m]);
        }
    }

    void refine_to(int n) {
        fill_grid(n, nodes_hi_, weights_hi_);
        sample_delta_grids(nodes_hi_, dm_hi_, dp_hi_);
        for (int wx = 0; wx < 2; ++wx)
            for (int i = 0; i < d(); ++i)
                for (int k = 0; k < d(); ++k) {
                    if (k == i || spec().Q(i, k) == 0.0) continue;
                    measures_[wx][i][k] =
                        restart_measure(i, wx, spec().transition_jumps[i][k], nodes_lo_, nodes_hi_);
                }
    }

    std::string offending_pair(const ComplexMatrix& A, const ComplexMatrix& B) const {
        int r = 0, c = 0;
        (A - B).cwiseAbs().maxCoeff(&r, &c);
        return " (row block " + std::to_string(r) + ", column " + std::to_string(c) + ")";
    }

    detail::RestartMeasure restart_measure(int i, int which_x, const JumpDistribution& B,
                                           const std::vector<double>& nodes_lo,
                                           const std::vector<double>& nodes_hi) const {
        const double Kc = K();
        const ScalarLaw& law = scalars_[i].law_from[which_x];
        detail::RestartMeasure out;

        if (B.is_zero()) {
            for (const auto& a : law.atoms) {
                if (a.location >= Kc - 1e-12)
                    out.mass_K += a.mass;
                else {
                    out.atom_loc.push_back(a.location);
                    out.atom_mass.push_back(a.mass);
                }
            }
            out.dens_lo.resize(nodes_lo.size());
            out.dens_hi.resize(nodes_hi.size());
            for (std::size_t m = 0; m < nodes_lo.size(); ++m) out.dens_lo[m] = law.density(nodes_lo[m]);
            for (std::size_t m = 0; m < nodes_hi.size(); ++m) out.dens_hi[m] = law.density(nodes_hi[m]);
            return out;
        }

        const auto& inner = gauss_legendre(64);
        auto conv = [&](double w) {
            cplx acc = 0.0;
            for (const auto& a : law.atoms)
                if (a.location < w) acc += a.mass * B.pdf(w - a.location);
            acc += inner.integrate(0.0, w, [&](double v) { return law.density(v) * B.pdf(w - v); });
            return acc;
        };
        out.dens_lo.resize(nodes_lo.size());
        out.dens_hi.resize(nodes_hi.size());
        for (std::size_t m = 0; m < nodes_lo.size(); ++m) out.dens_lo[m] = conv(nodes_lo[m]);
        for (std::size_t m = 0; m < nodes_hi.size(); ++m) out.dens_hi[m] = conv(nodes_hi[m]);
        for (const auto& a : law.atoms) out.mass_K += a.mass * B.tail(Kc - a.location);
        out.mass_K += inner.integrate(0.0, Kc, [&](double v) { return law.density(v) * B.tail(Kc - v); });
        return out;
    }

    /// E[g(V_hat)] against a restart measure; g supplied as grid samples plus
    /// boundary values and a pointwise fallback for interior atoms.
    ComplexMatrix integrate_measure(const detail::RestartMeasure& mu, bool hi,
                                    const std::vector<ComplexMatrix>& g_grid, const ComplexMatrix& g0,
                                    const ComplexMatrix& gK,
                                    const std::function<ComplexMatrix(double)>& g_at) const {
        ComplexMatrix acc = mu.mass_K * gK;
        for (std::size_t a = 0; a < mu.atom_loc.size(); ++a) {
            if (mu.atom_loc[a] <= 1e-12)
                acc += mu.atom_mass[a] * g0;
            else
                acc += mu.atom_mass[a] * g_at(mu.atom_loc[a]);
        }
        const auto& dens = hi ? mu.dens_hi : mu.dens_lo;
        const auto& wts = hi ? weights_hi_ : weights_lo_;
        for (std::size_t m = 0; m < dens.size(); ++m) acc += wts[m] * dens[m] * g_grid[m];
        return acc;
    }

    ComplexMatrix assemble_P(bool hi) const {
        const int dd = d();
        ComplexMatrix P = ComplexMatrix::Zero(2 * dd, 2 * dd);
        ComplexMatrix dm0 = delta_minus_at(0.0), dmK = delta_minus_at(K());
        ComplexMatrix dp0 = delta_plus_at(0.0), dpK = delta_plus_at(K());
        const auto& dm_grid = hi ? dm_hi_ : dm_lo_;
        const auto& dp_grid = hi ? dp_hi_ : dp_lo_;
        for (int wx = 0; wx < 2; ++wx)
            for (int i = 0; i < dd; ++i)
                for (int k = 0; k < dd; ++k) {
                    if (k == i || spec().Q(i, k) == 0.0) continue;
                    const auto& mu = measures_[wx][i][k];
                    cplx w_ik = spec().Q(i, k) / (beta_ + spec().exit_rate(i));
                    ComplexMatrix Em = integrate_measure(mu, hi, dm_grid, dm0, dmK,
                                                         [&](double y) { return delta_minus_at(y); });
                    ComplexMatrix Ep = integrate_measure(mu, hi, dp_grid, dp0, dpK,
                                                         [&](double y) { return delta_plus_at(y); });
                    P.block(wx * dd, 0, dd, dd).row(i) += (w_ik * Em.row(k)).eval();
                    P.block(wx * dd, dd, dd, dd).row(i) += (w_ik * Ep.row(k)).eval();
                }
        return P;
    }

    std::pair<ComplexMatrix, ComplexMatrix> b_vectors(cplx alpha) const {
        const int dd = d();
        KappaBar kb = fluct_.solve_kappa_bar(alpha);
        auto rep = fluct_.eta_rep(kb);
        ComplexMatrix phi = phi_matrix(spec(), alpha, beta_);

        std::vector<ComplexMatrix> ds_grid(nodes_hi_.size());
        for (std::size_t m = 0; m < nodes_hi_.size(); ++m)
            ds_grid[m] = delta_star_impl(nodes_hi_[m], alpha, rep, phi, &dm_hi_[m]);
        ComplexMatrix ds0 = delta_star_impl(0.0, alpha, rep, phi, nullptr);
        ComplexMatrix dsK = delta_star_impl(K(), alpha, rep, phi, nullptr);
        auto ds_at = [&](double y) { return delta_star_impl(y, alpha, rep, phi, nullptr); };

        ComplexMatrix b0 = ComplexMatrix::Zero(dd, dd), bK = ComplexMatrix::Zero(dd, dd);
        for (int wx = 0; wx < 2; ++wx) {
            ComplexMatrix& b = wx == 0 ? b0 : bK;
            for (int i = 0; i < dd; ++i) {
                cplx om_i = beta_ + spec().exit_rate(i);
                b(i, i) += beta_ / om_i * state_lst(i, wx, alpha);
                for (int k = 0; k < dd; ++k) {
                    if (k == i || spec().Q(i, k) == 0.0) continue;
                    ComplexMatrix Es =
                        integrate_measure(measures_[wx][i][k], true, ds_grid, ds0, dsK, ds_at);
                    b.row(i) += (spec().Q(i, k) / om_i * Es.row(k)).eval();
                }
            }
        }
        return {b0, bK};
    }

    std::pair<ComplexMatrix, ComplexMatrix> solve_system(const ComplexMatrix& b0,
                                                         const ComplexMatrix& bK) const {
        ComplexMatrix rhs(2 * d(), d());
        rhs.topRows(d()) = b0;
        rhs.bottomRows(d()) = bK;
        ComplexMatrix sol = ip_lu_.solve(rhs);
        double resid =
            ((ComplexMatrix::Identity(2 * d(), 2 * d()) - P_) * sol - rhs).cwiseAbs().maxCoeff();
        if (resid > 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
            throw NumericalError("boundary system solve residual too large");
        return {sol.topRows(d()), sol.bottomRows(d())};
    }

    /// Boundary blocks for the atom probabilities: at_upper = false gives the
    /// empty-system blocks, true the full-buffer blocks. The same P matrix
    /// applies; only the b vectors collapse to atom masses.
    std::pair<ComplexMatrix, ComplexMatrix> atom_boundary(bool at_upper) const {
        const int dd = d();
        ComplexMatrix Az = zero_chain_matrix();
        ComplexMatrix b0 = ComplexMatrix::Zero(dd, dd), bK = ComplexMatrix::Zero(dd, dd);
        for (int wx = 0; wx < 2; ++wx) {
            ComplexMatrix& b = wx == 0 ? b0 : bK;
            for (int i = 0; i < dd; ++i) {
                cplx om_i = beta_ + spec().exit_rate(i);
                const ScalarLaw& law = scalars_[i].law_from[wx];
                b(i, i) += beta_ / om_i * (at_upper ? law.atom_at(K()) : law.atom_at(0.0));
                for (int k = 0; k < dd; ++k) {
                    if (k == i || spec().Q(i, k) == 0.0) continue;
                    const auto& mu = measures_[wx][i][k];
                    cplx mass = 0.0;
                    if (at_upper) {
                        mass = mu.mass_K;
                    } else {
                        for (std::size_t a = 0; a < mu.atom_loc.size(); ++a)
                            if (mu.atom_loc[a] <= 1e-12) mass += mu.atom_mass[a];
                    }
                    b.row(i) += (spec().Q(i, k) / om_i * mass * Az.row(k)).eval();
                }
            }
        }
        return solve_system(b0, bK);
    }

    const OrderedModel* om_;
    cplx beta_;
    FluctuationCache fluct_;
    int grid_lo_, grid_hi_;

    std::vector<StateScalar> scalars_;
    std::vector<double> nodes_lo_, weights_lo_, nodes_hi_, weights_hi_;
    std::vector<ComplexMatrix> dm_lo_, dp_lo_, dm_hi_, dp_hi_;
    std::vector<std::vector<std::vector<detail::RestartMeasure>>> measures_;  // [x][i][k]
    ComplexMatrix P_;
    Eigen::FullPivLU<ComplexMatrix> ip_lu_;
};

/// Convenience wrappers returning user-ordered matrices.
inline ChiResult chi(const OrderedModel& om, double x, cplx alpha, cplx beta) {
    TransientContext ctx(om, beta);
    ChiResult r = ctx.chi(x, alpha);
    r.chi0 = om.to_user(r.chi0);
    r.chiK = om.to_user(r.chiK);
    r.chi_x = om.to_user(r.chi_x);
    return r;
}

inline Eigen::MatrixXd moment(const OrderedModel& om, double x, int n, double beta) {
    TransientContext ctx(om, beta);
    ComplexMatrix m = om.to_user(ctx.moment(x, n));
    Eigen::MatrixXd out(om.d(), om.d());
    for (int i = 0; i < om.d(); ++i)
        for (int j = 0; j < om.d(); ++j) out(i, j) = expect_real(m(i, j), 1e-8, "moment");
    return out;
}

inline Eigen::MatrixXd empty_prob(const OrderedModel& om, double x, double beta) {
    TransientContext ctx(om, beta);
    ComplexMatrix m = om.to_user(ctx.empty_prob(x));
    Eigen::MatrixXd out(om.d(), om.d());
    for (int i = 0; i < om.d(); ++i)
        for (int j = 0; j < om.d(); ++j) out(i, j) = expect_real(m(i, j), 1e-8, "empty_prob");
    return out;
}

inline Eigen::MatrixXd full_prob(const OrderedModel& om, double x, double beta) {
    TransientContext ctx(om, beta);
    ComplexMatrix m = om.to_user(ctx.full_prob(x));
    Eigen::MatrixXd out(om.d(), om.d());
    for (int i = 0; i < om.d(); ++i)
        for (int j = 0; j < om.d(); ++j) out(i, j) = expect_real(m(i, j), 1e-8, "full_prob");
    return out;
}

}  // namespace mapq
