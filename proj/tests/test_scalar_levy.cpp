#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "mapq/scalar_levy.hpp"

using namespace mapq;
using namespace fixtures;
using Catch::Approx;

namespace {

const LevyComponent kBM{-1.0, 1.0, 0.0, JumpDistribution::zero()};
const LevyComponent kCPP{-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)};
const LevyComponent kSub{0.0, 0.0, 2.0, JumpDistribution::exponential(1.0)};

}  // namespace

TEST_CASE("right inverse psi") {
    // bisection oracle on phi(a) = a + a^2/2: psi(1) = sqrt(3) - 1
    CHECK(kBM.right_inverse(1.0) == Approx(std::sqrt(3.0) - 1.0).epsilon(1e-10));
    // quadratic oracle on a^2 = 1 + a: golden ratio
    CHECK(kCPP.right_inverse(1.0) == Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-10));
    // psi(beta) -> 0 as beta -> 0+ when phi'(0) > 0
    LevyComponent stable{-2.0, 0.0, 1.0, JumpDistribution::exponential(1.0)};
    CHECK(stable.right_inverse(1e-8) < 1e-6);
    CHECK_THROWS_WITH(kSub.right_inverse(1.0), Catch::Matchers::ContainsSubstring("psi undefined"));
}

TEST_CASE("scale function: partial-fraction oracle and initial values") {
    auto rep = scale_function(kBM, 1.0);
    double s3 = std::sqrt(3.0);
    auto Wexact = [&](double y) { return (std::exp((s3 - 1.0) * y) - std::exp(-(1.0 + s3) * y)) / s3; };
    for (double y : {0.0, 0.5, 1.0, 2.0, 3.7})
        CHECK(rep.W(y).real() == Approx(Wexact(y)).margin(1e-12));
    CHECK(rep.W(1.0).real() == Approx(1.1630).margin(1e-4));

    // bounded-variation initial value: W(0) = 1/|r|, via the initial-value theorem
    auto repc = scale_function(kCPP, 1.0);
    CHECK(repc.W(0.0).real() == Approx(1.0).margin(1e-12));
    LevyComponent cpp2{-2.5, 0.0, 1.0, JumpDistribution::erlang(2, 1.5)};
    CHECK(scale_function(cpp2, 0.7).W(0.0).real() == Approx(1.0 / 2.5).margin(1e-10));

    CHECK(rep.Z(0.0).real() == Approx(1.0));
    CHECK(repc.Z(0.0).real() == Approx(1.0));
}

TEST_CASE("scale function transform identity") {
    // int_0^M e^{-a y} W(y) dy + exact tail = 1/(phi(a) - beta)
    for (const auto& c : {kBM, kCPP}) {
        for (double beta : {0.5, 1.0}) {
            auto rep = scale_function(c, beta);
            double psi = c.right_inverse(beta);
            for (double a : {psi + 1.0, psi + 2.0}) {
                cplx acc = 0.0;
                for (std::size_t k = 0; k < rep.roots.size(); ++k)
                    acc += rep.residues[k] / (a - rep.roots[k]);  // exact infinite-horizon integral
                const auto& gl = gauss_legendre(256);
                cplx quad = gl.integrate(0.0, 40.0, [&](double y) { return std::exp(-a * y) * rep.W(y); });
                cplx target = 1.0 / (c.exponent(a) - beta);
                CHECK(std::abs(acc - target) < 1e-6 * std::abs(target));
                CHECK(std::abs(quad - target) < 1e-6 * std::abs(target));
            }
        }
    }
}

TEST_CASE("multiple roots are rejected after one perturbation retry") {
    // duplicated hyperexponential phases create a genuinely repeated cleared
    // root that no beta shift separates
    LevyComponent dup{-1.0, 0.0, 1.0,
                      JumpDistribution::hyperexponential({0.4, 0.3, 0.3}, {1.0, 1.0, 1.0})};
    CHECK_THROWS_WITH(scale_function(dup, 1.0), Catch::Matchers::ContainsSubstring("multiple root"));
}

TEST_CASE("two-sided exit probabilities") {
    auto ex = exit_probs_scalar(kBM, 1.0, 1.0, 1.0);
    auto rep = scale_function(kBM, 1.0);
    CHECK(ex.delta_minus == Approx((rep.W(1.0) / rep.W(2.0)).real()).margin(1e-12));
    CHECK(ex.delta_minus == Approx(0.46632).margin(1e-4));
    CHECK(ex.delta_plus ==
          Approx((rep.Z(1.0) - rep.Z(2.0) * rep.W(1.0) / rep.W(2.0)).real()).margin(1e-10));
    CHECK(ex.delta_minus + ex.delta_plus <= 1.0);

    SimConfig cfg;
    cfg.paths = 200000;
    cfg.seed = 9;
    auto mc = simulate_two_sided_exit(single_state(kBM, 4.0), 0, 1.0, 1.0, 1.0, {}, cfg);
    CHECK(within_3se(ex.delta_minus, mc.delta_minus[0]));
    CHECK(within_3se(ex.delta_plus, mc.delta_plus[0]));

    // subordinators never cross the lower level
    auto exs = exit_probs_scalar(kSub, 3.0, 1.0, 1.0);
    CHECK(exs.delta_minus == 0.0);
    CHECK(exs.delta_plus > 0.0);

    // immediate killing sends both to zero
    auto exinf = exit_probs_scalar(kBM, 1.0, 1.0, 1e6);
    CHECK(exinf.delta_minus < 1e-8);
    CHECK(exinf.delta_plus < 1e-8);
}

TEST_CASE("Lemma-1 consistency: exit masses plus kill-first mass sum to one") {
    SimConfig cfg;
    cfg.paths = 150000;
    cfg.seed = 13;
    auto ex = exit_probs_scalar(kCPP, 1.5, 2.0, 0.8);
    auto mc = simulate_two_sided_exit(single_state(kCPP, 4.0), 0, 1.5, 2.0, 0.8, {0.0}, cfg);
    double kill_mass_mc = mc.kill_at(0, 0).mean;  // alpha = 0: plain kill-first probability
    CHECK(within_3se(1.0 - ex.delta_minus - ex.delta_plus, mc.kill_lst[0]));
    CHECK(kill_mass_mc > 0.0);
}

TEST_CASE("reflected law: atoms, density, mass conservation") {
    // BM from x = 0: no atom at zero (unbounded variation)
    auto lawbm = reflected_law(kBM, 0.0, 1.0, 4.0);
    CHECK(std::abs(lawbm.atom_at(0.0)) < 1e-14);

    // mass conservation across randomized components, atoms included
    rng::Stream rs(23, 1);
    const auto& gl = gauss_legendre(256);
    for (int rep = 0; rep < 20; ++rep) {
        auto m = random_model(rs, 1, true, false);
        double K = m.capacity;
        double x = K * rs.uniform();
        double beta = 0.4 + 1.6 * rs.uniform();
        auto law = reflected_law(m.components[0], x, beta, K);
        cplx mass = gl.integrate(0.0, x, law.density) + gl.integrate(x, K, law.density);
        for (const auto& a : law.atoms) mass += a.mass;
        CHECK(std::abs(mass - 1.0) < 1e-8);
    }

    // driftless subordinator from x: P(V = K) = P(Y(T) >= K - x)
    auto lawsub = reflected_law(kSub, 1.0, 1.0, 4.0);
    auto sub = subordinator_law(kSub, 1.0);
    CHECK(std::abs(lawsub.atom_at(4.0) - sub.tail(3.0)) < 1e-12);
    CHECK(std::abs(lawsub.atom_at(1.0) - sub.atom0) < 1e-12);
}

TEST_CASE("reflected law matches a Monte Carlo histogram") {
    // CPP(lambda=1, exp(1), r=-1), x=2, K=4, beta=1
    auto law = reflected_law(kCPP, 2.0, 1.0, 4.0);
    SimConfig cfg;
    cfg.paths = 200000;
    cfg.seed = 31;
    ModelSpec m = single_state(kCPP, 4.0);
    // histogram over 8 bins plus the atom at zero
    const int nb = 8;
    std::vector<detail_sim::Accum> bins(nb);
    detail_sim::Accum atom0;
    rng::Stream dummy(0, 0);
    for (long p = 0; p < cfg.paths; ++p) {
        rng::Stream prs(cfg.seed, (std::uint64_t)p);
        double T = prs.exponential(1.0);
        ReflectedWalker w(m, 2.0, 0, prs, cfg.dt);
        w.advance(T);
        atom0.add(w.V() == 0.0 ? 1.0 : 0.0);
        for (int b = 0; b < nb; ++b)
            bins[b].add(w.V() > b * 0.5 && w.V() <= (b + 1) * 0.5 ? 1.0 : 0.0);
    }
    CHECK(within_3se(law.atom_at(0.0).real(), atom0.estimate()));
    const auto& gl = gauss_legendre(128);
    for (int b = 0; b < nb; ++b) {
        double lo = b * 0.5, hi = (b + 1) * 0.5;
        cplx mass = (lo < 2.0 && hi > 2.0)
                        ? gl.integrate(lo, 2.0, law.density) + gl.integrate(2.0, hi, law.density)
                        : gl.integrate(lo, hi, law.density);
        if (b == nb - 1) mass += law.atom_at(4.0);
        CHECK(within_3se(mass.real(), bins[b].estimate()));
    }
}

TEST_CASE("reflected LST: normalization, quadrature consistency, PK limit") {
    for (const auto& c : {kBM, kCPP, kSub}) {
        CHECK(std::abs(reflected_lst(c, 1.7, 0.0, 1.0, 4.0) - 1.0) < 1e-10);
    }
    // LST vs quadrature of the law
    const auto& gl = gauss_legendre(256);
    for (const auto& c : {kBM, kCPP}) {
        double x = 1.2, K = 4.0;
        cplx a = 0.9;
        auto law = reflected_law(c, x, 1.0, K);
        cplx direct = reflected_lst(c, x, a, 1.0, K);
        cplx quad = gl.integrate(0.0, x, [&](double y) { return std::exp(-a * y) * law.density(y); }) +
                    gl.integrate(x, K, [&](double y) { return std::exp(-a * y) * law.density(y); });
        for (const auto& at : law.atoms) quad += at.mass * std::exp(-a * at.location);
        CHECK(std::abs(direct - quad) < 1e-6 * std::abs(direct));
    }

    // subordinator stuck at the upper boundary
    CHECK(std::abs(reflected_lst(kSub, 4.0, 1.3, 1.0, 4.0) - std::exp(-1.3 * 4.0)) < 1e-12);

    // generalized Pollaczek-Khinchine limit at K = 50
    double psi = kCPP.right_inverse(1.0);
    cplx pk = (1.0 / (1.0 - kCPP.exponent(1.0))) *
              (std::exp(-1.0) - (1.0 / psi) * std::exp(-psi * 1.0));
    CHECK(std::abs(reflected_lst(kCPP, 1.0, 1.0, 1.0, 50.0) - pk) < 1e-5);
}

TEST_CASE("overshoot transform eta and its u-transform zeta") {
    // Brownian paths creep: eta is alpha-independent at fixed u
    for (double u : {0.5, 1.0, 2.0})
        CHECK(std::abs(eta_scalar(kBM, u, 1.0, 1.0) - eta_scalar(kBM, u, 2.0, 1.0)) < 1e-8);

    // killed instantly
    CHECK(std::abs(eta_scalar(kCPP, 1.0, 0.5, 1e8)) < 1e-6);

    // Monte Carlo: overshoot transform of CPP over u = 1
    SimConfig cfg;
    cfg.paths = 200000;
    cfg.seed = 41;
    auto mc = simulate_two_sided_exit(single_state(kCPP, 4.0), 0, 1e9, 1.0, 1.0, {0.0, 1.0}, cfg);
    CHECK(within_3se(eta_scalar(kCPP, 1.0, 0.0, 1.0).real(), mc.overshoot_at(0, 0)));
    CHECK(within_3se(eta_scalar(kCPP, 1.0, 1.0, 1.0).real(), mc.overshoot_at(1, 0)));

    // zeta consistency: numerical u-transform of eta reproduces zeta
    const auto& gl = gauss_legendre(512);
    for (const auto& c : {kBM, kCPP, kSub}) {
        for (double g : {0.5, 1.0, 2.0}) {
            cplx z = zeta_scalar(c, 0.7, 1.0, g);
            cplx quad = gl.integrate(0.0, 20.0, [&](double u) {
                return std::exp(-g * u) * eta_scalar(c, u, 0.7, 1.0);
            });
            CHECK(std::abs(quad - z) < 1e-4 * std::max(1.0, std::abs(z)));
        }
    }

    // eta(u, 0, beta) is the upcrossing probability, within [0, 1]
    for (double u : {0.0, 0.5, 2.0}) {
        double p = eta_scalar(kCPP, u, 0.0, 1.0).real();
        CHECK(p >= -1e-12);
        CHECK(p <= 1.0 + 1e-12);
    }
}

TEST_CASE("subordinator law of Y at an exponential time") {
    auto law = subordinator_law(kSub, 1.0);
    CHECK(law.atom0.real() == Approx(1.0 / 3.0).margin(1e-12));  // beta/(beta+lambda)
    CHECK(std::abs(law.atom0 + law.density.integral(1e3) - 1.0) < 1e-9);

    // positive drift kills the atom
    LevyComponent drifted{0.5, 0.0, 1.0, JumpDistribution::exponential(2.0)};
    CHECK(std::abs(subordinator_law(drifted, 1.0).atom0) < 1e-12);

    // frozen component: all mass at zero
    LevyComponent frozen{0.0, 0.0, 0.0, JumpDistribution::zero()};
    auto flaw = subordinator_law(frozen, 2.0);
    CHECK(flaw.atom0.real() == Approx(1.0));
    CHECK(flaw.density.coef.empty());
}
