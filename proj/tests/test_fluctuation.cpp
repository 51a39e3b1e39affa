#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "mapq/inversion.hpp"
#include "mapq/map_fluctuation.hpp"

using namespace mapq;
using namespace fixtures;
using Catch::Approx;

namespace {

ModelSpec all_bm_model() {
    ModelSpec m;
    m.d = 2;
    m.Q.resize(2, 2);
    m.Q << -0.8, 0.8, 1.2, -1.2;
    m.components = {{-1.0, 1.0, 0.0, JumpDistribution::zero()},
                    {-0.5, 0.7, 0.0, JumpDistribution::zero()}};
    m.transition_jumps.assign(2, std::vector<JumpDistribution>(2));
    m.capacity = 4.0;
    m.labels = {"1", "2"};
    return m;
}

}  // namespace

TEST_CASE("right-half-plane roots: counts and companion oracle") {
    auto om1 = validate(instance1());
    auto rs = rhp_roots(om1, 1.0);
    REQUIRE(rs.roots.size() == 1);
    // hand-cleared cubic for instance 1 at beta = 1: -4g^3 + 5g^2 + 10g + 3
    Poly cubic({3.0, 10.0, 5.0, -4.0});
    cplx expected;
    for (auto r : cubic.roots())
        if (r.real() > 0) expected = r;
    CHECK(std::abs(rs.roots[0] - expected) < 1e-9);

    // d = 1: the single root is psi(beta)
    auto s1 = validate(single_state({-1.0, 1.0, 0.0, JumpDistribution::zero()}, 4.0));
    auto rs1 = rhp_roots(s1, 1.3);
    REQUIRE(rs1.roots.size() == 1);
    CHECK(std::abs(rs1.roots[0].real() - s1.spec.components[0].right_inverse(1.3)) < 1e-10);

    // instance 2 at beta = 1: the quadratic -(g+3)(g-1) has the single
    // positive root g = 1
    auto om2 = validate(instance2());
    auto rs2 = rhp_roots(om2, 1.0);
    REQUIRE(rs2.roots.size() == 1);
    CHECK(std::abs(rs2.roots[0] - cplx(1.0)) < 1e-10);
}

TEST_CASE("kappa_check: difference quotients and the derivative limit") {
    // d = 1 BM: (F(g)-F(a))/(g-a) = 1 + (a+g)/2
    auto bm = single_state({-1.0, 1.0, 0.0, JumpDistribution::zero()}, 4.0);
    for (double a : {0.3, 1.0})
        for (double g : {0.9, 2.0}) {
            cplx kc = kappa_check(bm, a, g)(0, 0);
            CHECK(std::abs(kc - (1.0 + (a + g) / 2.0)) < 1e-12);
        }

    // g = a returns F'(a), checked against a central finite difference
    ModelSpec m1 = instance1();
    m1.transition_jumps[0][1] = JumpDistribution::exponential(2.0);
    m1.transition_jumps[1][0] = JumpDistribution::erlang(2, 1.5);
    double a = 0.8, h = 1e-6;
    ComplexMatrix lim = kappa_check(m1, a, a);
    ComplexMatrix fd = (f_matrix(m1, a + h) - f_matrix(m1, a - h)) / (2.0 * h);
    CHECK((lim - fd).cwiseAbs().maxCoeff() < 1e-6);

    // entrywise agreement with the direct difference-quotient formula
    ComplexMatrix kc = kappa_check(m1, 1.0, 2.0);
    ComplexMatrix direct = (f_matrix(m1, 2.0) - f_matrix(m1, 1.0)) / (2.0 - 1.0);
    CHECK((kc - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kappa_bar: scalar reduction and pole cancellation") {
    // d = 1: kappa_bar = (phi(a) - beta)/(psi(beta) - a)
    auto s1 = validate(single_state({-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)}, 4.0));
    FluctuationCache f1(s1, 1.0);
    double psi = s1.spec.components[0].right_inverse(1.0);
    for (double a : {0.0, 0.5, 2.0}) {
        cplx kb = f1.solve_kappa_bar(a).matrix(0, 0);
        cplx expect = (s1.spec.components[0].exponent(a) - 1.0) / (psi - a);
        CHECK(std::abs(kb - expect) < 1e-10);
    }

    // subordinator rows are identically zero; residuals vanish for all
    // columns at every tracked root
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    rng::Stream rs(51, 0);
    for (int rep = 0; rep < 10; ++rep) {
        double a = 2.0 * rs.uniform();
        KappaBar kb = fc.solve_kappa_bar(a);
        CHECK(kb.matrix.row(1).cwiseAbs().maxCoeff() == 0.0);
        CHECK(fc.pole_cancellation_residual(kb) < 1e-7);
    }
}

TEST_CASE("zeta: closed forms, finiteness, and pole behavior") {
    // d = 1 subordinator: zeta = (phi(a)-phi(g)) / ((beta-phi(g)) (g-a))
    LevyComponent sub{0.0, 0.0, 2.0, JumpDistribution::exponential(1.0)};
    auto s1 = validate(single_state(sub, 4.0));
    FluctuationCache fs(s1, 1.0);
    KappaBar kb0 = fs.solve_kappa_bar(0.7);
    cplx z = fs.zeta(kb0, 2.0)(0, 0);
    cplx expect = (sub.exponent(0.7) - sub.exponent(2.0)) / ((1.0 - sub.exponent(2.0)) * (2.0 - 0.7));
    CHECK(std::abs(z - expect) < 1e-12);
    CHECK(std::abs(z - zeta_scalar(sub, 0.7, 1.0, 2.0)) < 1e-12);

    // matrix zeta reduces to the scalar closed form at d = 1 (non-subordinator)
    LevyComponent cpp{-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)};
    auto s2 = validate(single_state(cpp, 4.0));
    FluctuationCache fc2(s2, 1.0);
    KappaBar kb2 = fc2.solve_kappa_bar(0.5);
    CHECK(std::abs(fc2.zeta(kb2, 2.0)(0, 0) - zeta_scalar(cpp, 0.5, 1.0, 2.0)) < 1e-10);

    // no blow-up just off the cancelled poles; loud error exactly at them
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    KappaBar kb = fc.solve_kappa_bar(1.0);
    cplx root = fc.root_set().roots[0];
    for (double eps : {1e-3, -1e-3}) {
        ComplexMatrix zz = fc.zeta(kb, root + eps);
        CHECK(zz.cwiseAbs().maxCoeff() < 1e3);  // removable singularity, no 1/eps blow-up
    }
    CHECK_THROWS_WITH(fc.zeta(kb, root), Catch::Matchers::ContainsSubstring("zeta pole"));
}

TEST_CASE("eta: residue inversion vs numerical inversion and Monte Carlo") {
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    KappaBar kb = fc.solve_kappa_bar(0.0);

    // residue path vs Euler inversion of zeta in the u-transform variable
    for (double u : {1.0, 2.0}) {
        ComplexMatrix eta_res = fc.eta(kb, u);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                auto inv = invert([&](cplx g) { return fc.zeta(kb, g)(i, j); }, u);
                CHECK(std::abs(eta_res(i, j) - inv.value) < 1e-6);
            }
    }

    // d = 1 BM reduction to the scalar overshoot formula
    LevyComponent bm{-1.0, 1.0, 0.0, JumpDistribution::zero()};
    auto s1 = validate(single_state(bm, 4.0));
    FluctuationCache fb(s1, 1.0);
    KappaBar kbb = fb.solve_kappa_bar(0.8);
    for (double u : {0.5, 1.5})
        CHECK(std::abs(fb.eta(kbb, u)(0, 0) - eta_scalar(bm, u, 0.8, 1.0)) < 1e-6);

    // probability bounds and row sums at alpha = 0
    for (double u : {0.5, 2.0, 4.0}) {
        ComplexMatrix P = fc.P_plus(u);
        for (int i = 0; i < 2; ++i) {
            CHECK(P.row(i).sum().real() <= 1.0 + 1e-10);
            for (int j = 0; j < 2; ++j) {
                CHECK(P(i, j).real() >= -1e-10);
                CHECK(P(i, j).real() <= 1.0 + 1e-10);
            }
        }
    }

    // Monte Carlo: crossing probabilities with the terminal state
    SimConfig cfg;
    cfg.paths = 200000;
    cfg.seed = 14;
    auto mc = simulate_two_sided_exit(instance1(), 0, 1e9, 2.0, 1.0, {0.0}, cfg);
    ComplexMatrix P2 = fc.P_plus(2.0);
    for (int j = 0; j < 2; ++j) CHECK(within_3se(P2(0, j).real(), mc.overshoot_at(0, j)));
}

TEST_CASE("zeta consistency: u-transform of matrix eta reproduces zeta") {
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    KappaBar kb = fc.solve_kappa_bar(0.0);
    auto rep = fc.eta_rep(kb);
    for (double g : {0.5, 1.0, 2.0}) {
        // exact integral of the exponential-sum representation over [0, inf)
        ComplexMatrix quad = ComplexMatrix::Zero(2, 2);
        for (std::size_t p = 0; p < rep.poles.size(); ++p)
            quad += rep.residues[p] / (g - rep.poles[p]);
        ComplexMatrix z = fc.zeta(kb, g);
        CHECK((quad - z).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, z.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("scale matrix: reduction, transform identity, Z basics") {
    // d = 1 reduction
    LevyComponent cpp{-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)};
    auto s1 = validate(single_state(cpp, 4.0));
    FluctuationCache f1(s1, 1.0);
    auto repc = scale_function(cpp, 1.0);
    for (double y : {0.3, 1.0, 2.5})
        CHECK(std::abs(f1.W(y)(0, 0) - repc.W(y)) < 1e-10);

    // Z(0) = I
    auto om3 = validate(instance3());
    FluctuationCache f3(om3, 1.0);
    CHECK((f3.Z(0.0) - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    // transform identity: int e^{-a y} W(y) dy = (F(a) - beta I)^{-1} [I-; 0]
    for (double a : {3.0, 5.0}) {
        ComplexMatrix exact = ComplexMatrix::Zero(2, 2);
        for (std::size_t j = 0; j < f3.all_roots().size(); ++j) {
            // exact tail via the residue representation
        }
        const auto& gl = gauss_legendre(512);
        ComplexMatrix quad = ComplexMatrix::Zero(2, 2);
        for (int seg = 0; seg < 4; ++seg) {
            double lo = seg * 10.0, hi = lo + 10.0;
            quad += gl.integrate(lo, hi, [&](double y) { return (std::exp(-a * y) * f3.W(y)).eval(); });
        }
        ComplexMatrix target = (f_matrix(om3.spec, a) - ComplexMatrix::Identity(2, 2))
                                   .fullPivLu()
                                   .inverse();
        CHECK((quad - target).cwiseAbs().maxCoeff() < 1e-6 * target.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("delta_minus: zero subordinator columns and identity cases") {
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    for (double um : {0.5, 2.0})
        for (double up : {0.5, 2.0}) {
            ComplexMatrix dm = fc.delta_minus(um, up);
            CHECK(dm.col(1).cwiseAbs().maxCoeff() == 0.0);  // subordinator column
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    CHECK(dm(i, j).real() >= -1e-10);
                    CHECK(dm(i, j).real() <= 1.0 + 1e-10);
                }
        }

    // all-negative-drift MM-CPP: hitting zero from zero is immediate
    auto omn = validate(instance1_neg());
    FluctuationCache fn(omn, 1.0);
    CHECK((fn.delta_minus(0.0, 4.0) - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("delta_plus: Remark-5 route agreement on an all-BM model") {
    auto om = validate(all_bm_model());
    FluctuationCache fc(om, 1.0);
    KappaBar kb0 = fc.solve_kappa_bar(0.0);

    // P_+(u) = Z(u) + W(u) kappa_bar(0, beta) without subordinators
    for (double u : {1.0, 2.0, 4.0}) {
        ComplexMatrix lhs = fc.P_plus(u);
        ComplexMatrix rhs = fc.Z(u) + fc.W(u) * kb0.matrix;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
    }

    // delta_plus via the two routes
    for (auto [um, up] : std::vector<std::pair<double, double>>{{1.0, 3.0}, {2.0, 2.0}}) {
        ComplexMatrix route1 = fc.delta_plus(um, up);
        ComplexMatrix wS = fc.W(um + up);
        ComplexMatrix route2 =
            fc.Z(up) - fc.W(up) * wS.fullPivLu().inverse() * fc.Z(um + up);
        CHECK((route1 - route2).cwiseAbs().maxCoeff() < 1e-8);
    }

    // d = 1 agreement with the scalar exit probabilities
    LevyComponent bm{-1.0, 1.0, 0.0, JumpDistribution::zero()};
    auto s1 = validate(single_state(bm, 4.0));
    FluctuationCache f1(s1, 1.0);
    auto ex = exit_probs_scalar(bm, 1.0, 2.0, 1.0);
    CHECK(std::abs(f1.delta_minus(1.0, 2.0)(0, 0).real() - ex.delta_minus) < 1e-10);
    CHECK(std::abs(f1.delta_plus(1.0, 2.0)(0, 0).real() - ex.delta_plus) < 1e-10);
}

TEST_CASE("delta matrices match the Monte Carlo exit race") {
    SimConfig cfg;
    cfg.paths = 150000;
    cfg.seed = 15;
    auto om1 = validate(instance1());
    FluctuationCache fc(om1, 1.0);
    auto mc = simulate_two_sided_exit(instance1(), 0, 2.0, 2.0, 1.0, {}, cfg);
    ComplexMatrix dm = fc.delta_minus(2.0, 2.0), dp = fc.delta_plus(2.0, 2.0);
    for (int j = 0; j < 2; ++j) {
        CHECK(within_3se(dm(0, j).real(), mc.delta_minus[j]));
        CHECK(within_3se(dp(0, j).real(), mc.delta_plus[j]));
    }

    // instance 2 (Brownian + frozen): u- = 1, u+ = 3
    auto om2 = validate(instance2());
    FluctuationCache f2(om2, 1.0);
    SimConfig cfg2;
    cfg2.paths = 60000;
    cfg2.seed = 16;
    cfg2.dt = 1e-3;
    auto mc2 = simulate_two_sided_exit(instance2(), 0, 1.0, 3.0, 1.0, {}, cfg2);
    ComplexMatrix dm2 = f2.delta_minus(1.0, 3.0), dp2 = f2.delta_plus(1.0, 3.0);
    for (int j = 0; j < 2; ++j) {
        CHECK(within_3se(dm2(0, j).real(), mc2.delta_minus[j], 2e-3));
        CHECK(within_3se(dp2(0, j).real(), mc2.delta_plus[j], 2e-3));
    }
}

TEST_CASE("homotopy continuation agrees with direct selection for complex beta") {
    auto om1 = validate(instance1());
    for (cplx beta : {cplx(1.0, 2.0), cplx(0.5, 8.0), cplx(2.0, -5.0)}) {
        auto hs = homotopy_roots(om1, beta);
        CHECK(hs.provenance == RootSet::Provenance::HomotopyFromReal);
        auto ds = rhp_roots(om1, beta);
        REQUIRE(hs.roots.size() == ds.roots.size());
        // match as sets
        for (const auto& r : hs.roots) {
            double best = 1e300;
            for (const auto& q : ds.roots) best = std::min(best, std::abs(r - q));
            CHECK(best < 1e-7);
        }
        FluctuationCache fc(om1, beta);
        for (const auto& r : hs.roots) CHECK(fc.det_residual(r) < 1e-8);
    }
}

TEST_CASE("matrix layer reduces to the scalar layer on random d = 1 models") {
    rng::Stream rs(77, 0);
    for (int rep = 0; rep < 10; ++rep) {
        auto m = random_model(rs, 1, /*allow_subordinators=*/false, false);
        auto om = validate(m);
        double beta = 0.5 + 1.5 * rs.uniform();
        FluctuationCache fc(om, beta);
        auto srep = scale_function(m.components[0], beta);
        double u = 0.3 + 2.0 * rs.uniform();
        CHECK(std::abs(fc.W(u)(0, 0) - srep.W(u)) < 1e-10 * std::max(1.0, std::abs(srep.W(u))));
        auto ex = exit_probs_scalar(m.components[0], u, 1.0, beta);
        CHECK(std::abs(fc.delta_minus(u, 1.0)(0, 0).real() - ex.delta_minus) < 1e-10);
        CHECK(std::abs(fc.delta_plus(u, 1.0)(0, 0).real() - ex.delta_plus) < 1e-10);
        double a = rs.uniform();
        KappaBar kb = fc.solve_kappa_bar(a);
        CHECK(std::abs(fc.eta(kb, u)(0, 0) - eta_scalar(m.components[0], u, a, beta)) < 1e-10);
    }
}
