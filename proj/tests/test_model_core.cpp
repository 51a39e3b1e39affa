#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "mapq/sim.hpp"

using namespace mapq;
using namespace fixtures;
using Catch::Approx;

TEST_CASE("validate orders states and reports the permutation") {
    auto om = validate(instance1());
    CHECK(om.d_minus == 1);
    CHECK(om.perm[0] == 0);  // state 1 is the non-subordinator and stays first
    CHECK(om.perm[1] == 1);

    // ordering puts non-subordinators first even when the user lists them last
    ModelSpec swapped = instance1();
    std::swap(swapped.components[0], swapped.components[1]);
    std::swap(swapped.labels[0], swapped.labels[1]);
    auto om2 = validate(swapped);
    CHECK(om2.d_minus == 1);
    CHECK(om2.perm[0] == 1);
    CHECK(om2.spec.labels[0] == "1");
}

TEST_CASE("validate is idempotent on an already-ordered spec") {
    auto om = validate(instance1());
    auto again = validate(om.spec);
    for (int i = 0; i < om.d(); ++i) CHECK(again.perm[i] == i);
}

TEST_CASE("validate rejects bad inputs with indexed messages") {
    ModelSpec bad = instance1();
    bad.Q(0, 0) = -1.0 + 1e-3;  // row sum 1e-3
    CHECK_THROWS_WITH(validate(bad), Catch::Matchers::ContainsSubstring("row-sum"));

    ModelSpec badK = instance1();
    badK.capacity = 0.0;
    CHECK_THROWS_WITH(validate(badK), Catch::Matchers::ContainsSubstring("capacity"));

    ModelSpec badJump = instance1();
    badJump.transition_jumps[0][0] = JumpDistribution::exponential(1.0);
    CHECK_THROWS_WITH(validate(badJump), Catch::Matchers::ContainsSubstring("diagonal"));

    ModelSpec badRate = instance1();
    CHECK_THROWS(badRate.components[0].jumps = JumpDistribution::exponential(-2.0));

    // absorbing background state is fine (no irreducibility requirement)
    CHECK_NOTHROW(validate(instance3()));
}

TEST_CASE("laplace exponent matches the closed forms") {
    LevyComponent bm{-1.0, 1.0, 0.0, JumpDistribution::zero()};
    CHECK(bm.exponent(2.0).real() == Approx(4.0));  // a + a^2/2 at a = 2

    LevyComponent cpp2{0.0, 0.0, 2.0, JumpDistribution::exponential(1.0)};
    CHECK(cpp2.exponent(1.0).real() == Approx(-1.0));  // -2a/(1+a) at a = 1

    rng::Stream rs(7, 0);
    for (int rep = 0; rep < 5; ++rep) {
        auto m = random_model(rs, 2);
        for (const auto& c : m.components) CHECK(std::abs(c.exponent(0.0)) < 1e-12);
    }
}

TEST_CASE("laplace exponent pole is a loud error") {
    LevyComponent cpp{-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)};
    CHECK_THROWS_WITH(cpp.exponent(-1.0), Catch::Matchers::ContainsSubstring("exponent pole"));
}

TEST_CASE("F matrix structure") {
    ModelSpec m = instance1();
    cplx a = 1.3;
    ComplexMatrix F = f_matrix(m, a);
    CHECK(std::abs(F(0, 0) - (m.components[0].exponent(a) - 1.0)) < 1e-14);
    CHECK(std::abs(F(0, 1) - cplx(1.0)) < 1e-14);
    CHECK(std::abs(F(1, 0) - cplx(1.0)) < 1e-14);
    CHECK(std::abs(F(1, 1) - (m.components[1].exponent(a) - 1.0)) < 1e-14);

    // F(0) = Q and the generator row-sum property
    ComplexMatrix F0 = f_matrix(m, 0.0);
    CHECK((F0 - m.Q.cast<cplx>()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(F0.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);

    // d = 1 reduction
    auto s1 = single_state(m.components[0], 4.0);
    CHECK(std::abs(f_matrix(s1, a)(0, 0) - m.components[0].exponent(a)) < 1e-14);
}

TEST_CASE("Phi matrix: scalar reduction, stochasticity, positivity") {
    ModelSpec m = instance1();
    auto s1 = single_state(m.components[0], 4.0);
    cplx phi = phi_matrix(s1, 1.0, 2.0)(0, 0);
    CHECK(std::abs(phi - 2.0 / (2.0 - m.components[0].exponent(1.0))) < 1e-12);

    ComplexMatrix P0 = phi_matrix(m, 0.0, 1.5);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(P0.row(i).sum() - cplx(1.0)) < 1e-10);

    rng::Stream rs(11, 0);
    for (int rep = 0; rep < 4; ++rep) {
        auto rm = random_model(rs, 3);
        ComplexMatrix P = phi_matrix(rm, 0.7, 1.1);
        for (int i = 0; i < 3; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < 3; ++j) {
                CHECK(P(i, j).real() > -1e-12);
                rowsum += P(i, j).real();
            }
            CHECK(rowsum <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("Phi matches the free-process Monte Carlo oracle") {
    ModelSpec m = instance1();
    ComplexMatrix P = phi_matrix(m, 1.0, 1.0);
    SimConfig cfg;
    cfg.paths = 200000;
    cfg.seed = 5;
    auto est = simulate_free_lst(m, 0, 1.0, 1.0, cfg);
    for (int j = 0; j < 2; ++j) CHECK(within_3se(P(0, j).real(), est.by_state[j]));
}

TEST_CASE("subordinator classification agrees with simulated free paths") {
    // a state is a subordinator iff its simulated free path never decreases
    rng::Stream rs(3, 0);
    auto probe = [&](const LevyComponent& c) {
        rng::Stream prs(17, 0);
        for (int path = 0; path < 1000; ++path) {
            double drop = 0.0;
            if (c.sigma > 0.0) return false;  // any Brownian step can decrease
            // event-driven: drift between jumps decides monotonicity
            double t = 0.0;
            while (t < 10.0) {
                double nj = c.jump_rate > 0 ? prs.exponential(c.jump_rate) : 11.0;
                double seg = std::min(nj, 10.0 - t);
                drop = std::min(drop, c.drift * seg);
                t += seg;
            }
            if (drop < 0.0) return false;
        }
        return true;
    };
    std::vector<LevyComponent> comps = {
        {-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)},
        {0.0, 0.0, 2.0, JumpDistribution::exponential(1.0)},
        {0.5, 0.0, 1.0, JumpDistribution::erlang(2, 2.0)},
        {-1.0, 1.0, 0.0, JumpDistribution::zero()},
        {0.0, 0.0, 0.0, JumpDistribution::zero()},
    };
    for (const auto& c : comps) CHECK(c.is_subordinator() == probe(c));
}
