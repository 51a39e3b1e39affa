#pragma once

// Shared fixture models and tolerance helpers for the test suites.

#include "mapq/model.hpp"
#include "mapq/sim.hpp"

namespace fixtures {

using namespace mapq;

/// Markov-modulated compound Poisson: negative drift in state 1, driftless in
/// state 2, exponential(1) jobs, unit switching rates, K = 4.
inline ModelSpec instance1() {
    ModelSpec m;
    m.d = 2;
    m.Q.resize(2, 2);
    m.Q << -1, 1, 1, -1;
    m.components = {{-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)},
                    {0.0, 0.0, 2.0, JumpDistribution::exponential(1.0)}};
    m.transition_jumps.assign(2, std::vector<JumpDistribution>(2));
    m.capacity = 4.0;
    m.labels = {"1", "2"};
    return m;
}

/// On/off Brownian motion: unit-variance BM with drift -1, frozen second state.
inline ModelSpec instance2() {
    ModelSpec m;
    m.d = 2;
    m.Q.resize(2, 2);
    m.Q << -1, 1, 1, -1;
    m.components = {{-1.0, 1.0, 0.0, JumpDistribution::zero()},
                    {0.0, 0.0, 0.0, JumpDistribution::zero()}};
    m.transition_jumps.assign(2, std::vector<JumpDistribution>(2));
    m.capacity = 4.0;
    m.labels = {"1", "2"};
    return m;
}

/// BM plus compound Poisson with the second state absorbing.
inline ModelSpec instance3() {
    ModelSpec m;
    m.d = 2;
    m.Q.resize(2, 2);
    m.Q << -1, 1, 0, 0;
    m.components = {{-1.0, 1.0, 0.0, JumpDistribution::zero()},
                    {-1.0, 0.0, 1.0, JumpDistribution::exponential(1.0)}};
    m.transition_jumps.assign(2, std::vector<JumpDistribution>(2));
    m.capacity = 4.0;
    m.labels = {"1", "2"};
    return m;
}

/// Negative-drift variant of instance 1 (both drifts -1): the loss/idle scope.
inline ModelSpec instance1_neg() {
    ModelSpec m = instance1();
    m.components[1].drift = -1.0;
    return m;
}

/// d = 1 Brownian reference of instance 2.
inline ModelSpec bm_ref() {
    ModelSpec m;
    m.d = 1;
    m.Q.resize(1, 1);
    m.Q << 0.0;
    m.components = {{-1.0, 1.0, 0.0, JumpDistribution::zero()}};
    m.transition_jumps.assign(1, std::vector<JumpDistribution>(1));
    m.capacity = 4.0;
    m.labels = {"bm"};
    return m;
}

inline ModelSpec single_state(const LevyComponent& c, double K) {
    ModelSpec m;
    m.d = 1;
    m.Q.resize(1, 1);
    m.Q << 0.0;
    m.components = {c};
    m.transition_jumps.assign(1, std::vector<JumpDistribution>(1));
    m.capacity = K;
    m.labels = {"s"};
    return m;
}

/// |analytic - mc| within max(3 SE, floor).
inline bool within_3se(double analytic, const Estimate& e, double floor_abs = 0.0) {
    double tol = std::max(3.0 * e.se, floor_abs);
    return std::abs(analytic - e.mean) <= tol;
}

/// Deterministic mixed-family model generator for randomized sweeps.
inline ModelSpec random_model(rng::Stream& rs, int d, bool allow_subordinators = true,
                              bool transition_jumps_on = true) {
    ModelSpec m;
    m.d = d;
    m.Q.resize(d, d);
    for (int i = 0; i < d; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            double q = 0.2 + 1.5 * rs.uniform();
            m.Q(i, j) = q;
            rowsum += q;
        }
        m.Q(i, i) = -rowsum;
    }
    m.components.resize(d);
    m.transition_jumps.assign(d, std::vector<JumpDistribution>(d));
    for (int i = 0; i < d; ++i) {
        int kind = static_cast<int>(rs.uniform() * 4.0);
        LevyComponent c;
        switch (kind) {
            case 0:  // negative-drift compound Poisson, exponential jobs
                c = {-0.5 - rs.uniform(), 0.0, 0.5 + rs.uniform(),
                     JumpDistribution::exponential(0.8 + rs.uniform())};
                break;
            case 1:  // Brownian with drift
                c = {-1.0 + 0.5 * rs.uniform(), 0.6 + 0.8 * rs.uniform(), 0.0,
                     JumpDistribution::zero()};
                break;
            case 2:  // BM plus jumps
                c = {-0.8 - 0.5 * rs.uniform(), 0.5 + 0.5 * rs.uniform(), 0.4 + 0.4 * rs.uniform(),
                     JumpDistribution::erlang(2, 1.2 + rs.uniform())};
                break;
            default:
                if (allow_subordinators) {  // driftless compound Poisson
                    c = {0.0, 0.0, 0.6 + rs.uniform(),
                         JumpDistribution::hyperexponential({0.4, 0.6},
                                                            {0.9 + rs.uniform(), 2.0 + rs.uniform()})};
                } else {
                    c = {-0.7 - rs.uniform(), 0.0, 0.5 + rs.uniform(),
                         JumpDistribution::exponential(1.0 + rs.uniform())};
                }
                break;
        }
        m.components[i] = c;
        if (transition_jumps_on)
            for (int j = 0; j < d; ++j)
                if (j != i && rs.uniform() < 0.35)
                    m.transition_jumps[i][j] = JumpDistribution::exponential(1.0 + rs.uniform());
    }
    m.capacity = 2.0 + 4.0 * rs.uniform();
    m.labels.clear();
    for (int i = 0; i < d; ++i) m.labels.push_back(std::to_string(i + 1));
    return m;
}

}  // namespace fixtures
