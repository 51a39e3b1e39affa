#pragma once

// Monte Carlo engine: the independent oracle for every analytic quantity.
// Paths are simulated exactly (event-driven) when no state has a Brownian
// part; states with sigma > 0 are stepped by Euler-Maruyama with per-step
// truncation at the boundaries and Brownian-bridge barrier corrections in
// the free-process exit races. Each path owns a counter-derived RNG stream,
// so results are bitwise reproducible for a given seed regardless of the
// number of worker threads. Advancing in slices is distributionally exact
// because the event clocks are exponential and may be redrawn at any
// stopping boundary.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <thread>
#include <vector>

#include "mapq/model.hpp"

namespace mapq {

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ seeded via splitmix64 from (seed, stream).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream, bool mirror = false) : mirror_(mirror) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        for (auto& w : s_) w = splitmix64(x);
    }

    std::uint64_t next_bits() {
        auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0,1); antithetic streams see 1-u.
    double uniform() {
        double u = raw_uniform();
        return mirror_ ? 1.0 - u : u;
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Marsaglia polar; antithetic streams flip the sign.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * raw_uniform() - 1.0;
            v = 2.0 * raw_uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f * (mirror_ ? -1.0 : 1.0);
        have_spare_ = true;
        return u * f * (mirror_ ? -1.0 : 1.0);
    }

    double sample(const JumpDistribution& b) {
        switch (b.kind()) {
            case JumpDistribution::Kind::Zero: return 0.0;
            case JumpDistribution::Kind::Exponential: return exponential(b.rates()[0]);
            case JumpDistribution::Kind::Erlang: {
                double acc = 0.0;
                for (int i = 0; i < b.shape(); ++i) acc += exponential(b.rates()[0]);
                return acc;
            }
            case JumpDistribution::Kind::HyperExponential: {
                double u = uniform(), acc = 0.0;
                for (std::size_t m = 0; m < b.weights().size(); ++m) {
                    acc += b.weights()[m];
                    if (u <= acc || m + 1 == b.weights().size()) return exponential(b.rates()[m]);
                }
                return 0.0;
            }
            case JumpDistribution::Kind::Deterministic: return b.rates()[0];
        }
        return 0.0;
    }

private:
    double raw_uniform() { return (next_bits() >> 11) * 0x1.0p-53; }

    std::uint64_t s_[4];
    bool mirror_ = false;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rng

struct SimConfig {
    long paths = 100000;
    double dt = 1e-3;  // Euler-Maruyama step for Brownian states
    std::uint64_t seed = 1;
    bool antithetic = false;
    int chunks = 64;  // fixed chunk count keeps reductions deterministic

    void check(const ModelSpec& m) const {
        if (paths < 1) throw InputError("paths must be >= 1");
        bool brownian = false;
        for (const auto& c : m.components) brownian |= c.sigma > 0.0;
        if (brownian && dt > 1e-2) throw InputError("dt too coarse for Brownian states (max 1e-2)");
    }
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

namespace detail_sim {

struct Accum {
    double n = 0.0, s1 = 0.0, s2 = 0.0;
    void add(double v) {
        n += 1.0;
        s1 += v;
        s2 += v * v;
    }
    void merge(const Accum& o) {
        n += o.n;
        s1 += o.s1;
        s2 += o.s2;
    }
    Estimate estimate() const {
        Estimate e;
        if (n < 1.0) return e;
        e.mean = s1 / n;
        double var = std::max(0.0, s2 / n - e.mean * e.mean);
        e.se = n > 1.0 ? std::sqrt(var / (n - 1.0)) : 0.0;
        return e;
    }
};

/// Accumulator up to fourth moments, for variance estimates with their own
/// standard errors.
struct MomentAccum {
    double n = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    void add(double v) {
        n += 1;
        double v2 = v * v;
        s1 += v;
        s2 += v2;
        s3 += v2 * v;
        s4 += v2 * v2;
    }
    void merge(const MomentAccum& o) {
        n += o.n;
        s1 += o.s1;
        s2 += o.s2;
        s3 += o.s3;
        s4 += o.s4;
    }
    Estimate mean_est() const {
        Estimate e;
        if (n < 2) return e;
        e.mean = s1 / n;
        e.se = std::sqrt(std::max(0.0, s2 / n - e.mean * e.mean) / (n - 1));
        return e;
    }
    Estimate var_est() const {
        Estimate e;
        if (n < 2) return e;
        double m = s1 / n;
        double m2 = std::max(0.0, s2 / n - m * m);
        double m4 = s4 / n - 4 * m * s3 / n + 6 * m * m * s2 / n - 3 * m * m * m * m;
        e.mean = m2;
        e.se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
        return e;
    }
    Estimate second_moment_est() const {
        Estimate e;
        if (n < 2) return e;
        e.mean = s2 / n;
        e.se = std::sqrt(std::max(0.0, s4 / n - e.mean * e.mean) / n);
        return e;
    }
};

template <class Body>
void parallel_chunks(long paths, int chunks, Body&& body) {
    int nthreads = std::max(1u, std::thread::hardware_concurrency());
    chunks = std::max(chunks, 1);
    auto worker = [&](int tid) {
        for (int c = tid; c < chunks; c += nthreads) {
            long lo = paths * c / chunks, hi = paths * (c + 1) / chunks;
            body(c, lo, hi);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker, t);
    worker(0);
    for (auto& th : pool) th.join();
}

inline int pick_transition(const ModelSpec& m, int from, double u01) {
    double u = u01 * m.exit_rate(from);
    double acc = 0.0;
    int to = -1;
    for (int k = 0; k < m.d; ++k) {
        if (k == from || m.Q(from, k) <= 0.0) continue;
        acc += m.Q(from, k);
        to = k;
        if (u <= acc) break;
    }
    return to;
}

}  // namespace detail_sim

/// One doubly-reflected path. advance(span) evolves over a time slice; event
/// clocks are redrawn per slice (exact for exponential clocks). Tracks idle
/// time at the lower boundary and work lost to truncation at the upper one.
class ReflectedWalker {
public:
    ReflectedWalker(const ModelSpec& m, double x, int i, rng::Stream& rs, double dt)
        : m_(&m), rs_(&rs), dt_(dt), x0_(x), V_(x), state_(i) {
        exact_ = true;
        for (const auto& c : m.components) exact_ &= c.sigma == 0.0;
    }

    double V() const { return V_; }
    int state() const { return state_; }
    double idle() const { return idle_; }
    double lost() const { return lost_; }

    /// True when the current state pins the workload at an exact boundary
    /// atom (no Brownian part and the drift holds it there).
    bool at_exact_zero() const {
        const auto& c = m_->components[state_];
        return V_ == 0.0 && c.sigma == 0.0 && c.drift <= 0.0;
    }
    bool at_exact_full() const {
        const auto& c = m_->components[state_];
        return V_ == m_->capacity && c.sigma == 0.0 && c.drift >= 0.0;
    }

    void advance(double span) {
        double remaining = span;
        while (remaining > 1e-15) {
            const auto& c = m_->components[state_];
            double nj = c.jump_rate > 0.0 ? rs_->exponential(c.jump_rate) : 1e300;
            double ntr = m_->exit_rate(state_) > 0.0 ? rs_->exponential(m_->exit_rate(state_)) : 1e300;
            double seg = std::min({remaining, nj, ntr});
            drift_segment(seg);
            remaining -= seg;
            if (remaining <= 1e-15) break;
            if (nj <= ntr)
                apply_jump(rs_->sample(c.jumps));
            else {
                int to = detail_sim::pick_transition(*m_, state_, rs_->uniform());
                apply_jump(rs_->sample(m_->transition_jumps[state_][to]));
                state_ = to;
            }
            if (exact_) check_conservation();
        }
    }

private:
    void check_conservation() const {
        double resid = std::abs(x0_ + Y_ + u_minus_ - u_plus_ - V_);
        if (resid > 1e-9 * (1.0 + std::abs(Y_) + u_minus_ + u_plus_))
            throw NumericalError("path conservation violated: x + Y + U- - U+ != V");
    }

    void apply_jump(double size) {
        Y_ += size;
        double over = V_ + size - m_->capacity;
        if (over > 0.0) {
            lost_ += over;
            u_plus_ += over;
            V_ = m_->capacity;
        } else {
            V_ += size;
        }
    }

    void drift_segment(double seg) {
        const auto& c = m_->components[state_];
        if (c.sigma > 0.0) {
            // Reflect by folding into [0, 2K] instead of truncating: the
            // boundary error drops from O(sqrt(dt)) to O(dt), which the
            // dt-halving guard then verifies.
            const double twoK = 2.0 * m_->capacity;
            double done = 0.0;
            while (done < seg - 1e-15) {
                double step = std::min(dt_, seg - done);
                V_ += c.drift * step + c.sigma * std::sqrt(step) * rs_->normal();
                V_ = std::fmod(V_, twoK);
                if (V_ < 0.0) V_ += twoK;
                if (V_ > m_->capacity) V_ = twoK - V_;
                done += step;
            }
        } else if (c.drift < 0.0) {
            Y_ += c.drift * seg;
            double hit = V_ / (-c.drift);
            if (hit >= seg) {
                V_ += c.drift * seg;
            } else {
                V_ = 0.0;
                idle_ += seg - hit;
                u_minus_ += (-c.drift) * (seg - hit);
            }
        } else if (c.drift > 0.0) {
            Y_ += c.drift * seg;
            double hit = (m_->capacity - V_) / c.drift;
            if (hit >= seg) {
                V_ += c.drift * seg;
            } else {
                V_ = m_->capacity;
                u_plus_ += c.drift * (seg - hit);
            }
        } else if (V_ == 0.0) {
            idle_ += seg;
        }
    }

    const ModelSpec* m_;
    rng::Stream* rs_;
    double dt_;
    double x0_;
    double V_;
    int state_;
    bool exact_ = false;
    double Y_ = 0.0;        // free increment
    double u_minus_ = 0.0;  // lower regulator
    double u_plus_ = 0.0;   // upper regulator
    double idle_ = 0.0;
    double lost_ = 0.0;
};

// ---------------------------------------------------------------------------
// Reflected process metrics on a deterministic time grid.

struct GridEstimates {
    std::vector<double> t;
    std::vector<Estimate> mean, variance, p_empty, p_full, idle, lost;
};

inline GridEstimates simulate_reflected_grid(const ModelSpec& m, double x, int i0,
                                             const std::vector<double>& tgrid, const SimConfig& cfg) {
    cfg.check(m);
    for (std::size_t k = 1; k < tgrid.size(); ++k)
        if (!(tgrid[k] > tgrid[k - 1])) throw InputError("time grid must be strictly increasing");
    const std::size_t nt = tgrid.size();

    std::vector<std::vector<detail_sim::MomentAccum>> vacc(cfg.chunks,
                                                           std::vector<detail_sim::MomentAccum>(nt));
    std::vector<std::vector<detail_sim::Accum>> eacc(cfg.chunks, std::vector<detail_sim::Accum>(nt));
    std::vector<std::vector<detail_sim::Accum>> facc(cfg.chunks, std::vector<detail_sim::Accum>(nt));
    std::vector<std::vector<detail_sim::Accum>> iacc(cfg.chunks, std::vector<detail_sim::Accum>(nt));
    std::vector<std::vector<detail_sim::Accum>> lacc(cfg.chunks, std::vector<detail_sim::Accum>(nt));

    detail_sim::parallel_chunks(cfg.paths, cfg.chunks, [&](int chunk, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            std::uint64_t stream = cfg.antithetic ? (std::uint64_t)(p / 2) : (std::uint64_t)p;
            rng::Stream rs(cfg.seed, stream, cfg.antithetic && (p & 1));
            ReflectedWalker w(m, x, i0, rs, cfg.dt);
            double now = 0.0;
            for (std::size_t k = 0; k < nt; ++k) {
                w.advance(tgrid[k] - now);
                now = tgrid[k];
                vacc[chunk][k].add(w.V());
                eacc[chunk][k].add(w.at_exact_zero() ? 1.0 : 0.0);
                facc[chunk][k].add(w.at_exact_full() ? 1.0 : 0.0);
                iacc[chunk][k].add(w.idle());
                lacc[chunk][k].add(w.lost());
            }
        }
    });

    GridEstimates out;
    out.t = tgrid;
    out.mean.resize(nt);
    out.variance.resize(nt);
    out.p_empty.resize(nt);
    out.p_full.resize(nt);
    out.idle.resize(nt);
    out.lost.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        detail_sim::MomentAccum va;
        detail_sim::Accum ea, fa, ia, la;
        for (int c = 0; c < cfg.chunks; ++c) {
            va.merge(vacc[c][k]);
            ea.merge(eacc[c][k]);
            fa.merge(facc[c][k]);
            ia.merge(iacc[c][k]);
            la.merge(lacc[c][k]);
        }
        out.mean[k] = va.mean_est();
        out.variance[k] = va.var_est();
        out.p_empty[k] = ea.estimate();
        out.p_full[k] = fa.estimate();
        out.idle[k] = ia.estimate();
        out.lost[k] = la.estimate();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reflected process at an exponential killing time.

struct KilledEstimates {
    std::vector<Estimate> lst;  // E[e^{-a V(T)}; J(T)=j], flattened per (alpha, j)
    std::vector<double> alphas;
    int d = 0;
    Estimate mean, second_moment, p_empty, p_full, idle, lost;

    const Estimate& lst_at(std::size_t alpha_idx, int j) const { return lst[alpha_idx * d + j]; }
};

inline KilledEstimates simulate_killed(const ModelSpec& m, double x, int i0, double beta,
                                       const std::vector<double>& alphas, const SimConfig& cfg) {
    cfg.check(m);
    const int dd = m.d;
    const std::size_t na = alphas.size();

    struct ChunkAcc {
        std::vector<detail_sim::Accum> lst;
        detail_sim::MomentAccum v;
        detail_sim::Accum e0, eK, idle, lost;
    };
    std::vector<ChunkAcc> acc(cfg.chunks);
    for (auto& a : acc) a.lst.resize(na * dd);

    detail_sim::parallel_chunks(cfg.paths, cfg.chunks, [&](int chunk, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            std::uint64_t stream = cfg.antithetic ? (std::uint64_t)(p / 2) : (std::uint64_t)p;
            rng::Stream rs(cfg.seed, stream, cfg.antithetic && (p & 1));
            double T = rs.exponential(beta);
            ReflectedWalker w(m, x, i0, rs, cfg.dt);
            w.advance(T);
            auto& a = acc[chunk];
            for (std::size_t ai = 0; ai < na; ++ai)
                for (int j = 0; j < dd; ++j)
                    a.lst[ai * dd + j].add(j == w.state() ? std::exp(-alphas[ai] * w.V()) : 0.0);
            a.v.add(w.V());
            a.e0.add(w.at_exact_zero() ? 1.0 : 0.0);
            a.eK.add(w.at_exact_full() ? 1.0 : 0.0);
            a.idle.add(w.idle());
            a.lost.add(w.lost());
        }
    });

    KilledEstimates out;
    out.alphas = alphas;
    out.d = dd;
    out.lst.resize(na * dd);
    detail_sim::MomentAccum v;
    detail_sim::Accum e0, eK, idle, lost;
    std::vector<detail_sim::Accum> lacc(na * dd);
    for (const auto& a : acc) {
        for (std::size_t idx = 0; idx < na * (std::size_t)dd; ++idx) lacc[idx].merge(a.lst[idx]);
        v.merge(a.v);
        e0.merge(a.e0);
        eK.merge(a.eK);
        idle.merge(a.idle);
        lost.merge(a.lost);
    }
    for (std::size_t idx = 0; idx < na * (std::size_t)dd; ++idx) out.lst[idx] = lacc[idx].estimate();
    out.mean = v.mean_est();
    out.second_moment = v.second_moment_est();
    out.p_empty = e0.estimate();
    out.p_full = eK.estimate();
    out.idle = idle.estimate();
    out.lost = lost.estimate();
    return out;
}

// ---------------------------------------------------------------------------
// Free process: transform at killing and the two-sided exit race.

struct FreeLstEstimates {
    std::vector<Estimate> by_state;  // E[e^{-a Y(T)}; J(T)=j]
};

inline FreeLstEstimates simulate_free_lst(const ModelSpec& m, int i0, double alpha, double beta,
                                          const SimConfig& cfg) {
    cfg.check(m);
    const int dd = m.d;
    std::vector<std::vector<detail_sim::Accum>> acc(cfg.chunks, std::vector<detail_sim::Accum>(dd));
    detail_sim::parallel_chunks(cfg.paths, cfg.chunks, [&](int chunk, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            rng::Stream rs(cfg.seed, (std::uint64_t)p);
            double T = rs.exponential(beta);
            double Y = 0.0;
            int st = i0;
            double left = T;
            while (left > 1e-15) {
                const auto& c = m.components[st];
                double nj = c.jump_rate > 0 ? rs.exponential(c.jump_rate) : 1e300;
                double ntr = m.exit_rate(st) > 0 ? rs.exponential(m.exit_rate(st)) : 1e300;
                double seg = std::min({left, nj, ntr});
                if (c.sigma > 0.0) {
                    double done = 0.0;
                    while (done < seg - 1e-15) {
                        double step = std::min(cfg.dt, seg - done);
                        Y += c.drift * step + c.sigma * std::sqrt(step) * rs.normal();
                        done += step;
                    }
                } else {
                    Y += c.drift * seg;
                }
                left -= seg;
                if (left <= 1e-15) break;
                if (nj <= ntr) {
                    Y += rs.sample(c.jumps);
                } else {
                    int to = detail_sim::pick_transition(m, st, rs.uniform());
                    Y += rs.sample(m.transition_jumps[st][to]);
                    st = to;
                }
            }
            for (int j = 0; j < dd; ++j) acc[chunk][j].add(j == st ? std::exp(-alpha * Y) : 0.0);
        }
    });
    FreeLstEstimates out;
    out.by_state.resize(dd);
    for (int j = 0; j < dd; ++j) {
        detail_sim::Accum a;
        for (int c = 0; c < cfg.chunks; ++c) a.merge(acc[c][j]);
        out.by_state[j] = a.estimate();
    }
    return out;
}

struct ExitEstimates {
    std::vector<Estimate> delta_minus;  // P(sigma first, J(sigma) = j)
    std::vector<Estimate> delta_plus;   // P(tau first, J(tau) = j)
    std::vector<Estimate> overshoot_lst;  // E[e^{-a overshoot}; tau first, J = j]
    std::vector<Estimate> kill_lst;       // E[e^{-a Y(T)}; killed first, J = j]
    std::vector<double> alphas;
    int d = 0;

    const Estimate& overshoot_at(std::size_t alpha_idx, int j) const {
        return overshoot_lst[alpha_idx * d + j];
    }
    const Estimate& kill_at(std::size_t alpha_idx, int j) const { return kill_lst[alpha_idx * d + j]; }
};

/// Race among sigma(u-), tau(u+) and the killing clock on the free process.
inline ExitEstimates simulate_two_sided_exit(const ModelSpec& m, int i0, double u_minus,
                                             double u_plus, double beta,
                                             const std::vector<double>& alphas, const SimConfig& cfg) {
    cfg.check(m);
    const int dd = m.d;
    const std::size_t na = alphas.size();
    struct ChunkAcc {
        std::vector<detail_sim::Accum> dm, dp, ov, kl;
    };
    std::vector<ChunkAcc> acc(cfg.chunks);
    for (auto& a : acc) {
        a.dm.resize(dd);
        a.dp.resize(dd);
        a.ov.resize(na * dd);
        a.kl.resize(na * dd);
    }

    detail_sim::parallel_chunks(cfg.paths, cfg.chunks, [&](int chunk, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            rng::Stream rs(cfg.seed, (std::uint64_t)p);
            double T = rs.exponential(beta);
            double Y = 0.0;
            int st = i0;
            double left = T;
            int outcome = 0;  // 0 kill, -1 lower, +1 upper
            double overshoot = 0.0;
            while (true) {
                const auto& c = m.components[st];
                double nj = c.jump_rate > 0 ? rs.exponential(c.jump_rate) : 1e300;
                double ntr = m.exit_rate(st) > 0 ? rs.exponential(m.exit_rate(st)) : 1e300;
                double seg = std::min({left, nj, ntr});
                bool exited = false;

                if (c.sigma > 0.0) {
                    double done = 0.0;
                    while (done < seg - 1e-15) {
                        double step = std::min(cfg.dt, seg - done);
                        double Y0 = Y;
                        Y += c.drift * step + c.sigma * std::sqrt(step) * rs.normal();
                        done += step;
                        if (Y < -u_minus) {
                            outcome = -1;
                            exited = true;
                        } else if (Y > u_plus) {
                            outcome = +1;
                            overshoot = 0.0;  // diffusion crossings creep
                            exited = true;
                        } else {
                            // Brownian-bridge crossing probabilities per step
                            double s2 = c.sigma * c.sigma * step;
                            double plo = std::exp(-2.0 * (Y0 + u_minus) * (Y + u_minus) / s2);
                            double phi = std::exp(-2.0 * (u_plus - Y0) * (u_plus - Y) / s2);
                            if (rs.uniform() < plo) {
                                outcome = -1;
                                exited = true;
                            } else if (rs.uniform() < phi) {
                                outcome = +1;
                                overshoot = 0.0;
                                exited = true;
                            }
                        }
                        if (exited) break;
                    }
                } else if (c.drift < 0.0) {
                    double hit = (-u_minus - Y) / c.drift;  // >= 0 since Y >= -u_minus
                    if (hit < seg) {
                        outcome = -1;
                        exited = true;
                    } else {
                        Y += c.drift * seg;
                    }
                } else if (c.drift > 0.0) {
                    double hit = (u_plus - Y) / c.drift;
                    if (hit < seg) {
                        outcome = +1;
                        overshoot = 0.0;
                        exited = true;
                    } else {
                        Y += c.drift * seg;
                    }
                }
                if (exited) break;

                left -= seg;
                if (left <= 1e-15) {
                    outcome = 0;
                    break;
                }
                double jump;
                if (nj <= ntr) {
                    jump = rs.sample(c.jumps);
                } else {
                    int to = detail_sim::pick_transition(m, st, rs.uniform());
                    jump = rs.sample(m.transition_jumps[st][to]);
                    st = to;
                }
                Y += jump;
                if (Y > u_plus) {
                    outcome = +1;
                    overshoot = Y - u_plus;
                    break;
                }
            }

            auto& a = acc[chunk];
            for (int j = 0; j < dd; ++j) {
                a.dm[j].add(outcome == -1 && st == j ? 1.0 : 0.0);
                a.dp[j].add(outcome == +1 && st == j ? 1.0 : 0.0);
                for (std::size_t ai = 0; ai < na; ++ai) {
                    a.ov[ai * dd + j].add(outcome == +1 && st == j ? std::exp(-alphas[ai] * overshoot)
                                                                   : 0.0);
                    a.kl[ai * dd + j].add(outcome == 0 && st == j ? std::exp(-alphas[ai] * Y) : 0.0);
                }
            }
        }
    });

    ExitEstimates out;
    out.alphas = alphas;
    out.d = dd;
    out.delta_minus.resize(dd);
    out.delta_plus.resize(dd);
    out.overshoot_lst.resize(na * dd);
    out.kill_lst.resize(na * dd);
    for (int j = 0; j < dd; ++j) {
        detail_sim::Accum am, ap;
        for (int c = 0; c < cfg.chunks; ++c) {
            am.merge(acc[c].dm[j]);
            ap.merge(acc[c].dp[j]);
        }
        out.delta_minus[j] = am.estimate();
        out.delta_plus[j] = ap.estimate();
    }
    for (std::size_t idx = 0; idx < na * (std::size_t)dd; ++idx) {
        detail_sim::Accum a, k;
        for (int c = 0; c < cfg.chunks; ++c) {
            a.merge(acc[c].ov[idx]);
            k.merge(acc[c].kl[idx]);
        }
        out.overshoot_lst[idx] = a.estimate();
        out.kill_lst[idx] = k.estimate();
    }
    return out;
}

}  // namespace mapq
