#pragma once

// Time-domain metrics: maps the beta-domain transforms to deterministic time
// points by the outer Euler inversion, sharing one TransientContext per
// contour node across all requested metrics and initial states. The workload
// CDF at a point additionally uses the inner inversion in the workload
// transform variable.

#include <map>
#include <set>
#include <string>

#include "mapq/inversion.hpp"
#include "mapq/loss_idle.hpp"
#include "mapq/transient_workload.hpp"

namespace mapq {

enum class Metric { Mean, Variance, PEmpty, PFull, Cdf, Idle, Lost };

inline std::string metric_name(Metric m) {
    switch (m) {
        case Metric::Mean: return "mean";
        case Metric::Variance: return "var";
        case Metric::PEmpty: return "p_empty";
        case Metric::PFull: return "p_full";
        case Metric::Cdf: return "cdf";
        case Metric::Idle: return "idle";
        case Metric::Lost: return "lost";
    }
    return "?";
}

struct MetricRequest {
    Metric metric;
    double y = 0.0;  // CDF evaluation point

    std::string name() const {
        if (metric == Metric::Cdf) return "cdf@" + std::to_string(y);
        return metric_name(metric);
    }
};

struct ReportRow {
    double t;
    double x;
    std::string state;
    std::string metric;
    double value;
    double err;
};

struct TransientReport {
    std::vector<ReportRow> rows;
    std::vector<std::string> warnings;  // probability-range violations, never clipped
};

/// Inner inversion of the workload CDF transform chi(x, a, beta)/a at the
/// point y, at a (possibly complex) outer node beta.
inline std::vector<cplx> cdf_at_beta(const TransientContext& ctx, double x, double y,
                                     const InversionConfig& inner_cfg) {
    const int dd = ctx.d();
    auto eval = [&](cplx a) {
        ComplexMatrix c = ctx.chi(x, a).chi_x;
        std::vector<cplx> v(dd);
        for (int i = 0; i < dd; ++i) v[i] = c.row(i).sum() / a;
        return v;
    };
    auto inv = invert_many(eval, dd, y, inner_cfg, /*conjugate_symmetric=*/false);
    std::vector<cplx> out(dd);
    for (int i = 0; i < dd; ++i) out[i] = inv[i].value;
    return out;
}

/// Workload CDF values P_{x,i}(V(T_beta) <= y) and the atom at K, at a real
/// killing rate. The CDF comes from the inner inversion; the atom from the
/// first-event system, cross-checkable against 1 - empty - integral(density).
struct CdfAndAtom {
    Eigen::VectorXd cdf;     // summed over terminal states, per initial state
    Eigen::MatrixXd atom_K;  // P(V = K, J = j)
};

inline CdfAndAtom cdf_and_full_prob(const OrderedModel& om, double x, double y, double beta,
                                    const InversionConfig& inner_cfg = {}) {
    if (!(y >= 0.0 && y < om.spec.capacity)) throw InputError("cdf point must lie in [0,K)");
    TransientContext ctx(om, beta);
    CdfAndAtom out;
    auto v = cdf_at_beta(ctx, x, y, inner_cfg);
    out.cdf.resize(ctx.d());
    for (int i = 0; i < ctx.d(); ++i) out.cdf(om.perm[i]) = expect_real(v[i], 1e-6, "cdf");
    ComplexMatrix a = om.to_user(ctx.full_prob(x));
    out.atom_K.resize(ctx.d(), ctx.d());
    for (int i = 0; i < ctx.d(); ++i)
        for (int j = 0; j < ctx.d(); ++j) out.atom_K(i, j) = expect_real(a(i, j), 1e-8, "atom");
    return out;
}

/// Computes the requested metrics at deterministic times for every initial
/// state, for a fixed initial workload x.
inline TransientReport invert_time_metrics(const OrderedModel& om, double x,
                                           const std::vector<double>& tgrid,
                                           const std::vector<MetricRequest>& metrics,
                                           const InversionConfig& cfg = {},
                                           const InversionConfig& inner_cfg = {}) {
    for (std::size_t k = 1; k < tgrid.size(); ++k)
        if (!(tgrid[k] > tgrid[k - 1])) throw InputError("time grid must be strictly increasing");
    if (tgrid.empty()) throw InputError("time grid must not be empty");

    const int dd = om.d();
    bool need_moments = false, need_empty = false, need_full = false, need_functionals = false;
    std::vector<double> cdf_points;
    for (const auto& mr : metrics) {
        need_moments |= mr.metric == Metric::Mean || mr.metric == Metric::Variance;
        need_empty |= mr.metric == Metric::PEmpty;
        need_full |= mr.metric == Metric::PFull;
        need_functionals |= mr.metric == Metric::Idle || mr.metric == Metric::Lost;
        if (mr.metric == Metric::Cdf) cdf_points.push_back(mr.y);
    }

    // Per-node transform values, flattened: for each initial state we stack
    // [m1, m2, p0, pK, idle, lost, cdf...] as requested.
    struct Slot {
        Metric metric;
        double y;
        int state;
    };
    std::vector<Slot> slots;
    for (int i = 0; i < dd; ++i) {
        if (need_moments) {
            slots.push_back({Metric::Mean, 0, i});
            slots.push_back({Metric::Variance, 0, i});  // carries E[V^2]
        }
        if (need_empty) slots.push_back({Metric::PEmpty, 0, i});
        if (need_full) slots.push_back({Metric::PFull, 0, i});
        if (need_functionals) {
            slots.push_back({Metric::Idle, 0, i});
            slots.push_back({Metric::Lost, 0, i});
        }
        for (double y : cdf_points) slots.push_back({Metric::Cdf, y, i});
    }

    TransientReport report;
    for (double t : tgrid) {
        auto eval = [&](cplx beta) {
            TransientContext ctx(om, beta);
            std::vector<cplx> out(slots.size(), 0.0);
            ComplexMatrix m1, m2, e0, fK;
            if (need_moments) {
                auto mm = ctx.moments(x);
                m1 = mm.m1;
                m2 = mm.m2;
            }
            if (need_empty) e0 = ctx.empty_prob(x);
            if (need_full) fK = ctx.full_prob(x);
            ComplexMatrix idle, lost;
            if (need_functionals) {
                LossIdleContext li(ctx);
                auto f = li.functionals(x);
                idle = f.idle;
                lost = f.lost;
            }
            std::map<double, std::vector<cplx>> cdfs;
            for (double y : cdf_points) cdfs[y] = cdf_at_beta(ctx, x, y, inner_cfg);
            for (std::size_t s = 0; s < slots.size(); ++s) {
                int iu = slots[s].state;           // user state index
                int ii = om.inv_perm[iu];          // internal index
                switch (slots[s].metric) {
                    case Metric::Mean: out[s] = m1.row(ii).sum() / beta; break;
                    case Metric::Variance: out[s] = m2.row(ii).sum() / beta; break;
                    case Metric::PEmpty: out[s] = e0.row(ii).sum() / beta; break;
                    case Metric::PFull: out[s] = fK.row(ii).sum() / beta; break;
                    case Metric::Idle: out[s] = idle.row(ii).sum() / beta; break;
                    case Metric::Lost: out[s] = lost.row(ii).sum() / beta; break;
                    case Metric::Cdf: out[s] = cdfs[slots[s].y][ii] / beta; break;
                }
            }
            return out;
        };
        auto inverted = invert_many(eval, slots.size(), t, cfg, /*conjugate_symmetric=*/true);

        // assemble rows; variance combines the two moment inversions
        for (int i = 0; i < dd; ++i) {
            double mean_v = 0.0, mean_err = 0.0;
            for (std::size_t s = 0; s < slots.size(); ++s) {
                if (slots[s].state != i) continue;
                const auto& iv = inverted[s];
                switch (slots[s].metric) {
                    case Metric::Mean:
                        mean_v = iv.value.real();
                        mean_err = iv.err_estimate;
                        break;
                    default: break;
                }
            }
            for (const auto& mr : metrics) {
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    if (slots[s].state != i) continue;
                    if (slots[s].metric != mr.metric) continue;
                    if (mr.metric == Metric::Cdf && slots[s].y != mr.y) continue;
                    const auto& iv = inverted[s];
                    ReportRow row;
                    row.t = t;
                    row.x = x;
                    row.state = om.spec.labels.empty() ? std::to_string(i + 1)
                                                       : om.spec.labels[om.inv_perm[i]];
                    row.metric = mr.name();
                    if (mr.metric == Metric::Variance) {
                        row.value = iv.value.real() - mean_v * mean_v;
                        row.err = iv.err_estimate + 2.0 * std::abs(mean_v) * mean_err;
                    } else if (mr.metric == Metric::Mean) {
                        row.value = mean_v;
                        row.err = mean_err;
                    } else {
                        row.value = iv.value.real();
                        row.err = iv.err_estimate;
                    }
                    bool is_prob = mr.metric == Metric::PEmpty || mr.metric == Metric::PFull ||
                                   mr.metric == Metric::Cdf;
                    if (is_prob && (row.value < -5e-4 || row.value > 1.0 + 5e-4))
                        report.warnings.push_back("probability out of range: " + row.metric + " = " +
                                                  std::to_string(row.value) + " at t = " +
                                                  std::to_string(t));
                    report.rows.push_back(row);
                    break;
                }
            }
        }
    }
    return report;
}

}  // namespace mapq
