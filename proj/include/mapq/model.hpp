#pragma once

// Model description and the basic transform-domain matrices F(a) and
// Phi(a,b) of the free process.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mapq/levy.hpp"

namespace mapq {

using ComplexMatrix = Eigen::MatrixXcd;

struct ModelSpec {
    int d = 0;
    Eigen::MatrixXd Q;                                    // background generator
    std::vector<LevyComponent> components;                // per-state input
    std::vector<std::vector<JumpDistribution>> transition_jumps;  // B_ij, diagonal Zero
    double capacity = 0.0;                                // K
    std::vector<std::string> labels;                      // user-facing state names

    double exit_rate(int i) const { return -Q(i, i); }

    bool all_rational() const {
        for (const auto& c : components)
            if (!c.jumps.has_rational_lst()) return false;
        for (const auto& row : transition_jumps)
            for (const auto& b : row)
                if (!b.has_rational_lst()) return false;
        return true;
    }
};

/// A validated model with states permuted so non-subordinators come first.
/// All public outputs are mapped back to the user's ordering via `perm`.
struct OrderedModel {
    ModelSpec spec;              // internally ordered
    std::vector<int> perm;       // perm[internal] = user index
    std::vector<int> inv_perm;   // inv_perm[user] = internal index
    int d_minus = 0;             // count of non-subordinator states

    int d() const { return spec.d; }
    int d_plus() const { return spec.d - d_minus; }

    /// Re-permutes an internally ordered d x d matrix to user order.
    ComplexMatrix to_user(const ComplexMatrix& m) const {
        ComplexMatrix out(spec.d, spec.d);
        for (int i = 0; i < spec.d; ++i)
            for (int j = 0; j < spec.d; ++j) out(perm[i], perm[j]) = m(i, j);
        return out;
    }
};

/// Validates invariants and orders states (non-subordinators first). Error
/// messages carry the offending index using the user's labels.
inline OrderedModel validate(const ModelSpec& in) {
    std::vector<std::string> errors;
    if (in.d < 1) errors.push_back("model must have at least one state");
    if (!(in.capacity > 0.0)) errors.push_back("capacity: K must be strictly positive");
    if (in.Q.rows() != in.d || in.Q.cols() != in.d) errors.push_back("Q: dimension mismatch");
    if (static_cast<int>(in.components.size()) != in.d) errors.push_back("components: dimension mismatch");
    if (static_cast<int>(in.transition_jumps.size()) != in.d) errors.push_back("transition_jumps: dimension mismatch");
    if (!errors.empty()) throw InputError(errors.front());

    auto name = [&](int i) {
        return in.labels.size() == static_cast<std::size_t>(in.d) ? in.labels[i] : std::to_string(i + 1);
    };
    for (int i = 0; i < in.d; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < in.d; ++j) {
            rowsum += in.Q(i, j);
            if (i != j && in.Q(i, j) < 0.0)
                errors.push_back("negative rate: Q(" + name(i) + "," + name(j) + ") < 0");
        }
        if (std::abs(rowsum) > 1e-12 * std::max(1.0, in.Q.cwiseAbs().maxCoeff()))
            errors.push_back("row-sum: row " + name(i) + " of Q sums to " + std::to_string(rowsum));
        try {
            in.components[i].check();
        } catch (const InputError& e) {
            errors.push_back("state " + name(i) + ": " + e.what());
        }
        for (int j = 0; j < in.d; ++j) {
            if (i == j && !in.transition_jumps[i][j].is_zero())
                errors.push_back("diagonal transition jump must be zero at state " + name(i));
            if (i != j && in.Q(i, j) == 0.0 && !in.transition_jumps[i][j].is_zero())
                errors.push_back("transition jump given for zero-rate transition " + name(i) + "->" + name(j));
        }
    }
    if (!errors.empty()) {
        std::string all;
        for (const auto& e : errors) all += (all.empty() ? "" : "; ") + e;
        throw InputError(all);
    }

    OrderedModel om;
    om.perm.clear();
    std::vector<int> internal_order;
    for (int i = 0; i < in.d; ++i)
        if (!in.components[i].is_subordinator()) internal_order.push_back(i);
    om.d_minus = static_cast<int>(internal_order.size());
    for (int i = 0; i < in.d; ++i)
        if (in.components[i].is_subordinator()) internal_order.push_back(i);

    om.spec.d = in.d;
    om.spec.capacity = in.capacity;
    om.spec.Q.resize(in.d, in.d);
    om.spec.components.resize(in.d);
    om.spec.transition_jumps.assign(in.d, std::vector<JumpDistribution>(in.d));
    om.spec.labels.resize(in.d);
    om.perm.resize(in.d);
    om.inv_perm.resize(in.d);
    for (int i = 0; i < in.d; ++i) {
        int ui = internal_order[i];
        om.perm[i] = ui;
        om.inv_perm[ui] = i;
        om.spec.components[i] = in.components[ui];
        om.spec.labels[i] = in.labels.size() == static_cast<std::size_t>(in.d) ? in.labels[ui] : std::to_string(ui + 1);
    }
    for (int i = 0; i < in.d; ++i)
        for (int j = 0; j < in.d; ++j) {
            om.spec.Q(i, j) = in.Q(om.perm[i], om.perm[j]);
            om.spec.transition_jumps[i][j] = in.transition_jumps[om.perm[i]][om.perm[j]];
        }
    return om;
}

/// F(a): diagonal q_ii + phi_i(a), off-diagonal q_ij B_ij(a).
inline ComplexMatrix f_matrix(const ModelSpec& m, cplx a) {
    ComplexMatrix F(m.d, m.d);
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j)
            F(i, j) = (i == j) ? m.Q(i, i) + m.components[i].exponent(a)
                               : m.Q(i, j) * m.transition_jumps[i][j].lst(a);
    return F;
}

/// Phi(a,b) = b (b I - F(a))^{-1}, the transform of the free process at an
/// exponential time.
inline ComplexMatrix phi_matrix(const ModelSpec& m, cplx a, cplx b) {
    ComplexMatrix A = b * ComplexMatrix::Identity(m.d, m.d) - f_matrix(m, a);
    Eigen::FullPivLU<ComplexMatrix> lu(A);
    if (!lu.isInvertible()) throw NumericalError("Phi singular: beta coincides with an eigenvalue of F(alpha)");
    return b * lu.inverse();
}

}  // namespace mapq
