#pragma once

// Pairwise collision barrier for planar agents and its first-step linear
// safety constraints.
//
// The barrier between agents i and j is the scaled 1-norm
//
//     h_ij = |dx| / r1 + |dy| / r2 - 1,    (dx, dy) = p_i - p_j,
//
// and the exponential condition h(x+) >= (1 - gamma) h(x) is imposed on the
// first predicted step for every scenario. The absolute values are frozen at
// the signs of (dx, dy) at the current time (see frozen_signs for the zero
// case), which makes the condition linear in u_0:
//
//     row . u_0 <= base + bd_row . d_0
//
// One row per unordered agent pair; the right-hand side differs per scenario
// only through d_0.

#include <cmath>
#include <utility>
#include <vector>

#include "pssmpc/scenario.hpp"
#include "pssmpc/system.hpp"

namespace pssmpc {

struct Norm1PairCbf {
    double r1{0.25};
    double r2{0.5};
    double gamma{0.2};

    void validate() const {
        if (!(r1 > 0.0) || !(r2 > 0.0)) throw DomainError("Norm1PairCbf: radii must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("Norm1PairCbf: gamma must lie in (0, 1)");
    }
};

[[nodiscard]] inline double cbf_value(const Point2& pi, const Point2& pj, const Norm1PairCbf& cbf) {
    return std::abs(pi.x() - pj.x()) / cbf.r1 + std::abs(pi.y() - pj.y()) / cbf.r2 - 1.0;
}

/// sgn with sgn(0) = +1.
[[nodiscard]] constexpr double frozen_sign(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// Frozen signs (s_x, s_y) of a relative position. A zero coordinate takes
/// the sign of the same coordinate of the relative position rotated by +90
/// degrees, (-dy, dx), so head-on pairs on either axis all turn the same way
/// round. The rule is symmetric under swapping the two agents. Coincident
/// agents fall back to (+1, +1).
[[nodiscard]] constexpr std::pair<double, double> frozen_signs(double dx, double dy) {
    const double sx = dx != 0.0 ? frozen_sign(dx) : frozen_sign(-dy);
    const double sy = dy != 0.0 ? frozen_sign(dy) : frozen_sign(dx);
    return {sx, sy};
}

/// Unordered pairs (i, j), i < j, in lexicographic order.
[[nodiscard]] inline std::vector<std::pair<int, int>> agent_pairs(int n_agents) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n_agents; ++i)
        for (int j = i + 1; j < n_agents; ++j) pairs.emplace_back(i, j);
    return pairs;
}

/// All pairwise barrier values of a fleet error state, in pair order.
[[nodiscard]] inline Vector pairwise_barriers(const Fleet& fleet, const Vector& x_err, const Norm1PairCbf& cbf) {
    const auto pairs = agent_pairs(fleet.n_agents());
    Vector h(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k)
        h(static_cast<Eigen::Index>(k)) =
            cbf_value(fleet.position(x_err, pairs[k].first), fleet.position(x_err, pairs[k].second), cbf);
    return h;
}

/// First-step linear constraint of one agent pair.
struct PairLinearization {
    Vector grad;    // gradient of the sign-frozen barrier w.r.t. the full state
    Vector row;     // coefficient row on u_0
    Vector bd_row;  // coefficient row on d_0 in the right-hand side
    double base{0.0};
    double h_now{0.0};

    /// Right-hand side for a particular first-step disturbance.
    [[nodiscard]] double rhs(const Vector& d0) const { return base + bd_row.dot(d0); }

    /// Sign-frozen barrier evaluated at an error state.
    [[nodiscard]] double frozen_value(const Vector& x_err, const Vector& targets) const {
        return grad.dot(x_err + targets) - 1.0;
    }
};

[[nodiscard]] inline PairLinearization linearize_pair(const Fleet& fleet, const Vector& x_err, int i, int j,
                                                      const Norm1PairCbf& cbf) {
    if (i == j) throw DegeneratePair("linearize_pair: agents must differ");
    const int na = fleet.n_agents();
    if (i < 0 || j < 0 || i >= na || j >= na) throw DomainError("linearize_pair: agent index out of range");
    const DisturbedLinearSystem& sys = fleet.system();
    detail::require_dims(x_err.size() == sys.n(), "linearize_pair: state has the wrong length");

    const Point2 pi = fleet.position(x_err, i);
    const Point2 pj = fleet.position(x_err, j);
    const Point2 delta = pi - pj;
    const auto [sign_x, sign_y] = frozen_signs(delta.x(), delta.y());
    const double sx = sign_x / cbf.r1;
    const double sy = sign_y / cbf.r2;

    PairLinearization lin;
    lin.grad = Vector::Zero(sys.n());
    lin.grad(4 * i) = sx;
    lin.grad(4 * i + 1) = sy;
    lin.grad(4 * j) = -sx;
    lin.grad(4 * j + 1) = -sy;
    lin.h_now = cbf_value(pi, pj, cbf);

    // h~(x+) = grad . (A x + B_u u + B_d d + offset + targets) - 1 >= (1 - gamma) h(x)
    lin.row = -(lin.grad.transpose() * sys.B_u).transpose();
    lin.bd_row = (lin.grad.transpose() * sys.B_d).transpose();
    double drift = lin.grad.dot(sys.A * x_err + fleet.target_offset());
    if (sys.offset.size() == sys.n()) drift += lin.grad.dot(sys.offset);
    lin.base = drift - 1.0 - (1.0 - cbf.gamma) * lin.h_now;
    return lin;
}

struct LinearSafetyBlock {
    std::vector<std::pair<int, int>> pairs;
    Matrix A_cbf;  // n_pairs x p, acts on u_0
    Matrix b;      // n_pairs x m, column i uses scenario i's first disturbance
    Vector h_now;
    int support_rank{0};
    bool unsafe_start{false};  // some current barrier value is negative

    [[nodiscard]] Eigen::Index n_pairs() const { return A_cbf.rows(); }
};

[[nodiscard]] inline int support_rank(const LinearSafetyBlock& block) { return numerical_rank(block.A_cbf); }

/// Builds every pair's first-step constraint under each scenario. A negative
/// current barrier sets `unsafe_start`; the rows are still assembled with the
/// same formula so the decay condition pushes the pair back towards safety.
[[nodiscard]] inline LinearSafetyBlock assemble_safety_constraints(const Fleet& fleet, const Vector& x_err,
                                                                   const ScenarioSet& scenarios,
                                                                   const Norm1PairCbf& cbf) {
    const DisturbedLinearSystem& sys = fleet.system();
    detail::require_dims(scenarios.d_dim() == sys.d_dim(),
                         "assemble_safety_constraints: scenario dimension does not match B_d");
    LinearSafetyBlock block;
    block.pairs = agent_pairs(fleet.n_agents());
    const auto n_pairs = static_cast<Eigen::Index>(block.pairs.size());
    block.A_cbf = Matrix(n_pairs, sys.p());
    block.b = Matrix(n_pairs, scenarios.count());
    block.h_now = Vector(n_pairs);
    for (Eigen::Index k = 0; k < n_pairs; ++k) {
        const auto [i, j] = block.pairs[static_cast<std::size_t>(k)];
        const PairLinearization lin = linearize_pair(fleet, x_err, i, j, cbf);
        block.A_cbf.row(k) = lin.row.transpose();
        block.h_now(k) = lin.h_now;
        for (int s = 0; s < scenarios.count(); ++s) block.b(k, s) = lin.rhs(scenarios.sample(s, 0));
    }
    block.unsafe_start = (block.h_now.array() < 0.0).any();
    block.support_rank = support_rank(block);
    return block;
}

}  // namespace pssmpc
