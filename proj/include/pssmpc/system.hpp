#pragma once

// Disturbance-affine discrete-time linear systems
//
//     x+ = A x + B_u u + B_d d + c
//
// with constant matrices and an optional constant offset c. Two concrete
// systems are provided: a fleet of planar double integrators written in
// tracking-error coordinates (state = position - target, velocity), and the
// scalar drift system used in the one-dimensional comparison.

#include <array>
#include <cmath>
#include <vector>

#include "pssmpc/linalg.hpp"

namespace pssmpc {

struct DisturbedLinearSystem {
    Matrix A;
    Matrix B_u;
    Matrix B_d;
    Vector offset;  // constant affine term, zero unless set

    [[nodiscard]] Eigen::Index n() const { return A.rows(); }
    [[nodiscard]] Eigen::Index p() const { return B_u.cols(); }
    [[nodiscard]] Eigen::Index d_dim() const { return B_d.cols(); }

    /// Checks the shape and finiteness invariants; throws on violation.
    void validate() const {
        const auto nn = A.rows();
        detail::require_dims(A.cols() == nn && B_u.rows() == nn && B_d.rows() == nn,
                             "DisturbedLinearSystem: inconsistent dimensions");
        detail::require_dims(offset.size() == 0 || offset.size() == nn,
                             "DisturbedLinearSystem: offset length must equal n");
        require_finite(A, "A");
        require_finite(B_u, "B_u");
        require_finite(B_d, "B_d");
        require_finite(offset, "offset");
    }

    [[nodiscard]] bool has_offset() const { return offset.size() == n() && !offset.isZero(0.0); }
};

/// x+ = A x + B_u u + B_d d (+ offset).
[[nodiscard]] inline Vector step(const DisturbedLinearSystem& sys, const Vector& x, const Vector& u,
                                 const Vector& d) {
    detail::require_dims(x.size() == sys.n() && u.size() == sys.p() && d.size() == sys.d_dim(),
                         "step: vector dimensions do not match the system");
    Vector next = sys.A * x + sys.B_u * u + sys.B_d * d;
    if (sys.offset.size() == sys.n()) next += sys.offset;
    return next;
}

/// States x_0..x_N under the stacked input sequence U = (u_0; ...; u_{N-1})
/// and disturbance path D = (d_0; ...; d_{N-1}).
[[nodiscard]] inline std::vector<Vector> predict(const DisturbedLinearSystem& sys, const Vector& x0,
                                                 const Vector& U, const Vector& D) {
    const auto p = sys.p();
    const auto dd = sys.d_dim();
    detail::require_dims(x0.size() == sys.n(), "predict: x0 has the wrong length");
    detail::require_dims(p > 0 && U.size() % p == 0, "predict: U length must be a multiple of p");
    const auto horizon = U.size() / p;
    detail::require_dims(D.size() == horizon * dd, "predict: D must have the same horizon as U");
    std::vector<Vector> xs;
    xs.reserve(static_cast<std::size_t>(horizon + 1));
    xs.push_back(x0);
    for (Eigen::Index k = 0; k < horizon; ++k)
        xs.push_back(step(sys, xs.back(), U.segment(k * p, p), D.segment(k * dd, dd)));
    return xs;
}

/// Per-agent planar double integrator with exact zero-order hold.
/// State [p_x, p_y, v_x, v_y], input [a_x, a_y]. B_d is left as 4 x 0.
[[nodiscard]] inline DisturbedLinearSystem build_double_integrator(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("build_double_integrator: dt must be positive");
    DisturbedLinearSystem sys;
    sys.A = Matrix::Identity(4, 4);
    sys.A(0, 2) = dt;
    sys.A(1, 3) = dt;
    sys.B_u = Matrix::Zero(4, 2);
    sys.B_u(0, 0) = 0.5 * dt * dt;
    sys.B_u(1, 1) = 0.5 * dt * dt;
    sys.B_u(2, 0) = dt;
    sys.B_u(3, 1) = dt;
    sys.B_d = Matrix::Zero(4, 0);
    sys.offset = Vector::Zero(4);
    return sys;
}

using Point2 = Eigen::Vector2d;

struct FleetSpec {
    double dt{0.1};
    std::vector<Point2> initial_positions;
    std::vector<Point2> target_positions;
    double bd_scale{5e-3};
    double a_max{4.0};
    /// One 2-d disturbance shared by every agent (alternating sign) when
    /// true, otherwise an independent 2-d disturbance per agent.
    bool shared_disturbance{true};

    [[nodiscard]] int n_agents() const { return static_cast<int>(initial_positions.size()); }

    void validate() const {
        if (initial_positions.size() != target_positions.size())
            throw DomainError("FleetSpec: initial and target position counts differ");
        if (n_agents() < 2) throw DomainError("FleetSpec: at least two agents are required");
        if (!(dt > 0.0)) throw DomainError("FleetSpec: dt must be positive");
        if (!(a_max > 0.0)) throw DomainError("FleetSpec: a_max must be positive");
        for (int i = 0; i < n_agents(); ++i)
            for (int j = i + 1; j < n_agents(); ++j)
                if (target_positions[static_cast<std::size_t>(i)] == target_positions[static_cast<std::size_t>(j)])
                    throw DomainError("FleetSpec: target positions must be pairwise distinct");
    }

    /// Four agents swapping positions pairwise across the origin.
    [[nodiscard]] static FleetSpec four_agent_swap() {
        FleetSpec spec;
        spec.initial_positions = {Point2(0, 1), Point2(0, -1), Point2(1, 0), Point2(-1, 0)};
        spec.target_positions = {Point2(0, -1), Point2(0, 1), Point2(-1, 0), Point2(1, 0)};
        return spec;
    }
};

/// Fleet dynamics in error coordinates e_j = [p_j - target_j; v_j], stacked
/// over agents. Positional state is recovered by adding the targets back.
class Fleet {
public:
    explicit Fleet(FleetSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        const int na = spec_.n_agents();
        const DisturbedLinearSystem agent = build_double_integrator(spec_.dt);
        sys_.A = block_diagonal(agent.A, na);
        sys_.B_u = block_diagonal(agent.B_u, na);
        const int d_dim = spec_.shared_disturbance ? 2 : 2 * na;
        sys_.B_d = Matrix::Zero(4 * na, d_dim);
        for (int j = 0; j < na; ++j) {
            // (-1)^(j+1) with agents numbered from 1: +, -, +, -, ...
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            const int col = spec_.shared_disturbance ? 0 : 2 * j;
            sys_.B_d.block(4 * j, col, 2, 2) = spec_.bd_scale * sign * Matrix::Identity(2, 2);
        }
        sys_.offset = Vector::Zero(4 * na);
        targets_ = Vector::Zero(4 * na);
        for (int j = 0; j < na; ++j) targets_.segment<2>(4 * j) = spec_.target_positions[static_cast<std::size_t>(j)];
    }

    [[nodiscard]] const FleetSpec& spec() const { return spec_; }
    [[nodiscard]] const DisturbedLinearSystem& system() const { return sys_; }
    [[nodiscard]] int n_agents() const { return spec_.n_agents(); }

    /// Target positions embedded in a full state vector (velocity slots zero).
    [[nodiscard]] const Vector& target_offset() const { return targets_; }

    [[nodiscard]] Vector initial_error_state() const {
        Vector x = Vector::Zero(4 * n_agents());
        for (int j = 0; j < n_agents(); ++j)
            x.segment<2>(4 * j) = spec_.initial_positions[static_cast<std::size_t>(j)] -
                                  spec_.target_positions[static_cast<std::size_t>(j)];
        return x;
    }

    [[nodiscard]] Point2 position(const Vector& error_state, int agent) const {
        return error_state.segment<2>(4 * agent) + targets_.segment<2>(4 * agent);
    }

    /// Absolute state: error state with the targets added to the position slots.
    [[nodiscard]] Vector absolute(const Vector& error_state) const { return error_state + targets_; }

private:
    FleetSpec spec_;
    DisturbedLinearSystem sys_;
    Vector targets_;
};

[[nodiscard]] inline Fleet build_fleet(const FleetSpec& spec) { return Fleet(spec); }

/// Scalar system x+ = x + 2 + u + sigma d.
[[nodiscard]] inline DisturbedLinearSystem build_1d_system(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("build_1d_system: sigma must be >= 0");
    DisturbedLinearSystem sys;
    sys.A = Matrix::Constant(1, 1, 1.0);
    sys.B_u = Matrix::Constant(1, 1, 1.0);
    sys.B_d = Matrix::Constant(1, 1, sigma);
    sys.offset = Vector::Constant(1, 2.0);
    return sys;
}

}  // namespace pssmpc
