#pragma once

// Scenario MPC with first-step barrier constraints.
//
// For m disturbance paths D^i the predicted states over the horizon are
//
//     X^i = Phi x_t + Gamma U + Psi D^i + Omega        (X^i = [x_1; ...; x_N])
//
// and the summed scenario cost
//
//     J(U) = sum_i [ sum_{k<N} (x_k' Q x_k + u_k' R u_k) + eta x_N' Q_N x_N ]
//
// is a quadratic in U. It is passed to the QP solver as 1/2 U'HU + f'U with
//
//     H = sum_i Gamma' Qbar Gamma + m Rbar,   f = sum_i Gamma' Qbar (Phi x_t + Psi D^i + Omega),
//
// so that J(U) = 2 (1/2 U'HU + f'U) + const. Every pair's barrier row is
// stacked once per scenario on the first input block, and each input
// coordinate is boxed to [-a_max, a_max].

#include <chrono>
#include <cstdint>
#include <string_view>

#include "pssmpc/cbf.hpp"
#include "pssmpc/qp.hpp"
#include "pssmpc/scenario.hpp"
#include "pssmpc/system.hpp"

namespace pssmpc {

struct MpcConfig {
    int horizon{3};
    Matrix Q;
    Matrix R;
    Matrix Q_N;
    double eta{0.1};
    double a_max{4.0};
    double epsilon{0.05};
    /// Scenarios per step; 0 selects the smallest count allowed by the
    /// sample-size theorem for the current support rank.
    int m{0};
    DisturbanceKind disturbance{DisturbanceKind::Normal};
    QpSettings qp{};

    void validate(const DisturbedLinearSystem& sys) const {
        if (horizon < 1) throw DomainError("MpcConfig: horizon must be >= 1");
        if (m < 0) throw DomainError("MpcConfig: m must be >= 0");
        if (!(eta >= 0.0)) throw DomainError("MpcConfig: eta must be >= 0");
        if (!(a_max > 0.0)) throw DomainError("MpcConfig: a_max must be positive");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("MpcConfig: epsilon must lie in (0, 1)");
        const auto n = sys.n();
        const auto p = sys.p();
        detail::require_dims(Q.rows() == n && Q.cols() == n, "MpcConfig: Q must be n x n");
        detail::require_dims(Q_N.rows() == n && Q_N.cols() == n, "MpcConfig: Q_N must be n x n");
        detail::require_dims(R.rows() == p && R.cols() == p, "MpcConfig: R must be p x p");
        if (Eigen::LLT<Matrix>(0.5 * (R + R.transpose())).info() != Eigen::Success)
            throw DomainError("MpcConfig: R must be positive definite");
    }
};

/// Weights for a fleet: per-agent Q = q I4, R = r I2 and Q_N from the
/// per-agent Riccati equation, each replicated block-diagonally.
[[nodiscard]] inline MpcConfig fleet_mpc_config(const Fleet& fleet, double q_weight = 5.0, double r_weight = 2.0) {
    const DisturbedLinearSystem agent = build_double_integrator(fleet.spec().dt);
    const Matrix q = q_weight * Matrix::Identity(4, 4);
    const Matrix r = r_weight * Matrix::Identity(2, 2);
    const Matrix qn = solve_dare(agent.A, agent.B_u, q, r);
    MpcConfig cfg;
    cfg.Q = block_diagonal(q, fleet.n_agents());
    cfg.R = block_diagonal(r, fleet.n_agents());
    cfg.Q_N = block_diagonal(qn, fleet.n_agents());
    cfg.a_max = fleet.spec().a_max;
    return cfg;
}

/// Prediction maps X = Phi x0 + Gamma U + Psi D + Omega for X = [x_1; ...; x_N].
struct PredictionMaps {
    Matrix Phi;
    Matrix Gamma;
    Matrix Psi;
    Vector Omega;
};

[[nodiscard]] inline PredictionMaps prediction_maps(const DisturbedLinearSystem& sys, int horizon) {
    const auto n = sys.n(), p = sys.p(), dd = sys.d_dim();
    PredictionMaps maps{Matrix::Zero(horizon * n, n), Matrix::Zero(horizon * n, horizon * p),
                        Matrix::Zero(horizon * n, horizon * dd), Vector::Zero(horizon * n)};
    const Vector c = sys.offset.size() == n ? sys.offset : Vector::Zero(n);
    Matrix Ak = Matrix::Identity(n, n);
    for (int k = 0; k < horizon; ++k) {
        // Row block k is x_{k+1}.
        Ak = sys.A * Ak;
        maps.Phi.middleRows(k * n, n) = Ak;
        if (k == 0) {
            maps.Omega.segment(0, n) = c;
        } else {
            maps.Omega.segment(k * n, n) = sys.A * maps.Omega.segment((k - 1) * n, n) + c;
            maps.Gamma.block(k * n, 0, n, k * p) = sys.A * maps.Gamma.block((k - 1) * n, 0, n, k * p);
            maps.Psi.block(k * n, 0, n, k * dd) = sys.A * maps.Psi.block((k - 1) * n, 0, n, k * dd);
        }
        maps.Gamma.block(k * n, k * p, n, p) = sys.B_u;
        maps.Psi.block(k * n, k * dd, n, dd) = sys.B_d;
    }
    return maps;
}

/// A condensed scenario program together with what is needed to evaluate
/// the original summed cost.
struct CondensedMpc {
    QpProblem qp;
    PredictionMaps maps;
    Matrix Qbar;
    double constant{0.0};  // J(U) = U'HU + 2 f'U + constant

    [[nodiscard]] double cost(const Vector& U) const { return U.dot(qp.H * U) + 2.0 * qp.f.dot(U) + constant; }
};

/// Builds the QP for one MPC step. `safety` may be null (no barrier rows);
/// otherwise its rhs must carry one column per scenario.
[[nodiscard]] inline CondensedMpc condense(const DisturbedLinearSystem& sys, const Vector& x_t,
                                           const ScenarioSet& scenarios, const MpcConfig& cfg,
                                           const LinearSafetyBlock* safety) {
    cfg.validate(sys);
    const int N = cfg.horizon;
    const auto n = sys.n(), p = sys.p();
    detail::require_dims(x_t.size() == n, "condense: state has the wrong length");
    detail::require_dims(scenarios.horizon() == N && scenarios.d_dim() == sys.d_dim(),
                         "condense: scenario shape does not match horizon / disturbance dimension");
    const int m = scenarios.count();

    CondensedMpc out;
    out.maps = prediction_maps(sys, N);
    out.Qbar = Matrix::Zero(N * n, N * n);
    for (int k = 0; k + 1 < N; ++k) out.Qbar.block(k * n, k * n, n, n) = cfg.Q;
    out.Qbar.block((N - 1) * n, (N - 1) * n, n, n) = cfg.eta * cfg.Q_N;

    const Matrix QG = out.Qbar * out.maps.Gamma;
    const Matrix Rbar = block_diagonal(cfg.R, N);
    const Vector free_part = out.maps.Phi * x_t + out.maps.Omega;

    Vector f = Vector::Zero(N * p);
    double constant = 0.0;
    const double stage0 = x_t.dot(cfg.Q * x_t);
    for (int i = 0; i < m; ++i) {
        const Vector c_i = free_part + out.maps.Psi * scenarios.path(i);
        const Vector Qc = out.Qbar * c_i;
        f += out.maps.Gamma.transpose() * Qc;
        constant += c_i.dot(Qc) + stage0;
    }
    Matrix H = static_cast<double>(m) * (out.maps.Gamma.transpose() * QG + Rbar);
    out.qp.H = 0.5 * (H + H.transpose());
    out.qp.f = std::move(f);
    out.constant = constant;

    if (safety != nullptr && safety->n_pairs() > 0) {
        detail::require_dims(safety->A_cbf.cols() == p && safety->b.cols() == m,
                             "condense: safety block does not match the input / scenario dimensions");
        const auto np = safety->n_pairs();
        out.qp.G = Matrix::Zero(np * m, N * p);
        out.qp.g = Vector(np * m);
        for (int i = 0; i < m; ++i) {
            out.qp.G.block(i * np, 0, np, p) = safety->A_cbf;
            out.qp.g.segment(i * np, np) = safety->b.col(i);
        }
    } else {
        out.qp.G = Matrix(0, N * p);
        out.qp.g = Vector(0);
    }
    out.qp.lb = Vector::Constant(N * p, -cfg.a_max);
    out.qp.ub = Vector::Constant(N * p, cfg.a_max);
    return out;
}

/// Direct evaluation of the summed scenario cost by forward simulation.
[[nodiscard]] inline double scenario_cost(const DisturbedLinearSystem& sys, const Vector& x_t,
                                          const ScenarioSet& scenarios, const MpcConfig& cfg, const Vector& U) {
    const auto p = sys.p();
    double total = 0.0;
    for (int i = 0; i < scenarios.count(); ++i) {
        const auto xs = predict(sys, x_t, U, scenarios.path(i));
        for (int k = 0; k < cfg.horizon; ++k) {
            const Vector u = U.segment(k * p, p);
            total += xs[static_cast<std::size_t>(k)].dot(cfg.Q * xs[static_cast<std::size_t>(k)]) + u.dot(cfg.R * u);
        }
        const Vector& xN = xs.back();
        total += cfg.eta * xN.dot(cfg.Q_N * xN);
    }
    return total;
}

enum class StepStatus { Optimal, Infeasible, SolverFailure };

[[nodiscard]] constexpr std::string_view to_string(StepStatus s) {
    switch (s) {
        case StepStatus::Optimal: return "Optimal";
        case StepStatus::Infeasible: return "Infeasible";
        case StepStatus::SolverFailure: return "SolverFailure";
    }
    return "Unknown";
}

struct MpcSolution {
    Vector U;
    Vector u0;
    double objective{0.0};  // summed scenario cost J(U)
    StepStatus status{StepStatus::SolverFailure};
    QpStatus qp_status{QpStatus::MaxIterations};
    double primal_residual{0.0};
    double dual_residual{0.0};
    double max_row_violation{0.0};  // worst G U - g over the stacked rows
    int iterations{0};
    double wall_time_ms{0.0};
};

[[nodiscard]] inline MpcSolution solve_condensed(const CondensedMpc& prob, const QpSettings& settings) {
    const QpSolution qs = qp_solve(prob.qp, settings);
    MpcSolution sol;
    sol.U = qs.u_star;
    sol.qp_status = qs.status;
    sol.primal_residual = qs.primal_residual;
    sol.dual_residual = qs.dual_residual;
    sol.iterations = qs.iterations;
    sol.wall_time_ms = qs.solve_time_ms;
    sol.objective = prob.cost(qs.u_star);
    sol.max_row_violation = prob.qp.G.rows() > 0 ? (prob.qp.G * qs.u_star - prob.qp.g).maxCoeff() : 0.0;
    switch (qs.status) {
        case QpStatus::Optimal: sol.status = StepStatus::Optimal; break;
        case QpStatus::Infeasible: sol.status = StepStatus::Infeasible; break;
        case QpStatus::MaxIterations: sol.status = StepStatus::SolverFailure; break;
    }
    return sol;
}

struct StepResult {
    Vector u0;  // zero unless status is Optimal
    MpcSolution solution;
    LinearSafetyBlock safety;
    int m_used{0};
    long long m_required{0};
    bool sample_shortfall{false};  // configured m below the theorem requirement
};

/// One pass of the controller loop at state x_t (error coordinates):
/// linearize the pairwise barriers, take the support rank, fix the scenario
/// count, draw fresh scenarios from `scenario_seed`, condense and solve. An
/// infeasible program is reported through the status, never relaxed.
[[nodiscard]] inline StepResult controller_step(const Vector& x_t, const Fleet& fleet, const MpcConfig& cfg,
                                                const Norm1PairCbf& cbf, std::uint64_t scenario_seed) {
    require_finite(x_t, "controller_step: state");
    cbf.validate();
    const DisturbedLinearSystem& sys = fleet.system();
    const auto dd = static_cast<int>(sys.d_dim());

    StepResult res;
    const LinearSafetyBlock rows_only =
        assemble_safety_constraints(fleet, x_t, ScenarioSet(1, cfg.horizon, dd), cbf);
    const int rho = std::max(1, rows_only.support_rank);
    res.m_required = sample_size_theorem(rho, cfg.epsilon);
    res.m_used = cfg.m > 0 ? cfg.m : static_cast<int>(res.m_required);
    res.sample_shortfall = res.m_used < res.m_required;

    const ScenarioSet scenarios = draw_scenarios(scenario_seed, res.m_used, cfg.horizon, dd, cfg.disturbance);
    res.safety = assemble_safety_constraints(fleet, x_t, scenarios, cbf);
    const CondensedMpc prob = condense(sys, x_t, scenarios, cfg, &res.safety);
    res.solution = solve_condensed(prob, cfg.qp);
    res.solution.u0 = res.solution.U.head(sys.p());
    res.u0 = res.solution.status == StepStatus::Optimal ? res.solution.u0 : Vector::Zero(sys.p());
    return res;
}

}  // namespace pssmpc
