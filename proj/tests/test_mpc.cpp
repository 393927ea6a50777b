#include <random>

#include <gtest/gtest.h>

#include "pssmpc/mpc.hpp"

using namespace pssmpc;

namespace {

struct SwapSetup {
    Fleet fleet{FleetSpec::four_agent_swap()};
    MpcConfig cfg;
    Norm1PairCbf cbf{0.25, 0.5, 0.2};

    SwapSetup() {
        cfg = fleet_mpc_config(fleet);
        cfg.horizon = 3;
        cfg.eta = 0.1;
        cfg.epsilon = 0.05;
        cfg.m = 119;
    }
};

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Vector v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

/// Error state with every agent displaced a little from its starting point.
Vector perturbed_start(const Fleet& fleet, std::mt19937_64& rng) {
    Vector x = fleet.initial_error_state();
    std::uniform_real_distribution<double> ud(-0.15, 0.15);
    for (int j = 0; j < 4; ++j) {
        x(4 * j) += ud(rng);
        x(4 * j + 1) += ud(rng);
        x(4 * j + 2) = ud(rng);
        x(4 * j + 3) = ud(rng);
    }
    return x;
}

void expect_feasible(const CondensedMpc& prob, const MpcSolution& sol) {
    ASSERT_EQ(sol.status, StepStatus::Optimal);
    if (prob.qp.G.rows() > 0) {
        EXPECT_LE((prob.qp.G * sol.U - prob.qp.g).maxCoeff(), 1e-5);
    }
    EXPECT_LE((prob.qp.lb - sol.U).maxCoeff(), 1e-5);
    EXPECT_LE((sol.U - prob.qp.ub).maxCoeff(), 1e-5);
}

}  // namespace

TEST(FleetWeights, TerminalWeightSolvesPerAgentRiccati) {
    const SwapSetup s;
    const DisturbedLinearSystem agent = build_double_integrator(0.1);
    const Matrix qn = s.cfg.Q_N.topLeftCorner(4, 4);
    EXPECT_LE(dare_residual(agent.A, agent.B_u, 5.0 * Matrix::Identity(4, 4), 2.0 * Matrix::Identity(2, 2), qn), 1e-8);
    EXPECT_EQ(s.cfg.Q_N.bottomRightCorner(4, 4), qn);
    EXPECT_TRUE(s.cfg.Q_N.block(0, 4, 4, 12).isZero(0.0));
    EXPECT_EQ(s.cfg.Q, 5.0 * Matrix::Identity(16, 16));
    EXPECT_EQ(s.cfg.R, 2.0 * Matrix::Identity(8, 8));
}

TEST(MpcConfigValidation, RejectsBadSettings) {
    const SwapSetup s;
    MpcConfig c = s.cfg;
    c.horizon = 0;
    EXPECT_THROW(c.validate(s.fleet.system()), DomainError);
    c = s.cfg;
    c.R = -c.R;
    EXPECT_THROW(c.validate(s.fleet.system()), DomainError);
    c = s.cfg;
    c.Q = Matrix::Identity(3, 3);
    EXPECT_THROW(c.validate(s.fleet.system()), DimensionMismatch);
}

TEST(Condense, OriginIsUnconstrainedOptimumWithoutDisturbance) {
    const SwapSetup s;
    const CondensedMpc prob = condense(s.fleet.system(), Vector::Zero(16), ScenarioSet(5, 3, 2), s.cfg, nullptr);
    EXPECT_TRUE(prob.qp.f.isZero(0.0));
    EXPECT_EQ(prob.qp.G.rows(), 0);
    const MpcSolution sol = solve_condensed(prob, s.cfg.qp);
    ASSERT_EQ(sol.status, StepStatus::Optimal);
    EXPECT_LE(sol.U.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Condense, IdenticalScenariosScaleTheProblem) {
    const SwapSetup s;
    std::mt19937_64 rng(1);
    const Vector x = perturbed_start(s.fleet, rng);
    const ScenarioSet one = draw_scenarios(3, 1, 3, 2);
    ScenarioSet many(6, 3, 2);
    for (int i = 0; i < 6; ++i) many.data().row(i) = one.data().row(0);
    const CondensedMpc a = condense(s.fleet.system(), x, one, s.cfg, nullptr);
    const CondensedMpc b = condense(s.fleet.system(), x, many, s.cfg, nullptr);
    EXPECT_LE((b.qp.H - 6.0 * a.qp.H).cwiseAbs().maxCoeff(), 1e-10 * a.qp.H.cwiseAbs().maxCoeff());
    EXPECT_LE((b.qp.f - 6.0 * a.qp.f).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + a.qp.f.cwiseAbs().maxCoeff()));
}

TEST(Condense, ObjectiveMatchesPredictOracleOnRandomTriples) {
    const SwapSetup s;
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = random_vector(rng, 16);
        const Vector U = random_vector(rng, 24, 2.0);
        const ScenarioSet scen = draw_scenarios(1000 + trial, 1 + trial % 12, 3, 2);
        const CondensedMpc prob = condense(s.fleet.system(), x, scen, s.cfg, nullptr);
        const double direct = scenario_cost(s.fleet.system(), x, scen, s.cfg, U);
        EXPECT_LE(std::abs(prob.cost(U) - direct), 1e-8 * std::abs(direct)) << "trial " << trial;
    }
}

TEST(Condense, ObjectiveMatchesPredictOracleWithAffineOffset) {
    const DisturbedLinearSystem sys = build_1d_system(0.9);
    MpcConfig cfg;
    cfg.horizon = 4;
    cfg.Q = Matrix::Constant(1, 1, 1.5);
    cfg.R = Matrix::Constant(1, 1, 0.3);
    cfg.Q_N = Matrix::Constant(1, 1, 2.0);
    cfg.a_max = 50.0;
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector x = random_vector(rng, 1);
        const Vector U = random_vector(rng, 4);
        const ScenarioSet scen = draw_scenarios(50 + trial, 3, 4, 1);
        const CondensedMpc prob = condense(sys, x, scen, cfg, nullptr);
        const double direct = scenario_cost(sys, x, scen, cfg, U);
        EXPECT_LE(std::abs(prob.cost(U) - direct), 1e-8 * std::abs(direct));
    }
}

TEST(Condense, SafetyRowsAreStackedPerScenario) {
    const SwapSetup s;
    const Vector x = s.fleet.initial_error_state();
    const ScenarioSet scen = draw_scenarios(4, 7, 3, 2);
    const LinearSafetyBlock block = assemble_safety_constraints(s.fleet, x, scen, s.cbf);
    const CondensedMpc prob = condense(s.fleet.system(), x, scen, s.cfg, &block);
    ASSERT_EQ(prob.qp.G.rows(), 42);
    for (int i = 0; i < 7; ++i) {
        EXPECT_EQ(prob.qp.G.block(6 * i, 0, 6, 8), block.A_cbf);
        EXPECT_TRUE(prob.qp.G.block(6 * i, 8, 6, 16).isZero(0.0));
        EXPECT_EQ(prob.qp.g.segment(6 * i, 6), block.b.col(i));
    }
    EXPECT_EQ(prob.qp.ub, Vector::Constant(24, 4.0));
}

TEST(Condense, RejectsMismatchedScenarioShape) {
    const SwapSetup s;
    EXPECT_THROW((void)condense(s.fleet.system(), Vector::Zero(16), ScenarioSet(3, 2, 2), s.cfg, nullptr),
                 DimensionMismatch);
    EXPECT_THROW((void)condense(s.fleet.system(), Vector::Zero(15), ScenarioSet(3, 3, 2), s.cfg, nullptr),
                 DimensionMismatch);
}

TEST(ControllerStep, EquilibriumGivesZeroInput) {
    SwapSetup s;
    s.cfg.disturbance = DisturbanceKind::Zero;
    const StepResult res = controller_step(Vector::Zero(16), s.fleet, s.cfg, s.cbf, 1);
    ASSERT_EQ(res.solution.status, StepStatus::Optimal);
    EXPECT_LE(res.u0.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ControllerStep, SwapFirstStepIsFeasible) {
    const SwapSetup s;
    const Vector x = s.fleet.initial_error_state();
    const StepResult res = controller_step(x, s.fleet, s.cfg, s.cbf, 2024);
    ASSERT_EQ(res.solution.status, StepStatus::Optimal);
    EXPECT_EQ(res.safety.support_rank, 6);
    EXPECT_EQ(res.m_used, 119);
    EXPECT_EQ(res.m_required, 119);
    EXPECT_FALSE(res.sample_shortfall);
    ASSERT_EQ(res.safety.b.cols(), 119);
    int satisfied = 0;
    for (int i = 0; i < 119; ++i)
        for (int k = 0; k < 6; ++k)
            if (res.safety.A_cbf.row(k).dot(res.u0) <= res.safety.b(k, i) + 1e-9) ++satisfied;
    EXPECT_EQ(satisfied, 6 * 119);
    EXPECT_LE(res.solution.primal_residual, 1e-6);
    EXPECT_LE(res.solution.dual_residual, 1e-6);
}

TEST(ControllerStep, AutomaticScenarioCountFollowsTheTheorem) {
    SwapSetup s;
    s.cfg.m = 0;
    const StepResult res = controller_step(s.fleet.initial_error_state(), s.fleet, s.cfg, s.cbf, 3);
    EXPECT_EQ(res.m_used, 119);
    s.cfg.m = 10;
    const StepResult shortfall = controller_step(s.fleet.initial_error_state(), s.fleet, s.cfg, s.cbf, 3);
    EXPECT_EQ(shortfall.m_used, 10);
    EXPECT_TRUE(shortfall.sample_shortfall);
}

TEST(ControllerStep, DeterministicForIdenticalInputs) {
    const SwapSetup s;
    std::mt19937_64 rng(9);
    const Vector x = perturbed_start(s.fleet, rng);
    const StepResult a = controller_step(x, s.fleet, s.cfg, s.cbf, 77);
    const StepResult b = controller_step(x, s.fleet, s.cfg, s.cbf, 77);
    EXPECT_EQ(a.u0, b.u0);
    EXPECT_EQ(a.solution.U, b.solution.U);
}

TEST(ControllerStep, OptimalSolutionsSatisfyAllRowsAndBounds) {
    const SwapSetup s;
    std::mt19937_64 rng(10);
    int optimal = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Vector x = perturbed_start(s.fleet, rng);
        const ScenarioSet scen = draw_scenarios(500 + trial, 59, 3, 2);
        const LinearSafetyBlock block = assemble_safety_constraints(s.fleet, x, scen, s.cbf);
        const CondensedMpc prob = condense(s.fleet.system(), x, scen, s.cfg, &block);
        const MpcSolution sol = solve_condensed(prob, s.cfg.qp);
        if (sol.status != StepStatus::Optimal) continue;
        ++optimal;
        expect_feasible(prob, sol);
        EXPECT_LE(sol.primal_residual, 1e-6);
        EXPECT_LE(sol.dual_residual, 1e-6);
    }
    EXPECT_GT(optimal, 30);
}

TEST(ControllerStep, AddingScenariosNeverLowersTheOptimum) {
    const SwapSetup s;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector x = perturbed_start(s.fleet, rng);
        const ScenarioSet all = draw_scenarios(900 + trial, 120, 3, 2);
        double previous = -1.0;
        for (int m : {1, 5, 20, 60, 120}) {
            ScenarioSet subset(m, 3, 2);
            subset.data() = all.data().topRows(m);
            const LinearSafetyBlock block = assemble_safety_constraints(s.fleet, x, subset, s.cbf);
            const CondensedMpc prob = condense(s.fleet.system(), x, subset, s.cfg, &block);
            const MpcSolution sol = solve_condensed(prob, s.cfg.qp);
            ASSERT_EQ(sol.status, StepStatus::Optimal);
            EXPECT_GE(sol.objective, previous * (1.0 - 1e-12));
            previous = sol.objective;
        }
    }
}

TEST(ControllerStep, VanishingInputAuthorityIsNeverSilentlyRelaxed) {
    SwapSetup s;
    s.cfg.a_max = 1e-9;
    s.cfg.m = 59;
    // Agents 1 and 2 head straight for each other fast enough that no
    // admissible input keeps the decay condition.
    Vector closing = Vector::Zero(16);
    closing(0) = 0.0;
    closing(1) = 0.3 - (-1.0);   // agent 1 at (0, 0.3)
    closing(3) = -3.0;
    closing(4) = 0.0;
    closing(5) = -0.3 - 1.0;     // agent 2 at (0, -0.3)
    closing(7) = 3.0;
    closing.segment<2>(8) = Point2(1.5, 0) - Point2(-1, 0);
    closing.segment<2>(12) = Point2(-1.5, 0) - Point2(1, 0);
    const StepResult bad = controller_step(closing, s.fleet, s.cfg, s.cbf, 5);
    EXPECT_EQ(bad.solution.status, StepStatus::Infeasible);
    EXPECT_EQ(bad.u0, Vector::Zero(8));
    // Certificate: some stacked row is violated by every input in the box.
    const ScenarioSet scen =
        draw_scenarios(5, bad.m_used, s.cfg.horizon, static_cast<int>(s.fleet.system().d_dim()), s.cfg.disturbance);
    const CondensedMpc prob = condense(s.fleet.system(), closing, scen, s.cfg, &bad.safety);
    const Vector best_case =
        -prob.qp.g - s.cfg.a_max * prob.qp.G.cwiseAbs().rowwise().sum();
    EXPECT_GT(best_case.maxCoeff(), 0.0);

    // From rest at the start, u = 0 already satisfies every row.
    const StepResult ok = controller_step(s.fleet.initial_error_state(), s.fleet, s.cfg, s.cbf, 5);
    ASSERT_EQ(ok.solution.status, StepStatus::Optimal);
    EXPECT_LE(ok.u0.cwiseAbs().maxCoeff(), 1e-9 + 1e-15);
    EXPECT_LE(ok.solution.max_row_violation, 1e-9);
}
