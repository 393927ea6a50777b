#pragma once

// Closed-loop simulation, violation counting and Monte Carlo estimation.
//
// Seeds: a run seed drives two disjoint families of streams. Step t of the
// controller draws its scenarios from derive_seed(run, stream::scenarios, t);
// the plant disturbance of the whole run comes from one stream seeded with
// derive_seed(run, stream::true_disturbance, 0). Monte Carlo run l uses the
// run seed derive_seed(master, stream::run, l).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <thread>
#include <vector>

#include "pssmpc/baseline_1d.hpp"
#include "pssmpc/config.hpp"
#include "pssmpc/mpc.hpp"

namespace pssmpc {

/// What happened during closed-loop step t (x_t -> x_{t+1}).
struct StepRecord {
    int t{0};
    Vector u;            // applied input (zero when infeasible)
    Vector h_next;       // pairwise barriers at x_{t+1}
    bool violation{false};   // some pair has h(x_{t+1}) < 0
    bool infeasible{false};  // the scenario program had no solution
    StepStatus status{StepStatus::Optimal};
    int support_rank{0};
    int m_used{0};
    bool sample_shortfall{false};
    int qp_iterations{0};
    double primal_residual{0.0};
    double dual_residual{0.0};
    double objective{0.0};
    double solve_time_ms{0.0};
};

struct SimulationTrace {
    std::uint64_t seed{0};
    int horizon_steps{0};            // T requested
    std::vector<Vector> states;      // x_0 .. x_k, error coordinates
    std::vector<Vector> positions;   // absolute positions per state, (px_1, py_1, ...)
    std::vector<Vector> barriers;    // pairwise h per state
    std::vector<StepRecord> steps;   // one per executed step
    bool terminated_infeasible{false};
};

struct RunSummary {
    std::uint64_t seed{0};
    double f{0.0};  // (1/T) * number of steps whose successor is unsafe
    int violations{0};
    int infeasible_steps{0};
    int steps_completed{0};
    double h_min{0.0};
    double final_position_error{0.0};  // largest per-agent distance to target at the end
    bool excluded{false};              // terminated by an infeasible program
};

[[nodiscard]] inline Vector absolute_positions(const Fleet& fleet, const Vector& x_err) {
    Vector pos(2 * fleet.n_agents());
    for (int j = 0; j < fleet.n_agents(); ++j) pos.segment<2>(2 * j) = fleet.position(x_err, j);
    return pos;
}

/// Runs the scenario controller in closed loop for T steps. Stops early on an
/// infeasible program; that step is recorded with `infeasible` set.
[[nodiscard]] inline SimulationTrace run_closed_loop(const FleetExperiment& ex, std::uint64_t seed, int T) {
    if (T < 0) throw ConfigError("run_closed_loop: T must be >= 0");
    const Fleet fleet(ex.fleet);
    const DisturbedLinearSystem& sys = fleet.system();
    SimulationTrace trace;
    trace.seed = seed;
    trace.horizon_steps = T;

    Vector x = fleet.initial_error_state();
    auto record_state = [&](const Vector& s) {
        trace.states.push_back(s);
        trace.positions.push_back(absolute_positions(fleet, s));
        trace.barriers.push_back(pairwise_barriers(fleet, s, ex.cbf));
    };
    record_state(x);

    DisturbanceStream world(derive_seed(seed, stream::true_disturbance, 0), ex.true_disturbance);
    for (int t = 0; t < T; ++t) {
        const StepResult res = controller_step(x, fleet, ex.mpc, ex.cbf, derive_seed(seed, stream::scenarios,
                                                                                       static_cast<std::uint64_t>(t)));
        StepRecord rec;
        rec.t = t;
        rec.status = res.solution.status;
        rec.support_rank = res.safety.support_rank;
        rec.m_used = res.m_used;
        rec.sample_shortfall = res.sample_shortfall;
        rec.qp_iterations = res.solution.iterations;
        rec.primal_residual = res.solution.primal_residual;
        rec.dual_residual = res.solution.dual_residual;
        rec.objective = res.solution.objective;
        rec.solve_time_ms = res.solution.wall_time_ms;
        rec.u = res.u0;
        if (res.solution.status != StepStatus::Optimal) {
            rec.infeasible = true;
            rec.h_next = Vector::Constant(static_cast<Eigen::Index>(agent_pairs(fleet.n_agents()).size()),
                                          std::numeric_limits<double>::quiet_NaN());
            trace.steps.push_back(std::move(rec));
            trace.terminated_infeasible = true;
            break;
        }
        const Vector d = world.next_vector(sys.d_dim());
        x = step(sys, x, res.u0, d);
        record_state(x);
        rec.h_next = trace.barriers.back();
        rec.violation = rec.h_next.minCoeff() < 0.0;
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

/// Empirical violation frequency of one run; simultaneous collisions of
/// several pairs at one step count once.
[[nodiscard]] inline RunSummary count_violations(const SimulationTrace& trace) {
    RunSummary s;
    s.seed = trace.seed;
    for (const auto& rec : trace.steps) {
        if (rec.infeasible) {
            ++s.infeasible_steps;
            continue;
        }
        ++s.steps_completed;
        if (rec.violation) ++s.violations;
    }
    s.f = trace.horizon_steps > 0 ? static_cast<double>(s.violations) / trace.horizon_steps : 0.0;
    s.h_min = std::numeric_limits<double>::infinity();
    for (const auto& h : trace.barriers)
        if (h.size() > 0) s.h_min = std::min(s.h_min, h.minCoeff());
    s.excluded = trace.terminated_infeasible;
    if (!trace.positions.empty() && !trace.states.empty()) {
        const Vector& last = trace.states.back();
        for (Eigen::Index j = 0; 4 * j < last.size(); ++j)
            s.final_position_error = std::max(s.final_position_error, last.segment<2>(4 * j).norm());
    }
    return s;
}

struct MonteCarloReport {
    std::uint64_t master_seed{0};
    int M{0};
    int T{0};
    std::vector<RunSummary> runs;     // all runs, in index order
    std::vector<double> frequencies;  // f of the included runs
    int excluded{0};
    double empirical_expectation{0.0};
    double stderr_f{0.0};
    double theoretical_bound{0.0};
    double fraction_with_violation{0.0};
    std::vector<int> histogram;  // bin k counts f in [k/T, (k+1)/T)

    [[nodiscard]] double excluded_fraction() const { return M > 0 ? static_cast<double>(excluded) / M : 0.0; }
};

/// Calls fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(int count, Fn&& fn, unsigned threads = std::thread::hardware_concurrency()) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
}

[[nodiscard]] inline std::uint64_t run_seed(std::uint64_t master, int run_index) {
    return derive_seed(master, stream::run, static_cast<std::uint64_t>(run_index));
}

/// Aggregates run summaries into a report (the reduction half of monte_carlo).
[[nodiscard]] inline MonteCarloReport summarize_runs(std::vector<RunSummary> runs, std::uint64_t master_seed, int T,
                                                     double bound) {
    MonteCarloReport rep;
    rep.master_seed = master_seed;
    rep.M = static_cast<int>(runs.size());
    rep.T = T;
    rep.theoretical_bound = bound;
    rep.runs = std::move(runs);
    rep.histogram.assign(static_cast<std::size_t>(std::max(T, 0) + 1), 0);
    int with_violation = 0;
    for (const auto& r : rep.runs) {
        if (r.excluded) {
            ++rep.excluded;
            continue;
        }
        rep.frequencies.push_back(r.f);
        if (r.violations > 0) ++with_violation;
        const auto bin = std::clamp(r.violations, 0, std::max(T, 0));
        ++rep.histogram[static_cast<std::size_t>(bin)];
    }
    const auto n = static_cast<double>(rep.frequencies.size());
    if (n > 0) {
        rep.empirical_expectation = std::accumulate(rep.frequencies.begin(), rep.frequencies.end(), 0.0) / n;
        rep.fraction_with_violation = with_violation / n;
        if (n > 1) {
            double ss = 0.0;
            for (double f : rep.frequencies) ss += (f - rep.empirical_expectation) * (f - rep.empirical_expectation);
            rep.stderr_f = std::sqrt(ss / (n - 1.0) / n);
        }
    }
    return rep;
}

/// M independent closed loops with derived seeds, executed in parallel.
[[nodiscard]] inline MonteCarloReport monte_carlo(const FleetExperiment& ex, int M, int T, std::uint64_t master_seed,
                                                  std::vector<SimulationTrace>* traces = nullptr,
                                                  unsigned threads = std::thread::hardware_concurrency()) {
    if (M < 1) throw ConfigError("monte_carlo: M must be >= 1");
    std::vector<RunSummary> runs(static_cast<std::size_t>(M));
    if (traces != nullptr) traces->assign(static_cast<std::size_t>(M), SimulationTrace{});
    parallel_for(
        M,
        [&](int l) {
            SimulationTrace trace = run_closed_loop(ex, run_seed(master_seed, l), T);
            runs[static_cast<std::size_t>(l)] = count_violations(trace);
            if (traces != nullptr) (*traces)[static_cast<std::size_t>(l)] = std::move(trace);
        },
        threads);
    return summarize_runs(std::move(runs), master_seed, T, ex.mpc.epsilon);
}

// --- one-dimensional comparison -------------------------------------------

struct ControllerTally {
    std::vector<double> exit_frequency;           // infeasible trials counted as exits
    std::vector<double> exit_frequency_feasible;  // infeasible trials excluded
    std::vector<int> infeasible;                  // per repetition
    double mean_exit_frequency{0.0};
    double mean_exit_frequency_feasible{0.0};
    long long total_infeasible{0};
};

struct CompareReport {
    std::uint64_t master_seed{0};
    int trials{0};
    int reps{0};
    int m{0};
    double cosner_bound{0.0};
    double epsilon{0.0};
    ControllerTally scenario;
    ControllerTally cosner;
};

namespace detail {

inline void finish_tally(ControllerTally& t) {
    const auto n = static_cast<double>(t.exit_frequency.size());
    if (n == 0) return;
    t.mean_exit_frequency = std::accumulate(t.exit_frequency.begin(), t.exit_frequency.end(), 0.0) / n;
    t.mean_exit_frequency_feasible =
        std::accumulate(t.exit_frequency_feasible.begin(), t.exit_frequency_feasible.end(), 0.0) / n;
    t.total_infeasible = std::accumulate(t.infeasible.begin(), t.infeasible.end(), 0LL);
}

}  // namespace detail

/// Repeated one-step trials from x0 for both controllers. Trial k of
/// repetition r uses scenario stream derive_seed(master, scenarios, r*K + k)
/// and plant noise stream derive_seed(master, true_disturbance, r*K + k); both
/// controllers see the same plant noise.
[[nodiscard]] inline CompareReport compare_1d(const OneDimExperiment& ex, std::uint64_t master_seed) {
    const auto& c = ex.cfg;
    c.validate();
    CompareReport rep;
    rep.master_seed = master_seed;
    rep.trials = ex.trials;
    rep.reps = ex.reps;
    rep.m = c.m;
    rep.epsilon = c.epsilon;
    rep.cosner_bound = one_dim::cosner_bound(std::clamp(one_dim::h_1d(c.x0), 0.0, c.M_cbf), c.M_cbf, c.sigma);

    auto unsafe = [&](double x) { return one_dim::h_1d(x) < -c.nu; };
    std::vector<double> samples(static_cast<std::size_t>(c.m));
    for (int r = 0; r < ex.reps; ++r) {
        int exits_s = 0, infeasible_s = 0, exits_c = 0, infeasible_c = 0;
        for (int k = 0; k < ex.trials; ++k) {
            const auto idx = static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(ex.trials) +
                             static_cast<std::uint64_t>(k);
            DisturbanceStream scen(derive_seed(master_seed, stream::scenarios, idx));
            for (auto& s : samples) s = scen.next();
            DisturbanceStream world(derive_seed(master_seed, stream::true_disturbance, idx));
            const double d = world.next();

            const one_dim::Interval feasible = one_dim::scenario_1d_interval(c.x0, samples, c.sigma, c.gamma_1d);
            if (feasible.empty()) ++infeasible_s;
            else if (unsafe(one_dim::step_1d(c.x0, feasible.min_magnitude(), c.sigma, d))) ++exits_s;

            try {
                const double u = one_dim::cosner_controller(c.x0, c.sigma);
                if (unsafe(one_dim::step_1d(c.x0, u, c.sigma, d))) ++exits_c;
            } catch (const Infeasible1D&) {
                ++infeasible_c;
            }
        }
        auto push = [&](ControllerTally& t, int exits, int infeasible) {
            t.exit_frequency.push_back(static_cast<double>(exits + infeasible) / ex.trials);
            const int feasible_trials = ex.trials - infeasible;
            t.exit_frequency_feasible.push_back(feasible_trials > 0 ? static_cast<double>(exits) / feasible_trials : 0.0);
            t.infeasible.push_back(infeasible);
        };
        push(rep.scenario, exits_s, infeasible_s);
        push(rep.cosner, exits_c, infeasible_c);
    }
    detail::finish_tally(rep.scenario);
    detail::finish_tally(rep.cosner);
    return rep;
}

}  // namespace pssmpc
