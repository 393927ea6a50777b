// Command-line front end for the scenario MPC experiments.
//
//   pssmpc sample-size --rho R --epsilon E [--beta B]
//   pssmpc uav-swap --config PATH --seed S [--out DIR]
//   pssmpc validate-theorem --config PATH --runs M --steps T --seed S --out DIR
//   pssmpc compare-1d --config PATH --trials K --reps M --seed S --out DIR
//
// Exit codes: 0 success, 2 configuration error, 3 when more than half of the
// runs were terminated by an infeasible program, 1 on any other failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pssmpc/pssmpc.hpp"

namespace fs = std::filesystem;
using namespace pssmpc;

namespace {

constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

int cmd_sample_size(int rho, double epsilon, const double* beta) {
    const long long m_theorem = sample_size_theorem(rho, epsilon);
    std::cout << "theorem_m " << m_theorem << '\n';
    if (beta != nullptr) std::cout << "lemma_m " << sample_size_lemma(rho, epsilon, *beta) << '\n';
    return 0;
}

int cmd_uav_swap(const std::string& config, std::uint64_t seed, const std::string& out_dir) {
    const FleetExperiment ex = fleet_experiment_from_json(read_json_file(config));
    const SimulationTrace trace = run_closed_loop(ex, seed, ex.steps);
    const RunSummary s = count_violations(trace);
    const fs::path out = prepare_out_dir(out_dir);
    write_trace_csv(trace, ex.fleet.n_agents(), (out / "trace.csv").string());
    write_json(run_summary_json(ex, trace, s), (out / "summary.json").string());
    std::cout << "seed " << seed << "\nsteps " << s.steps_completed << '/' << trace.horizon_steps
              << "\nviolation_frequency " << s.f << "\nh_min " << s.h_min << "\nfinal_position_error "
              << s.final_position_error << "\ninfeasible " << (s.excluded ? "yes" : "no") << '\n';
    return s.excluded ? kInfeasible : 0;
}

int cmd_validate(const std::string& config, int runs, int steps, std::uint64_t seed, const std::string& out_dir) {
    FleetExperiment ex = fleet_experiment_from_json(read_json_file(config));
    ex.runs = runs;
    ex.steps = steps;
    if (runs < 1 || steps < 1) throw ConfigError("--runs and --steps must be positive");
    const MonteCarloReport rep = monte_carlo(ex, runs, steps, seed);
    const fs::path out = prepare_out_dir(out_dir);
    json j = to_json(rep);
    j["config"] = to_json(ex);
    write_json(j, (out / "report.json").string());
    write_runs_csv(rep, (out / "runs.csv").string());
    std::cout << "runs " << rep.M << " (excluded " << rep.excluded << ")\nempirical_expectation "
              << rep.empirical_expectation << "\nstderr " << rep.stderr_f << "\nbound " << rep.theoretical_bound
              << "\nwithin_bound " << (rep.empirical_expectation <= rep.theoretical_bound ? "yes" : "no") << '\n';
    return rep.excluded_fraction() > 0.5 ? kInfeasible : 0;
}

int cmd_compare(const std::string& config, int trials, int reps, std::uint64_t seed, const std::string& out_dir) {
    OneDimExperiment ex = one_dim_experiment_from_json(read_json_file(config));
    if (trials < 1 || reps < 1) throw ConfigError("--trials and --reps must be positive");
    ex.trials = trials;
    ex.reps = reps;
    const CompareReport rep = compare_1d(ex, seed);
    const fs::path out = prepare_out_dir(out_dir);
    json j = to_json(rep);
    j["config"] = to_json(ex);
    write_json(j, (out / "compare.json").string());
    write_compare_csv(rep, (out / "compare.csv").string());
    std::cout << "m " << rep.m << "\nscenario_mean_exit_frequency " << rep.scenario.mean_exit_frequency
              << "\nscenario_bound " << rep.epsilon << "\ncosner_mean_exit_frequency "
              << rep.cosner.mean_exit_frequency << "\ncosner_bound " << rep.cosner_bound << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario MPC with first-step control barrier constraints"};
    app.require_subcommand(1);

    int rho = 1;
    double epsilon = 0.1, beta = 0.0;
    auto* ss = app.add_subcommand("sample-size", "scenario counts from the sample-size bounds");
    ss->add_option("--rho", rho, "support rank")->required();
    ss->add_option("--epsilon", epsilon, "violation level in (0, 1)")->required();
    auto* beta_opt = ss->add_option("--beta", beta, "confidence parameter in (0, 1)");

    std::string config, out_dir = ".";
    std::uint64_t seed = 0;
    int runs = 100, steps = 90, trials = 1000, reps = 100;

    auto* swap = app.add_subcommand("uav-swap", "single closed-loop run of the fleet experiment");
    swap->add_option("--config", config, "experiment JSON")->required();
    swap->add_option("--seed", seed, "master seed")->required();
    swap->add_option("--out", out_dir, "output directory");

    auto* val = app.add_subcommand("validate-theorem", "Monte Carlo estimate of the violation frequency");
    val->add_option("--config", config, "experiment JSON")->required();
    val->add_option("--runs", runs, "number of independent runs")->required();
    val->add_option("--steps", steps, "closed-loop steps per run")->required();
    val->add_option("--seed", seed, "master seed")->required();
    val->add_option("--out", out_dir, "output directory")->required();

    auto* cmp = app.add_subcommand("compare-1d", "one-step exit frequencies of the 1-D controllers");
    cmp->add_option("--config", config, "experiment JSON")->required();
    cmp->add_option("--trials", trials, "one-step trials per repetition")->required();
    cmp->add_option("--reps", reps, "repetitions")->required();
    cmp->add_option("--seed", seed, "master seed")->required();
    cmp->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*ss) return cmd_sample_size(rho, epsilon, beta_opt->count() > 0 ? &beta : nullptr);
        if (*swap) return cmd_uav_swap(config, seed, out_dir);
        if (*val) return cmd_validate(config, runs, steps, seed, out_dir);
        if (*cmp) return cmd_compare(config, trials, reps, seed, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
