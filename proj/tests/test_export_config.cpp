#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "pssmpc/export.hpp"

using namespace pssmpc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pssmpc_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

FleetExperiment load(const std::string& name) {
    return fleet_experiment_from_json(read_json_file(std::string(PSSMPC_CONFIG_DIR) + "/" + name));
}

}  // namespace

TEST(TraceCsv, RoundTripPreservesValues) {
    const FleetExperiment ex = load("uav_swap.json");
    const SimulationTrace trace = run_closed_loop(ex, 17, 8);
    const fs::path path = scratch_dir("roundtrip") / "trace.csv";
    write_trace_csv(trace, 4, path.string());
    const CsvTable table = read_csv(path.string());

    EXPECT_EQ(table.header, trace_csv_header(4));
    ASSERT_EQ(table.rows.size(), 9u);
    for (std::size_t t = 0; t < table.rows.size(); ++t) {
        const auto& row = table.rows[t];
        ASSERT_EQ(row.size(), table.header.size());
        EXPECT_EQ(row[0], static_cast<double>(t));
        for (int k = 0; k < 16; ++k)
            EXPECT_NEAR(row[static_cast<std::size_t>(table.column("x_" + std::to_string(k)))], trace.states[t](k),
                        1e-12);
        for (int k = 0; k < 8; ++k)
            EXPECT_NEAR(row[static_cast<std::size_t>(1 + 16 + k)], trace.positions[t](k), 1e-12);
        EXPECT_NEAR(row[static_cast<std::size_t>(table.column("h_1_2"))], trace.barriers[t](0), 1e-12);
        EXPECT_NEAR(row[static_cast<std::size_t>(table.column("h_3_4"))], trace.barriers[t](5), 1e-12);
        const auto u0 = static_cast<std::size_t>(table.column("u_0"));
        if (t < trace.steps.size()) {
            for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(row[u0 + k], trace.steps[t].u(static_cast<Eigen::Index>(k)), 1e-12);
            EXPECT_EQ(row[static_cast<std::size_t>(table.column("m_used"))], 119.0);
            EXPECT_EQ(row[static_cast<std::size_t>(table.column("infeasible"))], 0.0);
        } else {
            EXPECT_TRUE(std::isnan(row[u0]));
            EXPECT_TRUE(std::isnan(row[static_cast<std::size_t>(table.column("violation"))]));
        }
    }
}

TEST(TraceCsv, EmptyTraceWritesOnlyTheHeader) {
    const fs::path path = scratch_dir("empty") / "trace.csv";
    write_trace_csv(SimulationTrace{}, 4, path.string());
    const CsvTable table = read_csv(path.string());
    EXPECT_EQ(table.header, trace_csv_header(4));
    EXPECT_TRUE(table.rows.empty());
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 1);
}

TEST(TraceCsv, HeaderLayout) {
    const auto h = trace_csv_header(2);
    // t, 8 states, 4 positions, 4 inputs, 1 barrier, 6 diagnostics
    ASSERT_EQ(h.size(), 24u);
    EXPECT_EQ(h.front(), "t");
    EXPECT_EQ(h[9], "px_1");
    EXPECT_EQ(h[17], "h_1_2");
    EXPECT_EQ(h.back(), "support_rank");
}

TEST(TraceCsv, UnwritablePathRaisesIoError) {
    EXPECT_THROW(write_trace_csv(SimulationTrace{}, 4, "/nonexistent_dir_for_pssmpc/trace.csv"), IoError);
    EXPECT_THROW((void)read_csv("/nonexistent_dir_for_pssmpc/trace.csv"), IoError);
}

TEST(ReportJson, CarriesTheExactMasterSeed) {
    const FleetExperiment ex = load("validate_theorem.json");
    const std::uint64_t seed = 18446744073709551557ULL;
    const MonteCarloReport rep = monte_carlo(ex, 2, 3, seed);
    json j = to_json(rep);
    j["config"] = to_json(ex);
    const fs::path path = scratch_dir("report") / "report.json";
    write_json(j, path.string());
    const json back = read_json_file(path.string());
    EXPECT_EQ(back.at("master_seed").get<std::uint64_t>(), seed);
    EXPECT_EQ(back.at("runs").size(), 2u);
    EXPECT_EQ(back.at("runs")[1].at("seed").get<std::uint64_t>(), run_seed(seed, 1));
    EXPECT_EQ(back.at("config").at("cbf").at("gamma").get<double>(), 0.9);
    EXPECT_EQ(back.at("M").get<int>(), 2);
}

TEST(ReportCsv, OneRowPerRun) {
    const MonteCarloReport rep = monte_carlo(load("validate_theorem.json"), 3, 4, 1);
    const fs::path path = scratch_dir("runs") / "runs.csv";
    write_runs_csv(rep, path.string());
    const CsvTable table = read_csv(path.string());
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_EQ(table.column("f"), 2);
    EXPECT_EQ(table.rows[2][0], 2.0);
}

TEST(CompareOutput, JsonAndCsv) {
    OneDimExperiment ex;
    ex.trials = 20;
    ex.reps = 4;
    const CompareReport rep = compare_1d(ex, 123);
    const json j = to_json(rep);
    EXPECT_EQ(j.at("master_seed").get<std::uint64_t>(), 123u);
    EXPECT_EQ(j.at("scenario").at("exit_frequency").size(), 4u);
    const fs::path path = scratch_dir("compare") / "compare.csv";
    write_compare_csv(rep, path.string());
    const CsvTable table = read_csv(path.string());
    ASSERT_EQ(table.rows.size(), 4u);
    EXPECT_EQ(table.rows[3][1], rep.scenario.exit_frequency[3]);
}

TEST(FleetConfig, ShippedFilesLoad) {
    const FleetExperiment swap = load("uav_swap.json");
    EXPECT_EQ(swap.fleet.dt, 0.1);
    EXPECT_EQ(swap.cbf.gamma, 0.2);
    EXPECT_EQ(swap.mpc.epsilon, 0.05);
    EXPECT_EQ(swap.mpc.m, 119);
    EXPECT_EQ(swap.mpc.horizon, 3);
    EXPECT_EQ(swap.fleet.n_agents(), 4);

    const FleetExperiment val = load("validate_theorem.json");
    EXPECT_EQ(val.cbf.gamma, 0.9);
    EXPECT_EQ(val.mpc.epsilon, 0.1);
    EXPECT_EQ(val.mpc.m, 59);
    EXPECT_EQ(val.steps, 90);
    EXPECT_EQ(val.runs, 100);
}

TEST(FleetConfig, MissingKeysTakeDefaults) {
    const FleetExperiment ex = fleet_experiment_from_json(json::object());
    EXPECT_EQ(ex.fleet.dt, 0.1);
    EXPECT_EQ(ex.cbf.gamma, 0.2);
    EXPECT_EQ(ex.mpc.horizon, 3);
    EXPECT_EQ(ex.mpc.Q.rows(), 16);
}

TEST(FleetConfig, JsonRoundTrip) {
    const FleetExperiment a = load("validate_theorem.json");
    const FleetExperiment b = fleet_experiment_from_json(to_json(a));
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(a.mpc.Q_N, b.mpc.Q_N);
}

TEST(FleetConfig, InvalidValuesRaiseConfigError) {
    EXPECT_THROW((void)fleet_experiment_from_json(json::parse(R"({"cbf": {"gamma": 1.5}})")), ConfigError);
    EXPECT_THROW((void)fleet_experiment_from_json(json::parse(R"({"fleet": {"dt": "fast"}})")), ConfigError);
    EXPECT_THROW((void)fleet_experiment_from_json(json::parse(R"({"fleet": {"initial_positions": [[0, 1, 2]]}})")),
                 ConfigError);
    EXPECT_THROW((void)fleet_experiment_from_json(json::parse(R"({"mpc": {"scenario_disturbance": "cauchy"}})")),
                 ConfigError);
    EXPECT_THROW((void)fleet_experiment_from_json(json::parse(R"({"mpc": {"horizon": 0}})")), ConfigError);
}

TEST(FleetConfig, UnreadableOrMalformedFiles) {
    EXPECT_THROW((void)read_json_file("/nonexistent_dir_for_pssmpc/x.json"), ConfigError);
    const fs::path path = scratch_dir("badjson") / "bad.json";
    std::ofstream(path) << "{ not json";
    EXPECT_THROW((void)read_json_file(path.string()), ConfigError);
}

TEST(OneDimConfigJson, ShippedFileAndAutomaticSampleCount) {
    const OneDimExperiment ex =
        one_dim_experiment_from_json(read_json_file(std::string(PSSMPC_CONFIG_DIR) + "/compare_1d.json"));
    EXPECT_EQ(ex.cfg.m, 88);
    EXPECT_EQ(ex.trials, 1000);
    EXPECT_EQ(ex.reps, 100);
    const OneDimExperiment automatic = one_dim_experiment_from_json(json::parse(R"({"one_dim": {"m": 0}})"));
    EXPECT_EQ(automatic.cfg.m, 88);
    EXPECT_THROW((void)one_dim_experiment_from_json(json::parse(R"({"one_dim": {"sigma": 1.2}})")), ConfigError);
    EXPECT_EQ(one_dim_experiment_from_json(to_json(ex)).cfg.x0, 3.1);
}
