#pragma once

// CSV and JSON output for traces and reports.
//
// Trace CSV, one row per recorded state x_t (t = 0..T):
//   t, x_0..x_{n-1}            error state
//   px_1, py_1, ..., px_A, py_A absolute positions
//   u_0..u_{p-1}              input applied at t (empty on the final row)
//   h_i_j for i < j           pairwise barriers at x_t (agents numbered from 1)
//   violation                 1 if some h at x_{t+1} is negative (empty on the final row)
//   infeasible                1 if the program at t had no solution
//   status                    0 optimal, 1 infeasible, 2 solver failure
//   qp_iterations, m_used, support_rank
// Numbers are written with 17 significant digits so they parse back exactly.

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pssmpc/harness.hpp"

namespace pssmpc {

[[nodiscard]] inline std::vector<std::string> trace_csv_header(int n_agents) {
    std::vector<std::string> cols{"t"};
    for (int k = 0; k < 4 * n_agents; ++k) cols.push_back("x_" + std::to_string(k));
    for (int j = 1; j <= n_agents; ++j) {
        cols.push_back("px_" + std::to_string(j));
        cols.push_back("py_" + std::to_string(j));
    }
    for (int k = 0; k < 2 * n_agents; ++k) cols.push_back("u_" + std::to_string(k));
    for (const auto& [i, j] : agent_pairs(n_agents))
        cols.push_back("h_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    for (const char* c : {"violation", "infeasible", "status", "qp_iterations", "m_used", "support_rank"})
        cols.emplace_back(c);
    return cols;
}

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
    out << '\n';
}

inline std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

inline int status_code(StepStatus s) {
    switch (s) {
        case StepStatus::Optimal: return 0;
        case StepStatus::Infeasible: return 1;
        case StepStatus::SolverFailure: return 2;
    }
    return 2;
}

}  // namespace detail

inline void write_trace_csv(const SimulationTrace& trace, int n_agents, const std::string& path) {
    auto out = detail::open_for_write(path);
    const auto header = trace_csv_header(n_agents);
    detail::write_row(out, header);
    const int n = 4 * n_agents, p = 2 * n_agents;
    const auto n_pairs = static_cast<int>(agent_pairs(n_agents).size());
    for (std::size_t t = 0; t < trace.states.size(); ++t) {
        std::vector<std::string> cells;
        cells.reserve(header.size());
        cells.push_back(std::to_string(t));
        for (int k = 0; k < n; ++k) cells.push_back(detail::num(trace.states[t](k)));
        for (int k = 0; k < 2 * n_agents; ++k) cells.push_back(detail::num(trace.positions[t](k)));
        const StepRecord* rec = t < trace.steps.size() ? &trace.steps[t] : nullptr;
        for (int k = 0; k < p; ++k) cells.push_back(rec ? detail::num(rec->u(k)) : "");
        for (int k = 0; k < n_pairs; ++k) cells.push_back(detail::num(trace.barriers[t](k)));
        if (rec) {
            cells.push_back(rec->infeasible ? "" : (rec->violation ? "1" : "0"));
            cells.push_back(rec->infeasible ? "1" : "0");
            cells.push_back(std::to_string(detail::status_code(rec->status)));
            cells.push_back(std::to_string(rec->qp_iterations));
            cells.push_back(std::to_string(rec->m_used));
            cells.push_back(std::to_string(rec->support_rank));
        } else {
            for (int k = 0; k < 6; ++k) cells.emplace_back("");
        }
        detail::write_row(out, cells);
    }
    if (!out) throw IoError("write failed: " + path);
}

/// A parsed numeric CSV; empty cells become NaN.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] int column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return static_cast<int>(k);
        return -1;
    }
};

[[nodiscard]] inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    CsvTable table;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(l);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) return table;
    table.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line))
            row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
        table.rows.push_back(std::move(row));
    }
    return table;
}

[[nodiscard]] inline json to_json(const RunSummary& s) {
    return {{"seed", s.seed},
            {"f", s.f},
            {"violations", s.violations},
            {"infeasible_steps", s.infeasible_steps},
            {"steps_completed", s.steps_completed},
            {"h_min", s.h_min},
            {"final_position_error", s.final_position_error},
            {"excluded", s.excluded}};
}

[[nodiscard]] inline json run_summary_json(const FleetExperiment& ex, const SimulationTrace& trace,
                                           const RunSummary& s) {
    int shortfall = 0;
    double worst_primal = 0.0, worst_dual = 0.0;
    for (const auto& r : trace.steps) {
        shortfall += r.sample_shortfall ? 1 : 0;
        worst_primal = std::max(worst_primal, r.primal_residual);
        worst_dual = std::max(worst_dual, r.dual_residual);
    }
    return {{"config", to_json(ex)},
            {"seed", trace.seed},
            {"steps", trace.horizon_steps},
            {"summary", to_json(s)},
            {"diagnostics",
             {{"sample_shortfall_steps", shortfall},
              {"max_primal_residual", worst_primal},
              {"max_dual_residual", worst_dual},
              {"terminated_infeasible", trace.terminated_infeasible}}}};
}

[[nodiscard]] inline json to_json(const MonteCarloReport& r) {
    json runs = json::array();
    for (const auto& s : r.runs) runs.push_back(to_json(s));
    return {{"master_seed", r.master_seed},
            {"M", r.M},
            {"T", r.T},
            {"excluded", r.excluded},
            {"excluded_fraction", r.excluded_fraction()},
            {"empirical_expectation", r.empirical_expectation},
            {"stderr", r.stderr_f},
            {"empirical_expectation_plus_2se", r.empirical_expectation + 2.0 * r.stderr_f},
            {"theoretical_bound", r.theoretical_bound},
            {"fraction_with_violation", r.fraction_with_violation},
            {"histogram_bin_width", r.T > 0 ? 1.0 / r.T : 0.0},
            {"histogram", r.histogram},
            {"frequencies", r.frequencies},
            {"runs", runs}};
}

/// One row per run: run, seed, f, violations, infeasible_steps, h_min, excluded.
inline void write_runs_csv(const MonteCarloReport& r, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << "run,seed,f,violations,infeasible_steps,h_min,final_position_error,excluded\n";
    for (std::size_t l = 0; l < r.runs.size(); ++l) {
        const auto& s = r.runs[l];
        out << l << ',' << s.seed << ',' << s.f << ',' << s.violations << ',' << s.infeasible_steps << ','
            << s.h_min << ',' << s.final_position_error << ',' << (s.excluded ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

[[nodiscard]] inline json to_json(const ControllerTally& t) {
    return {{"exit_frequency", t.exit_frequency},
            {"exit_frequency_infeasible_excluded", t.exit_frequency_feasible},
            {"infeasible_per_rep", t.infeasible},
            {"mean_exit_frequency", t.mean_exit_frequency},
            {"mean_exit_frequency_infeasible_excluded", t.mean_exit_frequency_feasible},
            {"total_infeasible", t.total_infeasible}};
}

[[nodiscard]] inline json to_json(const CompareReport& r) {
    return {{"master_seed", r.master_seed},
            {"trials", r.trials},
            {"reps", r.reps},
            {"m", r.m},
            {"epsilon", r.epsilon},
            {"cosner_bound", r.cosner_bound},
            {"scenario", to_json(r.scenario)},
            {"cosner", to_json(r.cosner)}};
}

/// One row per repetition with both controllers' exit frequencies.
inline void write_compare_csv(const CompareReport& r, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << "rep,scenario_exit_frequency,scenario_infeasible,cosner_exit_frequency,cosner_infeasible\n";
    for (std::size_t k = 0; k < r.scenario.exit_frequency.size(); ++k)
        out << k << ',' << r.scenario.exit_frequency[k] << ',' << r.scenario.infeasible[k] << ','
            << r.cosner.exit_frequency[k] << ',' << r.cosner.infeasible[k] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace pssmpc
