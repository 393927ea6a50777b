#pragma once

// JSON experiment configurations. Unknown keys are ignored; missing keys
// take the defaults of the corresponding structs. Malformed values raise
// ConfigError.

#include <fstream>
#include <string>

#include "json.hpp"
#include "pssmpc/baseline_1d.hpp"
#include "pssmpc/cbf.hpp"
#include "pssmpc/mpc.hpp"

namespace pssmpc {

using json = nlohmann::json;

/// Everything needed to run the fleet closed loop.
struct FleetExperiment {
    std::string name{"uav-swap"};
    FleetSpec fleet{FleetSpec::four_agent_swap()};
    Norm1PairCbf cbf{};
    double q_weight{5.0};
    double r_weight{2.0};
    MpcConfig mpc{};  // weights filled by resolve()
    DisturbanceKind true_disturbance{DisturbanceKind::Normal};
    int steps{90};
    int runs{100};

    /// Fills the weight matrices from the fleet and validates everything.
    void resolve() {
        const Fleet f(fleet);
        MpcConfig weights = fleet_mpc_config(f, q_weight, r_weight);
        mpc.Q = std::move(weights.Q);
        mpc.R = std::move(weights.R);
        mpc.Q_N = std::move(weights.Q_N);
        mpc.a_max = fleet.a_max;
        cbf.validate();
        mpc.validate(f.system());
        if (steps < 0) throw DomainError("steps must be >= 0");
        if (runs < 1) throw DomainError("runs must be >= 1");
    }
};

struct OneDimExperiment {
    std::string name{"compare-1d"};
    one_dim::OneDimConfig cfg{};
    int trials{1000};
    int reps{100};
};

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline std::vector<Point2> read_points(const json& j, const char* key, std::vector<Point2> fallback) {
    if (!j.contains(key)) return fallback;
    std::vector<Point2> pts;
    for (const auto& item : j.at(key)) {
        if (!item.is_array() || item.size() != 2) throw ConfigError(std::string("config key '") + key + "': expected [x, y] pairs");
        pts.emplace_back(item[0].get<double>(), item[1].get<double>());
    }
    return pts;
}

inline json points_to_json(const std::vector<Point2>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x(), p.y()});
    return arr;
}

}  // namespace detail

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

[[nodiscard]] inline FleetExperiment fleet_experiment_from_json(const json& j) {
    FleetExperiment ex;
    try {
        ex.name = detail::get_or<std::string>(j, "experiment", ex.name);
        const json empty = json::object();
        const json& fj = j.contains("fleet") ? j.at("fleet") : empty;
        ex.fleet.dt = detail::get_or(fj, "dt", ex.fleet.dt);
        ex.fleet.initial_positions = detail::read_points(fj, "initial_positions", ex.fleet.initial_positions);
        ex.fleet.target_positions = detail::read_points(fj, "target_positions", ex.fleet.target_positions);
        ex.fleet.bd_scale = detail::get_or(fj, "bd_scale", ex.fleet.bd_scale);
        ex.fleet.a_max = detail::get_or(fj, "a_max", ex.fleet.a_max);
        ex.fleet.shared_disturbance = detail::get_or(fj, "shared_disturbance", ex.fleet.shared_disturbance);

        const json& cj = j.contains("cbf") ? j.at("cbf") : empty;
        ex.cbf.r1 = detail::get_or(cj, "r1", ex.cbf.r1);
        ex.cbf.r2 = detail::get_or(cj, "r2", ex.cbf.r2);
        ex.cbf.gamma = detail::get_or(cj, "gamma", ex.cbf.gamma);

        const json& mj = j.contains("mpc") ? j.at("mpc") : empty;
        ex.mpc.horizon = detail::get_or(mj, "horizon", ex.mpc.horizon);
        ex.q_weight = detail::get_or(mj, "q_weight", ex.q_weight);
        ex.r_weight = detail::get_or(mj, "r_weight", ex.r_weight);
        ex.mpc.eta = detail::get_or(mj, "eta", ex.mpc.eta);
        ex.mpc.epsilon = detail::get_or(mj, "epsilon", ex.mpc.epsilon);
        ex.mpc.m = detail::get_or(mj, "m", ex.mpc.m);
        ex.mpc.disturbance =
            parse_disturbance_kind(detail::get_or<std::string>(mj, "scenario_disturbance", "normal"));

        const json& qj = j.contains("qp") ? j.at("qp") : empty;
        ex.mpc.qp.tol_primal = detail::get_or(qj, "tol_primal", ex.mpc.qp.tol_primal);
        ex.mpc.qp.tol_dual = detail::get_or(qj, "tol_dual", ex.mpc.qp.tol_dual);
        ex.mpc.qp.max_iter = detail::get_or(qj, "max_iter", ex.mpc.qp.max_iter);

        const json& sj = j.contains("simulation") ? j.at("simulation") : empty;
        ex.steps = detail::get_or(sj, "steps", ex.steps);
        ex.runs = detail::get_or(sj, "runs", ex.runs);
        ex.true_disturbance = parse_disturbance_kind(detail::get_or<std::string>(sj, "true_disturbance", "normal"));

        ex.resolve();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    return ex;
}

[[nodiscard]] inline json to_json(const FleetExperiment& ex) {
    return {
        {"experiment", ex.name},
        {"fleet",
         {{"dt", ex.fleet.dt},
          {"initial_positions", detail::points_to_json(ex.fleet.initial_positions)},
          {"target_positions", detail::points_to_json(ex.fleet.target_positions)},
          {"bd_scale", ex.fleet.bd_scale},
          {"a_max", ex.fleet.a_max},
          {"shared_disturbance", ex.fleet.shared_disturbance}}},
        {"cbf", {{"r1", ex.cbf.r1}, {"r2", ex.cbf.r2}, {"gamma", ex.cbf.gamma}}},
        {"mpc",
         {{"horizon", ex.mpc.horizon},
          {"q_weight", ex.q_weight},
          {"r_weight", ex.r_weight},
          {"eta", ex.mpc.eta},
          {"epsilon", ex.mpc.epsilon},
          {"m", ex.mpc.m},
          {"scenario_disturbance", std::string(to_string(ex.mpc.disturbance))}}},
        {"qp", {{"tol_primal", ex.mpc.qp.tol_primal}, {"tol_dual", ex.mpc.qp.tol_dual}, {"max_iter", ex.mpc.qp.max_iter}}},
        {"simulation",
         {{"steps", ex.steps}, {"runs", ex.runs}, {"true_disturbance", std::string(to_string(ex.true_disturbance))}}},
    };
}

[[nodiscard]] inline OneDimExperiment one_dim_experiment_from_json(const json& j) {
    OneDimExperiment ex;
    try {
        ex.name = detail::get_or<std::string>(j, "experiment", ex.name);
        const json empty = json::object();
        const json& oj = j.contains("one_dim") ? j.at("one_dim") : empty;
        auto& c = ex.cfg;
        c.sigma = detail::get_or(oj, "sigma", c.sigma);
        c.x0 = detail::get_or(oj, "x0", c.x0);
        c.M_cbf = detail::get_or(oj, "M_cbf", c.M_cbf);
        c.nu = detail::get_or(oj, "nu", c.nu);
        c.gamma_1d = detail::get_or(oj, "gamma_1d", c.gamma_1d);
        c.epsilon = detail::get_or(oj, "epsilon", c.epsilon);
        c.beta = detail::get_or(oj, "beta", c.beta);
        c.m = detail::get_or(oj, "m", c.m);
        if (c.m == 0) c.m = static_cast<int>(sample_size_lemma(1, c.epsilon, c.beta));
        const json& sj = j.contains("simulation") ? j.at("simulation") : empty;
        ex.trials = detail::get_or(sj, "trials", ex.trials);
        ex.reps = detail::get_or(sj, "reps", ex.reps);
        c.validate();
        if (ex.trials < 1 || ex.reps < 1) throw ConfigError("trials and reps must be >= 1");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    return ex;
}

[[nodiscard]] inline json to_json(const OneDimExperiment& ex) {
    const auto& c = ex.cfg;
    return {{"experiment", ex.name},
            {"one_dim",
             {{"sigma", c.sigma},
              {"x0", c.x0},
              {"M_cbf", c.M_cbf},
              {"nu", c.nu},
              {"gamma_1d", c.gamma_1d},
              {"epsilon", c.epsilon},
              {"beta", c.beta},
              {"m", c.m}}},
            {"simulation", {{"trials", ex.trials}, {"reps", ex.reps}}}};
}

}  // namespace pssmpc
