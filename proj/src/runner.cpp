#include "windlq/runner.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "windlq/errors.hpp"

namespace windlq {

Plant::Plant(TurbineParameters p, CoefficientSurface s, double table_spacing)
    : params(std::move(p)), surface(std::move(s)), table(generate_power_speed_table(params, surface, table_spacing)) {}

std::unique_ptr<Plant> make_plant(const Scenario& scenario) {
    scenario.params.validate();
    return std::make_unique<Plant>(scenario.params, scenario_surface(scenario), scenario.synthesis.table_spacing);
}

ControllerDesign synthesize_scenario(const Scenario& scenario, const Plant& plant) {
    const auto& syn = scenario.synthesis;
    return design_controller(plant.params, plant.surface, plant.table, scenario.p_ref, syn.region2, syn.region3,
                             syn.epsilon, scenario.controller.delta_v, syn.vertex_count);
}

GainSchedule scenario_gains(const Scenario& scenario, const Plant& plant) {
    if (const auto& file = scenario.controller.gains_file) {
        std::ifstream in(*file);
        if (!in) throw ValidationError("cli", "cannot open " + file->string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("cli", file->string() + ": " + e.what());
        }
        return gain_schedule_from_json(j);
    }
    spdlog::info("no gains file, synthesizing");
    return synthesize_scenario(scenario, plant).schedule;
}

std::unique_ptr<Controller> make_controller(const Scenario& scenario, const Plant& plant) {
    const auto& c = scenario.controller;
    // Independent stream for estimator noise so it does not alias the wind.
    const std::uint64_t seed = scenario.simulation.seed + 0x9e3779b97f4a7c15ULL;
    if (c.kind == ControllerKind::Baseline) {
        return std::make_unique<BaselineController>(plant.params, plant.surface, plant.table, scenario.p_ref,
                                                    c.estimator, seed);
    }
    return std::make_unique<RobustLqController>(plant.params, plant.surface, plant.table,
                                                scenario_gains(scenario, plant), scenario.p_ref, c.estimator,
                                                c.refresh, seed);
}

TrajectoryChecks check_trajectory(const Trajectory& traj, const TurbineParameters& p) {
    TrajectoryChecks c;
    const double level_tol = 1e-9;
    const double rate_tol = 1e-9;
    auto states = traj.state;
    if (traj.size() > 0) states.push_back(traj.final_state);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const AugmentedState& x = states[k];
        if (!x.to_vector().allFinite()) c.finite = false;
        if (x.theta < p.theta_min - level_tol || x.theta > p.theta_max + level_tol) c.pitch_within_bounds = false;
        if (x.m_g < p.mg_min - level_tol * p.mg_max || x.m_g > p.mg_max * (1.0 + level_tol)) {
            c.torque_within_bounds = false;
        }
        if (k == 0 || traj.ts <= 0.0) continue;
        const double dtheta = (x.theta - states[k - 1].theta) / traj.ts;
        const double dmg = (x.m_g - states[k - 1].m_g) / traj.ts;
        if (dtheta < p.dtheta_min * (1.0 + rate_tol) || dtheta > p.dtheta_max * (1.0 + rate_tol)) {
            c.pitch_rate_within_bounds = false;
        }
        if (dmg < p.dmg_min * (1.0 + rate_tol) || dmg > p.dmg_max * (1.0 + rate_tol)) {
            c.torque_rate_within_bounds = false;
        }
    }
    return c;
}

RunResult run_scenario(const Scenario& scenario) { return run_scenario(scenario, *make_plant(scenario)); }

RunResult run_scenario(const Scenario& scenario, const Plant& plant) {
    SimulationConfig config = scenario.simulation;
    config.p_ref = scenario.p_ref;
    auto controller = make_controller(scenario, plant);
    RunResult r;
    r.trajectory = simulate(config, plant.params, plant.surface, plant.table, *controller);
    r.metrics = evaluate_metrics(r.trajectory, plant.params, plant.surface, scenario.metrics.channels,
                                 scenario.metrics.settle_time, scenario.metrics.h_ref);
    r.checks = check_trajectory(r.trajectory, plant.params);
    if (const auto* lq = dynamic_cast<const RobustLqController*>(controller.get())) {
        r.failed_refreshes = lq->state().failed_refreshes;
    }
    return r;
}

}  // namespace windlq
