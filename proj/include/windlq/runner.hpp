#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "windlq/design.hpp"
#include "windlq/metrics.hpp"
#include "windlq/scenario.hpp"
#include "windlq/sim.hpp"

namespace windlq {

// Plant description shared by the controller and the simulator. Controllers
// keep references into it, so it is never moved once built.
struct Plant {
    TurbineParameters params;
    CoefficientSurface surface;
    PowerSpeedTable table;

    Plant(TurbineParameters p, CoefficientSurface s, double table_spacing);
    Plant(const Plant&) = delete;
    Plant& operator=(const Plant&) = delete;
};

std::unique_ptr<Plant> make_plant(const Scenario& scenario);

ControllerDesign synthesize_scenario(const Scenario& scenario, const Plant& plant);

// Gains from the scenario's gains file, or synthesized when it has none.
GainSchedule scenario_gains(const Scenario& scenario, const Plant& plant);

std::unique_ptr<Controller> make_controller(const Scenario& scenario, const Plant& plant);

// Post-run sanity checks reported next to the metrics.
struct TrajectoryChecks {
    bool finite = true;
    bool pitch_within_bounds = true;
    bool torque_within_bounds = true;
    bool pitch_rate_within_bounds = true;
    bool torque_rate_within_bounds = true;

    bool all() const {
        return finite && pitch_within_bounds && torque_within_bounds && pitch_rate_within_bounds &&
               torque_rate_within_bounds;
    }
};

TrajectoryChecks check_trajectory(const Trajectory& traj, const TurbineParameters& p);

struct RunResult {
    Trajectory trajectory;
    MetricsReport metrics;
    TrajectoryChecks checks;
    long failed_refreshes = 0;  // robust-LQ only
};

// Builds everything from the scenario and simulates it. Throws SimulationAbort.
RunResult run_scenario(const Scenario& scenario);
RunResult run_scenario(const Scenario& scenario, const Plant& plant);

}  // namespace windlq
