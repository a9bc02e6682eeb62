#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "windlq/coefficients.hpp"
#include "windlq/sim.hpp"
#include "windlq/turbine.hpp"

namespace windlq {

struct Cycle {
    double range = 0.0;
    double mean = 0.0;
    double count = 1.0;  // 1 for a full cycle, 0.5 for a residual half cycle
};

using CycleSet = std::vector<Cycle>;

// Local extrema of the signal, plateaus collapsed; the first and last samples
// are kept as end points.
std::vector<double> turning_points(const std::vector<double>& signal);

// Four-point rainflow counting. Each new turning point is pushed on a stack;
// while the last four points A, B, C, D satisfy |C - B| <= |B - A| and
// |C - B| <= |D - C|, the pair B-C is a full cycle of range |C - B| and mean
// (B + C) / 2 and is removed. Consecutive points left on the stack form half
// cycles, so the half-cycle total equals (turning points - 1).
CycleSet rainflow(const std::vector<double>& signal);

struct DelSpec {
    double woehler_exponent = 4.0;
    double n_ref = 2e6;
    double t_life = 20.0 * 365.25 * 86400.0;  // s
    double t_sim = 600.0;                     // s

    void validate() const;
};

// [(t_life / t_sim) sum count_i range_i^m / n_ref]^(1/m); 0 for an empty set.
double damage_equivalent_load(const CycleSet& cycles, const DelSpec& spec);

// sqrt(mean((P - P_d)^2)) over rows [first, end).
double rms_tracking_error(const Trajectory& traj, std::size_t first = 0);

struct RateStatistics {
    double max_pitch_rate = 0.0;   // rad/s
    double max_torque_rate = 0.0;  // N m/s
};

// Maxima of the realized rates, from successive logged samples.
RateStatistics rate_statistics(const Trajectory& traj, std::size_t first = 0);

// Lever arm of the tower fore-aft moment proxy, m.
inline constexpr double kTowerLever = 110.0;

// Proxy load channels: "tower_moment" = h_ref (k_t x_t + d_t v_t) (N m),
// "shaft_torque" = M_g (N m), "thrust" = rotor thrust (N).
std::map<std::string, std::vector<double>> load_proxies(const Trajectory& traj, const TurbineParameters& p,
                                                         const CoefficientSurface& s, double h_ref = kTowerLever);

// Default Woehler exponent per proxy channel: 4 for the steel tower and shaft,
// 10 for the thrust channel that stands in for composite blade loads.
double default_woehler_exponent(const std::string& channel);

struct MetricsReport {
    double rms_tracking_error = 0.0;
    RateStatistics rates;
    std::map<std::string, double> del;
    std::map<std::string, double> woehler;
    double t_sim = 0.0;
    std::size_t settle_rows = 0;
};

// Everything the CLI reports for one run. `settle` seconds at the start are
// excluded from RMS and DEL evaluation.
MetricsReport evaluate_metrics(const Trajectory& traj, const TurbineParameters& p, const CoefficientSurface& s,
                               const std::map<std::string, DelSpec>& del_specs = {}, double settle = 0.0,
                               double h_ref = kTowerLever);

nlohmann::json to_json(const MetricsReport& m);

}  // namespace windlq
