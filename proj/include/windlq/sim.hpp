#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "windlq/coefficients.hpp"
#include "windlq/control.hpp"
#include "windlq/turbine.hpp"

namespace windlq {

// Hub-height wind history.
//
// Turbulent mode: an Ornstein-Uhlenbeck process (first-order low-pass of white
// noise, spectrum 1 / (1 + (2 pi f T)^2)) with time constant T = length_scale /
// mean, then shifted and scaled so that the sample mean equals `mean` and the
// sample standard deviation equals intensity * mean exactly.
struct WindSpec {
    enum class Mode { Constant, Ramp, Turbulent, File };
    Mode mode = Mode::Constant;
    double mean = 14.8;            // m/s; initial value in ramp mode
    double intensity = 0.0;        // turbulent mode
    double ramp_rate = 0.0;        // m/s^2
    double length_scale = 340.2;   // m
    std::filesystem::path file;    // CSV `time_s,wind_mps`

    void validate() const;
};

// One sample per controller step at t_k = k ts, k = 0 .. round(duration / ts) - 1.
// File mode interpolates linearly and holds the end values.
std::vector<double> generate_wind(const WindSpec& spec, double duration, double ts, std::uint64_t seed);

std::vector<double> read_wind_csv(const std::filesystem::path& path, std::vector<double>* times = nullptr);
void write_wind_csv(const std::filesystem::path& path, const std::vector<double>& wind, double ts);

struct SaturationResult {
    double theta = 0.0;
    double m_g = 0.0;
    ControlInput u_effective;
    bool pitch_rate_limited = false;
    bool torque_rate_limited = false;
    bool pitch_level_limited = false;
    bool torque_level_limited = false;
};

// Clamps the rates to their bounds, then shortens them so the levels stay
// inside their bounds over dt, then integrates exactly over dt.
SaturationResult apply_saturations(const TurbineParameters& p, double theta_prev, double mg_prev,
                                   const ControlInput& u, double dt);

struct SimulationConfig {
    double ts = 0.004;  // s
    int integrator_substeps = 4;
    double duration = 600.0;  // s
    WindSpec wind;
    std::uint64_t seed = 0;
    double p_ref = 3.37e6;  // W
    // Initial state; default is the equilibrium of the first wind sample,
    // plus `initial_offset`.
    std::optional<AugmentedState> initial_state;
    Vec7 initial_offset = Vec7::Zero();

    void validate() const;
};

// One row per controller step: the state at t_k and what happened over [t_k, t_k + ts).
struct Trajectory {
    double ts = 0.0;
    std::vector<double> time;
    std::vector<AugmentedState> state;
    std::vector<ControlInput> u_command;
    std::vector<ControlInput> u_effective;  // mean realized rate over the step
    std::vector<double> wind;
    std::vector<double> wind_estimate;
    std::vector<double> power;          // eta omega m_g at t_k
    std::vector<double> power_desired;  // P_d used over the step
    std::vector<double> omega_desired;
    std::vector<double> alpha;
    std::vector<unsigned char> saturation;  // bit 0/1: pitch/torque rate, bit 2/3: pitch/torque level
    AugmentedState final_state;

    std::size_t size() const { return time.size(); }
};

inline constexpr unsigned char kSatPitchRate = 1;
inline constexpr unsigned char kSatTorqueRate = 2;
inline constexpr unsigned char kSatPitchLevel = 4;
inline constexpr unsigned char kSatTorqueLevel = 8;

// Initial augmented state for the configuration (equilibrium of the first wind
// sample at the desired power and speed, plus the offset).
AugmentedState initial_state(const SimulationConfig& config, const TurbineParameters& p,
                             const CoefficientSurface& s, const PowerSpeedTable& table, double v0);

// Fixed-step closed loop: the controller samples every ts, its command is held
// and the plant is integrated with classical RK4 over `integrator_substeps`
// sub-intervals, saturations applied per sub-interval. The wind is held per
// controller step. Throws SimulationAbort if omega drops below omega_min or
// the state becomes non-finite.
Trajectory simulate(const SimulationConfig& config, const TurbineParameters& p, const CoefficientSurface& s,
                    const PowerSpeedTable& table, Controller& controller);

// Same, with a precomputed wind series (one sample per controller step).
Trajectory simulate(const SimulationConfig& config, const TurbineParameters& p, const CoefficientSurface& s,
                    const PowerSpeedTable& table, Controller& controller, const std::vector<double>& wind);

// Trajectory CSV, one row per controller step; column order in kTrajectoryColumns.
extern const std::vector<const char*> kTrajectoryColumns;
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace windlq
