#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "windlq/coefficients.hpp"
#include "windlq/equilibrium.hpp"
#include "windlq/turbine.hpp"

namespace windlq {

// Desired generator speed as a function of desired power, linearly interpolated.
struct PowerSpeedTable {
    std::vector<double> p_grid;      // W, strictly increasing
    std::vector<double> omega_grid;  // rad/s, nondecreasing
    std::vector<double> v_grid;      // wind speed that generated each node, m/s

    void validate(const TurbineParameters& p) const;
};

// Nodes on a uniform wind-speed grid of spacing `dv` from 0 up to the speed at
// which the optimal-tip-speed law reaches omega_rated, plus a final node at
// p_rated. omega = clamp(n_g lambda_opt V_eq(P) / r, omega_min, omega_rated).
PowerSpeedTable generate_power_speed_table(const TurbineParameters& p, const CoefficientSurface& s,
                                           double dv = 0.1);

// (rho pi r^2 eta / 2) v^3 cp_opt
double available_power(const TurbineParameters& p, const CoefficientSurface& s, double v);
// min(p_ref, available_power(v_hat))
double desired_power(const TurbineParameters& p, const CoefficientSurface& s, double p_ref, double v_hat);
double desired_speed(const PowerSpeedTable& table, double p_d);
// Wind speed where the available power equals p_ref.
double region_boundary_speed(const TurbineParameters& p, const CoefficientSurface& s, double p_ref);

// Blending weight of the region-2 gain: 1 at or below v_d - delta_v, 0 at or
// above v_d + delta_v, linear in between.
double compute_alpha(double v_hat, double v_d, double delta_v);

struct GainSchedule {
    Mat27 k2 = Mat27::Zero();
    Mat27 k3 = Mat27::Zero();
    double delta_v = 0.5;
};

Mat27 blended_gain(const GainSchedule& schedule, double alpha);

// Torque-balance wind observer.
//
// The drive-train balance (J_t / n_g) domega/dt = M_r - n_g M_g gives an
// aerodynamic torque estimate from the low-pass filtered speed derivative;
// inverting M_r(omega, V, theta) for V by scan plus bisection over
// [v_cutin, v_cutout] (smallest root) yields the wind estimate. Oracle mode
// returns the true wind plus seeded Gaussian noise instead.
struct EstimatorConfig {
    enum class Mode { Observer, Oracle };
    Mode mode = Mode::Observer;
    double time_constant = 0.5;  // s, low-pass on domega/dt
    double tolerance = 1e-4;     // m/s, bisection
    double noise_std = 0.0;      // m/s, oracle mode only
    int scan_points = 100;
};

class WindEstimator {
public:
    WindEstimator(const TurbineParameters& p, const CoefficientSurface& s, EstimatorConfig config,
                  std::uint64_t seed = 0);

    // Advances the observer by dt with the current measurements; v_true is only
    // read in oracle mode.
    double update(double omega_meas, double m_g_applied, double theta_applied, double dt, double v_true);

    double estimate() const { return estimate_; }
    double filtered_derivative() const { return domega_filt_; }
    void reset(double v_estimate, double omega, double domega_filtered = 0.0);

private:
    const TurbineParameters* params_;
    const CoefficientSurface* surface_;
    EstimatorConfig config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
    double estimate_ = 0.0;
    double omega_prev_ = 0.0;
    double domega_filt_ = 0.0;
    bool primed_ = false;
};

// Smallest V in [v_lo, v_hi] with rotor_torque(omega, V, theta) = torque, if any.
std::optional<double> invert_rotor_torque(const TurbineParameters& p, const CoefficientSurface& s, double omega,
                                          double theta, double torque, double v_lo, double v_hi, double tol,
                                          int scan_points = 100);

// Equilibrium refresh hysteresis.
struct RefreshPolicy {
    double wind = 0.25;            // m/s
    double power_fraction = 0.01;  // of p_rated
};

struct ControllerState {
    Equilibrium equilibrium;
    bool has_equilibrium = false;
    Mat27 k = Mat27::Zero();
    double alpha = 1.0;
    int failed_refreshes = 0;
};

// Output of one controller sample: the rate command plus the external-input
// estimate whose omega_d and P_d drive the plant's integral-error states.
struct ControlOutput {
    ControlInput u;
    ExternalInput w_hat;
    double alpha = 0.0;
};

// One robust-LQ sample: P_d, omega_d, alpha, blended K, equilibrium refresh,
// then u = K (x - x_s). On NoEquilibrium the previous equilibrium and gain are held.
ControlOutput control_step(ControllerState& state, const AugmentedState& x, double v_hat, double p_ref,
                           const TurbineParameters& p, const CoefficientSurface& s, const PowerSpeedTable& table,
                           const GainSchedule& schedule, const RefreshPolicy& refresh = {});

// Closed-loop controller as seen by the simulator.
class Controller {
public:
    virtual ~Controller() = default;
    // Called once per sample with the measured augmented state and the true wind
    // (for oracle estimation only).
    virtual ControlOutput step(const AugmentedState& x, double v_true, double ts) = 0;
    // Initializes internal state at a known operating point before the first step.
    virtual void prime(double v, const AugmentedState& x) = 0;
    virtual double wind_estimate() const = 0;
};

class RobustLqController final : public Controller {
public:
    RobustLqController(const TurbineParameters& p, const CoefficientSurface& s, PowerSpeedTable table,
                       GainSchedule schedule, double p_ref, EstimatorConfig estimator = {},
                       RefreshPolicy refresh = {}, std::uint64_t seed = 0);

    void prime(double v, const AugmentedState& x) override;
    ControlOutput step(const AugmentedState& x, double v_true, double ts) override;
    double wind_estimate() const override { return estimator_.estimate(); }
    const ControllerState& state() const { return state_; }

private:
    const TurbineParameters* params_;
    const CoefficientSurface* surface_;
    PowerSpeedTable table_;
    GainSchedule schedule_;
    double p_ref_;
    RefreshPolicy refresh_;
    WindEstimator estimator_;
    ControllerState state_;
};

// Textbook two-loop baseline.
//
// Torque: M_g = min(k_opt omega^2, P_d / (eta omega_ref)) with
// k_opt = rho pi r^5 cp_opt / (2 lambda_opt^3 n_g^3), clamped to the torque bounds.
// Above rated the torque therefore saturates at the constant level that yields
// P_d at the speed set point, and the pitch loop holds the speed there.
// Pitch: PI on omega - omega_ref with omega_ref = LUT(p_ref); gains placed for a
// second-order speed loop (natural frequency 0.6 rad/s, damping 0.7) from the
// pitch sensitivity domega'/dtheta at region-3 equilibria, scheduled on pitch.
// Anti-windup clamps the integrator to the pitch bounds.
struct BaselineGains {
    double k_opt = 0.0;
    std::vector<double> theta_nodes;  // increasing
    std::vector<double> kp;           // rad per rad/s
    std::vector<double> ki;           // rad per rad
    double natural_frequency = 0.6;
    double damping = 0.7;

    double kp_at(double theta) const;
    double ki_at(double theta) const;
};

BaselineGains design_baseline_gains(const TurbineParameters& p, const CoefficientSurface& s,
                                    const PowerSpeedTable& table, double p_ref);

struct BaselineState {
    double pitch_integrator = 0.0;
};

struct BaselineCommand {
    double theta_cmd = 0.0;
    double m_g_cmd = 0.0;
};

BaselineCommand baseline_controller(BaselineState& state, double omega_meas, double theta_meas, double v_hat,
                                    double p_ref, const TurbineParameters& p, const CoefficientSurface& s,
                                    const PowerSpeedTable& table, const BaselineGains& gains, double ts);

class BaselineController final : public Controller {
public:
    BaselineController(const TurbineParameters& p, const CoefficientSurface& s, PowerSpeedTable table, double p_ref,
                       EstimatorConfig estimator = {}, std::uint64_t seed = 0);

    void prime(double v, const AugmentedState& x) override;
    ControlOutput step(const AugmentedState& x, double v_true, double ts) override;
    double wind_estimate() const override { return estimator_.estimate(); }
    const BaselineGains& gains() const { return gains_; }

private:
    const TurbineParameters* params_;
    const CoefficientSurface* surface_;
    PowerSpeedTable table_;
    double p_ref_;
    BaselineGains gains_;
    WindEstimator estimator_;
    BaselineState state_;
};

}  // namespace windlq
