#include "windlq/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <spdlog/spdlog.h>

#include "windlq/errors.hpp"
#include "windlq/linearize.hpp"

namespace windlq {
namespace {

constexpr double pi = std::numbers::pi;

double interp_clamped(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto hi = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<std::size_t>(hi - xs.begin()) - 1;
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + t * (ys[i + 1] - ys[i]);
}

double power_constant(const TurbineParameters& p, const CoefficientSurface& s) {
    return 0.5 * p.rho * pi * p.r * p.r * p.eta * s.cp_opt();
}

}  // namespace

void PowerSpeedTable::validate(const TurbineParameters& p) const {
    auto fail = [](const std::string& what) { throw ValidationError("control", "power-speed table: " + what); };
    if (p_grid.size() < 2) fail("needs at least two nodes");
    if (omega_grid.size() != p_grid.size() || v_grid.size() != p_grid.size()) fail("grid sizes differ");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (!std::isfinite(p_grid[i]) || !std::isfinite(omega_grid[i])) fail("non-finite node");
        if (omega_grid[i] < p.omega_min || omega_grid[i] > p.omega_rated) fail("speed outside [omega_min, omega_rated]");
        if (i > 0 && !(p_grid[i] > p_grid[i - 1])) fail("power grid not strictly increasing");
        if (i > 0 && omega_grid[i] < omega_grid[i - 1]) fail("speed grid decreasing");
    }
    if (p_grid.front() < 0.0) fail("negative power node");
}

double available_power(const TurbineParameters& p, const CoefficientSurface& s, double v) {
    return power_constant(p, s) * v * v * v;
}

double desired_power(const TurbineParameters& p, const CoefficientSurface& s, double p_ref, double v_hat) {
    return std::min(p_ref, available_power(p, s, v_hat));
}

double desired_speed(const PowerSpeedTable& table, double p_d) {
    return interp_clamped(table.p_grid, table.omega_grid, p_d);
}

double region_boundary_speed(const TurbineParameters& p, const CoefficientSurface& s, double p_ref) {
    return std::cbrt(p_ref / power_constant(p, s));
}

PowerSpeedTable generate_power_speed_table(const TurbineParameters& p, const CoefficientSurface& s, double dv) {
    if (!(dv > 0.0)) throw ValidationError("control", "table spacing must be positive");
    const double lambda_opt = s.optimum().lambda;
    auto speed_for = [&](double v) {
        return std::clamp(p.n_g * lambda_opt * v / p.r, p.omega_min, p.omega_rated);
    };
    // Wind speed where the optimal-tip-speed law hits the rated speed or the
    // available power hits p_rated, whichever comes first.
    const double v_top = std::min(p.omega_rated * p.r / (p.n_g * lambda_opt), region_boundary_speed(p, s, p.p_rated));

    PowerSpeedTable t;
    for (int k = 0;; ++k) {
        const double v = k * dv;
        if (v >= v_top) break;
        t.v_grid.push_back(v);
        t.p_grid.push_back(available_power(p, s, v));
        t.omega_grid.push_back(speed_for(v));
    }
    t.v_grid.push_back(v_top);
    t.p_grid.push_back(available_power(p, s, v_top));
    t.omega_grid.push_back(speed_for(v_top));
    if (p.p_rated > t.p_grid.back() * (1.0 + 1e-12)) {
        t.v_grid.push_back(v_top);
        t.p_grid.push_back(p.p_rated);
        t.omega_grid.push_back(p.omega_rated);
    }
    t.validate(p);
    return t;
}

double compute_alpha(double v_hat, double v_d, double delta_v) {
    if (!(delta_v > 0.0)) return v_hat < v_d ? 1.0 : 0.0;
    return std::clamp((v_d + delta_v - v_hat) / (2.0 * delta_v), 0.0, 1.0);
}

Mat27 blended_gain(const GainSchedule& schedule, double alpha) {
    return alpha * schedule.k2 + (1.0 - alpha) * schedule.k3;
}

std::optional<double> invert_rotor_torque(const TurbineParameters& p, const CoefficientSurface& s, double omega,
                                          double theta, double torque, double v_lo, double v_hi, double tol,
                                          int scan_points) {
    if (!(v_hi > v_lo) || !(v_lo > 0.0) || scan_points < 1) {
        throw ValidationError("control", "invalid wind search interval");
    }
    auto g = [&](double v) { return rotor_torque(p, s, omega, v, theta) - torque; };
    double a = v_lo;
    double ga = g(a);
    if (ga == 0.0) return a;
    for (int i = 1; i <= scan_points; ++i) {
        double b = v_lo + (v_hi - v_lo) * i / scan_points;
        const double gb = g(b);
        if (gb == 0.0) return b;
        if ((ga < 0.0) != (gb < 0.0)) {
            while (b - a > tol) {
                const double m = 0.5 * (a + b);
                const double gm = g(m);
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        a = b;
        ga = gb;
    }
    return std::nullopt;
}

WindEstimator::WindEstimator(const TurbineParameters& p, const CoefficientSurface& s, EstimatorConfig config,
                             std::uint64_t seed)
    : params_(&p), surface_(&s), config_(config), rng_(seed) {
    if (!(config_.time_constant > 0.0) || !(config_.tolerance > 0.0) || config_.noise_std < 0.0 ||
        config_.scan_points < 1) {
        throw ValidationError("control", "invalid estimator configuration");
    }
    estimate_ = p.v_cutin;
}

void WindEstimator::reset(double v_estimate, double omega, double domega_filtered) {
    estimate_ = v_estimate;
    omega_prev_ = omega;
    domega_filt_ = domega_filtered;
    primed_ = true;
}

double WindEstimator::update(double omega_meas, double m_g_applied, double theta_applied, double dt, double v_true) {
    const TurbineParameters& p = *params_;
    if (config_.mode == EstimatorConfig::Mode::Oracle) {
        estimate_ = v_true + config_.noise_std * noise_(rng_);
        return estimate_;
    }
    const double raw = primed_ ? (omega_meas - omega_prev_) / dt : 0.0;
    domega_filt_ += dt / (config_.time_constant + dt) * (raw - domega_filt_);
    omega_prev_ = omega_meas;
    primed_ = true;
    if (omega_meas < p.omega_min) return estimate_;

    const double m_r_hat = p.j_t / p.n_g * domega_filt_ + p.n_g * m_g_applied;
    const auto v = invert_rotor_torque(p, *surface_, omega_meas, theta_applied, m_r_hat, p.v_cutin, p.v_cutout,
                                       config_.tolerance, config_.scan_points);
    if (v) {
        estimate_ = *v;
    } else if (rotor_torque(p, *surface_, omega_meas, p.v_cutout, theta_applied) < m_r_hat) {
        estimate_ = p.v_cutout;
    } else if (rotor_torque(p, *surface_, omega_meas, p.v_cutin, theta_applied) > m_r_hat) {
        estimate_ = p.v_cutin;
    }
    return estimate_;
}

ControlOutput control_step(ControllerState& state, const AugmentedState& x, double v_hat, double p_ref,
                           const TurbineParameters& p, const CoefficientSurface& s, const PowerSpeedTable& table,
                           const GainSchedule& schedule, const RefreshPolicy& refresh) {
    const double p_d = desired_power(p, s, p_ref, v_hat);
    const double omega_d = desired_speed(table, p_d);
    const double alpha = compute_alpha(v_hat, region_boundary_speed(p, s, p_ref), schedule.delta_v);

    const bool stale = !state.has_equilibrium || std::abs(v_hat - state.equilibrium.w_s.v) > refresh.wind ||
                       std::abs(p_d - state.equilibrium.w_s.p_d) > refresh.power_fraction * p.p_rated;
    bool accepted = true;
    if (stale) {
        try {
            state.equilibrium = compute_equilibrium(p, s, {v_hat, omega_d, p_d});
            state.has_equilibrium = true;
        } catch (const NoEquilibrium& e) {
            accepted = false;
            ++state.failed_refreshes;
            spdlog::debug("control: holding equilibrium at V={:.3f} ({})", state.equilibrium.w_s.v, e.what());
        } catch (const DomainError& e) {
            accepted = false;
            ++state.failed_refreshes;
            spdlog::debug("control: holding equilibrium ({})", e.what());
        }
    }
    if (accepted) {
        state.k = blended_gain(schedule, alpha);
        state.alpha = alpha;
    }

    ControlOutput out;
    out.w_hat = {v_hat, omega_d, p_d};
    out.alpha = state.alpha;
    if (state.has_equilibrium) {
        const Vec2 u = state.k * (x.to_vector() - state.equilibrium.x_s.to_vector());
        out.u = {u(0), u(1)};
    }
    return out;
}

RobustLqController::RobustLqController(const TurbineParameters& p, const CoefficientSurface& s,
                                       PowerSpeedTable table, GainSchedule schedule, double p_ref,
                                       EstimatorConfig estimator, RefreshPolicy refresh, std::uint64_t seed)
    : params_(&p),
      surface_(&s),
      table_(std::move(table)),
      schedule_(std::move(schedule)),
      p_ref_(p_ref),
      refresh_(refresh),
      estimator_(p, s, estimator, seed) {
    table_.validate(p);
    if (!(p_ref > 0.0) || p_ref > p.p_rated) throw ValidationError("control", "p_ref must lie in (0, p_rated]");
}

void RobustLqController::prime(double v, const AugmentedState& x) { estimator_.reset(v, x.omega); }

ControlOutput RobustLqController::step(const AugmentedState& x, double v_true, double ts) {
    const double v_hat = estimator_.update(x.omega, x.m_g, x.theta, ts, v_true);
    return control_step(state_, x, v_hat, p_ref_, *params_, *surface_, table_, schedule_, refresh_);
}

double BaselineGains::kp_at(double theta) const { return interp_clamped(theta_nodes, kp, theta); }
double BaselineGains::ki_at(double theta) const { return interp_clamped(theta_nodes, ki, theta); }

BaselineGains design_baseline_gains(const TurbineParameters& p, const CoefficientSurface& s,
                                    const PowerSpeedTable& table, double p_ref) {
    BaselineGains g;
    const OptimalPoint& opt = s.optimum();
    g.k_opt = p.rho * pi * std::pow(p.r, 5) * opt.cp / (2.0 * std::pow(opt.lambda, 3) * std::pow(p.n_g, 3));

    const double omega_ref = desired_speed(table, p_ref);
    const double v_lo = region_boundary_speed(p, s, p_ref) + 0.5;
    constexpr int kNodes = 24;
    std::vector<std::pair<double, double>> sens;  // (theta_s, domega'/dtheta)
    for (int i = 0; i < kNodes; ++i) {
        const double v = v_lo + (p.v_cutout - v_lo) * i / (kNodes - 1);
        try {
            const Equilibrium eq = compute_equilibrium(p, s, {v, omega_ref, p_ref});
            const double a16 = linearize(p, s, eq).a(0, 5);
            if (a16 < 0.0) sens.emplace_back(eq.theta_s, a16);
        } catch (const NoEquilibrium&) {
        }
    }
    std::sort(sens.begin(), sens.end());
    sens.erase(std::unique(sens.begin(), sens.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               sens.end());
    if (sens.size() < 2) throw ValidationError("control", "baseline pitch schedule needs two region-3 equilibria");
    const double wn = g.natural_frequency;
    for (const auto& [theta, a16] : sens) {
        g.theta_nodes.push_back(theta);
        g.kp.push_back(-2.0 * g.damping * wn / a16);
        g.ki.push_back(-wn * wn / a16);
    }
    return g;
}

BaselineCommand baseline_controller(BaselineState& state, double omega_meas, double theta_meas, double v_hat,
                                    double p_ref, const TurbineParameters& p, const CoefficientSurface& s,
                                    const PowerSpeedTable& table, const BaselineGains& gains, double ts) {
    BaselineCommand cmd;
    const double omega = std::max(omega_meas, 0.0);
    const double p_d = desired_power(p, s, p_ref, v_hat);
    const double omega_ref = desired_speed(table, p_ref);
    cmd.m_g_cmd = std::clamp(std::min(gains.k_opt * omega * omega, p_d / (p.eta * omega_ref)), p.mg_min, p.mg_max);

    const double e = omega_meas - omega_ref;
    state.pitch_integrator =
        std::clamp(state.pitch_integrator + gains.ki_at(theta_meas) * e * ts, p.theta_min, p.theta_max);
    cmd.theta_cmd = std::clamp(state.pitch_integrator + gains.kp_at(theta_meas) * e, p.theta_min, p.theta_max);
    return cmd;
}

BaselineController::BaselineController(const TurbineParameters& p, const CoefficientSurface& s,
                                       PowerSpeedTable table, double p_ref, EstimatorConfig estimator,
                                       std::uint64_t seed)
    : params_(&p),
      surface_(&s),
      table_(std::move(table)),
      p_ref_(p_ref),
      gains_(design_baseline_gains(p, s, table_, p_ref)),
      estimator_(p, s, estimator, seed) {
    if (!(p_ref > 0.0) || p_ref > p.p_rated) throw ValidationError("control", "p_ref must lie in (0, p_rated]");
}

void BaselineController::prime(double v, const AugmentedState& x) {
    estimator_.reset(v, x.omega);
    state_.pitch_integrator = std::clamp(x.theta, params_->theta_min, params_->theta_max);
}

ControlOutput BaselineController::step(const AugmentedState& x, double v_true, double ts) {
    const double v_hat = estimator_.update(x.omega, x.m_g, x.theta, ts, v_true);
    const BaselineCommand cmd =
        baseline_controller(state_, x.omega, x.theta, v_hat, p_ref_, *params_, *surface_, table_, gains_, ts);
    ControlOutput out;
    out.u = {(cmd.theta_cmd - x.theta) / ts, (cmd.m_g_cmd - x.m_g) / ts};
    const double p_d = desired_power(*params_, *surface_, p_ref_, v_hat);
    out.w_hat = {v_hat, desired_speed(table_, p_d), p_d};
    return out;
}

}  // namespace windlq
