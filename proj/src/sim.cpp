#include "windlq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "windlq/equilibrium.hpp"
#include "windlq/errors.hpp"

namespace windlq {
namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("sim", what);
}

std::size_t step_count(double duration, double ts) {
    return static_cast<std::size_t>(std::llround(duration / ts));
}

bool finite_state(const AugmentedState& x) { return x.to_vector().allFinite(); }

}  // namespace

void WindSpec::validate() const {
    require(mode == Mode::File || (std::isfinite(mean) && mean > 0.0), "wind mean must be positive");
    require(std::isfinite(intensity) && intensity >= 0.0, "turbulence intensity must be nonnegative");
    require(std::isfinite(ramp_rate), "ramp rate must be finite");
    require(std::isfinite(length_scale) && length_scale > 0.0, "turbulence length scale must be positive");
    require(mode != Mode::File || !file.empty(), "file mode needs a wind file");
}

std::vector<double> read_wind_csv(const std::filesystem::path& path, std::vector<double>* times) {
    const auto rows = csv::read_file(path);
    require(rows.size() >= 2, path.string() + ": wind file needs a header and at least one sample");
    require(rows[0].size() == 2 && rows[0][0] == "time_s" && rows[0][1] == "wind_mps",
            path.string() + ":1: header must be `time_s,wind_mps`");
    std::vector<double> t;
    std::vector<double> v;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        require(rows[i].size() == 2, path.string() + ":" + std::to_string(i + 1) + ": expected two columns");
        t.push_back(csv::parse_double(rows[i][0], path, i + 1, 1));
        v.push_back(csv::parse_double(rows[i][1], path, i + 1, 2));
        require(v.back() > 0.0, path.string() + ":" + std::to_string(i + 1) + ": wind speed must be positive");
        if (t.size() >= 2) {
            require(t.back() > t[t.size() - 2], path.string() + ":" + std::to_string(i + 1) + ": time not increasing");
        }
    }
    if (t.size() >= 3) {
        const double dt = t[1] - t[0];
        for (std::size_t i = 2; i < t.size(); ++i) {
            require(std::abs(t[i] - t[i - 1] - dt) <= 1e-9 * std::max(1.0, std::abs(t[i])),
                    path.string() + ":" + std::to_string(i + 2) + ": non-uniform time spacing");
        }
    }
    if (times) *times = std::move(t);
    return v;
}

void write_wind_csv(const std::filesystem::path& path, const std::vector<double>& wind, double ts) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << "time_s,wind_mps\n";
    for (std::size_t k = 0; k < wind.size(); ++k) {
        out << csv::format_double(static_cast<double>(k) * ts) << ',' << csv::format_double(wind[k]) << '\n';
    }
}

std::vector<double> generate_wind(const WindSpec& spec, double duration, double ts, std::uint64_t seed) {
    spec.validate();
    require(ts > 0.0 && duration >= ts, "need ts > 0 and duration >= ts");
    const std::size_t n = step_count(duration, ts);
    std::vector<double> v(n, spec.mean);
    switch (spec.mode) {
        case WindSpec::Mode::Constant:
            break;
        case WindSpec::Mode::Ramp:
            for (std::size_t k = 0; k < n; ++k) v[k] = spec.mean + spec.ramp_rate * static_cast<double>(k) * ts;
            break;
        case WindSpec::Mode::Turbulent: {
            if (spec.intensity == 0.0 || n < 2) break;
            const double a = std::exp(-ts * spec.mean / spec.length_scale);
            const double b = std::sqrt(1.0 - a * a);
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> z(n);
            z[0] = normal(rng);
            for (std::size_t k = 1; k < n; ++k) z[k] = a * z[k - 1] + b * normal(rng);
            const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
            double var = 0.0;
            for (double zk : z) var += (zk - mean) * (zk - mean);
            const double sd = std::sqrt(var / static_cast<double>(n - 1));
            for (std::size_t k = 0; k < n; ++k) v[k] = spec.mean + spec.intensity * spec.mean * (z[k] - mean) / sd;
            break;
        }
        case WindSpec::Mode::File: {
            std::vector<double> t;
            const std::vector<double> data = read_wind_csv(spec.file, &t);
            for (std::size_t k = 0; k < n; ++k) {
                const double tk = static_cast<double>(k) * ts;
                if (tk <= t.front()) {
                    v[k] = data.front();
                } else if (tk >= t.back()) {
                    v[k] = data.back();
                } else {
                    const auto hi = std::upper_bound(t.begin(), t.end(), tk);
                    const auto i = static_cast<std::size_t>(hi - t.begin()) - 1;
                    const double s = (tk - t[i]) / (t[i + 1] - t[i]);
                    v[k] = data[i] + s * (data[i + 1] - data[i]);
                }
            }
            break;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!(v[k] > 0.0)) {
            throw ValidationError("sim", "generated wind is not positive at t = " +
                                             std::to_string(static_cast<double>(k) * ts) + " s");
        }
    }
    return v;
}

SaturationResult apply_saturations(const TurbineParameters& p, double theta_prev, double mg_prev,
                                   const ControlInput& u, double dt) {
    SaturationResult r;
    auto limit = [dt](double level, double rate, double rate_lo, double rate_hi, double lo, double hi,
                      bool& rate_hit, bool& level_hit, double& realized) {
        double q = std::clamp(rate, rate_lo, rate_hi);
        rate_hit = q != rate;
        double next = level + q * dt;
        if (next > hi) {
            next = std::max(hi, level);
            level_hit = true;
        } else if (next < lo) {
            next = std::min(lo, level);
            level_hit = true;
        }
        if (level_hit) q = (next - level) / dt;
        realized = q;
        return next;
    };
    r.theta = limit(theta_prev, u.u1, p.dtheta_min, p.dtheta_max, p.theta_min, p.theta_max, r.pitch_rate_limited,
                    r.pitch_level_limited, r.u_effective.u1);
    r.m_g = limit(mg_prev, u.u2, p.dmg_min, p.dmg_max, p.mg_min, p.mg_max, r.torque_rate_limited,
                  r.torque_level_limited, r.u_effective.u2);
    return r;
}

void SimulationConfig::validate() const {
    require(std::isfinite(ts) && ts > 0.0, "ts must be positive");
    require(integrator_substeps >= 1, "integrator_substeps must be at least 1");
    require(std::isfinite(duration) && duration >= ts, "duration must be at least ts");
    require(std::isfinite(p_ref) && p_ref > 0.0, "p_ref must be positive");
    require(initial_offset.allFinite(), "initial offset must be finite");
    wind.validate();
}

AugmentedState initial_state(const SimulationConfig& config, const TurbineParameters& p,
                             const CoefficientSurface& s, const PowerSpeedTable& table, double v0) {
    if (config.initial_state) return AugmentedState::from_vector(config.initial_state->to_vector() + config.initial_offset);
    const double p_d = desired_power(p, s, config.p_ref, v0);
    const Equilibrium eq = compute_equilibrium(p, s, {v0, desired_speed(table, p_d), p_d});
    return AugmentedState::from_vector(eq.x_s.to_vector() + config.initial_offset);
}

Trajectory simulate(const SimulationConfig& config, const TurbineParameters& p, const CoefficientSurface& s,
                    const PowerSpeedTable& table, Controller& controller) {
    config.validate();
    return simulate(config, p, s, table, controller, generate_wind(config.wind, config.duration, config.ts, config.seed));
}

Trajectory simulate(const SimulationConfig& config, const TurbineParameters& p, const CoefficientSurface& s,
                    const PowerSpeedTable& table, Controller& controller, const std::vector<double>& wind) {
    config.validate();
    const std::size_t n = step_count(config.duration, config.ts);
    require(wind.size() >= n, "wind series shorter than the simulation");

    AugmentedState x = initial_state(config, p, s, table, wind[0]);
    controller.prime(wind[0], x);

    Trajectory tr;
    tr.ts = config.ts;
    for (auto* v : {&tr.time, &tr.wind, &tr.wind_estimate, &tr.power, &tr.power_desired, &tr.omega_desired, &tr.alpha}) {
        v->reserve(n);
    }
    tr.state.reserve(n);
    tr.u_command.reserve(n);
    tr.u_effective.reserve(n);
    tr.saturation.reserve(n);

    const double h = config.ts / config.integrator_substeps;
    const Mat72 b = b_matrix();
    for (std::size_t k = 0; k < n; ++k) {
        const long step = static_cast<long>(k);
        if (!finite_state(x)) throw SimulationAbort(step, "non-finite state");
        if (x.omega < p.omega_min) {
            throw SimulationAbort(step, "generator speed " + std::to_string(x.omega) + " rad/s below omega_min");
        }
        const ControlOutput out = controller.step(x, wind[k], config.ts);
        const ExternalInput w{wind[k], out.w_hat.omega_d, out.w_hat.p_d};

        tr.time.push_back(static_cast<double>(k) * config.ts);
        tr.state.push_back(x);
        tr.u_command.push_back(out.u);
        tr.wind.push_back(wind[k]);
        tr.wind_estimate.push_back(out.w_hat.v);
        tr.power.push_back(electrical_power(p, x.omega, x.m_g));
        tr.power_desired.push_back(out.w_hat.p_d);
        tr.omega_desired.push_back(out.w_hat.omega_d);
        tr.alpha.push_back(out.alpha);

        const double theta0 = x.theta;
        const double mg0 = x.m_g;
        unsigned char sat = 0;
        try {
            for (int j = 0; j < config.integrator_substeps; ++j) {
                const SaturationResult sr = apply_saturations(p, x.theta, x.m_g, out.u, h);
                sat |= (sr.pitch_rate_limited ? kSatPitchRate : 0) | (sr.torque_rate_limited ? kSatTorqueRate : 0) |
                       (sr.pitch_level_limited ? kSatPitchLevel : 0) | (sr.torque_level_limited ? kSatTorqueLevel : 0);
                const Vec7 bu = b * sr.u_effective.to_vector();
                auto f = [&](const Vec7& xv) { return Vec7(f_augmented(p, s, AugmentedState::from_vector(xv), w) + bu); };
                const Vec7 x0 = x.to_vector();
                const Vec7 k1 = f(x0);
                const Vec7 k2 = f(x0 + 0.5 * h * k1);
                const Vec7 k3 = f(x0 + 0.5 * h * k2);
                const Vec7 k4 = f(x0 + h * k3);
                x = AugmentedState::from_vector(x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
                // The actuator states are affine over the sub-interval; pin them
                // to the exactly saturated values.
                x.theta = sr.theta;
                x.m_g = sr.m_g;
            }
        } catch (const DomainError& e) {
            throw SimulationAbort(step, e.what());
        }
        tr.u_effective.push_back({(x.theta - theta0) / config.ts, (x.m_g - mg0) / config.ts});
        tr.saturation.push_back(sat);
    }
    if (!finite_state(x)) throw SimulationAbort(static_cast<long>(n), "non-finite state");
    tr.final_state = x;
    spdlog::debug("simulate: {} steps, final omega {:.6f} rad/s", n, x.omega);
    return tr;
}

const std::vector<const char*> kTrajectoryColumns = {
    "time_s", "omega",  "x_t",    "v_t",    "z_omega", "z_p",      "theta",   "m_g",   "u1_cmd",    "u2_cmd",
    "u1_eff", "u2_eff", "wind",   "wind_hat", "power",  "power_d", "omega_d", "alpha", "saturation"};

void write_trajectory_csv(const Trajectory& tr, std::ostream& out) {
    for (std::size_t c = 0; c < kTrajectoryColumns.size(); ++c) out << (c ? "," : "") << kTrajectoryColumns[c];
    out << '\n';
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const AugmentedState& x = tr.state[k];
        const double row[] = {tr.time[k],
                              x.omega,
                              x.x_t,
                              x.v_t,
                              x.z_omega,
                              x.z_p,
                              x.theta,
                              x.m_g,
                              tr.u_command[k].u1,
                              tr.u_command[k].u2,
                              tr.u_effective[k].u1,
                              tr.u_effective[k].u2,
                              tr.wind[k],
                              tr.wind_estimate[k],
                              tr.power[k],
                              tr.power_desired[k],
                              tr.omega_desired[k],
                              tr.alpha[k]};
        for (double v : row) out << csv::format_double(v) << ',';
        out << static_cast<int>(tr.saturation[k]) << '\n';
    }
}

void write_trajectory_csv(const Trajectory& tr, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    write_trajectory_csv(tr, out);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    require(!rows.empty(), path.string() + ": empty trajectory file");
    require(rows[0].size() == kTrajectoryColumns.size(), path.string() + ":1: wrong number of columns");
    for (std::size_t c = 0; c < kTrajectoryColumns.size(); ++c) {
        require(rows[0][c] == kTrajectoryColumns[c],
                path.string() + ":1: column " + std::to_string(c + 1) + " must be `" + kTrajectoryColumns[c] + "`");
    }
    require(rows.size() >= 2, path.string() + ": trajectory has no rows");
    Trajectory tr;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        require(r.size() == kTrajectoryColumns.size(),
                path.string() + ":" + std::to_string(i + 1) + ": wrong number of columns");
        double v[18];
        for (std::size_t c = 0; c < 18; ++c) v[c] = csv::parse_double(r[c], path, i + 1, c + 1);
        const double sat = csv::parse_double(r[18], path, i + 1, 19);
        require(sat >= 0.0 && sat <= 15.0 && sat == std::floor(sat),
                path.string() + ":" + std::to_string(i + 1) + ":19: saturation flags must be an integer in [0, 15]");
        tr.time.push_back(v[0]);
        tr.state.push_back({v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
        tr.u_command.push_back({v[8], v[9]});
        tr.u_effective.push_back({v[10], v[11]});
        tr.wind.push_back(v[12]);
        tr.wind_estimate.push_back(v[13]);
        tr.power.push_back(v[14]);
        tr.power_desired.push_back(v[15]);
        tr.omega_desired.push_back(v[16]);
        tr.alpha.push_back(v[17]);
        tr.saturation.push_back(static_cast<unsigned char>(sat));
    }
    tr.ts = tr.size() >= 2 ? tr.time[1] - tr.time[0] : 0.0;
    tr.final_state = tr.state.back();
    return tr;
}

}  // namespace windlq
