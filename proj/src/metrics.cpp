#include "windlq/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "windlq/errors.hpp"

namespace windlq {

std::vector<double> turning_points(const std::vector<double>& signal) {
    std::vector<double> pts;
    for (double v : signal) {
        if (!pts.empty() && v == pts.back()) continue;
        if (pts.size() >= 2) {
            const double a = pts[pts.size() - 2];
            const double b = pts.back();
            // b is not an extremum if the signal keeps moving in the same direction.
            if ((b - a) * (v - b) > 0.0) pts.pop_back();
        }
        pts.push_back(v);
    }
    return pts;
}

CycleSet rainflow(const std::vector<double>& signal) {
    CycleSet cycles;
    std::vector<double> stack;
    for (double pt : turning_points(signal)) {
        stack.push_back(pt);
        while (stack.size() >= 4) {
            const std::size_t n = stack.size();
            const double a = stack[n - 4];
            const double b = stack[n - 3];
            const double c = stack[n - 2];
            const double d = stack[n - 1];
            const double x = std::abs(c - b);
            if (x <= std::abs(b - a) && x <= std::abs(d - c)) {
                cycles.push_back({x, 0.5 * (b + c), 1.0});
                stack.erase(stack.end() - 3, stack.end() - 1);
            } else {
                break;
            }
        }
    }
    for (std::size_t i = 1; i < stack.size(); ++i) {
        cycles.push_back({std::abs(stack[i] - stack[i - 1]), 0.5 * (stack[i] + stack[i - 1]), 0.5});
    }
    return cycles;
}

void DelSpec::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ValidationError("metrics", what);
    };
    require(std::isfinite(woehler_exponent) && woehler_exponent >= 1.0, "Woehler exponent must be at least 1");
    require(std::isfinite(n_ref) && n_ref > 0.0, "n_ref must be positive");
    require(std::isfinite(t_sim) && t_sim > 0.0, "t_sim must be positive");
    require(std::isfinite(t_life) && t_life >= t_sim, "t_life must be at least t_sim");
}

double damage_equivalent_load(const CycleSet& cycles, const DelSpec& spec) {
    spec.validate();
    if (cycles.empty()) return 0.0;
    const double m = spec.woehler_exponent;
    double sum = 0.0;
    for (const Cycle& c : cycles) sum += c.count * std::pow(c.range, m);
    return std::pow(spec.t_life / spec.t_sim * sum / spec.n_ref, 1.0 / m);
}

double rms_tracking_error(const Trajectory& traj, std::size_t first) {
    if (first >= traj.size()) return 0.0;
    double sum = 0.0;
    for (std::size_t k = first; k < traj.size(); ++k) {
        const double e = traj.power[k] - traj.power_desired[k];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(traj.size() - first));
}

RateStatistics rate_statistics(const Trajectory& traj, std::size_t first) {
    RateStatistics r;
    if (traj.ts <= 0.0) return r;
    for (std::size_t k = first; k + 1 <= traj.size(); ++k) {
        const AugmentedState& next = k + 1 < traj.size() ? traj.state[k + 1] : traj.final_state;
        r.max_pitch_rate = std::max(r.max_pitch_rate, std::abs(next.theta - traj.state[k].theta) / traj.ts);
        r.max_torque_rate = std::max(r.max_torque_rate, std::abs(next.m_g - traj.state[k].m_g) / traj.ts);
    }
    return r;
}

std::map<std::string, std::vector<double>> load_proxies(const Trajectory& traj, const TurbineParameters& p,
                                                         const CoefficientSurface& s, double h_ref) {
    std::map<std::string, std::vector<double>> out;
    auto& tower = out["tower_moment"];
    auto& shaft = out["shaft_torque"];
    auto& thrust = out["thrust"];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const AugmentedState& x = traj.state[k];
        tower.push_back(h_ref * (p.k_t * x.x_t + p.d_t * x.v_t));
        shaft.push_back(x.m_g);
        thrust.push_back(tower_force(p, s, x.omega, traj.wind[k], x.theta));
    }
    return out;
}

double default_woehler_exponent(const std::string& channel) { return channel == "thrust" ? 10.0 : 4.0; }

MetricsReport evaluate_metrics(const Trajectory& traj, const TurbineParameters& p, const CoefficientSurface& s,
                               const std::map<std::string, DelSpec>& del_specs, double settle, double h_ref) {
    MetricsReport m;
    m.settle_rows = traj.ts > 0.0 ? std::min(traj.size(), static_cast<std::size_t>(std::llround(settle / traj.ts)))
                                  : 0;
    m.rms_tracking_error = rms_tracking_error(traj, m.settle_rows);
    m.rates = rate_statistics(traj);
    m.t_sim = static_cast<double>(traj.size() - m.settle_rows) * traj.ts;
    if (m.t_sim <= 0.0) return m;
    for (const auto& [name, series] : load_proxies(traj, p, s, h_ref)) {
        DelSpec spec;
        spec.woehler_exponent = default_woehler_exponent(name);
        if (auto it = del_specs.find(name); it != del_specs.end()) spec = it->second;
        spec.t_sim = m.t_sim;
        const std::vector<double> window(series.begin() + static_cast<std::ptrdiff_t>(m.settle_rows), series.end());
        m.del[name] = damage_equivalent_load(rainflow(window), spec);
        m.woehler[name] = spec.woehler_exponent;
    }
    return m;
}

nlohmann::json to_json(const MetricsReport& m) {
    nlohmann::json del = nlohmann::json::object();
    for (const auto& [name, value] : m.del) {
        del[name] = {{"del", value}, {"woehler_exponent", m.woehler.at(name)}};
    }
    return {{"rms_tracking_error_w", m.rms_tracking_error},
            {"max_pitch_rate_rad_s", m.rates.max_pitch_rate},
            {"max_torque_rate_nm_s", m.rates.max_torque_rate},
            {"evaluated_duration_s", m.t_sim},
            {"settle_rows", m.settle_rows},
            {"del", del}};
}

}  // namespace windlq
