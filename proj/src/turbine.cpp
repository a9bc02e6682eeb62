#include "windlq/turbine.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "windlq/errors.hpp"

namespace windlq {

namespace {

constexpr double pi = std::numbers::pi;

#define WINDLQ_PARAM_FIELDS(X) \
    X(rho)                     \
    X(r)                       \
    X(n_g)                     \
    X(j_t)                     \
    X(eta)                     \
    X(m_t)                     \
    X(d_t)                     \
    X(k_t)                     \
    X(theta_min)               \
    X(theta_max)               \
    X(mg_min)                  \
    X(mg_max)                  \
    X(dtheta_min)              \
    X(dtheta_max)              \
    X(dmg_min)                 \
    X(dmg_max)                 \
    X(omega_min)               \
    X(p_rated)                 \
    X(omega_rated)             \
    X(v_cutin)                 \
    X(v_cutout)

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("turbine", what);
}

}  // namespace

void TurbineParameters::validate() const {
#define X(name) require(std::isfinite(name), #name " must be finite");
    WINDLQ_PARAM_FIELDS(X)
#undef X
    require(rho > 0.0, "rho must be positive");
    require(r > 0.0, "r must be positive");
    require(n_g > 0.0, "n_g must be positive");
    require(j_t > 0.0, "j_t must be positive");
    require(m_t > 0.0, "m_t must be positive");
    require(d_t > 0.0, "d_t must be positive");
    require(k_t > 0.0, "k_t must be positive");
    require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
    require(theta_min < theta_max, "theta_min must be below theta_max");
    require(mg_min < mg_max, "mg_min must be below mg_max");
    require(dtheta_min < dtheta_max, "dtheta_min must be below dtheta_max");
    require(dmg_min < dmg_max, "dmg_min must be below dmg_max");
    require(omega_min > 0.0, "omega_min must be positive");
    require(p_rated > 0.0, "p_rated must be positive");
    require(omega_rated > omega_min, "omega_rated must exceed omega_min");
    require(v_cutin > 0.0 && v_cutin < v_cutout, "need 0 < v_cutin < v_cutout");
}

TurbineParameters default_parameters() { return TurbineParameters{}; }

TurbineParameters parameters_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ValidationError("turbine", "parameters must be a JSON object");
    }
    static const std::set<std::string> known = {
#define X(name) #name,
        WINDLQ_PARAM_FIELDS(X)
#undef X
    };
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw ValidationError("turbine", "/" + key + ": unknown field");
        }
        if (!value.is_number()) {
            throw ValidationError("turbine", "/" + key + ": expected a number");
        }
    }
    TurbineParameters p;
#define X(name)                                                          \
    if (!j.contains(#name)) {                                            \
        throw ValidationError("turbine", "/" #name ": missing field");   \
    }                                                                    \
    p.name = j.at(#name).get<double>();
    WINDLQ_PARAM_FIELDS(X)
#undef X
    p.validate();
    return p;
}

nlohmann::json to_json(const TurbineParameters& p) {
    nlohmann::json j;
#define X(name) j[#name] = p.name;
    WINDLQ_PARAM_FIELDS(X)
#undef X
    return j;
}

TurbineParameters load_parameters(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("turbine", "cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("turbine", path.string() + ": " + e.what());
    }
    return parameters_from_json(j);
}

Vec7 AugmentedState::to_vector() const {
    Vec7 v;
    v << omega, x_t, v_t, z_omega, z_p, theta, m_g;
    return v;
}

AugmentedState AugmentedState::from_vector(const Vec7& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
}

CharacteristicScales characteristic_scales(const TurbineParameters& p) {
    CharacteristicScales s;
    s.state << p.omega_rated, 1.0, 1.0, p.omega_rated, p.p_rated, p.theta_max - p.theta_min, p.mg_max;
    s.input << p.dtheta_max, p.dmg_max;
    return s;
}

double wind_power(const TurbineParameters& p, double v) { return 0.5 * p.rho * pi * p.r * p.r * v * v * v; }

double tip_speed_ratio(const TurbineParameters& p, double omega, double v) {
    if (!(v > 0.0)) {
        throw DomainError("turbine", "tip_speed_ratio needs v > 0, got " + std::to_string(v));
    }
    return p.r * omega / (p.n_g * v);
}

double rotor_torque(const TurbineParameters& p, const CoefficientSurface& s, double omega, double v, double theta) {
    if (!(omega >= p.omega_min)) {
        throw DomainError("turbine", "omega " + std::to_string(omega) + " below omega_min");
    }
    const double lambda = tip_speed_ratio(p, omega, v);
    const double omega_rotor = omega / p.n_g;
    return wind_power(p, v) * s.cp(lambda, theta) / omega_rotor;
}

double electrical_power(const TurbineParameters& p, double omega, double m_g) { return p.eta * omega * m_g; }

double tower_force(const TurbineParameters& p, const CoefficientSurface& s, double omega, double v, double theta) {
    const double lambda = tip_speed_ratio(p, omega, v);
    return 0.5 * p.rho * pi * p.r * p.r * v * v * s.ct(lambda, theta);
}

Vec7 f_augmented(const TurbineParameters& p, const CoefficientSurface& s, const AugmentedState& x,
                 const ExternalInput& w) {
    if (!(x.omega >= p.omega_min)) {
        throw DomainError("turbine", "omega " + std::to_string(x.omega) + " below omega_min");
    }
    if (!(w.v > 0.0)) {
        throw DomainError("turbine", "wind speed must be positive");
    }
    const double area = pi * p.r * p.r;
    const double lambda = p.r * x.omega / (p.n_g * w.v);
    const double v2 = w.v * w.v;
    const double cp = s.cp(lambda, x.theta);
    const double ct = s.ct(lambda, x.theta);
    const double ng2_j = p.n_g * p.n_g / p.j_t;

    Vec7 dx;
    dx(0) = 0.5 * p.rho * area * ng2_j * v2 * w.v / x.omega * cp - ng2_j * x.m_g;
    dx(1) = x.v_t;
    dx(2) = (0.5 * p.rho * area * v2 * ct - p.d_t * x.v_t - p.k_t * x.x_t) / p.m_t;
    dx(3) = w.omega_d - x.omega;
    dx(4) = w.p_d - p.eta * x.omega * x.m_g;
    dx(5) = 0.0;
    dx(6) = 0.0;
    return dx;
}

Mat72 b_matrix() {
    Mat72 b = Mat72::Zero();
    b(5, 0) = 1.0;
    b(6, 1) = 1.0;
    return b;
}

}  // namespace windlq
