#pragma once

#include <filesystem>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "windlq/coefficients.hpp"

namespace windlq {

using Vec2 = Eigen::Vector2d;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat72 = Eigen::Matrix<double, 7, 2>;
using Mat27 = Eigen::Matrix<double, 2, 7>;

// Physical constants and actuator bounds of the plant, SI units throughout.
// omega is the generator-side speed; the rotor turns at omega / n_g.
struct TurbineParameters {
    double rho = 1.225;           // air density, kg/m^3
    double r = 65.0;              // rotor radius, m
    double n_g = 97.0;            // gearbox ratio
    double j_t = 3.0e7;           // drive-train inertia, rotor side, kg m^2
    double eta = 0.936;           // gearbox and generator efficiency
    double m_t = 2.5e5;           // tower-top modal mass, kg
    double d_t = 9.4e3;           // tower damping, N s/m
    double k_t = 8.883e5;         // tower stiffness, N/m
    double theta_min = 0.0;       // rad
    double theta_max = 0.5235987755982988;  // 30 deg
    double mg_min = 0.0;          // N m
    double mg_max = 36000.0;      // N m
    double dtheta_min = -0.12217304763960307;  // -7 deg/s
    double dtheta_max = 0.12217304763960307;   // +7 deg/s
    double dmg_min = -15000.0;    // N m/s
    double dmg_max = 15000.0;     // N m/s
    double omega_min = 0.1;       // rad/s
    double p_rated = 3.37e6;      // W
    double omega_rated = 118.7;   // rated generator speed, rad/s
    double v_cutin = 3.0;         // m/s
    double v_cutout = 20.0;       // m/s

    // Throws ValidationError naming the first violated invariant.
    void validate() const;
};

TurbineParameters default_parameters();
TurbineParameters parameters_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TurbineParameters& p);
TurbineParameters load_parameters(const std::filesystem::path& path);

// x = [omega, x_t, v_t, z_omega, z_p, theta, m_g]
struct AugmentedState {
    double omega = 0.0;    // generator speed, rad/s
    double x_t = 0.0;      // tower-top fore-aft position, m
    double v_t = 0.0;      // tower-top velocity, m/s
    double z_omega = 0.0;  // integral speed error, rad
    double z_p = 0.0;      // integral power error, J
    double theta = 0.0;    // pitch, rad
    double m_g = 0.0;      // generator torque, N m

    Vec7 to_vector() const;
    static AugmentedState from_vector(const Vec7& v);
};

// u = [pitch rate (rad/s), torque rate (N m/s)]
struct ControlInput {
    double u1 = 0.0;
    double u2 = 0.0;

    Vec2 to_vector() const { return {u1, u2}; }
};

// w = [V, omega_d, P_d]
struct ExternalInput {
    double v = 0.0;        // wind speed, m/s
    double omega_d = 0.0;  // desired generator speed, rad/s
    double p_d = 0.0;      // desired electrical power, W
};

// Characteristic magnitudes used to scale states and inputs before synthesis,
// to normalize residuals and to size finite-difference steps.
struct CharacteristicScales {
    Vec7 state;
    Vec2 input;
};

// state: omega_rated, 1 m, 1 m/s, omega_rated * 1 s, p_rated * 1 s,
// theta_max - theta_min, mg_max. input: dtheta_max, dmg_max.
CharacteristicScales characteristic_scales(const TurbineParameters& p);

double wind_power(const TurbineParameters& p, double v);
// r * omega / (n_g * v). Throws DomainError for v <= 0.
double tip_speed_ratio(const TurbineParameters& p, double omega, double v);
// Aerodynamic torque on the rotor shaft. Throws DomainError for omega < omega_min or v <= 0.
double rotor_torque(const TurbineParameters& p, const CoefficientSurface& s, double omega, double v, double theta);
double electrical_power(const TurbineParameters& p, double omega, double m_g);
double tower_force(const TurbineParameters& p, const CoefficientSurface& s, double omega, double v, double theta);

// Drift term of the augmented model; the full derivative is f_augmented + B u.
Vec7 f_augmented(const TurbineParameters& p, const CoefficientSurface& s, const AugmentedState& x,
                 const ExternalInput& w);
Mat72 b_matrix();

}  // namespace windlq
