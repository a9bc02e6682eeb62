#pragma once

#include "windlq/coefficients.hpp"
#include "windlq/turbine.hpp"

namespace windlq {

// Operating point (x_s, u_s, w_s) of the augmented model for a constant external input.
struct Equilibrium {
    AugmentedState x_s;
    ControlInput u_s;  // always zero
    ExternalInput w_s;
    double lambda_s = 0.0;
    double theta_s = 0.0;
};

// Power coefficient the rotor must deliver so that P = P_d at wind speed V:
// 2 P_d / (rho pi r^2 eta V^3).
double required_cp(const TurbineParameters& p, const ExternalInput& w_s);

inline constexpr int kThetaScanSamples = 2000;
inline constexpr double kThetaBisectionTol = 1e-12;
// Absolute slack on Cp under which a scan sample counts as an exact root.
inline constexpr double kCpRootTol = 1e-12;

// Largest theta in [theta_min, theta_max] with Cp(lambda_s, theta) = target_cp.
// Scans 2000 uniform samples merged with the surface's theta nodes, then bisects
// the highest sign-change bracket to 1e-12 rad. Throws NoEquilibrium if no root exists.
double solve_theta(const CoefficientSurface& surface, double lambda_s, double target_cp, double theta_min,
                   double theta_max);

// Integrator states z_omega, z_p are free at equilibrium and set to 0.
Equilibrium compute_equilibrium(const TurbineParameters& p, const CoefficientSurface& surface,
                                const ExternalInput& w_s);

// max_i |r_i| / scale_i of f_a + B u over the characteristic state scales (per second).
double scaled_residual(const TurbineParameters& p, const CoefficientSurface& surface, const Equilibrium& eq);

}  // namespace windlq
