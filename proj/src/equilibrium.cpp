#include "windlq/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "windlq/errors.hpp"

namespace windlq {

double required_cp(const TurbineParameters& p, const ExternalInput& w_s) {
    if (!(w_s.v > 0.0)) {
        throw DomainError("equilibrium", "required_cp needs V > 0");
    }
    return 2.0 * w_s.p_d / (p.rho * std::numbers::pi * p.r * p.r * p.eta * w_s.v * w_s.v * w_s.v);
}

double solve_theta(const CoefficientSurface& surface, double lambda_s, double target_cp, double theta_min,
                   double theta_max) {
    if (!(theta_min < theta_max)) {
        throw ValidationError("equilibrium", "solve_theta needs theta_min < theta_max");
    }
    // Cp is piecewise linear in theta at fixed lambda with breaks on the theta
    // nodes; including the nodes makes the scan see every local extremum.
    std::vector<double> thetas;
    thetas.reserve(kThetaScanSamples + surface.theta_grid().size());
    for (int k = 0; k < kThetaScanSamples; ++k) {
        thetas.push_back(theta_min + (theta_max - theta_min) * k / (kThetaScanSamples - 1));
    }
    thetas.back() = theta_max;
    for (double node : surface.theta_grid()) {
        if (node > theta_min && node < theta_max) thetas.push_back(node);
    }
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

    auto residual = [&](double th) { return surface.cp(lambda_s, th) - target_cp; };

    double f_hi = residual(thetas.back());
    if (std::abs(f_hi) <= kCpRootTol) return thetas.back();
    for (std::size_t k = thetas.size() - 1; k-- > 0;) {
        const double f_lo = residual(thetas[k]);
        if (std::abs(f_lo) > kCpRootTol && (f_lo < 0.0) != (f_hi < 0.0)) {
            double lo = thetas[k];
            double hi = thetas[k + 1];
            double flo = f_lo;
            while (hi - lo > kThetaBisectionTol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = residual(mid);
                if (fm == 0.0) return mid;
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        if (std::abs(f_lo) <= kCpRootTol) return thetas[k];
        f_hi = f_lo;
    }
    throw NoEquilibrium("no pitch angle in [" + std::to_string(theta_min) + ", " + std::to_string(theta_max) +
                        "] gives Cp = " + std::to_string(target_cp) + " at lambda = " + std::to_string(lambda_s));
}

Equilibrium compute_equilibrium(const TurbineParameters& p, const CoefficientSurface& surface,
                                const ExternalInput& w_s) {
    if (!(w_s.v > 0.0)) {
        throw DomainError("equilibrium", "wind speed must be positive");
    }
    if (!(w_s.omega_d >= p.omega_min)) {
        throw DomainError("equilibrium", "desired speed below omega_min");
    }
    if (!(w_s.p_d >= 0.0)) {
        throw DomainError("equilibrium", "desired power must be nonnegative");
    }
    Equilibrium eq;
    eq.w_s = w_s;
    eq.lambda_s = tip_speed_ratio(p, w_s.omega_d, w_s.v);
    eq.theta_s = solve_theta(surface, eq.lambda_s, required_cp(p, w_s), p.theta_min, p.theta_max);
    eq.x_s.omega = w_s.omega_d;
    eq.x_s.v_t = 0.0;
    eq.x_s.z_omega = 0.0;
    eq.x_s.z_p = 0.0;
    eq.x_s.theta = eq.theta_s;
    eq.x_s.m_g = w_s.p_d / (p.eta * w_s.omega_d);
    eq.x_s.x_t = tower_force(p, surface, w_s.omega_d, w_s.v, eq.theta_s) / p.k_t;
    return eq;
}

double scaled_residual(const TurbineParameters& p, const CoefficientSurface& surface, const Equilibrium& eq) {
    const Vec7 r = f_augmented(p, surface, eq.x_s, eq.w_s) + b_matrix() * eq.u_s.to_vector();
    const Vec7 scale = characteristic_scales(p).state;
    return r.cwiseQuotient(scale).cwiseAbs().maxCoeff();
}

}  // namespace windlq
