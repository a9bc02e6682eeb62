#pragma once

#include <Eigen/Dense>

#include "windlq/equilibrium.hpp"

namespace windlq {

struct LinearModel {
    Mat7 a;
    Mat72 b;
    Equilibrium equilibrium;
    // The operating point sits on a cell edge of the coefficient grid; the
    // derivatives follow the larger-lambda / larger-theta tie-break.
    bool on_kink = false;
};

// Jacobian of f_a at (x_s, w_s) from the closed-form entries, with the Cp and CT
// partials taken from the coefficient surface.
LinearModel linearize(const TurbineParameters& p, const CoefficientSurface& surface, const Equilibrium& eq);

struct ControllabilityReport {
    bool controllable = false;
    int rank = 0;
};

// Relative singular-value threshold of the controllability rank test.
inline constexpr double kControllabilityTol = 1e-9;

// Rank of [B, AB, ..., A^{n-1} B]. Rows and columns of the Krylov matrix are
// normalized to unit max-abs first (a diagonal state similarity and a column
// scaling, neither of which changes the rank); the rank then counts singular
// values above kControllabilityTol times the largest one.
ControllabilityReport controllability_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
inline ControllabilityReport controllability_check(const LinearModel& m) { return controllability_check(m.a, m.b); }

// Model in scaled coordinates xi = S_x xi_s, mu = S_u mu_s:
// A_s = S_x^-1 A S_x, B_s = S_x^-1 B S_u.
struct ScaledModel {
    Mat7 a;
    Mat72 b;
};

ScaledModel scale_model(const LinearModel& m, const CharacteristicScales& scales);
// K_phys = S_u K_s S_x^-1
Mat27 unscale_gain(const Mat27& k_scaled, const CharacteristicScales& scales);

}  // namespace windlq
