#include "windlq/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

namespace windlq {

namespace {

bool on_node(const std::vector<double>& grid, double x) {
    return std::binary_search(grid.begin(), grid.end(), x);
}

}  // namespace

LinearModel linearize(const TurbineParameters& p, const CoefficientSurface& surface, const Equilibrium& eq) {
    const double area = std::numbers::pi * p.r * p.r;
    const double v = eq.w_s.v;
    const double omega = eq.x_s.omega;
    const double theta = eq.x_s.theta;
    const double lambda = tip_speed_ratio(p, omega, v);
    const double dlambda_domega = p.r / (p.n_g * v);

    const double cp = surface.cp(lambda, theta);
    const Gradient gcp = surface.cp_gradient(lambda, theta);
    const Gradient gct = surface.ct_gradient(lambda, theta);

    const double k_rotor = p.rho * area * p.n_g * p.n_g / (2.0 * p.j_t) * v * v * v;
    const double k_tower = p.rho * area / (2.0 * p.m_t) * v * v;

    LinearModel m;
    m.equilibrium = eq;
    m.a.setZero();
    // d(Cp/omega)/domega = (dCp/dlambda * dlambda/domega * omega - Cp) / omega^2
    m.a(0, 0) = k_rotor * (gcp.d_lambda * dlambda_domega * omega - cp) / (omega * omega);
    m.a(0, 5) = k_rotor / omega * gcp.d_theta;
    m.a(0, 6) = -p.n_g * p.n_g / p.j_t;
    m.a(1, 2) = 1.0;
    m.a(2, 0) = k_tower * gct.d_lambda * dlambda_domega;
    m.a(2, 1) = -p.k_t / p.m_t;
    m.a(2, 2) = -p.d_t / p.m_t;
    m.a(2, 5) = k_tower * gct.d_theta;
    m.a(3, 0) = -1.0;
    m.a(4, 0) = -p.eta * eq.x_s.m_g;
    m.a(4, 6) = -p.eta * omega;
    m.b = b_matrix();

    m.on_kink = on_node(surface.lambda_grid(), lambda) || on_node(surface.theta_grid(), theta);
    if (m.on_kink) {
        spdlog::debug("linearize: operating point (lambda={}, theta={}) lies on a coefficient grid edge", lambda,
                      theta);
    }
    return m;
}

ControllabilityReport controllability_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::Index n = a.rows();
    const Eigen::Index p = b.cols();
    Eigen::MatrixXd krylov(n, n * p);
    Eigen::MatrixXd block = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        krylov.middleCols(k * p, p) = block;
        block = a * block;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = krylov.row(i).cwiseAbs().maxCoeff();
        if (m > 0.0) krylov.row(i) /= m;
    }
    for (Eigen::Index j = 0; j < krylov.cols(); ++j) {
        const double m = krylov.col(j).cwiseAbs().maxCoeff();
        if (m > 0.0) krylov.col(j) /= m;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(krylov);
    const auto& sv = svd.singularValues();
    ControllabilityReport report;
    if (sv.size() == 0 || sv(0) == 0.0) return report;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > kControllabilityTol * sv(0)) ++report.rank;
    }
    report.controllable = report.rank == n;
    return report;
}

ScaledModel scale_model(const LinearModel& m, const CharacteristicScales& scales) {
    const Eigen::DiagonalMatrix<double, 7> sx(scales.state);
    const Eigen::DiagonalMatrix<double, 7> sx_inv(scales.state.cwiseInverse());
    const Eigen::DiagonalMatrix<double, 2> su(scales.input);
    ScaledModel s;
    s.a = sx_inv * m.a * sx;
    s.b = sx_inv * m.b * su;
    return s;
}

Mat27 unscale_gain(const Mat27& k_scaled, const CharacteristicScales& scales) {
    const Eigen::DiagonalMatrix<double, 7> sx_inv(scales.state.cwiseInverse());
    const Eigen::DiagonalMatrix<double, 2> su(scales.input);
    return su * k_scaled * sx_inv;
}

}  // namespace windlq
