#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "common.hpp"
#include "windlq/control.hpp"
#include "windlq/errors.hpp"
#include "windlq/sim.hpp"

using namespace windlq;
using testing::params;
using testing::surface;
using testing::table;

namespace {

GainSchedule random_schedule(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    GainSchedule s;
    for (int i = 0; i < 14; ++i) {
        s.k2.data()[i] = g(rng);
        s.k3.data()[i] = g(rng);
    }
    return s;
}

EstimatorConfig oracle_estimator() {
    EstimatorConfig c;
    c.mode = EstimatorConfig::Mode::Oracle;
    return c;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("desired power") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    const double hand = 0.5 * 1.225 * std::numbers::pi * 65.0 * 65.0 * 0.936 * s.cp_opt() * 216.0;
    CHECK(desired_power(p, s, p.p_rated, 6.0) == doctest::Approx(hand).epsilon(1e-14));
    CHECK(desired_power(p, s, p.p_rated, 25.0) == p.p_rated);
    CHECK(desired_power(p, s, 2e6, 25.0) == 2e6);
    // Nondecreasing in the wind estimate.
    double prev = 0.0;
    for (double v = 0.5; v < 25.0; v += 0.25) {
        const double pd = desired_power(p, s, p.p_rated, v);
        CHECK(pd >= prev);
        prev = pd;
    }
}

TEST_CASE("power-speed table") {
    const TurbineParameters& p = params();
    const PowerSpeedTable& t = table();
    CHECK_NOTHROW(t.validate(p));
    CHECK(t.p_grid.back() == doctest::Approx(p.p_rated).epsilon(1e-12));
    CHECK(t.omega_grid.back() == doctest::Approx(p.omega_rated).epsilon(1e-12));
    for (std::size_t i = 1; i < t.p_grid.size(); ++i) {
        CHECK(t.p_grid[i] > t.p_grid[i - 1]);
        CHECK(t.omega_grid[i] >= t.omega_grid[i - 1]);
    }
    // Nodes follow the optimal tip-speed ratio where it is not clamped.
    for (std::size_t i = 0; i < t.p_grid.size(); ++i) {
        const double omega = p.n_g * surface().optimum().lambda * t.v_grid[i] / p.r;
        if (omega > p.omega_min && omega < p.omega_rated) CHECK(t.omega_grid[i] == doctest::Approx(omega));
    }
    CHECK(desired_speed(t, -1.0) == t.omega_grid.front());
    CHECK(desired_speed(t, 2.0 * p.p_rated) == t.omega_grid.back());
    const std::size_t mid = t.p_grid.size() / 2;
    CHECK(desired_speed(t, t.p_grid[mid]) == t.omega_grid[mid]);
    CHECK(desired_speed(t, 0.5 * (t.p_grid[mid] + t.p_grid[mid + 1])) ==
          doctest::Approx(0.5 * (t.omega_grid[mid] + t.omega_grid[mid + 1])));
    CHECK_THROWS_AS(generate_power_speed_table(p, surface(), 0.0), ValidationError);
    PowerSpeedTable bad = t;
    bad.p_grid[1] = bad.p_grid[0];
    CHECK_THROWS_AS(bad.validate(p), ValidationError);
}

TEST_CASE("region boundary speed") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    const double vd = region_boundary_speed(p, s, p.p_rated);
    CHECK(available_power(p, s, vd) == doctest::Approx(p.p_rated).epsilon(1e-12));
    CHECK(region_boundary_speed(p, s, 8.0 * 1e6) == doctest::Approx(2.0 * region_boundary_speed(p, s, 1e6)));
    // Bisection oracle on the desired-power crossover.
    double lo = 1.0, hi = 30.0;
    while (hi - lo > 1e-12) {
        const double m = 0.5 * (lo + hi);
        (available_power(p, s, m) < p.p_rated ? lo : hi) = m;
    }
    CHECK(vd == doctest::Approx(lo).epsilon(1e-10));
}

TEST_CASE("blending weight") {
    CHECK(compute_alpha(9.5, 10.0, 0.5) == 1.0);
    CHECK(compute_alpha(3.0, 10.0, 0.5) == 1.0);
    CHECK(compute_alpha(10.0, 10.0, 0.5) == doctest::Approx(0.5));
    CHECK(compute_alpha(10.5, 10.0, 0.5) == 0.0);
    CHECK(compute_alpha(20.0, 10.0, 0.5) == 0.0);
    CHECK(compute_alpha(9.9, 10.0, 0.0) == 1.0);
    CHECK(compute_alpha(10.1, 10.0, 0.0) == 0.0);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(8.0, 12.0);
    for (int k = 0; k < 1000; ++k) {
        const double a = u(rng), b = u(rng);
        const double da = std::abs(compute_alpha(a, 10.0, 0.5) - compute_alpha(b, 10.0, 0.5));
        CHECK(da <= std::abs(a - b) / (2.0 * 0.5) + 1e-15);
        const double al = compute_alpha(a, 10.0, 0.5);
        CHECK(al >= 0.0);
        CHECK(al <= 1.0);
    }
}

TEST_CASE("blended gain") {
    const GainSchedule s = random_schedule(43);
    CHECK(blended_gain(s, 1.0) == s.k2);
    CHECK(blended_gain(s, 0.0) == s.k3);
    CHECK(blended_gain(s, 0.25).isApprox(0.25 * s.k2 + 0.75 * s.k3, 1e-15));
}

TEST_CASE("control step") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    const GainSchedule sched = random_schedule(47);
    const double v_hat = 11.2;
    ControllerState st;
    control_step(st, {}, v_hat, p.p_rated, p, s, table(), sched);
    REQUIRE(st.has_equilibrium);

    SUBCASE("zero command at the operating point") {
        const ControlOutput out = control_step(st, st.equilibrium.x_s, v_hat, p.p_rated, p, s, table(), sched);
        CHECK(out.u.u1 == 0.0);
        CHECK(out.u.u2 == 0.0);
    }
    SUBCASE("command is linear in the deviation") {
        Vec7 d;
        d << 1.0, 0.1, 0.05, 2.0, 1e5, 0.01, 500.0;
        const Vec7 xs = st.equilibrium.x_s.to_vector();
        const Vec2 u1 = control_step(st, AugmentedState::from_vector(xs + d), v_hat, p.p_rated, p, s, table(), sched)
                            .u.to_vector();
        const Vec2 u3 = control_step(st, AugmentedState::from_vector(xs + 3.0 * d), v_hat, p.p_rated, p, s, table(),
                                     sched)
                            .u.to_vector();
        CHECK((u3 - 3.0 * u1).norm() <= 1e-9 * u3.norm());
    }
    SUBCASE("hand-chained step") {
        const double p_d = desired_power(p, s, p.p_rated, v_hat);
        const double omega_d = desired_speed(table(), p_d);
        const double alpha = compute_alpha(v_hat, region_boundary_speed(p, s, p.p_rated), sched.delta_v);
        const Equilibrium eq = compute_equilibrium(p, s, {v_hat, omega_d, p_d});
        const Mat27 k = alpha * sched.k2 + (1.0 - alpha) * sched.k3;
        AugmentedState x = eq.x_s;
        x.omega += 2.0;
        x.m_g -= 300.0;
        const Vec2 hand = k * (x.to_vector() - eq.x_s.to_vector());
        const ControlOutput out = control_step(st, x, v_hat, p.p_rated, p, s, table(), sched);
        CHECK(out.u.u1 == doctest::Approx(hand(0)).epsilon(1e-12));
        CHECK(out.u.u2 == doctest::Approx(hand(1)).epsilon(1e-12));
        CHECK(out.w_hat.p_d == p_d);
        CHECK(out.w_hat.omega_d == omega_d);
        CHECK(out.alpha == alpha);
    }
    SUBCASE("small estimate changes keep the operating point") {
        const Equilibrium before = st.equilibrium;
        control_step(st, {}, v_hat + 0.1, p.p_rated, p, s, table(), sched);
        CHECK(st.equilibrium.w_s.v == before.w_s.v);
        control_step(st, {}, v_hat + 0.5, p.p_rated, p, s, table(), sched);
        CHECK(st.equilibrium.w_s.v == v_hat + 0.5);
    }
    SUBCASE("unreachable operating point holds the previous one") {
        const Equilibrium before = st.equilibrium;
        const Mat27 k_before = st.k;
        const ControlOutput out = control_step(st, before.x_s, 30.0, p.p_rated, p, s, table(), sched);
        CHECK(st.failed_refreshes == 1);
        CHECK(st.equilibrium.w_s.v == before.w_s.v);
        CHECK(st.k == k_before);
        CHECK(out.u.u1 == 0.0);
    }
}

TEST_CASE("rotor torque inversion") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    for (double v : {5.0, 9.0, 13.0, 17.0}) {
        const double omega = 100.0, theta = 0.1;
        const double m = rotor_torque(p, s, omega, v, theta);
        const auto back = invert_rotor_torque(p, s, omega, theta, m, p.v_cutin, p.v_cutout, 1e-9);
        REQUIRE(back);
        CHECK(rotor_torque(p, s, omega, *back, theta) == doctest::Approx(m).epsilon(1e-6));
    }
    CHECK_FALSE(invert_rotor_torque(p, s, 100.0, 0.0, 1e9, p.v_cutin, p.v_cutout, 1e-6));
    CHECK_THROWS_AS(invert_rotor_torque(p, s, 100.0, 0.0, 1.0, 5.0, 5.0, 1e-6), ValidationError);
}

TEST_CASE("wind estimator") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    SUBCASE("oracle mode") {
        WindEstimator e(p, s, oracle_estimator());
        CHECK(e.update(100.0, 1e4, 0.1, 0.004, 12.3) == 12.3);
        EstimatorConfig noisy = oracle_estimator();
        noisy.noise_std = 0.5;
        WindEstimator a(p, s, noisy, 9), b(p, s, noisy, 9);
        for (int k = 0; k < 10; ++k) CHECK(a.update(100.0, 1e4, 0.1, 0.004, 12.0) == b.update(100.0, 1e4, 0.1, 0.004, 12.0));
    }
    SUBCASE("observer converges after five filter time constants") {
        const Equilibrium eq = compute_equilibrium(p, s, {14.8, p.omega_rated, p.p_rated});
        EstimatorConfig c;
        c.tolerance = 1e-8;
        WindEstimator e(p, s, c);
        // Start from a disturbed derivative estimate and hold the equilibrium measurements.
        e.reset(p.v_cutin, eq.x_s.omega, 0.5);
        const double dt = 0.004;
        for (double t = 0.0; t < 5.0 * c.time_constant; t += dt) e.update(eq.x_s.omega, eq.x_s.m_g, eq.x_s.theta, dt, 0.0);
        CHECK(std::abs(e.estimate() - 14.8) <= 0.01 * 14.8);
        for (double t = 0.0; t < 10.0 * c.time_constant; t += dt) e.update(eq.x_s.omega, eq.x_s.m_g, eq.x_s.theta, dt, 0.0);
        CHECK(e.estimate() == doctest::Approx(14.8).epsilon(1e-6));
    }
    SUBCASE("configuration errors") {
        EstimatorConfig c;
        c.time_constant = 0.0;
        CHECK_THROWS_AS(WindEstimator(p, s, c), ValidationError);
    }
}

TEST_CASE("baseline torque and pitch laws") {
    const TurbineParameters& p = params();
    const CoefficientSurface& s = surface();
    const BaselineGains g = design_baseline_gains(p, s, table(), p.p_rated);
    REQUIRE(g.theta_nodes.size() >= 2);
    for (std::size_t i = 0; i < g.kp.size(); ++i) {
        CHECK(g.kp[i] > 0.0);
        CHECK(g.ki[i] > 0.0);
    }
    BaselineState st;
    const BaselineCommand zero = baseline_controller(st, 0.0, 0.0, 5.0, p.p_rated, p, s, table(), g, 0.004);
    CHECK(zero.m_g_cmd == 0.0);

    // At the speed set point the pitch integrator is held and the torque is the
    // smaller of the quadratic law and the rated-power level.
    const Equilibrium eq = compute_equilibrium(p, s, {14.8, p.omega_rated, p.p_rated});
    st.pitch_integrator = eq.theta_s;
    const BaselineCommand c = baseline_controller(st, eq.x_s.omega, eq.theta_s, 14.8, p.p_rated, p, s, table(), g, 0.004);
    CHECK(c.theta_cmd == doctest::Approx(eq.theta_s).epsilon(1e-12));
    const double quadratic = g.k_opt * p.omega_rated * p.omega_rated;
    CHECK(c.m_g_cmd == doctest::Approx(std::min(quadratic, eq.x_s.m_g)).epsilon(1e-12));
    // The quadratic law alone falls short of rated power at rated speed by under 1%.
    CHECK(quadratic < eq.x_s.m_g);
    CHECK(quadratic > 0.99 * eq.x_s.m_g);
    // Below rated speed the quadratic law governs.
    const double omega = 60.0;
    const BaselineCommand c2 = baseline_controller(st, omega, 0.0, 14.8, p.p_rated, p, s, table(), g, 0.004);
    CHECK(c2.m_g_cmd == doctest::Approx(g.k_opt * omega * omega).epsilon(1e-12));
}

TEST_CASE("baseline settles under constant wind") {
    const TurbineParameters& p = params();
    SimulationConfig cfg;
    cfg.duration = 60.0;
    cfg.wind.mean = 14.8;
    cfg.initial_offset(0) = 3.0;
    BaselineController ctl(p, surface(), table(), p.p_rated, oracle_estimator());
    const Trajectory tr = simulate(cfg, p, surface(), table(), ctl);
    for (std::size_t k = tr.size() - 2500; k < tr.size(); ++k) {
        CHECK(std::abs(tr.state[k].omega - p.omega_rated) <= 0.02 * p.omega_rated);
        CHECK(std::abs(tr.power[k] - p.p_rated) <= 0.02 * p.p_rated);
    }
}

TEST_CASE("synthesized gains decrease the Lyapunov function at every vertex") {
    for (const RegionDesign* d : {&testing::design().region2, &testing::design().region3}) {
        const Eigen::MatrixXd p_inv = d->result.p.inverse();
        for (const auto& a : d->scaled.vertices) {
            const Eigen::MatrixXd acl = a + d->scaled.b * d->result.k;
            const Eigen::MatrixXd lyap = p_inv * acl + acl.transpose() * p_inv;
            CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lyap).eigenvalues().maxCoeff() < 0.0);

            // V = xi^T P^-1 xi along an RK4 trajectory of the vertex closed loop.
            Eigen::VectorXd xi = Eigen::VectorXd::Ones(7);
            double v_prev = xi.dot(p_inv * xi);
            const double h = 0.05 / acl.eigenvalues().cwiseAbs().maxCoeff();
            for (int k = 0; k < 2000; ++k) {
                const Eigen::VectorXd k1 = acl * xi, k2 = acl * (xi + 0.5 * h * k1), k3 = acl * (xi + 0.5 * h * k2),
                                      k4 = acl * (xi + h * k3);
                xi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                const double v = xi.dot(p_inv * xi);
                REQUIRE(v < v_prev);
                v_prev = v;
            }
        }
        CHECK(d->certificate.passed());
    }
}

}
