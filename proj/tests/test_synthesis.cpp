#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "windlq/errors.hpp"
#include "windlq/synthesis.hpp"

using namespace windlq;

namespace {

Eigen::MatrixXd mat(int r, int c, std::initializer_list<double> v) {
    Eigen::MatrixXd m(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = *it++;
    return m;
}

SynthesisWeights identity_weights(int n, int p) {
    return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(p, p)};
}

double relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("program layout for a single vertex") {
    const ModelSet m{{mat(2, 2, {0, 1, 0, 0})}, mat(2, 1, {0, 1})};
    const sdp::Program prog = assemble_sdp(m, identity_weights(2, 1), 1e-8);
    CHECK(prog.block_sizes == std::vector<int>{3, 2, 2});
    // 3 entries of P, 2 of Y, 1 of X.
    CHECK(prog.num_vars() == 6);
    CHECK_NOTHROW(prog.validate());
}

TEST_CASE("Lyapunov block of a hand candidate") {
    // A = I, P = I, Y = 0: A P + P A^T + B Y + Y^T B^T + I = 3 I.
    const ModelSet m{{Eigen::MatrixXd::Identity(2, 2)}, mat(2, 1, {0, 1})};
    const double eps = 1e-8;
    const sdp::Program prog = assemble_sdp(m, identity_weights(2, 1), eps);
    SdpVariables v{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 1)};
    const Eigen::VectorXd packed = pack_variables(v);
    const SdpVariables back = unpack_variables(packed, 2, 1);
    CHECK(back.p == v.p);
    CHECK(back.y == v.y);
    CHECK(back.x == v.x);
    const sdp::BlockMatrix s = prog.constraint_value(packed);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.blocks[2]).eigenvalues();
    CHECK(ev.maxCoeff() == doctest::Approx(-3.0 - eps).epsilon(1e-14));
    CHECK(ev.minCoeff() == doctest::Approx(-3.0 - eps).epsilon(1e-14));
    // P block is P - eps I.
    CHECK(s.blocks[1].isApprox(Eigen::MatrixXd::Identity(2, 2) * (1.0 - eps)));
}

TEST_CASE("stable plant with zero state weight needs no feedback") {
    const ModelSet m{{-Eigen::MatrixXd::Identity(2, 2)}, Eigen::MatrixXd::Identity(2, 2)};
    const SynthesisWeights w{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    const SynthesisResult r = synthesize(m, w);
    CHECK(r.k.norm() <= 1e-4);
}

TEST_CASE("single vertex reproduces the Riccati gain and cost") {
    SUBCASE("double integrator") {
        const Eigen::MatrixXd a = mat(2, 2, {0, 1, 0, 0});
        const Eigen::MatrixXd b = mat(2, 1, {0, 1});
        const SynthesisWeights w = identity_weights(2, 1);
        Eigen::MatrixXd x;
        const Eigen::MatrixXd k_ref = oracle::kleinman_gain(a, b, w.q, w.r, &x);
        // Closed form: K = -[1, sqrt(3)].
        CHECK(k_ref(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(k_ref(0, 1) == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-10));
        const SynthesisResult r = synthesize({{a}, b}, w);
        CHECK(relative(r.k, k_ref) <= 1e-3);
        CHECK(r.cost_j == doctest::Approx(x.trace()).epsilon(1e-3));
    }
    SUBCASE("generic stable plant") {
        const Eigen::MatrixXd a = mat(3, 3, {-1, 2, 0, -0.5, -2, 1, 0.3, 0, -0.7});
        const Eigen::MatrixXd b = mat(3, 2, {1, 0, 0, 0, 0.5, 1});
        REQUIRE(oracle::abscissa(a) < 0.0);
        const SynthesisWeights w{mat(3, 3, {2, 0, 0, 0, 1, 0, 0, 0, 3}), mat(2, 2, {1, 0.2, 0.2, 0.5})};
        Eigen::MatrixXd x;
        const Eigen::MatrixXd k_ref = oracle::kleinman_gain(a, b, w.q, w.r, &x);
        CHECK(relative(k_ref, oracle::hamiltonian_gain(a, b, w.q, w.r)) <= 1e-9);
        const SynthesisResult r = synthesize({{a}, b}, w);
        CHECK(relative(r.k, k_ref) <= 1e-3);
        CHECK(r.cost_j == doctest::Approx(x.trace()).epsilon(1e-3));
    }
}

TEST_CASE("duplicating a vertex leaves the design unchanged") {
    const Eigen::MatrixXd a = mat(2, 2, {0, 1, -1, 0.2});
    const Eigen::MatrixXd b = mat(2, 1, {0, 1});
    const SynthesisWeights w = identity_weights(2, 1);
    const SynthesisResult r1 = synthesize({{a}, b}, w);
    const SynthesisResult r2 = synthesize({{a, a}, b}, w);
    CHECK((r1.k - r2.k).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, r1.k.cwiseAbs().maxCoeff()));
}

TEST_CASE("adding a vertex never lowers the guaranteed cost") {
    const Eigen::MatrixXd a1 = mat(2, 2, {0, 1, -1, 0.2});
    const Eigen::MatrixXd a2 = mat(2, 2, {0, 1, 0.5, -0.3});
    const Eigen::MatrixXd a3 = mat(2, 2, {0.3, 1, -2, 0});
    const Eigen::MatrixXd b = mat(2, 1, {0, 1});
    const SynthesisWeights w = identity_weights(2, 1);
    const double j1 = synthesize({{a1}, b}, w).cost_j;
    const double j2 = synthesize({{a1, a2}, b}, w).cost_j;
    const SynthesisResult r3 = synthesize({{a1, a2, a3}, b}, w);
    CHECK(j2 >= j1 * (1.0 - 1e-6));
    CHECK(r3.cost_j >= j2 * (1.0 - 1e-6));
    // Certificate: every vertex closes stably, and convex combinations do too.
    const ModelSet set{{a1, a2, a3}, b};
    const CertificateReport rep = evaluate_certificate(r3, set, w);
    CHECK(rep.passed());
    for (const auto& vc : rep.vertices) CHECK(vc.spectral_abscissa < 0.0);
    CHECK(polytope_stability_sample(r3.k, set, 500, 3) < 0.0);
}

TEST_CASE("certificate quantities against independent Lyapunov solves") {
    const Eigen::MatrixXd a1 = mat(2, 2, {0, 1, -1, 0.2});
    const Eigen::MatrixXd a2 = mat(2, 2, {0, 1, 0.5, -0.3});
    const Eigen::MatrixXd b = mat(2, 1, {0, 1});
    const SynthesisWeights w = identity_weights(2, 1);
    const ModelSet set{{a1, a2}, b};
    const SynthesisResult r = synthesize(set, w);
    const CertificateReport rep = evaluate_certificate(r, set, w);
    REQUIRE(rep.passed());
    for (std::size_t i = 0; i < set.vertices.size(); ++i) {
        const Eigen::MatrixXd acl = set.vertices[i] + b * r.k;
        const Eigen::MatrixXd pi = oracle::lyapunov(acl, Eigen::MatrixXd::Identity(2, 2));
        const double ji = (w.q * pi).trace() + (w.r * r.k * pi * r.k.transpose()).trace();
        CHECK(rep.vertices[i].cost == doctest::Approx(ji).epsilon(1e-9));
        CHECK(ji < rep.cost_bound);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.p - pi).eigenvalues().minCoeff() > 0.0);
        CHECK(rep.vertices[i].spectral_abscissa == doctest::Approx(oracle::abscissa(acl)).epsilon(1e-9));
    }
    CHECK(rep.cost_bound <= r.cost_j * (1.0 + 1e-9));

    // A gain that destabilizes a vertex is caught without throwing.
    SynthesisResult bad = r;
    bad.k = -bad.k;
    bad.y = bad.k * bad.p;
    CHECK_FALSE(evaluate_certificate(bad, set, w).passed());
    CHECK_THROWS_AS(certify(bad, set, w), CertificationFailure);
}

TEST_CASE("polytope sampling of a single vertex") {
    const Eigen::MatrixXd a = mat(2, 2, {0, 1, -1, 0.2});
    const Eigen::MatrixXd b = mat(2, 1, {0, 1});
    const SynthesisResult r = synthesize({{a}, b}, identity_weights(2, 1));
    const double expected = oracle::abscissa(a + b * r.k);
    CHECK(polytope_stability_sample(r.k, {{a}, b}, 10, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Lyapunov and square-root helpers") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(4, 4), q(4, 4);
    for (int i = 0; i < 16; ++i) a.data()[i] = g(rng);
    a -= (oracle::abscissa(a) + 1.0) * Eigen::MatrixXd::Identity(4, 4);
    for (int i = 0; i < 16; ++i) q.data()[i] = g(rng);
    q = (q * q.transpose()).eval();
    const Eigen::MatrixXd x = lyapunov_solve(a, q);
    CHECK(relative(x, oracle::lyapunov(a, q)) <= 1e-10);
    CHECK((a * x + x * a.transpose() + q).norm() <= 1e-10 * q.norm());
    const Eigen::MatrixXd s = symmetric_sqrt(q);
    CHECK(relative(s * s, q) <= 1e-12);
    CHECK(spectral_abscissa(a) == doctest::Approx(oracle::abscissa(a)));
}

TEST_CASE("input validation") {
    const Eigen::MatrixXd a = mat(2, 2, {0, 1, 0, 0});
    const Eigen::MatrixXd b = mat(2, 1, {0, 1});
    CHECK_THROWS_AS(synthesize({{a}, b}, {Eigen::MatrixXd::Identity(2, 2), mat(1, 1, {0})}), ValidationError);
    CHECK_THROWS_AS(synthesize({{a}, b}, {mat(2, 2, {1, 0, 0, -1}), mat(1, 1, {1})}), ValidationError);
    CHECK_THROWS_AS(synthesize({{a}, b}, {mat(2, 2, {1, 1, 0, 1}), mat(1, 1, {1})}), ValidationError);
    CHECK_THROWS_AS(synthesize({{}, b}, identity_weights(2, 1)), ValidationError);
    // Uncontrollable pair.
    CHECK_THROWS_AS(synthesize({{Eigen::MatrixXd::Zero(2, 2)}, b}, identity_weights(2, 1)), ValidationError);
    CHECK_THROWS_AS(synthesize({{a}, b}, identity_weights(2, 1), 0.0), ValidationError);
    CHECK_THROWS_AS(synthesize({{mat(3, 3, {0, 0, 0, 0, 0, 0, 0, 0, 0})}, b}, identity_weights(2, 1)),
                    ValidationError);
}

}
