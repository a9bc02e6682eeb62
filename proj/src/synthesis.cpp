#include "windlq/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "windlq/errors.hpp"
#include "windlq/linearize.hpp"

namespace windlq {

namespace {

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
    return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eig(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double max_eig(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

struct Layout {
    int n;
    int p;
    int num_p() const { return n * (n + 1) / 2; }
    int num_y() const { return p * n; }
    int num_x() const { return p * (p + 1) / 2; }
    int total() const { return num_p() + num_y() + num_x(); }
};

// Symmetric basis element for the (k, l) entry, k <= l.
Eigen::MatrixXd sym_basis(int dim, int k, int l) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
    e(k, l) = 1.0;
    e(l, k) = 1.0;
    return e;
}

}  // namespace

void SynthesisWeights::validate() const {
    if (q.rows() == 0 || !q.allFinite() || !r.allFinite()) {
        throw ValidationError("synthesis", "weights must be finite and non-empty");
    }
    if (!is_symmetric(q, 1e-12 * (1.0 + q.cwiseAbs().maxCoeff()))) {
        throw ValidationError("synthesis", "Q is not symmetric");
    }
    if (!is_symmetric(r, 1e-12 * (1.0 + r.cwiseAbs().maxCoeff()))) {
        throw ValidationError("synthesis", "R is not symmetric");
    }
    if (min_eig(q) < -1e-10) throw ValidationError("synthesis", "Q is not positive semidefinite");
    if (min_eig(r) < 1e-10) throw ValidationError("synthesis", "R is not positive definite");
}

void ModelSet::validate() const {
    if (vertices.empty()) throw ValidationError("synthesis", "model set has no vertices");
    if (b.rows() == 0 || b.cols() == 0) throw ValidationError("synthesis", "input matrix is empty");
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& a = vertices[i];
        if (a.rows() != b.rows() || a.cols() != b.rows()) {
            throw ValidationError("synthesis", "vertex " + std::to_string(i + 1) + " has the wrong shape");
        }
        if (!a.allFinite()) throw ValidationError("synthesis", "vertex " + std::to_string(i + 1) + " is not finite");
        if (!controllability_check(a, b).controllable) {
            throw ValidationError("synthesis", "vertex " + std::to_string(i + 1) + " is not controllable");
        }
    }
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double floor) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd d = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd kron(n * n, n * n);
    // vec(A X) = (I kron A) vec X,  vec(X A^T) = (A kron I) vec X
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = id(i, j) * a + a(i, j) * id;
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd(q).data(), n * n);
    const Eigen::VectorXd vec = kron.partialPivLu().solve(rhs);
    const Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(vec.data(), n, n);
    return 0.5 * (x + x.transpose());
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

SdpVariables unpack_variables(const Eigen::VectorXd& packed, int n, int p) {
    SdpVariables v;
    v.p = Eigen::MatrixXd::Zero(n, n);
    v.y = Eigen::MatrixXd::Zero(p, n);
    v.x = Eigen::MatrixXd::Zero(p, p);
    Eigen::Index idx = 0;
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l, ++idx) v.p(k, l) = v.p(l, k) = packed(idx);
    }
    for (int k = 0; k < p; ++k) {
        for (int l = 0; l < n; ++l, ++idx) v.y(k, l) = packed(idx);
    }
    for (int k = 0; k < p; ++k) {
        for (int l = k; l < p; ++l, ++idx) v.x(k, l) = v.x(l, k) = packed(idx);
    }
    return v;
}

Eigen::VectorXd pack_variables(const SdpVariables& v) {
    const int n = static_cast<int>(v.p.rows());
    const int p = static_cast<int>(v.y.rows());
    Eigen::VectorXd packed(Layout{n, p}.total());
    Eigen::Index idx = 0;
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) packed(idx++) = v.p(k, l);
    }
    for (int k = 0; k < p; ++k) {
        for (int l = 0; l < n; ++l) packed(idx++) = v.y(k, l);
    }
    for (int k = 0; k < p; ++k) {
        for (int l = k; l < p; ++l) packed(idx++) = v.x(k, l);
    }
    return packed;
}

sdp::Program assemble_sdp(const ModelSet& models, const SynthesisWeights& weights, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("synthesis", "epsilon must be positive");
    weights.validate();
    const int n = models.n();
    const int p = models.p();
    if (weights.q.rows() != n || weights.r.rows() != p) {
        throw ValidationError("synthesis", "weight dimensions do not match the model set");
    }
    for (const auto& a : models.vertices) {
        if (a.rows() != n || a.cols() != n) throw ValidationError("synthesis", "vertex shape mismatch");
    }
    const Layout lay{n, p};
    const Eigen::MatrixXd r_half = symmetric_sqrt(weights.r);
    const auto& b = models.b;

    sdp::Program prog;
    prog.block_sizes.push_back(p + n);
    prog.block_sizes.push_back(n);
    for (std::size_t i = 0; i < models.vertices.size(); ++i) prog.block_sizes.push_back(n);
    const std::size_t first_lmi = 2;

    prog.c = Eigen::VectorXd::Zero(lay.total());
    prog.f0 = sdp::BlockMatrix::identity(prog.block_sizes, epsilon);
    for (std::size_t i = first_lmi; i < prog.block_sizes.size(); ++i) prog.f0.blocks[i].diagonal().array() += 1.0;
    prog.f.assign(static_cast<std::size_t>(lay.total()), sdp::BlockMatrix::zeros(prog.block_sizes));

    int idx = 0;
    // P entries
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l, ++idx) {
            const Eigen::MatrixXd e_kl = sym_basis(n, k, l);
            auto& f = prog.f[static_cast<std::size_t>(idx)];
            f.blocks[0].bottomRightCorner(n, n) = e_kl;
            f.blocks[1] = e_kl;
            for (std::size_t v = 0; v < models.vertices.size(); ++v) {
                const auto& a = models.vertices[v];
                f.blocks[first_lmi + v] = -(a * e_kl + e_kl * a.transpose());
            }
            prog.c(idx) = (weights.q.cwiseProduct(e_kl)).sum();
        }
    }
    // Y entries
    for (int k = 0; k < p; ++k) {
        for (int l = 0; l < n; ++l, ++idx) {
            Eigen::MatrixXd e = Eigen::MatrixXd::Zero(p, n);
            e(k, l) = 1.0;
            auto& f = prog.f[static_cast<std::size_t>(idx)];
            const Eigen::MatrixXd off = r_half * e;
            f.blocks[0].topRightCorner(p, n) = off;
            f.blocks[0].bottomLeftCorner(n, p) = off.transpose();
            const Eigen::MatrixXd by = b * e;
            for (std::size_t v = 0; v < models.vertices.size(); ++v) {
                f.blocks[first_lmi + v] = -(by + by.transpose());
            }
        }
    }
    // X entries
    for (int k = 0; k < p; ++k) {
        for (int l = k; l < p; ++l, ++idx) {
            const Eigen::MatrixXd e_kl = sym_basis(p, k, l);
            prog.f[static_cast<std::size_t>(idx)].blocks[0].topLeftCorner(p, p) = e_kl;
            prog.c(idx) = e_kl.trace();
        }
    }
    return prog;
}

SynthesisResult synthesize(const ModelSet& models, const SynthesisWeights& weights, double epsilon,
                           const sdp::Solver* solver, const sdp::Options& options) {
    models.validate();
    const sdp::Program prog = assemble_sdp(models, weights, epsilon);
    const sdp::InteriorPointSolver reference;
    const sdp::Solver& s = solver ? *solver : reference;

    sdp::Solution sol;
    try {
        sol = s.solve(prog, options);
    } catch (const Infeasible& e) {
        throw Infeasible(std::string(e.what()) + " [vertex set of " + std::to_string(models.vertices.size()) +
                         " systems]");
    }

    const SdpVariables v = unpack_variables(sol.y, models.n(), models.p());
    SynthesisResult res;
    res.p = v.p;
    res.y = v.y;
    res.x_bound = v.x;
    res.epsilon = epsilon;
    res.cost_j = sol.primal_objective;
    res.solver_iterations = sol.iterations;
    const Eigen::LLT<Eigen::MatrixXd> llt(res.p);
    if (llt.info() != Eigen::Success) throw NumericalFailure("P returned by the solver is not positive definite");
    res.k = llt.solve(res.y.transpose()).transpose();
    spdlog::debug("synthesize: {} vertices, J = {:.10g}, {} iterations", models.vertices.size(), res.cost_j,
                  sol.iterations);

    const CertificateReport report = certify(res, models, weights);
    for (const auto& vc : report.vertices) res.per_vertex_cost.push_back(vc.cost);
    return res;
}

CertificateReport evaluate_certificate(const SynthesisResult& result, const ModelSet& models,
                                       const SynthesisWeights& weights) {
    const int n = models.n();
    const int p = models.p();
    const double eps = result.epsilon;
    const Eigen::MatrixXd r_half = symmetric_sqrt(weights.r);
    const Eigen::MatrixXd q_half = symmetric_sqrt(weights.q, 0.0);
    const auto& b = models.b;

    CertificateReport rep;
    rep.epsilon = eps;
    Eigen::MatrixXd schur(p + n, p + n);
    schur << result.x_bound, r_half * result.y, result.y.transpose() * r_half, result.p;
    rep.schur_block_min_eigenvalue = min_eig(schur);
    rep.p_min_eigenvalue = min_eig(result.p);
    rep.k_consistency = (result.k * result.p - result.y).norm() / std::max(result.y.norm(), 1e-300);

    auto cost = [&](const Eigen::MatrixXd& pm) {
        return (q_half.transpose() * pm * q_half).trace() +
               (r_half * result.k * pm * result.k.transpose() * r_half).trace();
    };
    rep.cost_bound = cost(result.p);

    if (rep.schur_block_min_eigenvalue < eps / 2) {
        rep.failures.push_back("Schur block not positive definite by eps/2 (min eigenvalue " +
                               std::to_string(rep.schur_block_min_eigenvalue) + ")");
    }
    if (rep.p_min_eigenvalue < eps / 2) {
        rep.failures.push_back("P not positive definite by eps/2 (min eigenvalue " +
                               std::to_string(rep.p_min_eigenvalue) + ")");
    }
    if (!(rep.k_consistency <= 1e-8)) {
        rep.failures.push_back("K P differs from Y (relative " + std::to_string(rep.k_consistency) + ")");
    }
    if (result.cost_j < rep.cost_bound * (1.0 - 1e-9)) {
        rep.failures.push_back("reported cost J below Tr(Q P) + Tr(R^1/2 K P K^T R^1/2)");
    }

    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < models.vertices.size(); ++i) {
        const auto& a = models.vertices[i];
        VertexCertificate vc;
        const Eigen::MatrixXd by = b * result.y;
        vc.lmi_max_eigenvalue = max_eig(a * result.p + result.p * a.transpose() + by + by.transpose() + id);
        const Eigen::MatrixXd acl = a + b * result.k;
        vc.spectral_abscissa = spectral_abscissa(acl);
        const std::string tag = "vertex " + std::to_string(i + 1) + ": ";
        if (vc.lmi_max_eigenvalue > -eps / 2) {
            rep.failures.push_back(tag + "Lyapunov LMI not negative definite by eps/2 (max eigenvalue " +
                                   std::to_string(vc.lmi_max_eigenvalue) + ")");
        }
        if (!(vc.spectral_abscissa < 0.0)) {
            rep.failures.push_back(tag + "closed loop not Hurwitz");
            rep.vertices.push_back(vc);
            continue;
        }
        const Eigen::MatrixXd p_i = lyapunov_solve(acl, id);
        vc.cost = cost(p_i);
        vc.p_minus_pi_min_eigenvalue = min_eig(result.p - p_i);
        if (!(vc.p_minus_pi_min_eigenvalue > 0.0)) {
            rep.failures.push_back(tag + "P > P_i violated (min eigenvalue " +
                                   std::to_string(vc.p_minus_pi_min_eigenvalue) + ")");
        }
        if (!(vc.cost < rep.cost_bound)) {
            rep.failures.push_back(tag + "J_i < J violated");
        }
        if (!(vc.cost <= result.cost_j)) {
            rep.failures.push_back(tag + "J_i exceeds the reported cost bound");
        }
        rep.vertices.push_back(vc);
    }
    return rep;
}

CertificateReport certify(const SynthesisResult& result, const ModelSet& models, const SynthesisWeights& weights) {
    CertificateReport rep = evaluate_certificate(result, models, weights);
    if (!rep.passed()) throw CertificationFailure(rep.failures.front());
    return rep;
}

std::string CertificateReport::to_text() const {
    std::ostringstream os;
    os.precision(6);
    os << std::scientific;
    os << "certificate: " << (passed() ? "PASS" : "FAIL") << "\n";
    os << "  epsilon                         " << epsilon << "\n";
    os << "  min eig Schur block             " << schur_block_min_eigenvalue << "\n";
    os << "  min eig P                       " << p_min_eigenvalue << "\n";
    os << "  ||K P - Y|| / ||Y||             " << k_consistency << "\n";
    os << "  J (joint P)                     " << cost_bound << "\n";
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& v = vertices[i];
        os << "  vertex " << i + 1 << ": lmi max eig " << v.lmi_max_eigenvalue << ", abscissa "
           << v.spectral_abscissa << ", J_i " << v.cost << ", min eig(P - P_i) " << v.p_minus_pi_min_eigenvalue
           << "\n";
    }
    for (const auto& f : failures) os << "  violated: " << f << "\n";
    return os.str();
}

double polytope_stability_sample(const Eigen::MatrixXd& k, const ModelSet& models, int n_samples,
                                 std::uint64_t seed) {
    const std::size_t q = models.vertices.size();
    if (q == 1) return spectral_abscissa(models.vertices.front() + models.b * k);
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<double> alpha(q);
    for (int s = 0; s < n_samples; ++s) {
        double sum = 0.0;
        for (auto& a : alpha) sum += (a = expo(rng));
        Eigen::MatrixXd a_mix = Eigen::MatrixXd::Zero(models.n(), models.n());
        for (std::size_t i = 0; i < q; ++i) a_mix += (alpha[i] / sum) * models.vertices[i];
        worst = std::max(worst, spectral_abscissa(a_mix + models.b * k));
    }
    return worst;
}

}  // namespace windlq
