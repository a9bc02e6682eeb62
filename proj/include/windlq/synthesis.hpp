#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "windlq/sdp.hpp"

namespace windlq {

// LQ weights of the cost  integral xi^T Q xi + mu^T R mu.
struct SynthesisWeights {
    Eigen::MatrixXd q;  // n x n, PSD
    Eigen::MatrixXd r;  // p x p, PD

    void validate() const;
};

// Vertex systems xi' = A_i xi + B mu sharing one input matrix.
struct ModelSet {
    std::vector<Eigen::MatrixXd> vertices;
    Eigen::MatrixXd b;

    int n() const { return static_cast<int>(b.rows()); }
    int p() const { return static_cast<int>(b.cols()); }
    // Shapes plus controllability of every pair (A_i, B).
    void validate() const;
};

struct SynthesisResult {
    Eigen::MatrixXd k;        // p x n, mu = K xi
    Eigen::MatrixXd p;        // n x n, joint Lyapunov matrix
    Eigen::MatrixXd y;        // p x n, Y = K P
    Eigen::MatrixXd x_bound;  // p x p, X >= R^1/2 Y P^-1 Y^T R^1/2
    double cost_j = 0.0;      // Tr(Q P) + Tr(X)
    double epsilon = 0.0;
    std::vector<double> per_vertex_cost;
    int solver_iterations = 0;
};

inline constexpr double kDefaultEpsilon = 1e-8;

// Symmetric eigen-square-root with eigenvalues floored at `floor`.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double floor = 1e-12);
// Solves A X + X A^T + Q = 0 by Kronecker vectorization and LU.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);
double spectral_abscissa(const Eigen::MatrixXd& a);

// Decision variables: P (sym n x n), Y (p x n), X (sym p x p), packed in that
// order. Constraints, all as PSD blocks with margin epsilon:
//   [[X, R^1/2 Y], [Y^T R^1/2, P]] >= eps I,   P >= eps I,
//   -(A_i P + P A_i^T + B Y + Y^T B^T + I) >= eps I   for every vertex.
// Objective: Tr(Q P) + Tr(X).
sdp::Program assemble_sdp(const ModelSet& models, const SynthesisWeights& weights, double epsilon);

struct SdpVariables {
    Eigen::MatrixXd p;
    Eigen::MatrixXd y;
    Eigen::MatrixXd x;
};
SdpVariables unpack_variables(const Eigen::VectorXd& packed, int n, int p);
Eigen::VectorXd pack_variables(const SdpVariables& v);

// Solves the program and recovers K = Y P^-1; per_vertex_cost is filled by certify().
// Throws Infeasible (with the vertex count), NumericalFailure or CertificationFailure.
SynthesisResult synthesize(const ModelSet& models, const SynthesisWeights& weights,
                           double epsilon = kDefaultEpsilon, const sdp::Solver* solver = nullptr,
                           const sdp::Options& options = {});

struct VertexCertificate {
    double lmi_max_eigenvalue = 0.0;        // of A_i P + P A_i^T + B Y + Y^T B^T + I
    double spectral_abscissa = 0.0;         // of A_i + B K
    double cost = 0.0;                      // J_i from the per-vertex Lyapunov solution
    double p_minus_pi_min_eigenvalue = 0.0;
};

struct CertificateReport {
    double epsilon = 0.0;
    double schur_block_min_eigenvalue = 0.0;
    double p_min_eigenvalue = 0.0;
    double k_consistency = 0.0;  // ||K P - Y|| / ||Y||
    double cost_bound = 0.0;     // J of the joint P
    std::vector<VertexCertificate> vertices;
    std::vector<std::string> failures;

    bool passed() const { return failures.empty(); }
    std::string to_text() const;
};

// Evaluates every certificate condition without throwing.
CertificateReport evaluate_certificate(const SynthesisResult& result, const ModelSet& models,
                                       const SynthesisWeights& weights);
// Same, but throws CertificationFailure naming the first violated condition.
CertificateReport certify(const SynthesisResult& result, const ModelSet& models, const SynthesisWeights& weights);

// Largest closed-loop spectral abscissa over n_samples Dirichlet-uniform
// convex combinations of the vertices (seeded).
double polytope_stability_sample(const Eigen::MatrixXd& k, const ModelSet& models, int n_samples,
                                 std::uint64_t seed);

}  // namespace windlq
