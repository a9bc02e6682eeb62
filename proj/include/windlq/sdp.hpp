#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace windlq::sdp {

// Symmetric block-diagonal matrix stored as dense blocks.
struct BlockMatrix {
    std::vector<Eigen::MatrixXd> blocks;

    static BlockMatrix zeros(const std::vector<int>& sizes);
    static BlockMatrix identity(const std::vector<int>& sizes, double scale = 1.0);

    BlockMatrix& operator+=(const BlockMatrix& o);
    BlockMatrix& operator-=(const BlockMatrix& o);
    BlockMatrix& operator*=(double a);
    BlockMatrix& add_scaled(double a, const BlockMatrix& o);

    double frobenius_norm() const;
    double trace() const;
    // Smallest eigenvalue over all blocks.
    double min_eigenvalue() const;
};

// tr(A B) for block-diagonal symmetric A, B.
double inner(const BlockMatrix& a, const BlockMatrix& b);

// Linear SDP in SDPA convention:
//
//   minimize  c^T y   subject to   sum_i y_i F_i - F_0  >=  0  (PSD).
//
// Its dual is: maximize tr(F_0 X) subject to tr(F_i X) = c_i, X >= 0.
struct Program {
    std::vector<int> block_sizes;
    Eigen::VectorXd c;
    BlockMatrix f0;
    std::vector<BlockMatrix> f;

    int num_vars() const { return static_cast<int>(c.size()); }
    // Throws ValidationError on inconsistent shapes or asymmetric blocks.
    void validate() const;
    // sum_i y_i F_i - F_0
    BlockMatrix constraint_value(const Eigen::VectorXd& y) const;
};

struct Options {
    double tol = 1e-10;          // relative primal, dual and gap tolerance
    int max_iterations = 120;
    double step_fraction = 0.95;  // fraction of the distance to the cone boundary
    // When the iteration stalls before reaching `tol` (ill-conditioning near the
    // optimum), the best iterate is returned if all three measures are below this.
    double acceptable_tol = 1e-7;
    int stall_iterations = 10;
};

struct Solution {
    Eigen::VectorXd y;
    BlockMatrix x;  // dual matrix
    BlockMatrix s;  // slack, sum y_i F_i - F_0 at convergence
    double primal_objective = 0.0;  // c^T y
    double dual_objective = 0.0;    // tr(F_0 X)
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double relative_gap = 0.0;
    int iterations = 0;
};

// Neutral solver interface so an external conic solver can be dropped in.
class Solver {
public:
    virtual ~Solver() = default;
    // Throws Infeasible or NumericalFailure.
    virtual Solution solve(const Program& program, const Options& options) const = 0;
};

// Infeasible-start primal-dual path-following method with the HKM search
// direction and Mehrotra predictor-corrector steps. Dense linear algebra,
// intended for small programs (block sizes up to a few dozen).
class InteriorPointSolver final : public Solver {
public:
    Solution solve(const Program& program, const Options& options) const override;
};

// SDPA sparse format ("*" comment lines, m, nBlocks, block sizes, c, then
// `matno blkno i j value` for the upper triangle; matno 0 is F_0).
void write_sdpa(const Program& program, std::ostream& out);
Program read_sdpa(std::istream& in);

}  // namespace windlq::sdp
