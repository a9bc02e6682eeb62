#include "windlq/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "windlq/errors.hpp"

namespace windlq::sdp {

BlockMatrix BlockMatrix::zeros(const std::vector<int>& sizes) {
    BlockMatrix m;
    m.blocks.reserve(sizes.size());
    for (int n : sizes) m.blocks.push_back(Eigen::MatrixXd::Zero(n, n));
    return m;
}

BlockMatrix BlockMatrix::identity(const std::vector<int>& sizes, double scale) {
    BlockMatrix m;
    m.blocks.reserve(sizes.size());
    for (int n : sizes) m.blocks.push_back(scale * Eigen::MatrixXd::Identity(n, n));
    return m;
}

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o) {
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] += o.blocks[b];
    return *this;
}

BlockMatrix& BlockMatrix::operator-=(const BlockMatrix& o) {
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] -= o.blocks[b];
    return *this;
}

BlockMatrix& BlockMatrix::operator*=(double a) {
    for (auto& blk : blocks) blk *= a;
    return *this;
}

BlockMatrix& BlockMatrix::add_scaled(double a, const BlockMatrix& o) {
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] += a * o.blocks[b];
    return *this;
}

double BlockMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto& blk : blocks) s += blk.squaredNorm();
    return std::sqrt(s);
}

double BlockMatrix::trace() const {
    double s = 0.0;
    for (const auto& blk : blocks) s += blk.trace();
    return s;
}

double BlockMatrix::min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& blk : blocks) {
        if (blk.rows() == 0) continue;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues()(0));
    }
    return lo;
}

double inner(const BlockMatrix& a, const BlockMatrix& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.blocks.size(); ++k) s += a.blocks[k].cwiseProduct(b.blocks[k]).sum();
    return s;
}

void Program::validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("sdp", what); };
    if (block_sizes.empty()) fail("program has no blocks");
    for (int n : block_sizes) {
        if (n <= 0) fail("block sizes must be positive");
    }
    if (static_cast<Eigen::Index>(f.size()) != c.size()) fail("number of constraint matrices differs from size of c");
    auto check = [&](const BlockMatrix& m, const std::string& name) {
        if (m.blocks.size() != block_sizes.size()) fail(name + ": wrong number of blocks");
        for (std::size_t b = 0; b < block_sizes.size(); ++b) {
            const auto& blk = m.blocks[b];
            if (blk.rows() != block_sizes[b] || blk.cols() != block_sizes[b]) fail(name + ": wrong block shape");
            if (!blk.allFinite()) fail(name + ": non-finite entry");
            if ((blk - blk.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + blk.cwiseAbs().maxCoeff())) {
                fail(name + ": block " + std::to_string(b + 1) + " is not symmetric");
            }
        }
    };
    check(f0, "F0");
    for (std::size_t i = 0; i < f.size(); ++i) check(f[i], "F" + std::to_string(i + 1));
}

BlockMatrix Program::constraint_value(const Eigen::VectorXd& y) const {
    BlockMatrix s = f0;
    s *= -1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (y(static_cast<Eigen::Index>(i)) != 0.0) s.add_scaled(y(static_cast<Eigen::Index>(i)), f[i]);
    }
    return s;
}

namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Largest step a such that M + a dM stays PSD (infinity if unbounded).
double max_step(const Eigen::MatrixXd& m, const Eigen::MatrixXd& dm) {
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return 0.0;
    const Eigen::MatrixXd l_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    const Eigen::MatrixXd w = sym(l_inv * dm * l_inv.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step(const BlockMatrix& m, const BlockMatrix& dm) {
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < m.blocks.size(); ++b) a = std::min(a, max_step(m.blocks[b], dm.blocks[b]));
    return a;
}

struct Direction {
    Eigen::VectorXd dy;
    BlockMatrix dx;
    BlockMatrix ds;
};

class Workspace {
public:
    explicit Workspace(const Program& p) : p_(p) {
        const std::size_t nb = p.block_sizes.size();
        active_.assign(p.f.size(), std::vector<char>(nb, 0));
        for (std::size_t i = 0; i < p.f.size(); ++i) {
            for (std::size_t b = 0; b < nb; ++b) active_[i][b] = p.f[i].blocks[b].cwiseAbs().maxCoeff() > 0.0;
        }
    }

    Eigen::VectorXd apply(const BlockMatrix& m) const {
        Eigen::VectorXd out(p_.num_vars());
        for (std::size_t i = 0; i < p_.f.size(); ++i) {
            double s = 0.0;
            for (std::size_t b = 0; b < m.blocks.size(); ++b) {
                if (active_[i][b]) s += p_.f[i].blocks[b].cwiseProduct(m.blocks[b]).sum();
            }
            out(static_cast<Eigen::Index>(i)) = s;
        }
        return out;
    }

    // tr(F_i G) for non-symmetric G.
    Eigen::VectorXd apply_general(const std::vector<Eigen::MatrixXd>& g) const {
        Eigen::VectorXd out(p_.num_vars());
        for (std::size_t i = 0; i < p_.f.size(); ++i) {
            double s = 0.0;
            for (std::size_t b = 0; b < g.size(); ++b) {
                if (active_[i][b]) s += p_.f[i].blocks[b].cwiseProduct(g[b].transpose()).sum();
            }
            out(static_cast<Eigen::Index>(i)) = s;
        }
        return out;
    }

    BlockMatrix combine(const Eigen::VectorXd& y) const {
        BlockMatrix out = BlockMatrix::zeros(p_.block_sizes);
        for (std::size_t i = 0; i < p_.f.size(); ++i) {
            const double yi = y(static_cast<Eigen::Index>(i));
            if (yi == 0.0) continue;
            for (std::size_t b = 0; b < out.blocks.size(); ++b) {
                if (active_[i][b]) out.blocks[b] += yi * p_.f[i].blocks[b];
            }
        }
        return out;
    }

    // M_ij = tr(F_i X F_j S^-1)
    Eigen::MatrixXd schur(const BlockMatrix& x, const std::vector<Eigen::MatrixXd>& s_inv) const {
        const Eigen::Index m = p_.num_vars();
        Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t b = 0; b < x.blocks.size(); ++b) {
            for (std::size_t i = 0; i < p_.f.size(); ++i) {
                if (!active_[i][b]) continue;
                const Eigen::MatrixXd g = x.blocks[b] * p_.f[i].blocks[b] * s_inv[b];
                for (std::size_t j = 0; j <= i; ++j) {
                    if (!active_[j][b]) continue;
                    const double v = p_.f[j].blocks[b].cwiseProduct(g.transpose()).sum();
                    schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
                }
            }
        }
        schur.triangularView<Eigen::StrictlyUpper>() = schur.transpose().triangularView<Eigen::StrictlyUpper>();
        return schur;
    }

private:
    const Program& p_;
    std::vector<std::vector<char>> active_;
};

}  // namespace

Solution InteriorPointSolver::solve(const Program& program, const Options& options) const {
    program.validate();
    const auto& sizes = program.block_sizes;
    const std::size_t nb = sizes.size();
    const Eigen::Index m = program.num_vars();
    Workspace ws(program);

    int total_dim = 0;
    for (int n : sizes) total_dim += n;

    // Infeasible starting point scaled to the data.
    BlockMatrix x = BlockMatrix::zeros(sizes);
    BlockMatrix s = BlockMatrix::zeros(sizes);
    for (std::size_t b = 0; b < nb; ++b) {
        const double n = sizes[b];
        double xi = std::max(10.0, std::sqrt(n));
        double eta = std::max(10.0, std::sqrt(n));
        eta = std::max(eta, 1.0 + program.f0.blocks[b].norm());
        for (Eigen::Index i = 0; i < m; ++i) {
            const double fn = program.f[static_cast<std::size_t>(i)].blocks[b].norm();
            xi = std::max(xi, n * (1.0 + std::abs(program.c(i))) / (1.0 + fn));
            eta = std::max(eta, 1.0 + fn);
        }
        x.blocks[b] = xi * Eigen::MatrixXd::Identity(sizes[b], sizes[b]);
        s.blocks[b] = eta * Eigen::MatrixXd::Identity(sizes[b], sizes[b]);
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    const double c_norm = program.c.norm();
    const double f0_norm = program.f0.frobenius_norm();
    const double x0_scale = x.frobenius_norm();

    Solution sol;
    Solution best;
    double best_merit = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    // Returns the best iterate if it is acceptable, otherwise nothing.
    auto fallback = [&]() -> const Solution* {
        if (best_merit > options.acceptable_tol) return nullptr;
        spdlog::debug("sdp: returning iterate {} with merit {:.2e} (target {:.0e})", best_iter, best_merit,
                      options.tol);
        return &best;
    };
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const Eigen::VectorXd rp = program.c - ws.apply(x);
        BlockMatrix rd = ws.combine(y);
        rd -= program.f0;
        rd -= s;
        const double pobj = program.c.dot(y);
        const double dobj = inner(program.f0, x);
        const double mu = inner(x, s) / total_dim;

        sol.primal_infeasibility = rd.frobenius_norm() / (1.0 + f0_norm);
        sol.dual_infeasibility = rp.norm() / (1.0 + c_norm);
        sol.relative_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        sol.iterations = iter;
        spdlog::trace("sdp iter {}: pobj={:.12e} dobj={:.12e} pinf={:.2e} dinf={:.2e} gap={:.2e}", iter, pobj, dobj,
                      sol.primal_infeasibility, sol.dual_infeasibility, sol.relative_gap);

        sol.y = y;
        sol.x = x;
        sol.s = s;
        sol.primal_objective = pobj;
        sol.dual_objective = dobj;
        const double merit = std::max({sol.primal_infeasibility, sol.dual_infeasibility, sol.relative_gap});
        if (merit <= options.tol) return sol;
        if (merit < best_merit) {
            best = sol;
            best_merit = merit;
            best_iter = iter;
        } else if (iter - best_iter >= options.stall_iterations) {
            if (const Solution* b = fallback()) return *b;
            if (sol.primal_infeasibility > 1e-6) throw Infeasible("interior-point iterations stalled with violated LMIs");
            throw NumericalFailure("interior-point iterations stalled at merit " + std::to_string(best_merit));
        }
        if (x.frobenius_norm() > 1e12 * x0_scale && sol.primal_infeasibility > 1e-6) {
            throw Infeasible("dual matrix diverges while the LMIs stay violated (relative violation " +
                             std::to_string(sol.primal_infeasibility) + ")");
        }
        if (iter == options.max_iterations) break;

        std::vector<Eigen::MatrixXd> s_inv(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const Eigen::LLT<Eigen::MatrixXd> llt(s.blocks[b]);
            if (llt.info() != Eigen::Success) {
                if (const Solution* b = fallback()) return *b;
                throw NumericalFailure("slack lost positive definiteness");
            }
            s_inv[b] = llt.solve(Eigen::MatrixXd::Identity(sizes[b], sizes[b]));
        }
        const Eigen::MatrixXd schur = ws.schur(x, s_inv);
        const Eigen::LLT<Eigen::MatrixXd> schur_llt(schur);
        const bool use_llt = schur_llt.info() == Eigen::Success;
        const Eigen::PartialPivLU<Eigen::MatrixXd> schur_lu = use_llt ? Eigen::PartialPivLU<Eigen::MatrixXd>()
                                                                       : Eigen::PartialPivLU<Eigen::MatrixXd>(schur);
        auto solve_schur = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
            return use_llt ? Eigen::VectorXd(schur_llt.solve(rhs)) : Eigen::VectorXd(schur_lu.solve(rhs));
        };

        // X Rd S^-1 enters every right-hand side.
        std::vector<Eigen::MatrixXd> x_rd_sinv(nb);
        for (std::size_t b = 0; b < nb; ++b) x_rd_sinv[b] = x.blocks[b] * rd.blocks[b] * s_inv[b];
        const Eigen::VectorXd a_x_rd = ws.apply_general(x_rd_sinv);

        // Direction for complementarity target nu I - corr.
        auto direction = [&](double nu, const std::vector<Eigen::MatrixXd>* corr) {
            std::vector<Eigen::MatrixXd> target(nb);
            for (std::size_t b = 0; b < nb; ++b) {
                Eigen::MatrixXd t = nu * Eigen::MatrixXd::Identity(sizes[b], sizes[b]);
                if (corr) t -= (*corr)[b];
                target[b] = t * s_inv[b];
            }
            const Eigen::VectorXd rhs = ws.apply_general(target) - program.c - a_x_rd;
            Direction d;
            d.dy = solve_schur(rhs);
            d.ds = ws.combine(d.dy);
            d.ds += rd;
            d.dx = BlockMatrix::zeros(sizes);
            for (std::size_t b = 0; b < nb; ++b) {
                d.dx.blocks[b] = sym(target[b] - x.blocks[b] - x.blocks[b] * d.ds.blocks[b] * s_inv[b]);
            }
            return d;
        };

        const double gamma = options.step_fraction;
        const Direction pred = direction(0.0, nullptr);
        const double ap_pred = std::min(1.0, gamma * max_step(x, pred.dx));
        const double ad_pred = std::min(1.0, gamma * max_step(s, pred.ds));
        BlockMatrix x_aff = x;
        x_aff.add_scaled(ap_pred, pred.dx);
        BlockMatrix s_aff = s;
        s_aff.add_scaled(ad_pred, pred.ds);
        const double mu_aff = inner(x_aff, s_aff) / total_dim;
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

        std::vector<Eigen::MatrixXd> corr(nb);
        for (std::size_t b = 0; b < nb; ++b) corr[b] = pred.dx.blocks[b] * pred.ds.blocks[b];
        const Direction d = direction(sigma * mu, &corr);

        const double ap = std::min(1.0, gamma * max_step(x, d.dx));
        const double ad = std::min(1.0, gamma * max_step(s, d.ds));
        if (ap < 1e-12 && ad < 1e-12) {
            if (const Solution* b = fallback()) return *b;
            if (sol.primal_infeasibility > 1e-6) {
                throw Infeasible("interior-point steps stalled with violated LMIs");
            }
            throw NumericalFailure("interior-point steps stalled");
        }
        x.add_scaled(ap, d.dx);
        y += ad * d.dy;
        s.add_scaled(ad, d.ds);
    }

    if (const Solution* b = fallback()) return *b;
    if (sol.primal_infeasibility > 1e-6) {
        throw Infeasible("no LMI-feasible point after " + std::to_string(options.max_iterations) +
                         " iterations (relative violation " + std::to_string(sol.primal_infeasibility) + ")");
    }
    throw NumericalFailure("interior-point method did not reach tolerance: gap " + std::to_string(sol.relative_gap) +
                           ", dual infeasibility " + std::to_string(sol.dual_infeasibility));
}

void write_sdpa(const Program& program, std::ostream& out) {
    program.validate();
    out << "* windlq semidefinite program (SDPA sparse format)\n";
    out << program.num_vars() << " = mDIM\n";
    out << program.block_sizes.size() << " = nBLOCK\n";
    for (std::size_t b = 0; b < program.block_sizes.size(); ++b) {
        out << (b ? " " : "") << program.block_sizes[b];
    }
    out << " = bLOCKsTRUCT\n";
    for (Eigen::Index i = 0; i < program.c.size(); ++i) {
        out << (i ? " " : "") << csv::format_double(program.c(i));
    }
    out << '\n';
    auto emit = [&](std::size_t matno, const BlockMatrix& mat) {
        for (std::size_t b = 0; b < mat.blocks.size(); ++b) {
            const auto& blk = mat.blocks[b];
            for (Eigen::Index i = 0; i < blk.rows(); ++i) {
                for (Eigen::Index j = i; j < blk.cols(); ++j) {
                    if (blk(i, j) != 0.0) {
                        out << matno << ' ' << b + 1 << ' ' << i + 1 << ' ' << j + 1 << ' '
                            << csv::format_double(blk(i, j)) << '\n';
                    }
                }
            }
        }
    };
    emit(0, program.f0);
    for (std::size_t i = 0; i < program.f.size(); ++i) emit(i + 1, program.f[i]);
}

Program read_sdpa(std::istream& in) {
    // Strip comments and SDPA punctuation, then read a flat token stream.
    std::ostringstream cleaned;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && (line[0] == '*' || line[0] == '"')) continue;
        const auto eq = line.find('=');
        if (eq != std::string::npos) line.erase(eq);
        for (char& ch : line) {
            if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
        }
        cleaned << line << '\n';
    }
    std::istringstream tokens(cleaned.str());
    auto fail = [](const std::string& what) -> void { throw ValidationError("sdp", "SDPA parse error: " + what); };

    Program p;
    long m = 0;
    long nblocks = 0;
    if (!(tokens >> m) || m <= 0) fail("bad mDIM");
    if (!(tokens >> nblocks) || nblocks <= 0) fail("bad nBLOCK");
    for (long b = 0; b < nblocks; ++b) {
        int n = 0;
        if (!(tokens >> n)) fail("bad block structure");
        if (n <= 0) fail("diagonal (LP) blocks are not supported");
        p.block_sizes.push_back(n);
    }
    p.c.resize(m);
    for (long i = 0; i < m; ++i) {
        if (!(tokens >> p.c(i))) fail("bad objective vector");
    }
    p.f0 = BlockMatrix::zeros(p.block_sizes);
    p.f.assign(static_cast<std::size_t>(m), BlockMatrix::zeros(p.block_sizes));
    long matno = 0;
    long blk = 0;
    long i = 0;
    long j = 0;
    double v = 0.0;
    while (tokens >> matno) {
        if (!(tokens >> blk >> i >> j >> v)) fail("truncated entry");
        if (matno < 0 || matno > m || blk < 1 || blk > nblocks) fail("entry index out of range");
        auto& target = matno == 0 ? p.f0 : p.f[static_cast<std::size_t>(matno - 1)];
        auto& block = target.blocks[static_cast<std::size_t>(blk - 1)];
        if (i < 1 || j < 1 || i > block.rows() || j > block.rows()) fail("entry position out of range");
        block(i - 1, j - 1) = v;
        block(j - 1, i - 1) = v;
    }
    p.validate();
    return p;
}

}  // namespace windlq::sdp
