#include "windlq/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "windlq/errors.hpp"

namespace windlq {

namespace {

void require_grid(const std::vector<double>& grid, const char* name) {
    if (grid.size() < 2) {
        throw ValidationError("coefficients", std::string(name) + " grid needs at least 2 points");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!std::isfinite(grid[k])) {
            throw ValidationError("coefficients", std::string(name) + " grid has a non-finite entry");
        }
        if (k > 0 && !(grid[k] > grid[k - 1])) {
            throw ValidationError("coefficients", std::string(name) + " grid not strictly increasing at index " +
                                                      std::to_string(k));
        }
    }
}

// Index i with grid[i] <= x < grid[i+1]; an exact node hit selects the cell above it.
Eigen::Index cell_index(const std::vector<double>& grid, double x) {
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const auto j = static_cast<Eigen::Index>(std::distance(grid.begin(), it));
    return std::clamp<Eigen::Index>(j - 1, 0, static_cast<Eigen::Index>(grid.size()) - 2);
}

}  // namespace

CoefficientSurface::CoefficientSurface(std::vector<double> lambda_grid, std::vector<double> theta_grid,
                                       Eigen::MatrixXd cp_values, Eigen::MatrixXd ct_values)
    : lambda_(std::move(lambda_grid)),
      theta_(std::move(theta_grid)),
      cp_(std::move(cp_values)),
      ct_(std::move(ct_values)) {
    require_grid(lambda_, "lambda");
    require_grid(theta_, "theta");
    const auto rows = static_cast<Eigen::Index>(lambda_.size());
    const auto cols = static_cast<Eigen::Index>(theta_.size());
    if (cp_.rows() != rows || cp_.cols() != cols) {
        throw ValidationError("coefficients", "cp matrix shape " + std::to_string(cp_.rows()) + "x" +
                                                  std::to_string(cp_.cols()) + " does not match grid " +
                                                  std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (ct_.rows() != rows || ct_.cols() != cols) {
        throw ValidationError("coefficients", "ct matrix shape does not match grid");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double c = cp_(i, j);
            if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
                throw ValidationError("coefficients", "cp sample out of [0, 1] at (" + std::to_string(i) + ", " +
                                                          std::to_string(j) + "): " + std::to_string(c));
            }
            const double t = ct_(i, j);
            if (!std::isfinite(t) || t < 0.0) {
                throw ValidationError("coefficients", "ct sample negative at (" + std::to_string(i) + ", " +
                                                          std::to_string(j) + "): " + std::to_string(t));
            }
            if (c > optimum_.cp || (i == 0 && j == 0)) {
                optimum_ = {lambda_[static_cast<std::size_t>(i)], theta_[static_cast<std::size_t>(j)], c};
            }
        }
    }
}

CoefficientSurface::Cell CoefficientSurface::locate(double lambda, double theta) const {
    Cell c;
    const double lq = std::clamp(lambda, lambda_.front(), lambda_.back());
    const double tq = std::clamp(theta, theta_.front(), theta_.back());
    c.lambda_clamped = lambda < lambda_.front() || lambda > lambda_.back();
    c.theta_clamped = theta < theta_.front() || theta > theta_.back();
    c.i = cell_index(lambda_, lq);
    c.j = cell_index(theta_, tq);
    const auto i = static_cast<std::size_t>(c.i);
    const auto j = static_cast<std::size_t>(c.j);
    c.s = (lq - lambda_[i]) / (lambda_[i + 1] - lambda_[i]);
    c.t = (tq - theta_[j]) / (theta_[j + 1] - theta_[j]);
    return c;
}

double CoefficientSurface::interpolate(const Eigen::MatrixXd& v, const Cell& c) {
    const double f00 = v(c.i, c.j);
    const double f10 = v(c.i + 1, c.j);
    const double f01 = v(c.i, c.j + 1);
    const double f11 = v(c.i + 1, c.j + 1);
    return (1.0 - c.s) * (1.0 - c.t) * f00 + c.s * (1.0 - c.t) * f10 + (1.0 - c.s) * c.t * f01 + c.s * c.t * f11;
}

Gradient CoefficientSurface::gradient(const Eigen::MatrixXd& v, const Cell& c) const {
    const double f00 = v(c.i, c.j);
    const double f10 = v(c.i + 1, c.j);
    const double f01 = v(c.i, c.j + 1);
    const double f11 = v(c.i + 1, c.j + 1);
    const auto i = static_cast<std::size_t>(c.i);
    const auto j = static_cast<std::size_t>(c.j);
    Gradient g;
    if (!c.lambda_clamped) {
        g.d_lambda = ((1.0 - c.t) * (f10 - f00) + c.t * (f11 - f01)) / (lambda_[i + 1] - lambda_[i]);
    }
    if (!c.theta_clamped) {
        g.d_theta = ((1.0 - c.s) * (f01 - f00) + c.s * (f11 - f10)) / (theta_[j + 1] - theta_[j]);
    }
    return g;
}

double CoefficientSurface::cp(double lambda, double theta) const { return interpolate(cp_, locate(lambda, theta)); }

double CoefficientSurface::ct(double lambda, double theta) const { return interpolate(ct_, locate(lambda, theta)); }

Gradient CoefficientSurface::cp_gradient(double lambda, double theta) const {
    return gradient(cp_, locate(lambda, theta));
}

Gradient CoefficientSurface::ct_gradient(double lambda, double theta) const {
    return gradient(ct_, locate(lambda, theta));
}

// Heier-type power coefficient. theta enters in degrees.
double analytic_cp(double lambda, double theta) {
    constexpr double c1 = 0.5176, c2 = 116.0, c3 = 0.4, c4 = 5.0, c5 = 21.0, c6 = 0.0068;
    const double deg = theta * 180.0 / std::numbers::pi;
    const double inv_li = 1.0 / (lambda + 0.08 * deg) - 0.035 / (deg * deg * deg + 1.0);
    const double value = c1 * (c2 * inv_li - c3 * deg - c4) * std::exp(-c5 * inv_li) + c6 * lambda;
    return std::clamp(value, 0.0, 1.0);
}

// Actuator-disk thrust matched to analytic_cp: solve Cp = 4a(1-a)^2 for the
// axial induction a in [0, 1/3] and return CT = 4a(1-a), clipped to [0, 1.2].
double analytic_ct(double lambda, double theta) {
    const double cp = analytic_cp(lambda, theta);
    auto power = [](double a) { return 4.0 * a * (1.0 - a) * (1.0 - a); };
    double lo = 0.0;
    double hi = 1.0 / 3.0;
    if (cp >= power(hi)) {
        lo = hi;
    } else {
        for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
            const double mid = 0.5 * (lo + hi);
            (power(mid) < cp ? lo : hi) = mid;
        }
    }
    const double a = 0.5 * (lo + hi);
    return std::clamp(4.0 * a * (1.0 - a), 0.0, 1.2);
}

CoefficientSurface default_surface() {
    constexpr int n = 40;
    std::vector<double> lambda(n);
    std::vector<double> theta(n);
    const double theta_max = 30.0 * std::numbers::pi / 180.0;
    for (int k = 0; k < n; ++k) {
        lambda[static_cast<std::size_t>(k)] = 1.0 + 14.0 * k / (n - 1);
        theta[static_cast<std::size_t>(k)] = theta_max * k / (n - 1);
    }
    Eigen::MatrixXd cp(n, n);
    Eigen::MatrixXd ct(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            cp(i, j) = analytic_cp(lambda[static_cast<std::size_t>(i)], theta[static_cast<std::size_t>(j)]);
            ct(i, j) = analytic_ct(lambda[static_cast<std::size_t>(i)], theta[static_cast<std::size_t>(j)]);
        }
    }
    return CoefficientSurface(std::move(lambda), std::move(theta), std::move(cp), std::move(ct));
}

namespace {

struct Table {
    std::vector<double> lambda;
    std::vector<double> theta;
    Eigen::MatrixXd values;
};

Table read_table(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    if (rows.size() < 2) {
        throw ValidationError("coefficients", path.string() + ": need a header and at least one data row");
    }
    Table t;
    const auto& header = rows.front();
    if (header.size() < 2) {
        throw ValidationError("coefficients", path.string() + ":1: header needs at least one theta column");
    }
    for (std::size_t c = 1; c < header.size(); ++c) {
        t.theta.push_back(csv::parse_double(header[c], path, 1, c + 1));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(t.theta.size()));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ValidationError("coefficients", path.string() + ":" + std::to_string(r + 1) + ": expected " +
                                                      std::to_string(header.size()) + " fields, found " +
                                                      std::to_string(row.size()));
        }
        t.lambda.push_back(csv::parse_double(row[0], path, r + 1, 1));
        for (std::size_t c = 1; c < row.size(); ++c) {
            t.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
                csv::parse_double(row[c], path, r + 1, c + 1);
        }
    }
    return t;
}

void write_table(const std::filesystem::path& path, const std::vector<double>& lambda,
                 const std::vector<double>& theta, const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("coefficients", "cannot open " + path.string() + " for writing");
    }
    out << "lambda\\theta";
    for (double th : theta) {
        out << ',' << csv::format_double(th);
    }
    out << '\n';
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        out << csv::format_double(lambda[i]);
        for (std::size_t j = 0; j < theta.size(); ++j) {
            out << ',' << csv::format_double(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
}

}  // namespace

CoefficientSurface load_surface(const std::filesystem::path& cp_csv, const std::filesystem::path& ct_csv) {
    Table cp = read_table(cp_csv);
    Table ct = read_table(ct_csv);
    if (cp.lambda != ct.lambda || cp.theta != ct.theta) {
        throw ValidationError("coefficients", "cp and ct tables use different grids");
    }
    return CoefficientSurface(std::move(cp.lambda), std::move(cp.theta), std::move(cp.values), std::move(ct.values));
}

void save_surface(const CoefficientSurface& surface, const std::filesystem::path& cp_csv,
                  const std::filesystem::path& ct_csv) {
    write_table(cp_csv, surface.lambda_grid(), surface.theta_grid(), surface.cp_values());
    write_table(ct_csv, surface.lambda_grid(), surface.theta_grid(), surface.ct_values());
}

}  // namespace windlq
