#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace windlq {

// Partial derivatives of a coefficient with respect to tip-speed ratio and pitch (1/rad).
struct Gradient {
    double d_lambda = 0.0;
    double d_theta = 0.0;
};

// Grid node holding the largest power coefficient.
struct OptimalPoint {
    double lambda = 0.0;
    double theta = 0.0;
    double cp = 0.0;
};

// Gridded power and thrust coefficient maps Cp(lambda, theta) and CT(lambda, theta).
//
// Each grid cell interpolates bilinearly between its four corner samples, so
// the surface is continuous and affine along each axis. Queries outside the
// bounding box clamp to the boundary. Derivatives on a cell edge use the cell
// toward larger lambda and larger theta; derivatives along a clamped axis are 0.
//
// Immutable after construction; every method is safe to call concurrently.
class CoefficientSurface {
public:
    // Throws ValidationError if a grid is not strictly increasing with at least
    // two points, a value matrix has the wrong shape, a Cp sample lies outside
    // [0, 1] or a CT sample is negative.
    CoefficientSurface(std::vector<double> lambda_grid, std::vector<double> theta_grid,
                       Eigen::MatrixXd cp_values, Eigen::MatrixXd ct_values);

    double cp(double lambda, double theta) const;
    double ct(double lambda, double theta) const;
    Gradient cp_gradient(double lambda, double theta) const;
    Gradient ct_gradient(double lambda, double theta) const;

    // Max over all grid nodes. Bilinear cells attain their extrema at corners,
    // so this is also the max of the interpolant.
    double cp_opt() const { return optimum_.cp; }
    const OptimalPoint& optimum() const { return optimum_; }

    const std::vector<double>& lambda_grid() const { return lambda_; }
    const std::vector<double>& theta_grid() const { return theta_; }
    const Eigen::MatrixXd& cp_values() const { return cp_; }
    const Eigen::MatrixXd& ct_values() const { return ct_; }

private:
    struct Cell {
        Eigen::Index i = 0;
        Eigen::Index j = 0;
        double s = 0.0;  // local coordinate in [0, 1] along lambda
        double t = 0.0;  // local coordinate in [0, 1] along theta
        bool lambda_clamped = false;
        bool theta_clamped = false;
    };

    Cell locate(double lambda, double theta) const;
    static double interpolate(const Eigen::MatrixXd& v, const Cell& c);
    Gradient gradient(const Eigen::MatrixXd& v, const Cell& c) const;

    std::vector<double> lambda_;
    std::vector<double> theta_;
    Eigen::MatrixXd cp_;
    Eigen::MatrixXd ct_;
    OptimalPoint optimum_;
};

// Analytic Cp model sampled on 40 x 40 nodes over lambda in [1, 15] and
// theta in [0, 30] degrees. See the README for the constants and the thrust model.
CoefficientSurface default_surface();

// Analytic models behind default_surface(), exposed for tests and fixtures.
// theta in radians.
double analytic_cp(double lambda, double theta);
double analytic_ct(double lambda, double theta);

// CSV: header `lambda\theta,theta_1,...,theta_m`, then one row per lambda.
// Angles in radians. Cp and CT live in two files with identical shape.
CoefficientSurface load_surface(const std::filesystem::path& cp_csv,
                                const std::filesystem::path& ct_csv);
void save_surface(const CoefficientSurface& surface, const std::filesystem::path& cp_csv,
                  const std::filesystem::path& ct_csv);

}  // namespace windlq
