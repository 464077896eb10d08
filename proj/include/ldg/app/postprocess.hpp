#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace ldg::disc {
class Discretization;
}

namespace ldg::app {

/// State fields at volume quadrature points, (ne*nq) rows each.
struct QuadratureFields
{
    Eigen::MatrixXd x; ///< nd columns
    Eigen::MatrixXd u; ///< ncu columns
    Eigen::MatrixXd q; ///< ncu*nd columns, empty for convection models
    Eigen::MatrixXd w; ///< nw columns
    Eigen::VectorXd weights;
};

QuadratureFields quadrature_fields(const disc::Discretization& d, const Eigen::VectorXd& U, double t);

struct L2Error
{
    double error_u = 0.0; ///< relative, or absolute when `u_zero_norm`
    double error_q = 0.0; ///< NaN when the model has no gradient or no exact q is given
    double norm_u = 0.0;
    double norm_q = 0.0;
    bool u_zero_norm = false;
    bool q_zero_norm = false;
};

/// ||u_h - u|| / ||u|| over all components by volume quadrature, and the same
/// for q (reconstructed for diffusion models, evolved for wave models).
L2Error compute_l2_error(const disc::Discretization& d, const Eigen::VectorXd& U,
                         const std::vector<std::string>& exact_u, const std::vector<std::string>& exact_q, double t);

/// Integral over the domain of each integrand (reserved volume symbols).
std::vector<double> compute_functional(const disc::Discretization& d, const Eigen::VectorXd& U,
                                       const std::vector<std::string>& integrands, double t);

} // namespace ldg::app
