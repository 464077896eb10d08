#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ldg/poly/reference.hpp"

namespace ldg::poly {

int num_basis(ElementKind kind, int p);

/// Basis values (points x basis) and reference gradients, one matrix per direction.
struct Tabulation
{
    Eigen::MatrixXd values;
    std::vector<Eigen::MatrixXd> gradients;
};

/// Orthonormal modal basis: Legendre tensor products, Dubiner/Koornwinder on simplices.
Tabulation orthonormal_basis(ElementKind kind, int p, const Eigen::MatrixXd& points);

/// Interpolation nodes: Gauss-Lobatto tensor products or warp-and-blend simplex nodes.
Eigen::MatrixXd solution_nodes(ElementKind kind, int p);

struct Quadrature
{
    Eigen::MatrixXd points; ///< dim x n
    Eigen::VectorXd weights;
};

/// Rule exact for polynomials of total degree <= `degree` (tensor: per direction).
Quadrature quadrature(ElementKind kind, int degree);

/// Nodal (Lagrange) basis on a node set, built by inverting the modal Vandermonde.
class NodalBasis
{
public:
    NodalBasis() = default;
    /// Throws Error when the Vandermonde condition number exceeds 1e12.
    NodalBasis(ElementKind kind, int p, Eigen::MatrixXd nodes);

    ElementKind kind() const noexcept { return kind_; }
    int degree() const noexcept { return p_; }
    int size() const noexcept { return static_cast<int>(nodes_.cols()); }
    const Eigen::MatrixXd& nodes() const noexcept { return nodes_; }
    const Eigen::MatrixXd& vandermonde() const noexcept { return V_; }
    const Eigen::MatrixXd& inverse_vandermonde() const noexcept { return Vinv_; }
    double condition_number() const noexcept { return cond_; }

    Tabulation tabulate(const Eigen::MatrixXd& points) const;

private:
    ElementKind kind_ = ElementKind::Line;
    int p_ = 1;
    Eigen::MatrixXd nodes_;
    Eigen::MatrixXd V_;
    Eigen::MatrixXd Vinv_;
    double cond_ = 1.0;
};

} // namespace ldg::poly
