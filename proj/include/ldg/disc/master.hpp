#pragma once

#include <vector>

#include <Eigen/Core>

#include "ldg/poly/basis.hpp"

namespace ldg::disc {

/// Basis tables of one reference face, seen from the owning element.
struct FaceTable
{
    Eigen::MatrixXd points; ///< volume-reference coordinates, dim x nqf
    Eigen::MatrixXd phi;    ///< nqf x n_nodes
};

/// Reference element: nodal basis, quadrature rules and tabulations.
struct MasterElement
{
    ElementKind kind = ElementKind::Quad;
    int p = 1;
    int quad_degree = 3;
    poly::NodalBasis basis;
    poly::Quadrature volume;            ///< volume rule
    poly::Quadrature face;              ///< rule on the reference face
    Eigen::MatrixXd phi;                ///< nq x n_nodes
    std::vector<Eigen::MatrixXd> dphi;  ///< per reference direction, nq x n_nodes
    std::vector<FaceTable> faces;       ///< per local face

    int dim() const { return dimension(kind); }
    int n_nodes() const { return basis.size(); }
    int n_quad() const { return static_cast<int>(volume.weights.size()); }
    int n_face_quad() const { return static_cast<int>(face.weights.size()); }
    const Eigen::MatrixXd& nodes() const { return basis.nodes(); }
};

/// quad_degree < 0 selects 2p+1. Throws Error for p outside [1, 8].
MasterElement build_master(ElementKind kind, int p, int quad_degree = -1);

} // namespace ldg::disc
