#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ldg/poly/basis.hpp"
#include "ldg/poly/reference.hpp"

namespace ldg::mesh {

struct BoundaryFace
{
    int element = -1;
    int face = -1;
    int tag = 0;

    friend bool operator==(const BoundaryFace&, const BoundaryFace&) = default;
};

/// Unstructured mesh of a single element kind with a per-element lattice of
/// geometry nodes (equispaced, order `order`).
struct Mesh
{
    int nd = 0;
    ElementKind kind = ElementKind::Quad;
    int order = 1;
    Eigen::MatrixXd vertices;     ///< nd x nv
    Eigen::MatrixXi connectivity; ///< vertices-per-element x ne
    Eigen::MatrixXd nodes;        ///< nd x (ne * nodes_per_element), element-contiguous
    std::vector<BoundaryFace> boundary;

    int num_elements() const { return static_cast<int>(connectivity.cols()); }
    int num_vertices() const { return static_cast<int>(vertices.cols()); }
    int nodes_per_element() const { return lattice_size(kind, order); }
    auto element_nodes(int e) const { return nodes.middleCols(Eigen::Index(e) * nodes_per_element(), nodes_per_element()); }
    auto element_nodes(int e) { return nodes.middleCols(Eigen::Index(e) * nodes_per_element(), nodes_per_element()); }
    Eigen::MatrixXd element_vertices(int e) const;
};

/// Equispaced nodal basis used for element geometry.
const poly::NodalBasis& geometry_basis(ElementKind kind, int order);

/// Rebuild straight-sided geometry nodes of the given order from the vertices.
void set_straight_geometry(Mesh& mesh, int order);

struct Box
{
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{1, 1, 1};
};

/// Axis-aligned grid. Boundary tags: 1 x-lo, 2 x-hi, 3 y-lo, 4 y-hi, 5 z-lo, 6 z-hi.
/// Quads split into two triangles along the (0,0)-(1,1) diagonal; hexes into six
/// Kuhn tetrahedra sharing the main diagonal.
Mesh generate_structured(const Box& box, const std::vector<int>& counts, ElementKind kind, int order = 1);

/// MSH 2.2 ASCII. Highest-dimensional elements become the mesh, one dimension
/// lower become tagged boundary faces (first tag = physical group).
Mesh parse_msh(std::string_view text);
Mesh import_msh(const std::filesystem::path& path);
std::string write_msh(const Mesh& mesh);

/// Versioned plain-text dump including the geometry nodes.
std::string dump_mesh(const Mesh& mesh);
Mesh parse_mesh_dump(std::string_view text);

struct PeriodicPair
{
    int tag_a = 0;
    int tag_b = 0;
    Eigen::VectorXd translation; ///< x_b = x_a + translation
};

/// Periodic pairs for the axis-aligned box of generate_structured.
std::vector<PeriodicPair> box_periodicity(const Box& box, int nd, const std::vector<int>& axes);

struct InteriorFace
{
    int elem_l = -1;
    int face_l = -1;
    int elem_r = -1;
    int face_r = -1;
    /// perm[k] = position in the right face's vertex list of left face vertex k.
    std::vector<int> perm;
    bool periodic = false;
    Eigen::VectorXd shift; ///< x_r = x_l + shift on periodic faces
};

struct FaceTopology
{
    std::vector<InteriorFace> interior; ///< includes periodic pairs
    std::vector<BoundaryFace> boundary;
    int num_periodic() const;
};

FaceTopology build_face_topology(const Mesh& mesh, const std::vector<PeriodicPair>& periodic = {});

/// Right-face reference coordinates of left-face reference points.
Eigen::MatrixXd map_face_points(ElementKind face_kind, const std::vector<int>& perm, const Eigen::MatrixXd& s_left);

using Projection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
Projection circle_projection(const Eigen::Vector2d& center, double radius);
Projection sphere_projection(const Eigen::Vector3d& center, double radius);

/// Project geometry nodes of faces tagged `tag` onto the geometry and blend the
/// displacement linearly into the element. Throws MeshError on inversion.
Mesh curve_boundary(const Mesh& mesh, int tag, const Projection& projection);

/// Smallest Jacobian determinant over a degree-2*order quadrature of each element.
Eigen::VectorXd min_jacobians(const Mesh& mesh);

/// Smallest vertex-to-vertex edge length.
double min_edge_length(const Mesh& mesh);

std::string describe(const Mesh& mesh);

} // namespace ldg::mesh
