#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ldg {

enum class ElementKind
{
    Point,
    Line,
    Tri,
    Quad,
    Tet,
    Hex,
};

std::string to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& name);

int dimension(ElementKind kind);
bool is_simplex(ElementKind kind);
bool is_tensor(ElementKind kind);
int num_vertices(ElementKind kind);
int num_faces(ElementKind kind);
ElementKind face_kind(ElementKind kind);

/// Reference vertices as columns. Line [-1,1]; Quad/Hex [-1,1]^d with
/// counter-clockwise / Gmsh ordering; Tri (-1,-1),(1,-1),(-1,1); Tet likewise.
const Eigen::MatrixXd& reference_vertices(ElementKind kind);
/// Local vertex indices of each face; quad faces are listed cyclically.
const std::vector<std::vector<int>>& face_vertices(ElementKind kind);
/// Outward unit normal of a reference face.
Eigen::VectorXd reference_normal(ElementKind kind, int face);
double reference_measure(ElementKind kind);

/// Map face-reference points (dim-1 rows) to volume-reference coordinates.
Eigen::MatrixXd face_to_volume(ElementKind kind, int face, const Eigen::MatrixXd& face_points);
/// Ratio between the reference face measure and the face-reference element measure.
double face_measure_scale(ElementKind kind, int face);
/// Per-face-vertex interpolation weights (barycentric or bilinear) at face-reference points.
Eigen::MatrixXd face_vertex_weights(ElementKind face, const Eigen::MatrixXd& face_points);

/// Equispaced lattice of order p; i fastest, then j, then k (simplices i+j+k<=p).
Eigen::MatrixXd lattice(ElementKind kind, int p);
int lattice_size(ElementKind kind, int p);
/// Multi-index (i,j,k) of each lattice entry.
std::vector<std::array<int, 3>> lattice_indices(ElementKind kind, int p);

/// Map reference points through vertex coordinates (affine for simplices,
/// multilinear for tensor kinds). vertices: nd x nv, points: dim x n.
Eigen::MatrixXd vertex_map(ElementKind kind, const Eigen::MatrixXd& vertices, const Eigen::MatrixXd& points);

} // namespace ldg
