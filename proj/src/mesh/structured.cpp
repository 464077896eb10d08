#include <algorithm>
#include <array>
#include <cmath>

#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"
#include "internal.hpp"

namespace ldg::mesh {

namespace {

// Orientation sign of a simplex / tensor element from its first-vertex frame.
double orientation(ElementKind kind, const Eigen::MatrixXd& v)
{
    const int d = dimension(kind);
    Eigen::MatrixXd J(d, d);
    switch (kind) {
    case ElementKind::Line: return v(0, 1) - v(0, 0);
    case ElementKind::Tri:
    case ElementKind::Tet:
        for (int r = 0; r < d; ++r)
            J.col(r) = v.col(r + 1) - v.col(0);
        return J.determinant();
    case ElementKind::Quad:
        J.col(0) = v.col(1) - v.col(0);
        J.col(1) = v.col(3) - v.col(0);
        return J.determinant();
    case ElementKind::Hex:
        J.col(0) = v.col(1) - v.col(0);
        J.col(1) = v.col(3) - v.col(0);
        J.col(2) = v.col(4) - v.col(0);
        return J.determinant();
    default: return 1.0;
    }
}

} // namespace

void fix_orientation(Mesh& mesh)
{
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (orientation(mesh.kind, mesh.element_vertices(e)) > 0)
            continue;
        auto c = mesh.connectivity.col(e);
        switch (mesh.kind) {
        case ElementKind::Line:
        case ElementKind::Tri:
        case ElementKind::Tet: std::swap(c(0), c(1)); break;
        case ElementKind::Quad: std::swap(c(1), c(3)); break;
        case ElementKind::Hex:
            std::swap(c(1), c(3));
            std::swap(c(5), c(7));
            break;
        default: break;
        }
    }
}

std::vector<PeriodicPair> box_periodicity(const Box& box, int nd, const std::vector<int>& axes)
{
    std::vector<PeriodicPair> out;
    for (int a : axes) {
        if (a < 0 || a >= nd)
            throw MeshError("periodic axis out of range");
        PeriodicPair p;
        p.tag_a = 2 * a + 1;
        p.tag_b = 2 * a + 2;
        p.translation = Eigen::VectorXd::Zero(nd);
        p.translation(a) = box.hi[static_cast<std::size_t>(a)] - box.lo[static_cast<std::size_t>(a)];
        out.push_back(p);
    }
    return out;
}

Mesh generate_structured(const Box& box, const std::vector<int>& counts, ElementKind kind, int order)
{
    const int nd = dimension(kind);
    if (nd == 0 || static_cast<int>(counts.size()) != nd)
        throw MeshError("generate_structured: need one count per dimension of " + to_string(kind));
    for (int c : counts)
        if (c < 1)
            throw MeshError("generate_structured: counts must be at least 1");
    for (int r = 0; r < nd; ++r)
        if (!(box.hi[static_cast<std::size_t>(r)] > box.lo[static_cast<std::size_t>(r)]))
            throw MeshError("generate_structured: empty box");

    std::array<int, 3> n{1, 1, 1};
    for (int r = 0; r < nd; ++r)
        n[static_cast<std::size_t>(r)] = counts[static_cast<std::size_t>(r)];
    const int nx = n[0] + 1, ny = nd > 1 ? n[1] + 1 : 1, nz = nd > 2 ? n[2] + 1 : 1;

    Mesh mesh;
    mesh.nd = nd;
    mesh.kind = kind;
    mesh.vertices.resize(nd, Eigen::Index(nx) * ny * nz);
    auto vid = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::array<int, 3> ijk{i, j, k};
                for (int r = 0; r < nd; ++r) {
                    const auto R = static_cast<std::size_t>(r);
                    // exact end points avoid round-off at the box faces
                    const double s = double(ijk[R]) / n[R];
                    mesh.vertices(r, vid(i, j, k)) = ijk[R] == n[R] ? box.hi[R] : box.lo[R] + s * (box.hi[R] - box.lo[R]);
                }
            }

    std::vector<std::vector<int>> cells;
    for (int k = 0; k < std::max(1, nz - 1); ++k)
        for (int j = 0; j < std::max(1, ny - 1); ++j)
            for (int i = 0; i < nx - 1; ++i) {
                if (nd == 1) {
                    cells.push_back({vid(i, 0, 0), vid(i + 1, 0, 0)});
                    continue;
                }
                if (nd == 2) {
                    const int v0 = vid(i, j, 0), v1 = vid(i + 1, j, 0), v2 = vid(i + 1, j + 1, 0), v3 = vid(i, j + 1, 0);
                    if (kind == ElementKind::Quad)
                        cells.push_back({v0, v1, v2, v3});
                    else {
                        cells.push_back({v0, v1, v2});
                        cells.push_back({v0, v2, v3});
                    }
                    continue;
                }
                std::array<int, 8> h{vid(i, j, k),         vid(i + 1, j, k),         vid(i + 1, j + 1, k),
                                     vid(i, j + 1, k),     vid(i, j, k + 1),         vid(i + 1, j, k + 1),
                                     vid(i + 1, j + 1, k + 1), vid(i, j + 1, k + 1)};
                if (kind == ElementKind::Hex) {
                    cells.emplace_back(h.begin(), h.end());
                    continue;
                }
                // Kuhn: walk from corner (0,0,0) to (1,1,1) along each axis permutation
                auto corner = [&](int a, int b, int c) { return vid(i + a, j + b, k + c); };
                std::array<int, 3> perm{0, 1, 2};
                do {
                    std::array<int, 3> p{0, 0, 0};
                    std::vector<int> tet{corner(0, 0, 0)};
                    for (int s = 0; s < 3; ++s) {
                        p[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])] = 1;
                        tet.push_back(corner(p[0], p[1], p[2]));
                    }
                    cells.push_back(tet);
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
    const int nv = num_vertices(kind);
    mesh.connectivity.resize(nv, static_cast<Eigen::Index>(cells.size()));
    for (std::size_t e = 0; e < cells.size(); ++e)
        for (int k = 0; k < nv; ++k)
            mesh.connectivity(k, static_cast<Eigen::Index>(e)) = cells[e][static_cast<std::size_t>(k)];
    fix_orientation(mesh);

    // tag faces lying on the box sides
    const double tol = 1e-12;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto v = mesh.element_vertices(e);
        const auto& fvs = face_vertices(kind);
        for (std::size_t f = 0; f < fvs.size(); ++f) {
            for (int r = 0; r < nd; ++r)
                for (int side = 0; side < 2; ++side) {
                    const double plane = side ? box.hi[static_cast<std::size_t>(r)] : box.lo[static_cast<std::size_t>(r)];
                    const double scale = std::max(1.0, std::abs(plane));
                    bool on = true;
                    for (int k : fvs[f])
                        on = on && std::abs(v(r, k) - plane) <= tol * scale;
                    if (on)
                        mesh.boundary.push_back({e, static_cast<int>(f), 2 * r + 1 + side});
                }
        }
    }
    set_straight_geometry(mesh, order);
    return mesh;
}

} // namespace ldg::mesh
