#include "ldg/mesh/mesh.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "ldg/error.hpp"

namespace ldg::mesh {

Eigen::MatrixXd Mesh::element_vertices(int e) const
{
    Eigen::MatrixXd v(nd, connectivity.rows());
    for (Eigen::Index k = 0; k < connectivity.rows(); ++k)
        v.col(k) = vertices.col(connectivity(k, e));
    return v;
}

const poly::NodalBasis& geometry_basis(ElementKind kind, int order)
{
    static std::mutex mutex;
    static std::map<std::pair<ElementKind, int>, std::unique_ptr<poly::NodalBasis>> cache;
    const std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{kind, order}];
    if (!slot)
        slot = std::make_unique<poly::NodalBasis>(kind, order, lattice(kind, order));
    return *slot;
}

void set_straight_geometry(Mesh& mesh, int order)
{
    if (order < 1)
        throw MeshError("geometry order must be at least 1");
    mesh.order = order;
    const Eigen::MatrixXd ref = lattice(mesh.kind, order);
    const int nl = static_cast<int>(ref.cols());
    mesh.nodes.resize(mesh.nd, Eigen::Index(mesh.num_elements()) * nl);
    for (int e = 0; e < mesh.num_elements(); ++e)
        mesh.element_nodes(e) = vertex_map(mesh.kind, mesh.element_vertices(e), ref);
}

Eigen::VectorXd min_jacobians(const Mesh& mesh)
{
    const auto& basis = geometry_basis(mesh.kind, mesh.order);
    const auto quad = poly::quadrature(mesh.kind, 2 * mesh.order);
    Eigen::MatrixXd pts(quad.points.rows(), quad.points.cols() + basis.size());
    pts << quad.points, basis.nodes();
    const auto tab = basis.tabulate(pts);
    const int d = mesh.nd;
    Eigen::VectorXd out(mesh.num_elements());
    Eigen::MatrixXd J(d, d);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto x = mesh.element_nodes(e);
        double m = std::numeric_limits<double>::infinity();
        for (Eigen::Index q = 0; q < pts.cols(); ++q) {
            for (int r = 0; r < d; ++r)
                J.col(r) = x * tab.gradients[static_cast<std::size_t>(r)].row(q).transpose();
            m = std::min(m, J.determinant());
        }
        out(e) = m;
    }
    return out;
}

double min_edge_length(const Mesh& mesh)
{
    double h = std::numeric_limits<double>::infinity();
    const auto& rv = reference_vertices(mesh.kind);
    const int nv = num_vertices(mesh.kind);
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int a = 0; a < nv; ++a)
            for (int b = a + 1; b < nv; ++b) {
                // edges only: reference vertices differing in a single coordinate (tensor) or any pair (simplex)
                if (is_tensor(mesh.kind) && ((rv.col(a) - rv.col(b)).array() != 0).count() != 1)
                    continue;
                h = std::min(h, (mesh.vertices.col(mesh.connectivity(a, e)) - mesh.vertices.col(mesh.connectivity(b, e)))
                                    .norm());
            }
    return h;
}

std::string describe(const Mesh& mesh)
{
    std::ostringstream os;
    os << "kind: " << to_string(mesh.kind) << "\n"
       << "dimension: " << mesh.nd << "\n"
       << "geometry order: " << mesh.order << "\n"
       << "vertices: " << mesh.num_vertices() << "\n"
       << "elements: " << mesh.num_elements() << "\n"
       << "boundary faces: " << mesh.boundary.size() << "\n";
    std::map<int, int> tags;
    for (const auto& f : mesh.boundary)
        ++tags[f.tag];
    for (const auto& [tag, count] : tags)
        os << "  tag " << tag << ": " << count << "\n";
    if (mesh.num_elements() > 0) {
        const Eigen::VectorXd lo = mesh.vertices.rowwise().minCoeff(), hi = mesh.vertices.rowwise().maxCoeff();
        os << "bounding box:";
        for (int r = 0; r < mesh.nd; ++r)
            os << " [" << lo(r) << ", " << hi(r) << "]";
        os << "\nmin jacobian: " << min_jacobians(mesh).minCoeff() << "\n";
    }
    return os.str();
}

} // namespace ldg::mesh
