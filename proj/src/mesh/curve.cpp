#include <algorithm>
#include <cmath>

#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"

namespace ldg::mesh {

Projection circle_projection(const Eigen::Vector2d& center, double radius)
{
    return [center, radius](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::Vector2d d = x.head<2>() - center;
        return center + radius * d / d.norm();
    };
}

Projection sphere_projection(const Eigen::Vector3d& center, double radius)
{
    return [center, radius](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::Vector3d d = x.head<3>() - center;
        return center + radius * d / d.norm();
    };
}

namespace {

// Affine inverse of the reference face map: volume point -> face parameters.
struct FaceFrame
{
    Eigen::VectorXd origin;
    Eigen::MatrixXd pinv; // (dim-1) x dim
};

FaceFrame face_frame(ElementKind kind, int face)
{
    const ElementKind fk = face_kind(kind);
    const int fd = dimension(fk);
    FaceFrame fr;
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(fd, 1);
    fr.origin = face_to_volume(kind, face, zero);
    Eigen::MatrixXd A(dimension(kind), fd);
    for (int r = 0; r < fd; ++r) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(fd, 1);
        e(r) = 1;
        A.col(r) = face_to_volume(kind, face, e) - fr.origin;
    }
    fr.pinv = A.completeOrthogonalDecomposition().pseudoInverse();
    return fr;
}

} // namespace

Mesh curve_boundary(const Mesh& input, int tag, const Projection& projection)
{
    Mesh mesh = input;
    const int P = mesh.order;
    if (P < 2)
        return mesh;
    const ElementKind kind = mesh.kind;
    const ElementKind fk = face_kind(kind);
    const Eigen::MatrixXd ref = lattice(kind, P);
    const int nl = static_cast<int>(ref.cols());
    const Eigen::MatrixXd fref = lattice(fk, P);
    const poly::NodalBasis face_basis(fk, P, fref);
    const auto& rv = reference_vertices(kind);

    for (const auto& b : mesh.boundary) {
        if (b.tag != tag)
            continue;
        const int f = b.face;
        const FaceFrame frame = face_frame(kind, f);
        // element nodes at the face lattice positions
        const Eigen::MatrixXd face_pts = face_to_volume(kind, f, fref);
        auto x = mesh.element_nodes(b.element);
        const auto& geo = geometry_basis(kind, P);
        const Eigen::MatrixXd xf = x * geo.tabulate(face_pts).values.transpose();
        Eigen::MatrixXd disp(mesh.nd, fref.cols());
        for (Eigen::Index i = 0; i < fref.cols(); ++i)
            disp.col(i) = projection(xf.col(i)) - xf.col(i);

        const auto& fv = face_vertices(kind)[static_cast<std::size_t>(f)];
        // simplex: the vertex opposite the face; tensor: axis and side of the face
        int opposite = -1, axis = -1;
        double side = 0;
        if (is_simplex(kind)) {
            for (int k = 0; k < num_vertices(kind); ++k)
                if (std::find(fv.begin(), fv.end(), k) == fv.end())
                    opposite = k;
        } else {
            const Eigen::VectorXd n = reference_normal(kind, f);
            n.cwiseAbs().maxCoeff(&axis);
            side = n(axis) > 0 ? 1.0 : -1.0;
        }

        Eigen::MatrixXd moved = x;
        for (int i = 0; i < nl; ++i) {
            const Eigen::VectorXd xi = ref.col(i);
            double omega;
            Eigen::VectorXd xi_f;
            if (opposite >= 0) {
                // barycentric coordinate of the opposite vertex
                const Eigen::VectorXd vk = rv.col(opposite);
                const Eigen::VectorXd w = vertex_map(kind, Eigen::MatrixXd::Identity(num_vertices(kind), num_vertices(kind)),
                                                     xi);
                const double lk = w(opposite);
                omega = 1.0 - lk;
                if (omega < 1e-14)
                    continue;
                xi_f = vk + (xi - vk) / omega;
            } else {
                omega = (1.0 + side * xi(axis)) / 2;
                if (omega < 1e-14)
                    continue;
                xi_f = xi;
                xi_f(axis) = side;
            }
            const Eigen::MatrixXd s = frame.pinv * (xi_f - frame.origin);
            const Eigen::RowVectorXd phi = face_basis.tabulate(s).values;
            moved.col(i) += omega * disp * phi.transpose();
        }
        // face nodes land exactly on the geometry
        for (int i = 0; i < nl; ++i) {
            const Eigen::VectorXd n = reference_normal(kind, f);
            if (std::abs(n.dot(ref.col(i) - rv.col(fv[0]))) < 1e-12)
                moved.col(i) = projection(x.col(i));
        }
        x = moved;
    }
    const Eigen::VectorXd jac = min_jacobians(mesh);
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (!(jac(e) > 0))
            throw MeshError("element " + std::to_string(e) + " is inverted after curving");
    return mesh;
}

} // namespace ldg::mesh
