#include "ldg/poly/reference.hpp"

#include "ldg/error.hpp"

namespace ldg {

std::string to_string(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Point: return "point";
    case ElementKind::Line: return "line";
    case ElementKind::Tri: return "tri";
    case ElementKind::Quad: return "quad";
    case ElementKind::Tet: return "tet";
    case ElementKind::Hex: return "hex";
    }
    return "?";
}

ElementKind element_kind_from_string(const std::string& name)
{
    for (ElementKind k : {ElementKind::Point, ElementKind::Line, ElementKind::Tri, ElementKind::Quad, ElementKind::Tet,
                          ElementKind::Hex})
        if (to_string(k) == name)
            return k;
    throw Error("unknown element kind '" + name + "'");
}

int dimension(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Point: return 0;
    case ElementKind::Line: return 1;
    case ElementKind::Tri:
    case ElementKind::Quad: return 2;
    default: return 3;
    }
}

bool is_simplex(ElementKind kind)
{
    return kind == ElementKind::Tri || kind == ElementKind::Tet || kind == ElementKind::Line ||
           kind == ElementKind::Point;
}

bool is_tensor(ElementKind kind)
{
    return kind == ElementKind::Line || kind == ElementKind::Quad || kind == ElementKind::Hex ||
           kind == ElementKind::Point;
}

int num_vertices(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Point: return 1;
    case ElementKind::Line: return 2;
    case ElementKind::Tri: return 3;
    case ElementKind::Quad: return 4;
    case ElementKind::Tet: return 4;
    case ElementKind::Hex: return 8;
    }
    return 0;
}

int num_faces(ElementKind kind)
{
    return static_cast<int>(face_vertices(kind).size());
}

ElementKind face_kind(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Line: return ElementKind::Point;
    case ElementKind::Tri:
    case ElementKind::Quad: return ElementKind::Line;
    case ElementKind::Tet: return ElementKind::Tri;
    case ElementKind::Hex: return ElementKind::Quad;
    default: throw Error("point elements have no faces");
    }
}

const Eigen::MatrixXd& reference_vertices(ElementKind kind)
{
    static const Eigen::MatrixXd point = Eigen::MatrixXd::Zero(0, 1);
    static const Eigen::MatrixXd line = (Eigen::MatrixXd(1, 2) << -1, 1).finished();
    static const Eigen::MatrixXd tri = (Eigen::MatrixXd(2, 3) << -1, 1, -1, -1, -1, 1).finished();
    static const Eigen::MatrixXd quad = (Eigen::MatrixXd(2, 4) << -1, 1, 1, -1, -1, -1, 1, 1).finished();
    static const Eigen::MatrixXd tet =
        (Eigen::MatrixXd(3, 4) << -1, 1, -1, -1, -1, -1, 1, -1, -1, -1, -1, 1).finished();
    static const Eigen::MatrixXd hex = (Eigen::MatrixXd(3, 8) << -1, 1, 1, -1, -1, 1, 1, -1, //
                                        -1, -1, 1, 1, -1, -1, 1, 1,                           //
                                        -1, -1, -1, -1, 1, 1, 1, 1)
                                           .finished();
    switch (kind) {
    case ElementKind::Point: return point;
    case ElementKind::Line: return line;
    case ElementKind::Tri: return tri;
    case ElementKind::Quad: return quad;
    case ElementKind::Tet: return tet;
    case ElementKind::Hex: return hex;
    }
    return point;
}

const std::vector<std::vector<int>>& face_vertices(ElementKind kind)
{
    static const std::vector<std::vector<int>> none;
    static const std::vector<std::vector<int>> line{{0}, {1}};
    static const std::vector<std::vector<int>> tri{{0, 1}, {1, 2}, {2, 0}};
    static const std::vector<std::vector<int>> quad{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    static const std::vector<std::vector<int>> tet{{0, 1, 2}, {0, 1, 3}, {1, 2, 3}, {0, 2, 3}};
    static const std::vector<std::vector<int>> hex{{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                                   {1, 2, 6, 5}, {3, 2, 6, 7}, {0, 3, 7, 4}};
    switch (kind) {
    case ElementKind::Line: return line;
    case ElementKind::Tri: return tri;
    case ElementKind::Quad: return quad;
    case ElementKind::Tet: return tet;
    case ElementKind::Hex: return hex;
    default: return none;
    }
}

double reference_measure(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Point: return 1.0;
    case ElementKind::Line: return 2.0;
    case ElementKind::Tri: return 2.0;
    case ElementKind::Quad: return 4.0;
    case ElementKind::Tet: return 4.0 / 3.0;
    case ElementKind::Hex: return 8.0;
    }
    return 0.0;
}

namespace {

Eigen::MatrixXd face_vertex_coords(ElementKind kind, int face)
{
    const auto& fv = face_vertices(kind).at(static_cast<std::size_t>(face));
    const auto& rv = reference_vertices(kind);
    Eigen::MatrixXd out(rv.rows(), static_cast<Eigen::Index>(fv.size()));
    for (std::size_t k = 0; k < fv.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = rv.col(fv[k]);
    return out;
}

} // namespace

Eigen::VectorXd reference_normal(ElementKind kind, int face)
{
    const int d = dimension(kind);
    const Eigen::MatrixXd fv = face_vertex_coords(kind, face);
    Eigen::VectorXd n(d);
    if (d == 1) {
        n(0) = fv(0, 0) < 0 ? -1.0 : 1.0;
        return n;
    }
    if (d == 2) {
        const Eigen::Vector2d e = fv.col(1) - fv.col(0);
        n << e(1), -e(0);
    } else {
        const Eigen::Vector3d a = fv.col(1) - fv.col(0);
        const Eigen::Vector3d b = fv.col(fv.cols() - 1) - fv.col(0);
        n = a.cross(b);
    }
    const Eigen::VectorXd centroid = reference_vertices(kind).rowwise().mean();
    if (n.dot(fv.col(0) - centroid) < 0)
        n = -n;
    return n.normalized();
}

Eigen::MatrixXd face_vertex_weights(ElementKind face, const Eigen::MatrixXd& s)
{
    const Eigen::Index n = s.cols();
    Eigen::MatrixXd w;
    switch (face) {
    case ElementKind::Point: w = Eigen::MatrixXd::Ones(1, n); break;
    case ElementKind::Line:
        w.resize(2, n);
        w.row(0) = (1.0 - s.row(0).array()) / 2;
        w.row(1) = (1.0 + s.row(0).array()) / 2;
        break;
    case ElementKind::Tri:
        w.resize(3, n);
        w.row(0) = -(s.row(0).array() + s.row(1).array()) / 2;
        w.row(1) = (1.0 + s.row(0).array()) / 2;
        w.row(2) = (1.0 + s.row(1).array()) / 2;
        break;
    case ElementKind::Quad: {
        w.resize(4, n);
        const auto& corners = reference_vertices(ElementKind::Quad);
        for (int k = 0; k < 4; ++k)
            w.row(k) = (1.0 + corners(0, k) * s.row(0).array()) * (1.0 + corners(1, k) * s.row(1).array()) / 4;
        break;
    }
    default: throw Error("face_vertex_weights: unsupported face kind");
    }
    return w;
}

Eigen::MatrixXd face_to_volume(ElementKind kind, int face, const Eigen::MatrixXd& face_points)
{
    return face_vertex_coords(kind, face) * face_vertex_weights(face_kind(kind), face_points);
}

double face_measure_scale(ElementKind kind, int face)
{
    const Eigen::MatrixXd fv = face_vertex_coords(kind, face);
    switch (face_kind(kind)) {
    case ElementKind::Point: return 1.0;
    case ElementKind::Line: return (fv.col(1) - fv.col(0)).norm() / 2;
    case ElementKind::Tri: {
        const Eigen::Vector3d a = fv.col(1) - fv.col(0), b = fv.col(2) - fv.col(0);
        return a.cross(b).norm() / 4;
    }
    case ElementKind::Quad: {
        const Eigen::Vector3d a = fv.col(1) - fv.col(0), b = fv.col(3) - fv.col(0);
        return a.cross(b).norm() / 4;
    }
    default: return 0.0;
    }
}

std::vector<std::array<int, 3>> lattice_indices(ElementKind kind, int p)
{
    std::vector<std::array<int, 3>> idx;
    switch (kind) {
    case ElementKind::Point: idx.push_back({0, 0, 0}); break;
    case ElementKind::Line:
        for (int i = 0; i <= p; ++i)
            idx.push_back({i, 0, 0});
        break;
    case ElementKind::Quad:
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i)
                idx.push_back({i, j, 0});
        break;
    case ElementKind::Hex:
        for (int k = 0; k <= p; ++k)
            for (int j = 0; j <= p; ++j)
                for (int i = 0; i <= p; ++i)
                    idx.push_back({i, j, k});
        break;
    case ElementKind::Tri:
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i + j <= p; ++i)
                idx.push_back({i, j, 0});
        break;
    case ElementKind::Tet:
        for (int k = 0; k <= p; ++k)
            for (int j = 0; j + k <= p; ++j)
                for (int i = 0; i + j + k <= p; ++i)
                    idx.push_back({i, j, k});
        break;
    }
    return idx;
}

int lattice_size(ElementKind kind, int p)
{
    switch (kind) {
    case ElementKind::Point: return 1;
    case ElementKind::Line: return p + 1;
    case ElementKind::Quad: return (p + 1) * (p + 1);
    case ElementKind::Hex: return (p + 1) * (p + 1) * (p + 1);
    case ElementKind::Tri: return (p + 1) * (p + 2) / 2;
    case ElementKind::Tet: return (p + 1) * (p + 2) * (p + 3) / 6;
    }
    return 0;
}

Eigen::MatrixXd lattice(ElementKind kind, int p)
{
    const int d = dimension(kind);
    const auto idx = lattice_indices(kind, p);
    Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t n = 0; n < idx.size(); ++n)
        for (int r = 0; r < d; ++r)
            pts(r, static_cast<Eigen::Index>(n)) = p == 0 ? 0.0 : -1.0 + 2.0 * idx[n][static_cast<std::size_t>(r)] / p;
    return pts;
}

Eigen::MatrixXd vertex_map(ElementKind kind, const Eigen::MatrixXd& vertices, const Eigen::MatrixXd& points)
{
    const int d = dimension(kind);
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd w(num_vertices(kind), n);
    if (kind == ElementKind::Tri || kind == ElementKind::Tet) {
        for (int r = 0; r < d; ++r)
            w.row(r + 1) = (points.row(r).array() + 1.0) / 2;
        w.row(0) = Eigen::RowVectorXd::Ones(n) - w.bottomRows(d).colwise().sum();
    } else {
        const auto& rv = reference_vertices(kind);
        for (int k = 0; k < num_vertices(kind); ++k) {
            Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(n);
            for (int r = 0; r < d; ++r)
                prod *= (1.0 + rv(r, k) * points.row(r).transpose().array()) / 2;
            w.row(k) = prod.transpose().matrix();
        }
    }
    return vertices * w;
}

} // namespace ldg
