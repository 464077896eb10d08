#include <algorithm>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "impl.hpp"
#include "ldg/error.hpp"

namespace ldg::disc::detail {

namespace {

struct PointMetric
{
    double det;
    Eigen::MatrixXd inv; ///< inv(r, j) = dxi_r / dx_j
};

PointMetric metric(const std::vector<Eigen::MatrixXd>& jr, Eigen::Index k, int e)
{
    const auto d = static_cast<Eigen::Index>(jr.size());
    Eigen::MatrixXd J(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        J.col(r) = jr[static_cast<std::size_t>(r)].col(k);
    const double det = J.determinant();
    if (!(det > 0))
        throw MeshError("non-positive Jacobian determinant on element " + std::to_string(e));
    return {det, J.inverse()};
}

std::vector<Eigen::MatrixXd> jacobian_columns(const Eigen::MatrixXd& X, const poly::Tabulation& tab)
{
    std::vector<Eigen::MatrixXd> jr;
    for (const auto& g : tab.gradients)
        jr.emplace_back(X * g.transpose());
    return jr;
}

} // namespace

void Impl::build_geometry()
{
    const int d = master.dim();
    const int nn = master.n_nodes(), nq = master.n_quad(), nqf = master.n_face_quad();
    const int ne = mesh.num_elements();
    const ElementKind kind = mesh.kind;
    const auto& gb = mesh::geometry_basis(kind, mesh.order);
    const poly::Tabulation gv = gb.tabulate(master.volume.points);
    const Eigen::MatrixXd gn = gb.tabulate(master.nodes()).values;
    std::vector<poly::Tabulation> gf;
    std::vector<Eigen::VectorXd> nref;
    for (int f = 0; f < num_faces(kind); ++f) {
        gf.push_back(gb.tabulate(master.faces[static_cast<std::size_t>(f)].points));
        nref.emplace_back(reference_normal(kind, f) * face_measure_scale(kind, f));
    }

    xnodes.resize(d, Eigen::Index(ne) * nn);
    xquad.resize(d, Eigen::Index(ne) * nq);
    wdet.resize(Eigen::Index(ne) * nq);
    gw.resize(Eigen::Index(ne) * nq, d * d);
    minv.resize(nn, Eigen::Index(nn) * ne);
    for (int e = 0; e < ne; ++e) {
        const Eigen::MatrixXd X = mesh.element_nodes(e);
        xnodes.middleCols(Eigen::Index(e) * nn, nn) = X * gn.transpose();
        xquad.middleCols(Eigen::Index(e) * nq, nq) = X * gv.values.transpose();
        const auto jr = jacobian_columns(X, gv);
        for (int k = 0; k < nq; ++k) {
            const auto m = metric(jr, k, e);
            const Eigen::Index row = Eigen::Index(e) * nq + k;
            wdet(row) = master.volume.weights(k) * m.det;
            for (int r = 0; r < d; ++r)
                for (int j = 0; j < d; ++j)
                    gw(row, r * d + j) = wdet(row) * m.inv(r, j);
        }
        const Eigen::MatrixXd M =
            master.phi.transpose() * wdet.segment(Eigen::Index(e) * nq, nq).asDiagonal() * master.phi;
        minv.middleCols(Eigen::Index(e) * nn, nn) = M.llt().solve(Eigen::MatrixXd::Identity(nn, nn));
    }
    xq_rows = xquad.transpose().array();

    auto add_face = [&](FaceGroup& g, int e, int f) {
        const int slot = g.size();
        g.elem_l.push_back(e);
        g.face_l.push_back(f);
        const Eigen::MatrixXd X = mesh.element_nodes(e);
        const auto& tab = gf[static_cast<std::size_t>(f)];
        const Eigen::MatrixXd xf = X * tab.values.transpose();
        const auto jr = jacobian_columns(X, tab);
        for (int k = 0; k < nqf; ++k) {
            const auto m = metric(jr, k, e);
            const Eigen::VectorXd a = m.det * m.inv.transpose() * nref[static_cast<std::size_t>(f)];
            const Eigen::Index row = Eigen::Index(slot) * nqf + k;
            const double len = a.norm();
            g.x.row(row) = xf.col(k).transpose().array();
            g.n.row(row) = (a / len).transpose().array();
            g.dsw(row) = len * master.face.weights(k);
        }
    };
    auto reserve = [&](FaceGroup& g, std::size_t count) {
        const auto rows = static_cast<Eigen::Index>(count) * nqf;
        g.x.resize(rows, d);
        g.n.resize(rows, d);
        g.dsw.resize(rows);
    };

    reserve(interior, topology.interior.size());
    std::map<std::pair<int, std::vector<int>>, int> tables;
    for (const auto& face : topology.interior) {
        add_face(interior, face.elem_l, face.face_l);
        interior.elem_r.push_back(face.elem_r);
        const auto key = std::make_pair(face.face_r, face.perm);
        auto it = tables.find(key);
        if (it == tables.end()) {
            const Eigen::MatrixXd s = mesh::map_face_points(face_kind(kind), face.perm, master.face.points);
            right_phi.push_back(master.basis.tabulate(face_to_volume(kind, face.face_r, s)).values);
            it = tables.emplace(key, static_cast<int>(right_phi.size()) - 1).first;
        }
        interior.table_r.push_back(it->second);
    }
    interior.left_trace.resize(static_cast<std::size_t>(interior.x.rows()));
    for (Eigen::Index row = 0; row < interior.x.rows(); ++row) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
            s += interior.n(row, j) * beta[static_cast<std::size_t>(j)];
        interior.left_trace[static_cast<std::size_t>(row)] = s > -1e-12;
    }

    std::map<int, std::size_t> slot_of_tag;
    std::map<int, std::size_t> count_of_tag;
    for (std::size_t i = 0; i < bcs.size(); ++i)
        slot_of_tag[bcs[i].tag] = i;
    for (const auto& bf : topology.boundary)
        ++count_of_tag[bf.tag];
    for (const auto& [tag, count] : count_of_tag)
        reserve(bcs[slot_of_tag.at(tag)].faces, count);
    for (const auto& bf : topology.boundary)
        add_face(bcs[slot_of_tag.at(bf.tag)].faces, bf.element, bf.face);

    neighbors.assign(static_cast<std::size_t>(ne), {});
    for (const auto& face : topology.interior) {
        neighbors[static_cast<std::size_t>(face.elem_l)].push_back(face.elem_r);
        neighbors[static_cast<std::size_t>(face.elem_r)].push_back(face.elem_l);
    }
    for (auto& list : neighbors) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
}

} // namespace ldg::disc::detail
