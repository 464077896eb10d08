#include <algorithm>
#include <map>
#include <tuple>

#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"

namespace ldg::mesh {

int FaceTopology::num_periodic() const
{
    return static_cast<int>(std::count_if(interior.begin(), interior.end(), [](const InteriorFace& f) { return f.periodic; }));
}

Eigen::MatrixXd map_face_points(ElementKind face, const std::vector<int>& perm, const Eigen::MatrixXd& s_left)
{
    const Eigen::MatrixXd w = face_vertex_weights(face, s_left);
    const auto& corners = reference_vertices(face);
    Eigen::MatrixXd permuted(corners.rows(), corners.cols());
    for (std::size_t k = 0; k < perm.size(); ++k)
        permuted.col(static_cast<Eigen::Index>(k)) = corners.col(perm[k]);
    return permuted * w;
}

namespace {

struct FaceRef
{
    int element;
    int face;
};

std::vector<int> face_vertex_ids(const Mesh& mesh, int e, int f)
{
    std::vector<int> ids;
    for (int k : face_vertices(mesh.kind)[static_cast<std::size_t>(f)])
        ids.push_back(mesh.connectivity(k, e));
    return ids;
}

} // namespace

FaceTopology build_face_topology(const Mesh& mesh, const std::vector<PeriodicPair>& periodic)
{
    FaceTopology topo;
    std::map<std::vector<int>, std::vector<FaceRef>> incident;
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int f = 0; f < num_faces(mesh.kind); ++f) {
            auto key = face_vertex_ids(mesh, e, f);
            std::sort(key.begin(), key.end());
            incident[key].push_back({e, f});
        }

    std::map<std::pair<int, int>, int> tags;
    for (const auto& b : mesh.boundary)
        tags[{b.element, b.face}] = b.tag;

    std::vector<BoundaryFace> open;
    for (const auto& [key, refs] : incident) {
        if (refs.size() > 2)
            throw MeshError("non-conforming mesh: a face is shared by more than two elements");
        if (refs.size() == 1) {
            const auto it = tags.find({refs[0].element, refs[0].face});
            open.push_back({refs[0].element, refs[0].face, it == tags.end() ? 0 : it->second});
            continue;
        }
        InteriorFace f{refs[0].element, refs[0].face, refs[1].element, refs[1].face, {}, false, Eigen::VectorXd::Zero(mesh.nd)};
        const auto left = face_vertex_ids(mesh, f.elem_l, f.face_l);
        const auto right = face_vertex_ids(mesh, f.elem_r, f.face_r);
        for (int v : left)
            f.perm.push_back(static_cast<int>(std::find(right.begin(), right.end(), v) - right.begin()));
        topo.interior.push_back(std::move(f));
    }
    std::sort(open.begin(), open.end(), [](const BoundaryFace& a, const BoundaryFace& b) {
        return std::tie(a.element, a.face) < std::tie(b.element, b.face);
    });

    const double tol = 1e-8 * min_edge_length(mesh);
    std::vector<bool> used(open.size(), false);
    for (const auto& pair : periodic) {
        if (pair.translation.size() != mesh.nd)
            throw MeshError("periodic translation has the wrong dimension");
        std::vector<std::size_t> side_b;
        for (std::size_t i = 0; i < open.size(); ++i)
            if (open[i].tag == pair.tag_b && !used[i])
                side_b.push_back(i);
        for (std::size_t i = 0; i < open.size(); ++i) {
            if (open[i].tag != pair.tag_a || used[i])
                continue;
            const auto va = face_vertex_ids(mesh, open[i].element, open[i].face);
            bool matched = false;
            for (std::size_t j : side_b) {
                if (used[j])
                    continue;
                const auto vb = face_vertex_ids(mesh, open[j].element, open[j].face);
                std::vector<int> perm;
                for (int a : va) {
                    const Eigen::VectorXd target = mesh.vertices.col(a) + pair.translation;
                    int hit = -1;
                    for (std::size_t k = 0; k < vb.size(); ++k)
                        if ((mesh.vertices.col(vb[k]) - target).norm() <= tol)
                            hit = static_cast<int>(k);
                    if (hit < 0)
                        break;
                    perm.push_back(hit);
                }
                if (perm.size() != va.size())
                    continue;
                topo.interior.push_back({open[i].element, open[i].face, open[j].element, open[j].face, perm, true,
                                         pair.translation});
                used[i] = used[j] = true;
                matched = true;
                break;
            }
            if (!matched)
                throw MeshError("unmatched periodic face on tag " + std::to_string(pair.tag_a));
        }
        for (std::size_t j : side_b)
            if (!used[j])
                throw MeshError("unmatched periodic face on tag " + std::to_string(pair.tag_b));
    }
    for (std::size_t i = 0; i < open.size(); ++i)
        if (!used[i])
            topo.boundary.push_back(open[i]);
    return topo;
}

} // namespace ldg::mesh
