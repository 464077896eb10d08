#include "ldg/disc/master.hpp"

#include "ldg/error.hpp"

namespace ldg::disc {

MasterElement build_master(ElementKind kind, int p, int quad_degree)
{
    if (p < 1 || p > 8)
        throw Error("polynomial degree must lie in [1, 8], got " + std::to_string(p));
    if (dimension(kind) < 1)
        throw Error("unsupported element kind " + to_string(kind));
    MasterElement m;
    m.kind = kind;
    m.p = p;
    m.quad_degree = quad_degree < 0 ? 2 * p + 1 : quad_degree;
    m.basis = poly::NodalBasis(kind, p, poly::solution_nodes(kind, p));
    m.volume = poly::quadrature(kind, m.quad_degree);
    m.face = poly::quadrature(face_kind(kind), m.quad_degree);
    const auto tab = m.basis.tabulate(m.volume.points);
    m.phi = tab.values;
    m.dphi = tab.gradients;
    for (int f = 0; f < num_faces(kind); ++f) {
        FaceTable ft;
        ft.points = face_to_volume(kind, f, m.face.points);
        ft.phi = m.basis.tabulate(ft.points).values;
        m.faces.push_back(std::move(ft));
    }
    return m;
}

} // namespace ldg::disc
