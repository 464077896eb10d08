#include "ldg/poly/basis.hpp"

#include <cmath>

#include "ldg/error.hpp"
#include "ldg/poly/jacobi.hpp"

namespace ldg::poly {

namespace {

using Eigen::ArrayXd;

ArrayXd jac(const ArrayXd& x, double a, double b, int n) { return jacobi<double>(x, a, b, n); }
ArrayXd djac(const ArrayXd& x, double a, double b, int n) { return jacobi_derivative<double>(x, a, b, n); }

ArrayXd ipow(const ArrayXd& x, int e)
{
    if (e <= 0)
        return ArrayXd::Ones(x.size());
    return x.pow(static_cast<double>(e));
}

Tabulation tensor_basis(int d, int p, const Eigen::MatrixXd& pts)
{
    const Eigen::Index np = pts.cols();
    std::vector<std::vector<ArrayXd>> v(static_cast<std::size_t>(d)), dv(static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r)
        for (int i = 0; i <= p; ++i) {
            const ArrayXd x = pts.row(r).transpose().array();
            v[static_cast<std::size_t>(r)].push_back(jac(x, 0, 0, i));
            dv[static_cast<std::size_t>(r)].push_back(djac(x, 0, 0, i));
        }
    const auto idx = lattice_indices(d == 1 ? ElementKind::Line : d == 2 ? ElementKind::Quad : ElementKind::Hex, p);
    Tabulation tab;
    tab.values.resize(np, static_cast<Eigen::Index>(idx.size()));
    tab.gradients.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(np, static_cast<Eigen::Index>(idx.size())));
    for (std::size_t m = 0; m < idx.size(); ++m) {
        const auto col = static_cast<Eigen::Index>(m);
        ArrayXd val = ArrayXd::Ones(np);
        for (int r = 0; r < d; ++r)
            val *= v[static_cast<std::size_t>(r)][static_cast<std::size_t>(idx[m][static_cast<std::size_t>(r)])];
        tab.values.col(col) = val.matrix();
        for (int g = 0; g < d; ++g) {
            ArrayXd dval = ArrayXd::Ones(np);
            for (int r = 0; r < d; ++r) {
                const auto k = static_cast<std::size_t>(idx[m][static_cast<std::size_t>(r)]);
                dval *= r == g ? dv[static_cast<std::size_t>(r)][k] : v[static_cast<std::size_t>(r)][k];
            }
            tab.gradients[static_cast<std::size_t>(g)].col(col) = dval.matrix();
        }
    }
    return tab;
}

Tabulation tri_basis(int p, const Eigen::MatrixXd& pts)
{
    const Eigen::Index np = pts.cols();
    const ArrayXd r = pts.row(0).transpose().array(), s = pts.row(1).transpose().array();
    ArrayXd a(np);
    for (Eigen::Index k = 0; k < np; ++k)
        a(k) = std::abs(s(k) - 1.0) > 1e-14 ? 2.0 * (1.0 + r(k)) / (1.0 - s(k)) - 1.0 : -1.0;
    const ArrayXd& b = s;
    const int n = num_basis(ElementKind::Tri, p);
    Tabulation tab;
    tab.values.resize(np, n);
    tab.gradients.assign(2, Eigen::MatrixXd(np, n));
    const ArrayXd hb = 0.5 * (1.0 - b);
    int col = 0;
    for (const auto& ij : lattice_indices(ElementKind::Tri, p)) {
        const int i = ij[0], j = ij[1];
        const ArrayXd fa = jac(a, 0, 0, i), dfa = djac(a, 0, 0, i);
        const ArrayXd gb = jac(b, 2 * i + 1, 0, j), dgb = djac(b, 2 * i + 1, 0, j);
        tab.values.col(col) = (std::sqrt(2.0) * fa * gb * ipow(1.0 - b, i)).matrix();

        ArrayXd dr = dfa * gb;
        if (i > 0)
            dr *= ipow(hb, i - 1);
        ArrayXd ds = dfa * gb * (0.5 * (1.0 + a));
        if (i > 0)
            ds *= ipow(hb, i - 1);
        ArrayXd tmp = dgb * ipow(hb, i);
        if (i > 0)
            tmp -= 0.5 * i * gb * ipow(hb, i - 1);
        ds += fa * tmp;
        const double scale = std::pow(2.0, i + 0.5);
        tab.gradients[0].col(col) = (scale * dr).matrix();
        tab.gradients[1].col(col) = (scale * ds).matrix();
        ++col;
    }
    return tab;
}

Tabulation tet_basis(int p, const Eigen::MatrixXd& pts)
{
    const Eigen::Index np = pts.cols();
    const ArrayXd r = pts.row(0).transpose().array(), s = pts.row(1).transpose().array(),
                  t = pts.row(2).transpose().array();
    ArrayXd a(np), b(np);
    for (Eigen::Index k = 0; k < np; ++k) {
        a(k) = std::abs(s(k) + t(k)) > 1e-14 ? 2.0 * (1.0 + r(k)) / (-s(k) - t(k)) - 1.0 : -1.0;
        b(k) = std::abs(t(k) - 1.0) > 1e-14 ? 2.0 * (1.0 + s(k)) / (1.0 - t(k)) - 1.0 : -1.0;
    }
    const ArrayXd& c = t;
    const int n = num_basis(ElementKind::Tet, p);
    Tabulation tab;
    tab.values.resize(np, n);
    tab.gradients.assign(3, Eigen::MatrixXd(np, n));
    const ArrayXd hb = 0.5 * (1.0 - b), hc = 0.5 * (1.0 - c);
    int col = 0;
    for (const auto& ijk : lattice_indices(ElementKind::Tet, p)) {
        const int i = ijk[0], j = ijk[1], k = ijk[2];
        const ArrayXd fa = jac(a, 0, 0, i), dfa = djac(a, 0, 0, i);
        const ArrayXd gb = jac(b, 2 * i + 1, 0, j), dgb = djac(b, 2 * i + 1, 0, j);
        const ArrayXd gc = jac(c, 2 * (i + j) + 2, 0, k), dgc = djac(c, 2 * (i + j) + 2, 0, k);
        tab.values.col(col) = (2.0 * std::sqrt(2.0) * fa * gb * ipow(1.0 - b, i) * gc * ipow(1.0 - c, i + j)).matrix();

        ArrayXd vr = dfa * gb * gc;
        if (i > 0)
            vr *= ipow(hb, i - 1);
        if (i + j > 0)
            vr *= ipow(hc, i + j - 1);
        ArrayXd vs = 0.5 * (1.0 + a) * vr;
        ArrayXd tmp = dgb * ipow(hb, i);
        if (i > 0)
            tmp -= 0.5 * i * gb * ipow(hb, i - 1);
        if (i + j > 0)
            tmp *= ipow(hc, i + j - 1);
        tmp = fa * tmp * gc;
        vs += tmp;
        ArrayXd vt = 0.5 * (1.0 + a) * vr + 0.5 * (1.0 + b) * tmp;
        tmp = dgc * ipow(hc, i + j);
        if (i + j > 0)
            tmp -= 0.5 * (i + j) * gc * ipow(hc, i + j - 1);
        tmp = fa * gb * tmp * ipow(hb, i);
        vt += tmp;
        const double scale = std::pow(2.0, 2 * i + j + 1.5);
        tab.gradients[0].col(col) = (scale * vr).matrix();
        tab.gradients[1].col(col) = (scale * vs).matrix();
        tab.gradients[2].col(col) = (scale * vt).matrix();
        ++col;
    }
    return tab;
}

// Interpolated GLL displacement divided by (1 - r^2).
ArrayXd warp_factor(int p, const ArrayXd& r)
{
    const ArrayXd gl = gauss_lobatto<double>(p);
    ArrayXd warp = ArrayXd::Zero(r.size());
    for (int i = 0; i <= p; ++i) {
        const double xi = -1.0 + 2.0 * i / p;
        ArrayXd d = ArrayXd::Constant(r.size(), gl(i) - xi);
        for (int j = 1; j < p; ++j)
            if (j != i) {
                const double xj = -1.0 + 2.0 * j / p;
                d *= (r - xj) / (xi - xj);
            }
        if (i != 0)
            d /= (xi + 1.0);
        if (i != p)
            d /= (1.0 - xi);
        warp += d;
    }
    return warp;
}

void eval_shift(int p, double alpha, const ArrayXd& L1, const ArrayXd& L2, const ArrayXd& L3, ArrayXd& dx,
                ArrayXd& dy)
{
    const ArrayXd w1 = 4 * L2 * L3 * warp_factor(p, L3 - L2) * (1 + (alpha * L1).square());
    const ArrayXd w2 = 4 * L1 * L3 * warp_factor(p, L1 - L3) * (1 + (alpha * L2).square());
    const ArrayXd w3 = 4 * L1 * L2 * warp_factor(p, L2 - L1) * (1 + (alpha * L3).square());
    const double c2 = std::cos(2 * M_PI / 3), c4 = std::cos(4 * M_PI / 3);
    const double s2 = std::sin(2 * M_PI / 3), s4 = std::sin(4 * M_PI / 3);
    dx = w1 + c2 * w2 + c4 * w3;
    dy = s2 * w2 + s4 * w3;
}

Eigen::MatrixXd tri_nodes(int p)
{
    static const double alpopt[] = {0, 0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
                                    1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258};
    const double alpha = p < 15 ? alpopt[p - 1 < 0 ? 0 : p - 1] : 5.0 / 3.0;
    const auto idx = lattice_indices(ElementKind::Tri, p);
    const auto n = static_cast<Eigen::Index>(idx.size());
    ArrayXd L1(n), L2(n), L3(n);
    for (Eigen::Index m = 0; m < n; ++m) {
        L1(m) = double(idx[static_cast<std::size_t>(m)][1]) / p;
        L3(m) = double(idx[static_cast<std::size_t>(m)][0]) / p;
        L2(m) = 1.0 - L1(m) - L3(m);
    }
    ArrayXd x = -L2 + L3, y = (-L2 - L3 + 2 * L1) / std::sqrt(3.0);
    ArrayXd dx, dy;
    eval_shift(p, alpha, L1, L2, L3, dx, dy);
    x += dx;
    y += dy;
    // back to (r,s) on the right triangle
    const ArrayXd l1 = (std::sqrt(3.0) * y + 1.0) / 3.0;
    const ArrayXd l2 = (-3.0 * x - std::sqrt(3.0) * y + 2.0) / 6.0;
    const ArrayXd l3 = (3.0 * x - std::sqrt(3.0) * y + 2.0) / 6.0;
    Eigen::MatrixXd rs(2, n);
    rs.row(0) = (-l2 + l3 - l1).transpose().matrix();
    rs.row(1) = (-l2 - l3 + l1).transpose().matrix();
    return rs;
}

Eigen::MatrixXd tet_nodes(int p)
{
    static const double alphastore[] = {0, 0, 0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577,
                                        1.1603, 1.10153, 0.6080, 0.4523, 0.8856, 0.8717, 0.9655};
    const double alpha = p <= 15 ? alphastore[p - 1 < 0 ? 0 : p - 1] : 1.0;
    const double tol = 1e-10;
    const Eigen::MatrixXd eq = lattice(ElementKind::Tet, p);
    const Eigen::Index n = eq.cols();
    const ArrayXd r = eq.row(0).transpose(), s = eq.row(1).transpose(), t = eq.row(2).transpose();
    const ArrayXd L1 = (1 + t) / 2, L2 = (1 + s) / 2, L3 = -(1 + r + s + t) / 2, L4 = (1 + r) / 2;

    const double s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
    const Eigen::Vector3d v1(-1, -1 / s3, -1 / s6), v2(1, -1 / s3, -1 / s6), v3(0, 2 / s3, -1 / s6), v4(0, 0, 3 / s6);
    Eigen::Matrix<double, 3, 4> t1, t2;
    t1.col(0) = v2 - v1;
    t1.col(1) = v2 - v1;
    t1.col(2) = v3 - v2;
    t1.col(3) = v3 - v1;
    t2.col(0) = v3 - 0.5 * (v1 + v2);
    t2.col(1) = v4 - 0.5 * (v1 + v2);
    t2.col(2) = v4 - 0.5 * (v2 + v3);
    t2.col(3) = v4 - 0.5 * (v1 + v3);
    t1.colwise().normalize();
    t2.colwise().normalize();

    Eigen::MatrixXd xyz(3, n);
    for (Eigen::Index m = 0; m < n; ++m)
        xyz.col(m) = L3(m) * v1 + L4(m) * v2 + L2(m) * v3 + L1(m) * v4;
    Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(3, n);
    for (int face = 0; face < 4; ++face) {
        const ArrayXd* La;
        const ArrayXd *Lb, *Lc, *Ld;
        switch (face) {
        case 0: La = &L1, Lb = &L2, Lc = &L3, Ld = &L4; break;
        case 1: La = &L2, Lb = &L1, Lc = &L3, Ld = &L4; break;
        case 2: La = &L3, Lb = &L1, Lc = &L4, Ld = &L2; break;
        default: La = &L4, Lb = &L1, Lc = &L3, Ld = &L2; break;
        }
        ArrayXd w1, w2;
        eval_shift(p, alpha, *Lb, *Lc, *Ld, w1, w2);
        ArrayXd blend = (*Lb) * (*Lc) * (*Ld);
        const ArrayXd denom = ((*Lb) + 0.5 * (*La)) * ((*Lc) + 0.5 * (*La)) * ((*Ld) + 0.5 * (*La));
        for (Eigen::Index m = 0; m < n; ++m)
            if (denom(m) > tol)
                blend(m) = (1 + std::pow(alpha * (*La)(m), 2)) * blend(m) / denom(m);
        for (Eigen::Index m = 0; m < n; ++m) {
            const int interior = int((*Lb)(m) > tol) + int((*Lc)(m) > tol) + int((*Ld)(m) > tol);
            if ((*La)(m) < tol && interior < 3)
                shift.col(m) = w1(m) * t1.col(face) + w2(m) * t2.col(face);
            else
                shift.col(m) += blend(m) * w1(m) * t1.col(face) + blend(m) * w2(m) * t2.col(face);
        }
    }
    xyz += shift;

    Eigen::Matrix3d A;
    A.col(0) = 0.5 * (v2 - v1);
    A.col(1) = 0.5 * (v3 - v1);
    A.col(2) = 0.5 * (v4 - v1);
    const Eigen::Vector3d off = 0.5 * (v2 + v3 + v4 - v1);
    const Eigen::PartialPivLU<Eigen::Matrix3d> lu(A);
    Eigen::MatrixXd rst(3, n);
    for (Eigen::Index m = 0; m < n; ++m)
        rst.col(m) = lu.solve(xyz.col(m) - off);
    return rst;
}

} // namespace

int num_basis(ElementKind kind, int p) { return lattice_size(kind, p); }

Tabulation orthonormal_basis(ElementKind kind, int p, const Eigen::MatrixXd& points)
{
    switch (kind) {
    case ElementKind::Point: {
        Tabulation tab;
        tab.values = Eigen::MatrixXd::Ones(points.cols(), 1);
        return tab;
    }
    case ElementKind::Line: return tensor_basis(1, p, points);
    case ElementKind::Quad: return tensor_basis(2, p, points);
    case ElementKind::Hex: return tensor_basis(3, p, points);
    case ElementKind::Tri: return tri_basis(p, points);
    case ElementKind::Tet: return tet_basis(p, points);
    }
    throw Error("orthonormal_basis: unknown element kind");
}

Eigen::MatrixXd solution_nodes(ElementKind kind, int p)
{
    if (kind == ElementKind::Point)
        return Eigen::MatrixXd::Zero(0, 1);
    if (p == 0)
        return reference_vertices(kind).rowwise().mean();
    if (kind == ElementKind::Tri)
        return tri_nodes(p);
    if (kind == ElementKind::Tet)
        return tet_nodes(p);
    const ArrayXd gl = gauss_lobatto<double>(p);
    const auto idx = lattice_indices(kind, p);
    const int d = dimension(kind);
    Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t m = 0; m < idx.size(); ++m)
        for (int r = 0; r < d; ++r)
            pts(r, static_cast<Eigen::Index>(m)) = gl(idx[m][static_cast<std::size_t>(r)]);
    return pts;
}

Quadrature quadrature(ElementKind kind, int degree)
{
    const int n = std::max(1, (degree + 2) / 2);
    Quadrature q;
    if (kind == ElementKind::Point) {
        q.points = Eigen::MatrixXd::Zero(0, 1);
        q.weights = Eigen::VectorXd::Ones(1);
        return q;
    }
    const auto gl = gauss_legendre<double>(n);
    if (is_tensor(kind)) {
        const int d = dimension(kind);
        const auto idx = lattice_indices(kind, n - 1);
        q.points.resize(d, static_cast<Eigen::Index>(idx.size()));
        q.weights.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t m = 0; m < idx.size(); ++m) {
            double w = 1.0;
            for (int r = 0; r < d; ++r) {
                const int k = idx[m][static_cast<std::size_t>(r)];
                q.points(r, static_cast<Eigen::Index>(m)) = gl.points(k);
                w *= gl.weights(k);
            }
            q.weights(static_cast<Eigen::Index>(m)) = w;
        }
        return q;
    }
    const auto gb = gauss_jacobi<double>(n, 1.0, 0.0);
    if (kind == ElementKind::Tri) {
        q.points.resize(2, n * n);
        q.weights.resize(n * n);
        int m = 0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i, ++m) {
                const double a = gl.points(i), b = gb.points(j);
                q.points(0, m) = (1 + a) * (1 - b) / 2 - 1;
                q.points(1, m) = b;
                q.weights(m) = gl.weights(i) * gb.weights(j) / 2;
            }
        return q;
    }
    const auto gc = gauss_jacobi<double>(n, 2.0, 0.0);
    q.points.resize(3, n * n * n);
    q.weights.resize(n * n * n);
    int m = 0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i, ++m) {
                const double a = gl.points(i), b = gb.points(j), c = gc.points(k);
                q.points(0, m) = (1 + a) * (1 - b) * (1 - c) / 4 - 1;
                q.points(1, m) = (1 + b) * (1 - c) / 2 - 1;
                q.points(2, m) = c;
                q.weights(m) = gl.weights(i) * gb.weights(j) * gc.weights(k) / 8;
            }
    return q;
}

NodalBasis::NodalBasis(ElementKind kind, int p, Eigen::MatrixXd nodes)
    : kind_(kind), p_(p), nodes_(std::move(nodes))
{
    if (nodes_.cols() != num_basis(kind, p))
        throw Error("NodalBasis: node count does not match the polynomial space");
    V_ = orthonormal_basis(kind, p, nodes_).values;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(V_);
    const auto& sv = svd.singularValues();
    cond_ = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond_ <= 1e12))
        throw Error("NodalBasis: Vandermonde matrix is ill-conditioned (cond = " + std::to_string(cond_) + ")");
    Vinv_ = V_.partialPivLu().inverse();
}

Tabulation NodalBasis::tabulate(const Eigen::MatrixXd& points) const
{
    Tabulation modal = orthonormal_basis(kind_, p_, points);
    Tabulation out;
    out.values = modal.values * Vinv_;
    for (const auto& g : modal.gradients)
        out.gradients.push_back(g * Vinv_);
    return out;
}

} // namespace ldg::poly
