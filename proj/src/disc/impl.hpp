#pragma once

#include <functional>
#include <map>
#include <optional>

#include <Eigen/Dense>

#include "ldg/disc/discretization.hpp"
#include "ldg/expr/plan.hpp"

namespace ldg::disc::detail {

using Strided = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using StridedMut = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using ConstRef = Eigen::Ref<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;

/// Value with an optional forward tangent of the same shape.
struct Pair
{
    Eigen::ArrayXXd v;
    Eigen::ArrayXXd d;

    bool tangent() const { return d.size() > 0; }
    void resize(Eigen::Index rows, Eigen::Index cols, bool with_tangent)
    {
        v.setZero(rows, cols);
        if (with_tangent)
            d.setZero(rows, cols);
        else
            d.resize(0, 0);
    }
};

/// Batch of faces sharing one treatment. Rows are face-major: face * nqf + k.
struct FaceGroup
{
    std::vector<int> elem_l, face_l;
    std::vector<int> elem_r, table_r; ///< interior faces only
    Eigen::ArrayXXd x;                ///< rows x nd
    Eigen::ArrayXXd n;                ///< rows x nd, outward from the left element
    Eigen::ArrayXd dsw;               ///< surface Jacobian times weight
    std::vector<char> left_trace;     ///< per row: state trace taken from the left side

    int size() const { return static_cast<int>(elem_l.size()); }
};

/// Column offsets shared by the volume, boundary and face symbol tables.
struct Columns
{
    int x, t, u, q, w, mu, n, up, qp, uh;
    int volume, boundary, face;
};

struct BcPlans
{
    int tag = 0;
    model::BcType type;
    expr::KernelPlan data;
    std::optional<expr::KernelPlan> trace;
    FaceGroup faces;
};

/// Volume basis contractions through 1D factors on tensor-product elements.
class SumFactorization
{
public:
    SumFactorization() = default;
    SumFactorization(const MasterElement& master);

    bool valid() const { return d_ > 0; }
    /// out (nq x ne) = Phi_r X with r = -1 for values, else d/dxi_r.
    void interpolate(const ConstRef& X, Eigen::Ref<Eigen::MatrixXd> out, int r, long long& ops) const;
    /// out (nn x ne) += scale * Phi_r^T Y.
    void integrate(const ConstRef& Y, StridedMut out, int r, double scale, long long& ops) const;

private:
    void apply(const Eigen::MatrixXd* const* mats, const double* in, double* out, int ne, long long& ops) const;

    int d_ = 0;
    int n1_ = 0;
    int q1_ = 0;
    Eigen::MatrixXd B_, D_, Bt_, Dt_;
};

struct Impl
{
    model::PdeModel model;
    mesh::Mesh mesh;
    mesh::FaceTopology topology;
    MasterElement master;
    Layout layout;
    Columns cols{};
    std::vector<double> beta;

    // geometry
    Eigen::MatrixXd xnodes;   ///< nd x (ne*nn)
    Eigen::MatrixXd xquad;    ///< nd x (ne*nq)
    Eigen::ArrayXXd xq_rows;  ///< (ne*nq) x nd
    Eigen::VectorXd wdet;     ///< ne*nq
    Eigen::ArrayXXd gw;       ///< (ne*nq) x (d*d), column r*d + j: wdet * dxi_r/dx_j
    Eigen::MatrixXd minv;     ///< nn x (nn*ne)
    FaceGroup interior;
    std::vector<Eigen::MatrixXd> right_phi;
    std::vector<BcPlans> bcs;
    std::vector<std::vector<int>> neighbors;

    // kernels
    expr::KernelPlan flux, source, mass, tau, wavespeed, ode;
    std::optional<expr::KernelPlan> uhat, fhat;
    bool steady = false;

    SumFactorization sumfac;
    mutable long long ops = 0;

    void build_geometry();
    void build_plans();

    // assembly pieces, all in discretization.cpp
    void volume_values(const ConstRef& X, Eigen::Ref<Eigen::MatrixXd> out, int r, bool fast) const;
    void volume_integrate(const ConstRef& Y, StridedMut out, int r, double scale, bool fast) const;
};

} // namespace ldg::disc::detail
