#include "impl.hpp"

namespace ldg::disc::detail {

SumFactorization::SumFactorization(const MasterElement& master)
{
    if (!is_tensor(master.kind) || master.dim() < 1)
        return;
    d_ = master.dim();
    const poly::NodalBasis line(ElementKind::Line, master.p, poly::solution_nodes(ElementKind::Line, master.p));
    const auto tab = line.tabulate(poly::quadrature(ElementKind::Line, master.quad_degree).points);
    B_ = tab.values;
    D_ = tab.gradients[0];
    Bt_ = B_.transpose();
    Dt_ = D_.transpose();
    q1_ = static_cast<int>(B_.rows());
    n1_ = static_cast<int>(B_.cols());
}

// Contract a [n0, n1, n2, e] tensor with mats[a] (m_a x n_a) along each axis.
void SumFactorization::apply(const Eigen::MatrixXd* const* mats, const double* in, double* out, int ne,
                             long long& ops) const
{
    using Map = Eigen::Map<Eigen::MatrixXd>;
    using CMap = Eigen::Map<const Eigen::MatrixXd>;
    const Eigen::MatrixXd& A0 = *mats[0];
    const auto m0 = A0.rows(), n0 = A0.cols();
    if (d_ == 1) {
        Map(out, m0, ne).noalias() = A0 * CMap(in, n0, ne);
        ops += m0 * n0 * ne;
        return;
    }
    const Eigen::MatrixXd& A1 = *mats[1];
    const auto m1 = A1.rows(), n1 = A1.cols();
    const Eigen::Index n2 = d_ == 3 ? mats[2]->cols() : 1;
    const Eigen::Index m2 = d_ == 3 ? mats[2]->rows() : 1;

    Eigen::MatrixXd t1(m0, n1 * n2 * ne);
    t1.noalias() = A0 * CMap(in, n0, n1 * n2 * ne);
    ops += m0 * n0 * n1 * n2 * ne;

    Eigen::MatrixXd t2_store;
    double* t2 = out;
    if (d_ == 3) {
        t2_store.resize(m0 * m1, n2 * ne);
        t2 = t2_store.data();
    }
    for (Eigen::Index s = 0; s < n2 * ne; ++s)
        Map(t2 + s * m0 * m1, m0, m1).noalias() = CMap(t1.data() + s * m0 * n1, m0, n1) * A1.transpose();
    ops += m0 * n1 * m1 * n2 * ne;
    if (d_ == 2)
        return;

    const Eigen::MatrixXd& A2 = *mats[2];
    for (Eigen::Index e = 0; e < ne; ++e)
        Map(out + e * m0 * m1 * m2, m0 * m1, m2).noalias() =
            CMap(t2 + e * m0 * m1 * n2, m0 * m1, n2) * A2.transpose();
    ops += m0 * m1 * n2 * m2 * ne;
}

void SumFactorization::interpolate(const ConstRef& X, Eigen::Ref<Eigen::MatrixXd> out, int r, long long& ops) const
{
    const Eigen::MatrixXd in = X;
    const Eigen::MatrixXd* mats[3];
    for (int a = 0; a < d_; ++a)
        mats[a] = a == r ? &D_ : &B_;
    Eigen::MatrixXd result(out.rows(), out.cols());
    apply(mats, in.data(), result.data(), static_cast<int>(in.cols()), ops);
    out = result;
}

void SumFactorization::integrate(const ConstRef& Y, StridedMut out, int r, double scale, long long& ops) const
{
    const Eigen::MatrixXd in = Y;
    const Eigen::MatrixXd* mats[3];
    for (int a = 0; a < d_; ++a)
        mats[a] = a == r ? &Dt_ : &Bt_;
    Eigen::MatrixXd result(out.rows(), out.cols());
    apply(mats, in.data(), result.data(), static_cast<int>(in.cols()), ops);
    out += scale * result;
}

} // namespace ldg::disc::detail
