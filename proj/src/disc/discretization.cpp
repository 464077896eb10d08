#include "ldg/disc/discretization.hpp"

#include <cmath>
#include <set>

#include "impl.hpp"
#include "ldg/error.hpp"
#include "ldg/expr/parser.hpp"

namespace ldg::disc {

using detail::ConstRef;
using detail::FaceGroup;
using detail::Impl;
using detail::Pair;
using detail::Strided;
using detail::StridedMut;
using Eigen::ArrayXd;
using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

expr::KernelPlan compile(const std::vector<std::string>& exprs, const expr::SymbolTable& table)
{
    std::vector<expr::ExpressionGraph> graphs;
    for (const auto& e : exprs)
        graphs.push_back(expr::parse_expression(e, table));
    if (graphs.empty()) {
        expr::ExpressionGraph empty;
        empty.symbols = table;
        graphs.push_back(std::move(empty));
    }
    return expr::compile_with_cse(graphs);
}

/// Component c of a nodal field lives at data + e*block + offset + c*nn.
struct Field
{
    const double* data = nullptr;
    Index block = 0;
    Index offset = 0;

    Strided comp(int c, int nn, int ne) const
    {
        return Strided(data + offset + Index(c) * nn, nn, ne, Eigen::OuterStride<>(block));
    }
    Eigen::Map<const VectorXd> segment(int e, int c, int nn) const
    {
        return Eigen::Map<const VectorXd>(data + Index(e) * block + offset + Index(c) * nn, nn);
    }
};

struct State
{
    Field u, q, w;
    Field du, dq, dw;
    bool tangent = false;
};

/// Inputs and state trace of one face group.
struct FaceData
{
    Pair in;
    Pair uhat;
};

using ElementOf = std::function<int(Index)>;

Pair run(const expr::KernelPlan& plan, const Pair& in, const ElementOf& element_of, const char* what)
{
    Pair out;
    const Index rows = in.v.rows();
    if (plan.num_outputs() == 0) {
        out.resize(rows, 0, in.tangent());
        return out;
    }
    const Index k = plan.num_inputs();
    bool bad = false;
    if (in.tangent()) {
        auto te = expr::evaluate_with_tangent(plan, in.v.leftCols(k), in.d.leftCols(k));
        out.v = std::move(te.values);
        out.d = std::move(te.tangents);
        bad = te.non_finite;
    } else {
        auto ev = expr::evaluate(plan, in.v.leftCols(k));
        out.v = std::move(ev.values);
        bad = ev.non_finite;
    }
    if (bad) {
        for (Index r = 0; r < rows; ++r)
            if (!out.v.row(r).isFinite().all() || (out.tangent() && !out.d.row(r).isFinite().all()))
                throw NonFiniteError(std::string("non-finite ") + what + " on element " +
                                     std::to_string(element_of(r)));
        throw NonFiniteError(std::string("non-finite ") + what);
    }
    return out;
}

void copy_cols(Pair& dst, int dcol, const Pair& src, int scol, int n)
{
    if (n == 0)
        return;
    dst.v.middleCols(dcol, n) = src.v.middleCols(scol, n);
    if (dst.tangent())
        dst.d.middleCols(dcol, n) = src.d.middleCols(scol, n);
}

/// Keep the leading `cols` columns.
Pair prefix(const Pair& src, int cols)
{
    Pair p;
    p.v = src.v.leftCols(cols);
    if (src.tangent())
        p.d = src.d.leftCols(cols);
    return p;
}

class Assembler
{
public:
    Assembler(const Impl& m, bool fast) : m_(m), fast_(fast)
    {
        const auto& L = m.layout;
        nn_ = L.nn;
        ne_ = L.ne;
        ncu_ = L.ncu;
        d_ = L.nd;
        nq_ = m.master.n_quad();
        nqf_ = m.master.n_face_quad();
        grad_ = m.model.has_gradient();
        nqs_ = grad_ ? ncu_ * d_ : 0;
    }

    State state(const VectorXd& U, const VectorXd* V) const
    {
        const auto& L = m_.layout;
        const Index B = L.block();
        State s;
        s.u = {U.data(), B, 0};
        s.q = {U.data(), B, Index(L.ncu) * nn_};
        s.w = {U.data(), B, Index(L.ncu + L.nq) * nn_};
        if (V) {
            s.tangent = true;
            s.du = {V->data(), B, 0};
            s.dq = {V->data(), B, Index(L.ncu) * nn_};
            s.dw = {V->data(), B, Index(L.ncu + L.nq) * nn_};
        }
        return s;
    }

    int vol_element(Index row) const { return static_cast<int>(row / nq_); }

    ElementOf face_element(const FaceGroup& g) const
    {
        return [&g, this](Index row) { return g.elem_l[static_cast<std::size_t>(row / nqf_)]; };
    }

    void volume_fill(Pair& in, int col, const Field& f, const Field& df, int ncomp) const
    {
        for (int c = 0; c < ncomp; ++c) {
            Eigen::Map<MatrixXd> out(in.v.col(col + c).data(), nq_, ne_);
            m_.volume_values(f.comp(c, nn_, ne_), out, -1, fast_);
            if (in.tangent()) {
                Eigen::Map<MatrixXd> dout(in.d.col(col + c).data(), nq_, ne_);
                m_.volume_values(df.comp(c, nn_, ne_), dout, -1, fast_);
            }
        }
    }

    Pair volume_inputs(const State& s, double t, bool with_q) const
    {
        const auto& C = m_.cols;
        Pair in;
        in.resize(Index(ne_) * nq_, C.volume, s.tangent);
        in.v.middleCols(C.x, d_) = m_.xq_rows;
        in.v.col(C.t).setConstant(t);
        for (int k = 0; k < m_.model.nparam; ++k)
            in.v.col(C.mu + k).setConstant(m_.model.mu[static_cast<std::size_t>(k)]);
        volume_fill(in, C.u, s.u, s.du, ncu_);
        if (with_q)
            volume_fill(in, C.q, s.q, s.dq, nqs_);
        volume_fill(in, C.w, s.w, s.dw, m_.model.nw);
        return in;
    }

    void trace_fill(Pair& in, int col, const Field& f, const Field& df, int ncomp, int e, const MatrixXd& phi,
                    Index row0) const
    {
        for (int c = 0; c < ncomp; ++c) {
            in.v.col(col + c).segment(row0, nqf_) = (phi * f.segment(e, c, nn_)).array();
            if (in.tangent())
                in.d.col(col + c).segment(row0, nqf_) = (phi * df.segment(e, c, nn_)).array();
        }
    }

    Pair face_inputs(const FaceGroup& g, bool interior, const State& s, double t, bool with_q) const
    {
        const auto& C = m_.cols;
        Pair in;
        in.resize(Index(g.size()) * nqf_, C.face, s.tangent);
        in.v.middleCols(C.x, d_) = g.x;
        in.v.col(C.t).setConstant(t);
        for (int k = 0; k < m_.model.nparam; ++k)
            in.v.col(C.mu + k).setConstant(m_.model.mu[static_cast<std::size_t>(k)]);
        in.v.middleCols(C.n, d_) = g.n;
        for (int f = 0; f < g.size(); ++f) {
            const auto fs = static_cast<std::size_t>(f);
            const Index row0 = Index(f) * nqf_;
            const MatrixXd& phi = m_.master.faces[static_cast<std::size_t>(g.face_l[fs])].phi;
            trace_fill(in, C.u, s.u, s.du, ncu_, g.elem_l[fs], phi, row0);
            trace_fill(in, C.w, s.w, s.dw, m_.model.nw, g.elem_l[fs], phi, row0);
            if (interior)
                trace_fill(in, C.up, s.u, s.du, ncu_, g.elem_r[fs], m_.right_phi[static_cast<std::size_t>(g.table_r[fs])],
                           row0);
        }
        if (with_q)
            face_q_fill(in, g, interior, s);
        return in;
    }

    void face_q_fill(Pair& in, const FaceGroup& g, bool interior, const State& s) const
    {
        const auto& C = m_.cols;
        for (int f = 0; f < g.size(); ++f) {
            const auto fs = static_cast<std::size_t>(f);
            const Index row0 = Index(f) * nqf_;
            trace_fill(in, C.q, s.q, s.dq, nqs_, g.elem_l[fs], m_.master.faces[static_cast<std::size_t>(g.face_l[fs])].phi,
                       row0);
            if (interior)
                trace_fill(in, C.qp, s.q, s.dq, nqs_, g.elem_r[fs],
                           m_.right_phi[static_cast<std::size_t>(g.table_r[fs])], row0);
        }
        if (!interior)
            copy_cols(in, C.qp, in, C.q, nqs_);
    }

    Pair interior_uhat(Pair& in) const
    {
        const auto& C = m_.cols;
        const FaceGroup& g = m_.interior;
        Pair uh;
        uh.resize(in.v.rows(), ncu_, in.tangent());
        if (m_.model.numflux.trace == model::TraceRule::Central) {
            uh.v = 0.5 * (in.v.middleCols(C.u, ncu_) + in.v.middleCols(C.up, ncu_));
            if (in.tangent())
                uh.d = 0.5 * (in.d.middleCols(C.u, ncu_) + in.d.middleCols(C.up, ncu_));
        } else {
            for (Index r = 0; r < in.v.rows(); ++r) {
                const int col = g.left_trace[static_cast<std::size_t>(r)] ? C.u : C.up;
                uh.v.row(r) = in.v.row(r).segment(col, ncu_);
                if (in.tangent())
                    uh.d.row(r) = in.d.row(r).segment(col, ncu_);
            }
        }
        copy_cols(in, C.uh, uh, 0, ncu_);
        if (m_.uhat) {
            uh = run(*m_.uhat, in, face_element(g), "state trace");
            copy_cols(in, C.uh, uh, 0, ncu_);
        }
        return uh;
    }

    Pair boundary_uhat(const detail::BcPlans& bc, Pair& in) const
    {
        const auto& C = m_.cols;
        Pair uh;
        if (bc.type == model::BcType::Dirichlet)
            uh = run(bc.data, prefix(in, C.boundary), face_element(bc.faces), "boundary data");
        else if (bc.trace)
            uh = run(*bc.trace, prefix(in, C.boundary), face_element(bc.faces), "boundary trace");
        else {
            uh.v = in.v.middleCols(C.u, ncu_);
            if (in.tangent())
                uh.d = in.d.middleCols(C.u, ncu_);
        }
        copy_cols(in, C.uh, uh, 0, ncu_);
        copy_cols(in, C.up, uh, 0, ncu_);
        return uh;
    }

    std::vector<FaceData> face_pass(const State& s, double t, bool with_q) const
    {
        std::vector<FaceData> out(1 + m_.bcs.size());
        out[0].in = face_inputs(m_.interior, true, s, t, with_q);
        if (grad_)
            out[0].uhat = interior_uhat(out[0].in);
        for (std::size_t b = 0; b < m_.bcs.size(); ++b) {
            out[b + 1].in = face_inputs(m_.bcs[b].faces, false, s, t, with_q);
            out[b + 1].uhat = boundary_uhat(m_.bcs[b], out[b + 1].in);
        }
        return out;
    }

    /// out[e block, offset(c)] += sign_l * phiL^T (dsw * vals_c) (left), sign_r * phiR^T (...) (right).
    void scatter(const FaceGroup& g, bool interior, const ArrayXXd& vals, Index block, Index offset, double sign_l,
                 double sign_r, VectorXd& out) const
    {
        const int ncomp = static_cast<int>(vals.cols());
        ArrayXXd weighted = vals.colwise() * g.dsw;
        for (int f = 0; f < g.size(); ++f) {
            const auto fs = static_cast<std::size_t>(f);
            const Index row0 = Index(f) * nqf_;
            const MatrixXd& phil = m_.master.faces[static_cast<std::size_t>(g.face_l[fs])].phi;
            for (int c = 0; c < ncomp; ++c) {
                const Eigen::Map<const VectorXd> y(weighted.col(c).data() + row0, nqf_);
                out.segment(Index(g.elem_l[fs]) * block + offset + Index(c) * nn_, nn_).noalias() +=
                    sign_l * (phil.transpose() * y);
                if (interior)
                    out.segment(Index(g.elem_r[fs]) * block + offset + Index(c) * nn_, nn_).noalias() +=
                        sign_r * (m_.right_phi[static_cast<std::size_t>(g.table_r[fs])].transpose() * y);
            }
        }
    }

    /// G += sign * (int u d_j v - oint uhat n_j v) into a q-shaped target.
    void mixed_rhs(const Pair& vin, const std::vector<FaceData>& faces, Index block, Index offset, double sign,
                   VectorXd& G, VectorXd* dG) const
    {
        const auto& C = m_.cols;
        for (int c = 0; c < ncu_; ++c)
            for (int j = 0; j < d_; ++j) {
                StridedMut out(G.data() + offset + Index(c * d_ + j) * nn_, nn_, ne_, Eigen::OuterStride<>(block));
                for (int r = 0; r < d_; ++r) {
                    const ArrayXd y = m_.gw.col(r * d_ + j) * vin.v.col(C.u + c);
                    m_.volume_integrate(Eigen::Map<const MatrixXd>(y.data(), nq_, ne_), out, r, sign, fast_);
                    if (dG) {
                        StridedMut dout(dG->data() + offset + Index(c * d_ + j) * nn_, nn_, ne_,
                                        Eigen::OuterStride<>(block));
                        const ArrayXd dy = m_.gw.col(r * d_ + j) * vin.d.col(C.u + c);
                        m_.volume_integrate(Eigen::Map<const MatrixXd>(dy.data(), nq_, ne_), dout, r, sign, fast_);
                    }
                }
            }
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const bool interior = k == 0;
            const FaceGroup& g = interior ? m_.interior : m_.bcs[k - 1].faces;
            const Pair& uh = faces[k].uhat;
            const ArrayXXd& n = g.n;
            auto scatter_uhat = [&](const ArrayXXd& u, VectorXd& target) {
                ArrayXXd vals(u.rows(), ncu_ * d_);
                for (int c = 0; c < ncu_; ++c)
                    for (int j = 0; j < d_; ++j)
                        vals.col(c * d_ + j) = u.col(c) * n.col(j);
                scatter(g, interior, vals, block, offset, -sign, sign, target);
            };
            scatter_uhat(uh.v, G);
            if (dG)
                scatter_uhat(uh.d, *dG);
        }
    }

    /// q = M^-1 G per element; layout block ncu*nd*nn.
    void mixed(const Pair& vin, const std::vector<FaceData>& faces, VectorXd& Q, VectorXd* dQ) const
    {
        const Index block = Index(nqs_) * nn_;
        VectorXd G = VectorXd::Zero(block * ne_), dG;
        if (dQ)
            dG = VectorXd::Zero(block * ne_);
        mixed_rhs(vin, faces, block, 0, 1.0, G, dQ ? &dG : nullptr);
        auto solve = [&](const VectorXd& rhs, VectorXd& out) {
            out.resize(rhs.size());
            for (int e = 0; e < ne_; ++e)
                Eigen::Map<MatrixXd>(out.data() + e * block, nn_, nqs_).noalias() =
                    m_.minv.middleCols(Index(e) * nn_, nn_) *
                    Eigen::Map<const MatrixXd>(rhs.data() + e * block, nn_, nqs_);
        };
        solve(G, Q);
        if (dQ)
            solve(dG, *dQ);
    }

    /// Flux dotted with the face normal: (rows x ncu).
    Pair normal_flux(const Pair& F, const ArrayXXd& n) const
    {
        Pair out;
        out.resize(F.v.rows(), ncu_, F.tangent());
        for (int c = 0; c < ncu_; ++c)
            for (int j = 0; j < d_; ++j) {
                out.v.col(c) += F.v.col(c * d_ + j) * n.col(j);
                if (F.tangent())
                    out.d.col(c) += F.d.col(c * d_ + j) * n.col(j);
            }
        return out;
    }

    /// fhat += tau (a - b), tau broadcast when it has a single column.
    void add_penalty(Pair& fhat, const Pair& tau, const Pair& in, int col_a, const Pair& b) const
    {
        for (int c = 0; c < ncu_; ++c) {
            const int tc = tau.v.cols() == 1 ? 0 : c;
            const ArrayXd jump = in.v.col(col_a + c) - b.v.col(c);
            fhat.v.col(c) += tau.v.col(tc) * jump;
            if (fhat.tangent())
                fhat.d.col(c) += tau.d.col(tc) * jump + tau.v.col(tc) * (in.d.col(col_a + c) - b.d.col(c));
        }
    }

    /// Lax-Friedrichs flux between the left state (columns of `in`) and state `ur`.
    Pair lax_friedrichs(const FaceGroup& g, const Pair& in, const Pair& ur) const
    {
        const auto& C = m_.cols;
        const auto where = face_element(g);
        Pair inr = prefix(in, C.boundary);
        copy_cols(inr, C.u, ur, 0, ncu_);
        const Pair fl = normal_flux(run(m_.flux, prefix(in, C.volume), where, "flux"), g.n);
        const Pair fr = normal_flux(run(m_.flux, prefix(inr, C.volume), where, "flux"), g.n);
        Pair lam;
        if (!m_.model.numflux.wavespeed.empty()) {
            const Pair ll = run(m_.wavespeed, prefix(in, C.boundary), where, "wave speed");
            const Pair lr = run(m_.wavespeed, inr, where, "wave speed");
            lam.resize(ll.v.rows(), 1, in.tangent());
            for (Index r = 0; r < ll.v.rows(); ++r) {
                const bool left = ll.v(r, 0) >= lr.v(r, 0);
                lam.v(r, 0) = left ? ll.v(r, 0) : lr.v(r, 0);
                if (in.tangent())
                    lam.d(r, 0) = left ? ll.d(r, 0) : lr.d(r, 0);
            }
        } else {
            lam = run(m_.tau, in, where, "stabilization");
        }
        Pair out;
        out.v = 0.5 * (fl.v + fr.v);
        if (in.tangent())
            out.d = 0.5 * (fl.d + fr.d);
        Pair half = lam;
        half.v *= 0.5;
        if (half.tangent())
            half.d *= 0.5;
        add_penalty(out, half, in, C.u, ur);
        return out;
    }

    Pair interior_flux(FaceData& fd) const
    {
        const auto& C = m_.cols;
        const FaceGroup& g = m_.interior;
        Pair& in = fd.in;
        const auto where = face_element(g);
        if (!grad_) {
            Pair ur;
            ur.v = in.v.middleCols(C.up, ncu_);
            if (in.tangent())
                ur.d = in.d.middleCols(C.up, ncu_);
            Pair out = lax_friedrichs(g, in, ur);
            if (m_.fhat) {
                copy_cols(in, C.uh, in, C.u, ncu_);
                out = run(*m_.fhat, in, where, "numerical flux");
            }
            return out;
        }
        Pair fin = prefix(in, C.volume);
        copy_cols(fin, C.u, fd.uhat, 0, ncu_);
        if (m_.model.numflux.gradient == model::GradientTrace::Central) {
            fin.v.middleCols(C.q, nqs_) = 0.5 * (in.v.middleCols(C.q, nqs_) + in.v.middleCols(C.qp, nqs_));
            if (in.tangent())
                fin.d.middleCols(C.q, nqs_) = 0.5 * (in.d.middleCols(C.q, nqs_) + in.d.middleCols(C.qp, nqs_));
        } else {
            for (Index r = 0; r < in.v.rows(); ++r) {
                const int col = g.left_trace[static_cast<std::size_t>(r)] ? C.qp : C.q;
                fin.v.row(r).segment(C.q, nqs_) = in.v.row(r).segment(col, nqs_);
                if (in.tangent())
                    fin.d.row(r).segment(C.q, nqs_) = in.d.row(r).segment(col, nqs_);
            }
        }
        if (m_.fhat)
            return run(*m_.fhat, in, where, "numerical flux");
        Pair out = normal_flux(run(m_.flux, fin, where, "flux"), g.n);
        Pair ur;
        ur.v = in.v.middleCols(C.up, ncu_);
        if (in.tangent())
            ur.d = in.d.middleCols(C.up, ncu_);
        add_penalty(out, run(m_.tau, in, where, "stabilization"), in, C.u, ur);
        return out;
    }

    Pair boundary_flux(const detail::BcPlans& bc, FaceData& fd) const
    {
        const auto& C = m_.cols;
        const auto where = face_element(bc.faces);
        Pair& in = fd.in;
        if (bc.type != model::BcType::Dirichlet)
            return run(bc.data, prefix(in, C.boundary), where, "boundary data");
        if (!grad_)
            return lax_friedrichs(bc.faces, in, fd.uhat);
        Pair fin = prefix(in, C.volume);
        copy_cols(fin, C.u, fd.uhat, 0, ncu_);
        Pair out = normal_flux(run(m_.flux, fin, where, "flux"), bc.faces.n);
        add_penalty(out, run(m_.tau, in, where, "stabilization"), in, C.u, fd.uhat);
        return out;
    }

    void residual(const VectorXd& U, const VectorXd* V, double t, VectorXd& R, VectorXd* dR) const
    {
        const auto& L = m_.layout;
        const auto& C = m_.cols;
        const Index B = L.block();
        State s = state(U, V);
        R.setZero(L.size());
        if (dR)
            dR->setZero(L.size());

        Pair vin;
        std::vector<FaceData> faces;
        VectorXd Q, dQ;
        if (m_.model.kind == model::ModelKind::Diffusion) {
            vin = volume_inputs(s, t, false);
            faces = face_pass(s, t, false);
            mixed(vin, faces, Q, V ? &dQ : nullptr);
            s.q = {Q.data(), Index(nqs_) * nn_, 0};
            if (V)
                s.dq = {dQ.data(), Index(nqs_) * nn_, 0};
            volume_fill(vin, C.q, s.q, s.dq, nqs_);
            face_q_fill(faces[0].in, m_.interior, true, s);
            for (std::size_t b = 0; b < m_.bcs.size(); ++b)
                face_q_fill(faces[b + 1].in, m_.bcs[b].faces, false, s);
        } else {
            vin = volume_inputs(s, t, grad_);
            faces = face_pass(s, t, grad_);
            if (m_.model.kind == model::ModelKind::Wave)
                mixed_rhs(vin, faces, B, Index(ncu_) * nn_, -1.0, R, dR);
        }

        // volume flux and source
        const ElementOf vwhere = [this](Index r) { return vol_element(r); };
        const Pair F = run(m_.flux, vin, vwhere, "flux");
        const Pair S = run(m_.source, vin, vwhere, "source");
        auto volume = [&](const ArrayXXd& Fa, const ArrayXXd& Sa, VectorXd& out) {
            for (int c = 0; c < ncu_; ++c) {
                StridedMut Rc(out.data() + Index(c) * nn_, nn_, ne_, Eigen::OuterStride<>(B));
                for (int r = 0; r < d_; ++r) {
                    ArrayXd ft = ArrayXd::Zero(Fa.rows());
                    for (int j = 0; j < d_; ++j)
                        ft += m_.gw.col(r * d_ + j) * Fa.col(c * d_ + j);
                    m_.volume_integrate(Eigen::Map<const MatrixXd>(ft.data(), nq_, ne_), Rc, r, -1.0, fast_);
                }
                if (Sa.cols() > 0) {
                    const ArrayXd sw = m_.wdet.array() * Sa.col(c);
                    m_.volume_integrate(Eigen::Map<const MatrixXd>(sw.data(), nq_, ne_), Rc, -1, -1.0, fast_);
                }
            }
        };
        volume(F.v, S.v, R);
        if (dR)
            volume(F.d, S.d, *dR);

        // face fluxes
        auto add_faces = [&](const FaceGroup& g, bool interior, const Pair& fhat) {
            scatter(g, interior, fhat.v, B, 0, 1.0, -1.0, R);
            if (dR)
                scatter(g, interior, fhat.d, B, 0, 1.0, -1.0, *dR);
        };
        add_faces(m_.interior, true, interior_flux(faces[0]));
        for (std::size_t b = 0; b < m_.bcs.size(); ++b)
            add_faces(m_.bcs[b].faces, false, boundary_flux(m_.bcs[b], faces[b + 1]));

        // pointwise ODE: R_w = beta w - s_w
        if (m_.model.nw > 0) {
            const Pair in = node_inputs(s, t);
            const Pair sw = run(m_.ode, in, [this](Index r) { return static_cast<int>(r / nn_); }, "ODE source");
            const double beta = m_.model.ode.beta;
            const Index off = Index(L.ncu + L.nq) * nn_;
            for (int k = 0; k < m_.model.nw; ++k) {
                StridedMut Rw(R.data() + off + Index(k) * nn_, nn_, ne_, Eigen::OuterStride<>(B));
                Rw = beta * s.w.comp(k, nn_, ne_) - Eigen::Map<const MatrixXd>(sw.v.col(k).data(), nn_, ne_);
                if (dR) {
                    StridedMut dRw(dR->data() + off + Index(k) * nn_, nn_, ne_, Eigen::OuterStride<>(B));
                    dRw = beta * s.dw.comp(k, nn_, ne_) - Eigen::Map<const MatrixXd>(sw.d.col(k).data(), nn_, ne_);
                }
            }
        }
    }

    /// Volume-layout inputs at the solution nodes (nodal values are the dofs).
    Pair node_inputs(const State& s, double t) const
    {
        const auto& C = m_.cols;
        Pair in;
        in.resize(Index(ne_) * nn_, C.volume, s.tangent);
        in.v.middleCols(C.x, d_) = m_.xnodes.transpose().array();
        in.v.col(C.t).setConstant(t);
        for (int k = 0; k < m_.model.nparam; ++k)
            in.v.col(C.mu + k).setConstant(m_.model.mu[static_cast<std::size_t>(k)]);
        auto fill = [&](int col, const Field& f, const Field& df, int ncomp) {
            for (int c = 0; c < ncomp; ++c) {
                Eigen::Map<MatrixXd>(in.v.col(col + c).data(), nn_, ne_) = f.comp(c, nn_, ne_);
                if (s.tangent)
                    Eigen::Map<MatrixXd>(in.d.col(col + c).data(), nn_, ne_) = df.comp(c, nn_, ne_);
            }
        };
        fill(C.u, s.u, s.du, ncu_);
        if (grad_)
            fill(C.q, s.q, s.dq, nqs_);
        fill(C.w, s.w, s.dw, m_.model.nw);
        return in;
    }

    VectorXd compute_mixed(const VectorXd& U, double t) const
    {
        const State s = state(U, nullptr);
        const Pair vin = volume_inputs(s, t, false);
        const auto faces = face_pass(s, t, false);
        VectorXd Q;
        mixed(vin, faces, Q, nullptr);
        return Q;
    }

    VectorXd apply_mass(const VectorXd& U, const VectorXd* V, const VectorXd& X, double t) const
    {
        const auto& L = m_.layout;
        const Index B = L.block();
        State s = state(U, V);
        VectorXd Q, dQ;
        bool with_q = m_.model.kind == model::ModelKind::Wave;
        if (m_.model.kind == model::ModelKind::Diffusion) {
            for (int k = 0; k < nqs_ && !with_q; ++k)
                with_q = m_.mass.uses_symbol(m_.cols.q + k);
            if (with_q) {
                const Pair vin0 = volume_inputs(s, t, false);
                mixed(vin0, face_pass(s, t, false), Q, V ? &dQ : nullptr);
                s.q = {Q.data(), Index(nqs_) * nn_, 0};
                if (V)
                    s.dq = {dQ.data(), Index(nqs_) * nn_, 0};
            }
        }
        const Pair vin = volume_inputs(s, t, with_q);
        const Pair mc = run(m_.mass, vin, [this](Index r) { return vol_element(r); }, "mass");
        VectorXd out = VectorXd::Zero(L.size());
        const Field x{X.data(), B, 0};
        MatrixXd xq(nq_, ne_);
        for (int c = 0; c < ncu_; ++c) {
            m_.volume_values(x.comp(c, nn_, ne_), xq, -1, fast_);
            const ArrayXd& coef = V ? mc.d.col(c) : mc.v.col(c);
            const ArrayXd y = m_.wdet.array() * coef * Eigen::Map<const ArrayXd>(xq.data(), xq.size());
            m_.volume_integrate(Eigen::Map<const MatrixXd>(y.data(), nq_, ne_),
                                StridedMut(out.data() + Index(c) * nn_, nn_, ne_, Eigen::OuterStride<>(B)), -1, 1.0,
                                fast_);
        }
        if (V)
            return out;
        const Field xqf{X.data(), B, Index(ncu_) * nn_};
        for (int c = 0; c < L.nq; ++c) {
            m_.volume_values(xqf.comp(c, nn_, ne_), xq, -1, fast_);
            const ArrayXd y = m_.wdet.array() * Eigen::Map<const ArrayXd>(xq.data(), xq.size());
            m_.volume_integrate(Eigen::Map<const MatrixXd>(y.data(), nq_, ne_),
                                StridedMut(out.data() + Index(ncu_ + c) * nn_, nn_, ne_, Eigen::OuterStride<>(B)), -1,
                                1.0, fast_);
        }
        const Index off = Index(L.ncu + L.nq) * nn_;
        for (int k = 0; k < L.nw; ++k)
            StridedMut(out.data() + off + Index(k) * nn_, nn_, ne_, Eigen::OuterStride<>(B)) =
                m_.model.ode.alpha * Field{X.data(), B, off}.comp(k, nn_, ne_);
        return out;
    }

private:
    const Impl& m_;
    bool fast_;
    int nn_, ne_, ncu_, d_, nq_, nqf_, nqs_;
    bool grad_;
};

} // namespace

namespace detail {

void Impl::volume_values(const ConstRef& X, Eigen::Ref<MatrixXd> out, int r, bool fast) const
{
    if (fast && sumfac.valid()) {
        sumfac.interpolate(X, out, r, ops);
        return;
    }
    const MatrixXd& A = r < 0 ? master.phi : master.dphi[static_cast<std::size_t>(r)];
    out.noalias() = A * X;
    ops += A.rows() * A.cols() * X.cols();
}

void Impl::volume_integrate(const ConstRef& Y, StridedMut out, int r, double scale, bool fast) const
{
    if (fast && sumfac.valid()) {
        sumfac.integrate(Y, out, r, scale, ops);
        return;
    }
    const MatrixXd& A = r < 0 ? master.phi : master.dphi[static_cast<std::size_t>(r)];
    out.noalias() += scale * (A.transpose() * Y);
    ops += A.rows() * A.cols() * Y.cols();
}

void Impl::build_plans()
{
    using model::SymbolContext;
    const auto vol = model::symbol_table(model, SymbolContext::Volume);
    const auto bnd = model::symbol_table(model, SymbolContext::Boundary);
    const auto face = model::symbol_table(model, SymbolContext::Face);
    const int nd = model.nd, ncu = model.ncu;
    const int nqs = model.has_gradient() ? ncu * nd : 0;
    cols.x = 0;
    cols.t = nd;
    cols.u = nd + 1;
    cols.q = cols.u + ncu;
    cols.w = cols.q + nqs;
    cols.mu = cols.w + model.nw;
    cols.volume = cols.mu + model.nparam;
    cols.n = cols.volume;
    cols.boundary = cols.n + nd;
    cols.up = cols.boundary;
    cols.qp = cols.up + ncu;
    cols.uh = cols.qp + nqs;
    cols.face = cols.uh + ncu;
    if (vol.size() != cols.volume || bnd.size() != cols.boundary || face.size() != cols.face)
        throw Error("internal: symbol table layout mismatch");

    flux = compile(model.flux, vol);
    source = compile(model.source, vol);
    mass = compile(model.mass, vol);
    tau = compile(model.numflux.tau, face);
    if (!model.numflux.wavespeed.empty())
        wavespeed = compile({model.numflux.wavespeed}, bnd);
    ode = compile(model.ode.source, vol);
    if (!model.numflux.uhat.empty())
        uhat = compile(model.numflux.uhat, face);
    if (!model.numflux.fhat.empty())
        fhat = compile(model.numflux.fhat, face);
    steady = model.is_steady();

    beta = model.numflux.switch_vector;
    if (beta.empty())
        beta.assign(static_cast<std::size_t>(nd), 1.0 / std::sqrt(double(nd)));
    double norm = 0.0;
    for (double b : beta)
        norm += b * b;
    if (static_cast<int>(beta.size()) != nd || norm == 0.0)
        throw ValidationError("switch vector must have nd nonzero-norm entries");
    for (double& b : beta)
        b /= std::sqrt(norm);

    std::set<int> tags;
    for (const auto& bf : topology.boundary)
        tags.insert(bf.tag);
    for (int tag : tags) {
        const auto it = model.bcs.find(tag);
        if (it == model.bcs.end())
            throw ValidationError("no boundary condition for boundary tag " + std::to_string(tag));
        if (it->second.type == model::BcType::Periodic)
            throw ValidationError("periodic boundary tag " + std::to_string(tag) + " has no matched partner");
        BcPlans bc;
        bc.tag = tag;
        bc.type = it->second.type;
        bc.data = compile(it->second.data, bnd);
        if (bc.data.num_outputs() != ncu)
            throw ValidationError("boundary tag " + std::to_string(tag) + " needs " + std::to_string(ncu) +
                                  " data expressions");
        if (!it->second.trace.empty())
            bc.trace = compile(it->second.trace, bnd);
        bcs.push_back(std::move(bc));
    }
}

} // namespace detail

Discretization::Discretization(model::PdeModel model, mesh::Mesh mesh, const DiscOptions& options)
    : impl_(std::make_unique<Impl>())
{
    if (const auto diags = model::validate(model); !diags.empty())
        throw ValidationError("invalid model: " + diags.front().message);
    if (mesh.nd != model.nd || dimension(mesh.kind) != model.nd)
        throw ValidationError("mesh dimension " + std::to_string(mesh.nd) + " does not match model dimension " +
                              std::to_string(model.nd));
    auto& m = *impl_;
    m.model = std::move(model);
    m.mesh = std::move(mesh);
    m.topology = mesh::build_face_topology(m.mesh, options.periodic);
    m.master = build_master(m.mesh.kind, options.p, options.quad_degree);
    m.layout.nn = m.master.n_nodes();
    m.layout.ncu = m.model.ncu;
    m.layout.nd = m.model.nd;
    m.layout.nq = m.model.kind == model::ModelKind::Wave ? m.model.ncu * m.model.nd : 0;
    m.layout.nw = m.model.nw;
    m.layout.ne = m.mesh.num_elements();
    m.build_plans();
    m.build_geometry();
    m.sumfac = detail::SumFactorization(m.master);
}

Discretization::~Discretization() = default;
Discretization::Discretization(Discretization&&) noexcept = default;
Discretization& Discretization::operator=(Discretization&&) noexcept = default;

const model::PdeModel& Discretization::model() const { return impl_->model; }
const mesh::Mesh& Discretization::mesh() const { return impl_->mesh; }
const mesh::FaceTopology& Discretization::topology() const { return impl_->topology; }
const MasterElement& Discretization::master() const { return impl_->master; }
const Layout& Discretization::layout() const { return impl_->layout; }
const MatrixXd& Discretization::node_coordinates() const { return impl_->xnodes; }
const MatrixXd& Discretization::quadrature_points() const { return impl_->xquad; }
const VectorXd& Discretization::quadrature_weights() const { return impl_->wdet; }
const std::vector<std::vector<int>>& Discretization::element_neighbors() const { return impl_->neighbors; }
long long Discretization::volume_operations() const { return impl_->ops; }
void Discretization::reset_operation_count() const { impl_->ops = 0; }
bool Discretization::has_mass() const { return !impl_->steady || impl_->layout.nq > 0 || impl_->layout.nw > 0; }

int Discretization::coupling_distance() const { return impl_->model.kind == model::ModelKind::Diffusion ? 2 : 1; }

MatrixXd Discretization::values_at_quadrature(const VectorXd& U) const
{
    const auto& L = impl_->layout;
    const int nq = impl_->master.n_quad();
    MatrixXd out(Index(L.ne) * nq, L.ncu);
    const Field u{U.data(), L.block(), 0};
    for (int c = 0; c < L.ncu; ++c) {
        Eigen::Map<MatrixXd> col(out.col(c).data(), nq, L.ne);
        impl_->volume_values(u.comp(c, L.nn, L.ne), col, -1, false);
    }
    return out;
}

MatrixXd Discretization::gradient_at_quadrature(const VectorXd& U, double t) const
{
    const auto& L = impl_->layout;
    const auto& model = impl_->model;
    if (!model.has_gradient())
        return {};
    const int nq = impl_->master.n_quad();
    const int nqs = model.ncu * model.nd;
    VectorXd Q;
    Field q;
    if (model.kind == model::ModelKind::Diffusion) {
        Q = compute_mixed(U, t);
        q = {Q.data(), Index(nqs) * L.nn, 0};
    } else {
        q = {U.data(), L.block(), Index(L.ncu) * L.nn};
    }
    MatrixXd out(Index(L.ne) * nq, nqs);
    for (int c = 0; c < nqs; ++c) {
        Eigen::Map<MatrixXd> col(out.col(c).data(), nq, L.ne);
        impl_->volume_values(q.comp(c, L.nn, L.ne), col, -1, false);
    }
    return out;
}

VectorXd Discretization::interpolate(const std::vector<std::string>& u, const std::vector<std::string>& q,
                                     const std::vector<std::string>& w, double t) const
{
    const auto& m = *impl_;
    const auto& L = m.layout;
    const auto table = model::symbol_table(m.model, model::SymbolContext::Volume);
    Pair in;
    in.resize(Index(L.ne) * L.nn, m.cols.volume, false);
    in.v.middleCols(m.cols.x, L.nd) = m.xnodes.transpose().array();
    in.v.col(m.cols.t).setConstant(t);
    for (int k = 0; k < m.model.nparam; ++k)
        in.v.col(m.cols.mu + k).setConstant(m.model.mu[static_cast<std::size_t>(k)]);
    const ElementOf where = [&L](Index r) { return static_cast<int>(r / L.nn); };
    VectorXd U = VectorXd::Zero(L.size());
    auto place = [&](const std::vector<std::string>& exprs, int first_row, int max_rows, const char* what) {
        if (exprs.empty())
            return;
        if (static_cast<int>(exprs.size()) > max_rows)
            throw ValidationError(std::string("too many ") + what + " expressions");
        const Pair vals = run(compile(exprs, table), in, where, what);
        for (int c = 0; c < static_cast<int>(exprs.size()); ++c)
            StridedMut(U.data() + Index(first_row + c) * L.nn, L.nn, L.ne, Eigen::OuterStride<>(L.block())) =
                Eigen::Map<const MatrixXd>(vals.v.col(c).data(), L.nn, L.ne);
    };
    place(u, 0, L.ncu, "initial state");
    place(q, L.ncu, L.nq, "initial gradient");
    place(w, L.ncu + L.nq, L.nw, "initial ODE state");
    return U;
}

VectorXd Discretization::interpolate_initial() const
{
    const auto& m = impl_->model;
    return interpolate(m.init_u, m.kind == model::ModelKind::Wave ? m.init_q : std::vector<std::string>{}, m.init_w,
                       0.0);
}

void Discretization::check_finite(const VectorXd& U) const
{
    if (U.size() != size())
        throw ValidationError("state has " + std::to_string(U.size()) + " entries, expected " +
                              std::to_string(size()));
    if (U.allFinite())
        return;
    for (Index i = 0; i < U.size(); ++i)
        if (!std::isfinite(U(i)))
            throw NonFiniteError("non-finite state value on element " + std::to_string(i / impl_->layout.block()));
}

VectorXd Discretization::residual(const VectorXd& U, double t) const
{
    check_finite(U);
    VectorXd R;
    Assembler(*impl_, false).residual(U, nullptr, t, R, nullptr);
    return R;
}

VectorXd Discretization::residual_sumfac(const VectorXd& U, double t) const
{
    if (!impl_->sumfac.valid())
        throw Error("sum factorization requires tensor-product elements");
    check_finite(U);
    VectorXd R;
    Assembler(*impl_, true).residual(U, nullptr, t, R, nullptr);
    return R;
}

VectorXd Discretization::residual_tangent(const VectorXd& U, const VectorXd& V, double t, VectorXd* R) const
{
    check_finite(U);
    check_finite(V);
    VectorXd R0, dR;
    Assembler(*impl_, false).residual(U, &V, t, R0, &dR);
    if (R)
        *R = std::move(R0);
    return dR;
}

VectorXd Discretization::compute_mixed(const VectorXd& U, double t) const
{
    if (impl_->model.kind != model::ModelKind::Diffusion)
        throw ValidationError("compute_mixed requires a diffusion-kind model");
    check_finite(U);
    return Assembler(*impl_, false).compute_mixed(U, t);
}

VectorXd Discretization::apply_mass(const VectorXd& U, const VectorXd& X, double t) const
{
    return Assembler(*impl_, false).apply_mass(U, nullptr, X, t);
}

VectorXd Discretization::apply_mass_tangent(const VectorXd& U, const VectorXd& V, const VectorXd& X, double t) const
{
    return Assembler(*impl_, false).apply_mass(U, &V, X, t);
}

VectorXd Discretization::apply_inverse_unit_mass(const VectorXd& X) const
{
    const auto& L = impl_->layout;
    const Index B = L.block();
    VectorXd out(X.size());
    const int rows = L.ncu + L.nq;
    for (int e = 0; e < L.ne; ++e) {
        out.segment(Index(e) * B, Index(rows) * L.nn) =
            (impl_->minv.middleCols(Index(e) * L.nn, L.nn) *
             Eigen::Map<const MatrixXd>(X.data() + Index(e) * B, L.nn, rows))
                .reshaped();
        out.segment(Index(e) * B + Index(rows) * L.nn, Index(L.nw) * L.nn) =
            X.segment(Index(e) * B + Index(rows) * L.nn, Index(L.nw) * L.nn) / impl_->model.ode.alpha;
    }
    return out;
}

std::vector<int> Discretization::color_elements(int distance) const
{
    const auto& nb = impl_->neighbors;
    const int ne = impl_->layout.ne;
    std::vector<int> color(static_cast<std::size_t>(ne), -1);
    std::vector<int> mark(static_cast<std::size_t>(ne), -1);
    std::vector<char> used;
    for (int e = 0; e < ne; ++e) {
        // breadth-first ball of radius `distance`
        std::vector<int> frontier{e}, ball;
        mark[static_cast<std::size_t>(e)] = e;
        for (int level = 0; level < distance; ++level) {
            std::vector<int> next;
            for (int a : frontier)
                for (int b : nb[static_cast<std::size_t>(a)])
                    if (mark[static_cast<std::size_t>(b)] != e) {
                        mark[static_cast<std::size_t>(b)] = e;
                        next.push_back(b);
                        ball.push_back(b);
                    }
            frontier = std::move(next);
        }
        used.assign(ball.size() + 1, 0);
        for (int b : ball) {
            const int c = color[static_cast<std::size_t>(b)];
            if (c >= 0 && c < static_cast<int>(used.size()))
                used[static_cast<std::size_t>(c)] = 1;
        }
        int c = 0;
        while (used[static_cast<std::size_t>(c)])
            ++c;
        color[static_cast<std::size_t>(e)] = c;
    }
    return color;
}

} // namespace ldg::disc
