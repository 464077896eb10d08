#include <algorithm>
#include <cmath>
#include <map>

#include "ldg/error.hpp"
#include "ldg/solver/solver.hpp"

namespace ldg::solver {

BlockJacobi BlockJacobi::build(const LinearOperator& J, int block_size, const std::vector<int>& colors)
{
    const int nb = static_cast<int>(colors.size());
    if (block_size < 1 || Eigen::Index(block_size) * nb != J.n)
        throw SolverError("block structure does not match the operator size");

    std::map<int, std::vector<int>> groups;
    for (int b = 0; b < nb; ++b)
        groups[colors[b]].push_back(b);

    std::vector<Eigen::MatrixXd> blocks(nb, Eigen::MatrixXd(block_size, block_size));
    BlockJacobi P;
    P.block_ = block_size;
    for (const auto& [color, members] : groups) {
        for (int j = 0; j < block_size; ++j) {
            Vec v = Vec::Zero(J.n);
            for (int b : members)
                v[Eigen::Index(b) * block_size + j] = 1.0;
            const Vec y = J.apply(v);
            if (!y.allFinite())
                throw NonFiniteError("non-finite value while probing block-Jacobi blocks");
            ++P.probes_;
            for (int b : members)
                blocks[b].col(j) = y.segment(Eigen::Index(b) * block_size, block_size);
        }
    }

    P.lu_.reserve(nb);
    for (auto& A : blocks) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
        const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (!(pivot > 1e-14 * scale)) {
            A.diagonal().array() += 1e-12 * scale;
            lu.compute(A);
            ++P.regularized_;
        }
        P.lu_.push_back(std::move(lu));
    }
    return P;
}

Vec BlockJacobi::apply(const Vec& r) const
{
    Vec z(r.size());
    for (std::size_t b = 0; b < lu_.size(); ++b) {
        const Eigen::Index o = Eigen::Index(b) * block_;
        z.segment(o, block_) = lu_[b].solve(r.segment(o, block_));
    }
    return z;
}

ReducedBasis ReducedBasis::build(const std::vector<Vec>& snapshots, const LinearOperator& J, int k)
{
    if (k < 1)
        throw SolverError("reduced-basis rank must be at least 1");
    if (snapshots.empty())
        throw SolverError("reduced basis needs at least one snapshot");

    // Newest snapshots first so that truncation keeps the most recent directions.
    std::vector<Vec> basis;
    for (auto it = snapshots.rbegin(); it != snapshots.rend() && static_cast<int>(basis.size()) < k; ++it) {
        if (it->size() != J.n)
            throw SolverError("snapshot size does not match the operator");
        Vec v = *it;
        const double n0 = v.norm();
        if (!(n0 > 0.0))
            continue;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& q : basis)
                v -= q.dot(v) * q;
        const double n1 = v.norm();
        if (n1 > 1e-10 * n0)
            basis.push_back(v / n1);
    }

    ReducedBasis P;
    P.W_.resize(J.n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
        P.W_.col(static_cast<Eigen::Index>(i)) = basis[i];
    if (basis.empty())
        return P;
    Eigen::MatrixXd JW(J.n, P.W_.cols());
    for (Eigen::Index i = 0; i < P.W_.cols(); ++i)
        JW.col(i) = J.apply(P.W_.col(i));
    P.H_.compute(P.W_.transpose() * JW);
    return P;
}

Vec ReducedBasis::apply(const Vec& r) const
{
    if (W_.cols() == 0)
        return r;
    const Vec c = W_.transpose() * r;
    return r + W_ * (H_.solve(c) - c);
}

void SnapshotHistory::push(const Vec& v)
{
    if (capacity_ == 0)
        return;
    if (items_.size() == capacity_)
        items_.pop_front();
    items_.push_back(v);
}

PreconditionerKind preconditioner_from_string(const std::string& name)
{
    if (name == "identity" || name == "none")
        return PreconditionerKind::Identity;
    if (name == "block_jacobi")
        return PreconditionerKind::BlockJacobi;
    if (name == "reduced_basis")
        return PreconditionerKind::ReducedBasis;
    if (name == "composite")
        return PreconditionerKind::Composite;
    throw ValidationError("unknown preconditioner '" + name +
                          "' (expected identity, block_jacobi, reduced_basis or composite)");
}

std::string to_string(PreconditionerKind kind)
{
    switch (kind) {
    case PreconditionerKind::Identity: return "identity";
    case PreconditionerKind::BlockJacobi: return "block_jacobi";
    case PreconditionerKind::ReducedBasis: return "reduced_basis";
    case PreconditionerKind::Composite: return "composite";
    }
    return "identity";
}

PreconditionerFactory make_preconditioner_factory(const PreconditionerSpec& spec, int block_size,
                                                  std::vector<int> colors,
                                                  std::shared_ptr<SnapshotHistory> snapshots)
{
    if (spec.kind == PreconditionerKind::Identity)
        return {};
    if (spec.rb_rank < 1)
        throw ValidationError("reduced-basis rank must be at least 1");

    struct State
    {
        PreconditionerSpec spec;
        int block;
        std::vector<int> colors;
        std::shared_ptr<SnapshotHistory> snapshots;
        std::shared_ptr<BlockJacobi> bj;
        long calls = 0;
    };
    auto st = std::make_shared<State>(State{spec, block_size, std::move(colors), std::move(snapshots), nullptr, 0});

    return [st](const Vec&, const LinearOperator& J) -> Preconditioner {
        const auto kind = st->spec.kind;
        const bool use_bj = kind == PreconditionerKind::BlockJacobi || kind == PreconditionerKind::Composite;
        const bool use_rb = kind == PreconditionerKind::ReducedBasis || kind == PreconditionerKind::Composite;

        if (use_bj && (!st->bj || st->calls % std::max(1, st->spec.refresh) == 0))
            st->bj = std::make_shared<BlockJacobi>(BlockJacobi::build(J, st->block, st->colors));
        ++st->calls;
        std::shared_ptr<BlockJacobi> bj = use_bj ? st->bj : nullptr;

        std::shared_ptr<ReducedBasis> rb;
        if (use_rb && st->snapshots && st->snapshots->size() > 0) {
            LinearOperator op = J;
            if (bj)
                op.apply = [J, bj](const Vec& v) { return J.apply(bj->apply(v)); };
            rb = std::make_shared<ReducedBasis>(ReducedBasis::build(st->snapshots->snapshots(), op, st->spec.rb_rank));
        }

        if (bj && rb)
            return [bj, rb](const Vec& r) { return bj->apply(rb->apply(r)); };
        if (bj)
            return [bj](const Vec& r) { return bj->apply(r); };
        if (rb)
            return [rb](const Vec& r) { return rb->apply(r); };
        return {};
    };
}

} // namespace ldg::solver
