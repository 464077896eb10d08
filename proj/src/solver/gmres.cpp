#include <cmath>
#include <limits>

#include "ldg/error.hpp"
#include "ldg/solver/solver.hpp"

namespace ldg::solver {

double dot(const Vec& a, const Vec& b, bool ordered)
{
    if (!ordered)
        return a.dot(b);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

namespace {

Vec checked_apply(const LinearOperator& A, const Vec& v)
{
    Vec y = A.apply(v);
    if (y.size() != A.n)
        throw SolverError("operator returned a vector of size " + std::to_string(y.size()) + ", expected " +
                          std::to_string(A.n));
    if (!y.allFinite())
        throw NonFiniteError("non-finite value in operator output");
    return y;
}

Vec precondition(const Preconditioner& M, const Vec& v)
{
    if (!M)
        return v;
    Vec z = M(v);
    if (!z.allFinite())
        throw NonFiniteError("non-finite value in preconditioner output");
    return z;
}

} // namespace

GmresResult gmres(const LinearOperator& A, const Vec& b, const Preconditioner& M, const GmresOptions& options)
{
    if (b.size() != A.n)
        throw SolverError("right-hand side size does not match the operator");
    if (!b.allFinite())
        throw NonFiniteError("non-finite right-hand side");
    if (!(options.rel_tol > 0.0 && options.rel_tol < 1.0))
        throw SolverError("gmres rel_tol must lie in (0, 1)");

    const bool ord = options.reproducible;
    auto norm = [ord](const Vec& v) { return std::sqrt(dot(v, v, ord)); };

    GmresResult res;
    res.x = Vec::Zero(A.n);
    const double bnorm = norm(b);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    const double target = options.rel_tol * bnorm;
    const int m = std::max(1, std::min<int>(options.restart, static_cast<int>(A.n)));

    Vec r = b;
    double beta = bnorm;
    while (true) {
        Eigen::MatrixXd V(A.n, m + 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
        V.col(0) = r / beta;
        g[0] = beta;

        int k = 0;
        bool done = false;
        for (; k < m && res.iterations < options.max_iter; ++k) {
            Vec w = checked_apply(A, precondition(M, V.col(k)));
            const double before = norm(w);
            for (int i = 0; i <= k; ++i) {
                H(i, k) = dot(w, V.col(i), ord);
                w -= H(i, k) * V.col(i);
            }
            double after = norm(w);
            if (after < 0.7 * before) {
                for (int i = 0; i <= k; ++i) {
                    const double c = dot(w, V.col(i), ord);
                    H(i, k) += c;
                    w -= c * V.col(i);
                }
                after = norm(w);
            }
            H(k + 1, k) = after;
            const bool lucky = after <= 1e-14 * before;
            if (!lucky)
                V.col(k + 1) = w / after;

            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            const double h = std::hypot(H(k, k), H(k + 1, k));
            if (h == 0.0) {
                res.breakdown = true;
                done = true;
                break;
            }
            cs[k] = H(k, k) / h;
            sn[k] = H(k + 1, k) / h;
            H(k, k) = h;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];

            ++res.iterations;
            const double est = std::abs(g[k + 1]);
            res.history.push_back(est);
            if (est <= target || lucky) {
                if (lucky && est > target)
                    res.breakdown = true;
                ++k;
                done = true;
                break;
            }
        }

        if (k > 0) {
            const Eigen::VectorXd y =
                H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
            res.x += precondition(M, V.leftCols(k) * y);
        }
        r = b - checked_apply(A, res.x);
        beta = norm(r);
        res.residual = beta;
        if (beta <= target) {
            res.converged = true;
            return res;
        }
        if (done || res.iterations >= options.max_iter)
            return res;
    }
}

} // namespace ldg::solver
