#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ldg/error.hpp"
#include "ldg/solver/solver.hpp"

namespace ldg::solver {

Vec jacobian_vector(const ResidualFn& R, const Vec& u, const Vec& v, JvMode mode, const TangentFn& tangent,
                    const Vec* Ru)
{
    if (mode == JvMode::Tangent) {
        if (!tangent)
            throw SolverError("tangent Jacobian-vector products requested but no tangent is available");
        return tangent(u, v);
    }
    const double vn = v.norm();
    if (vn == 0.0)
        return Vec::Zero(u.size());
    const double inf = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + inf) / vn;
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw SolverError("finite-difference step underflow");
    const Vec r1 = R(u + eps * v);
    const Vec r0 = Ru ? *Ru : R(u);
    Vec jv = (r1 - r0) / eps;
    if (!jv.allFinite())
        throw NonFiniteError("non-finite finite-difference Jacobian-vector product");
    return jv;
}

int SolveStats::total_gmres() const
{
    return std::accumulate(gmres_iters.begin(), gmres_iters.end(), 0);
}

namespace {

double norm(const Vec& v, bool ordered)
{
    return std::sqrt(dot(v, v, ordered));
}

} // namespace

NewtonResult newton_solve(const NonlinearSystem& system, Vec u0, const NewtonOptions& options,
                          const PreconditionerFactory& factory)
{
    if (u0.size() != system.n)
        throw SolverError("initial state size does not match the system");
    const bool ord = options.gmres.reproducible;

    NewtonResult out;
    out.u = std::move(u0);
    SolveStats& st = out.stats;

    Vec r = system.residual(out.u);
    if (!r.allFinite())
        throw NonFiniteError("non-finite initial residual");
    double rn = norm(r, ord);
    const double r0 = rn;
    const double goal = std::max(options.abs_tol, options.rel_tol * r0);
    st.residual_norms.push_back(rn);

    for (;;) {
        if (rn <= options.abs_tol || rn <= options.rel_tol * r0) {
            st.converged = true;
            break;
        }
        if (st.newton_iters >= options.max_iter) {
            std::ostringstream msg;
            msg << "Newton did not converge in " << options.max_iter << " iterations (|R| = " << rn << ")";
            st.message = msg.str();
            break;
        }

        const Vec u = out.u;
        const Vec ru = r;
        LinearOperator J{system.n, [&](const Vec& v) {
                             return jacobian_vector(system.residual, u, v, options.mode, system.tangent, &ru);
                         }};
        const Preconditioner P = factory ? factory(u, J) : Preconditioner{};

        double eta = options.forcing == Forcing::Adaptive ? std::min(0.1, std::sqrt(rn)) : 0.5 * goal / rn;
        eta = std::clamp(eta, 1e-14, 0.1);
        GmresOptions go = options.gmres;
        go.rel_tol = eta;
        const GmresResult lin = gmres(J, -r, P, go);
        st.gmres_iters.push_back(lin.iterations);
        const Vec& delta = lin.x;

        double lambda = 1.0;
        bool accepted = false;
        Vec trial, rt;
        double tn = 0.0;
        for (int h = 0; h <= (options.line_search ? 8 : 0); ++h, lambda *= 0.5) {
            trial = u + lambda * delta;
            try {
                rt = system.residual(trial);
            } catch (const NonFiniteError&) {
                continue;
            }
            if (!rt.allFinite())
                continue;
            tn = norm(rt, ord);
            if (!options.line_search || tn <= (1.0 - 1e-4 * lambda) * rn) {
                accepted = true;
                break;
            }
        }
        ++st.newton_iters;
        if (!accepted) {
            st.message = "line search stagnated";
            break;
        }
        if (options.snapshots)
            options.snapshots->push(trial - u);
        out.u = std::move(trial);
        r = std::move(rt);
        rn = tn;
        st.residual_norms.push_back(rn);
    }
    st.final_residual = rn;
    return out;
}

} // namespace ldg::solver
