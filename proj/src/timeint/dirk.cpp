#include "ldg/timeint/dirk.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ldg/disc/discretization.hpp"
#include "ldg/error.hpp"

namespace ldg::timeint {

bool ButcherTableau::stiffly_accurate() const
{
    return (A.row(stages - 1).transpose() - b).cwiseAbs().maxCoeff() <= 1e-15;
}

namespace {

// Root of x^3 - 3x^2 + 3x/2 - 1/6 in (1/6, 1/2).
double alexander_gamma()
{
    double x = 0.4;
    for (int i = 0; i < 50; ++i) {
        const double f = ((x - 3.0) * x + 1.5) * x - 1.0 / 6.0;
        const double df = (3.0 * x - 6.0) * x + 1.5;
        const double dx = f / df;
        x -= dx;
        if (std::abs(dx) < 1e-16)
            break;
    }
    return x;
}

} // namespace

ButcherTableau dirk_tableau(int stages, int order)
{
    ButcherTableau t;
    t.stages = stages;
    t.order = order;
    t.A = Eigen::MatrixXd::Zero(stages, stages);
    t.b.resize(stages);
    if (stages == 1 && order == 1) {
        t.A(0, 0) = 1.0;
        t.b << 1.0;
    } else if (stages == 2 && order == 2) {
        const double g = 1.0 - 1.0 / std::numbers::sqrt2;
        t.A << g, 0.0, 1.0 - g, g;
        t.b << 1.0 - g, g;
    } else if (stages == 3 && order == 3) {
        const double g = alexander_gamma();
        const double b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
        const double b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
        t.A << g, 0.0, 0.0, (1.0 - g) / 2.0, g, 0.0, b1, b2, g;
        t.b << b1, b2, g;
    } else if (stages == 3 && order == 4) {
        const double g = 0.5 + std::cos(std::numbers::pi / 18.0) / std::numbers::sqrt3;
        const double d = 1.0 / (6.0 * (2.0 * g - 1.0) * (2.0 * g - 1.0));
        t.A << g, 0.0, 0.0, 0.5 - g, g, 0.0, 2.0 * g, 1.0 - 4.0 * g, g;
        t.b << d, 1.0 - 2.0 * d, d;
    } else {
        throw ValidationError("unsupported DIRK scheme (" + std::to_string(stages) + "," + std::to_string(order) +
                              "); expected (1,1), (2,2), (3,3) or (3,4)");
    }
    t.c = t.A.rowwise().sum();
    return t;
}

SemiDiscreteSystem make_system(const disc::Discretization& d)
{
    SemiDiscreteSystem s;
    s.n = d.size();
    s.residual = [&d](const Vec& U, double t) { return d.residual(U, t); };
    s.residual_tangent = [&d](const Vec& U, const Vec& V, double t) { return d.residual_tangent(U, V, t); };
    s.mass = [&d](const Vec& U, const Vec& X, double t) { return d.apply_mass(U, X, t); };
    s.mass_tangent = [&d](const Vec& U, const Vec& V, const Vec& X, double t) {
        return d.apply_mass_tangent(U, V, X, t);
    };
    return s;
}

StepResult advance_step(const SemiDiscreteSystem& sys, const Vec& u, double t, double dt, const ButcherTableau& tab,
                        const solver::NewtonOptions& options, const solver::PreconditionerFactory& factory)
{
    if (!(dt > 0.0))
        throw ValidationError("time step must be positive");
    if (u.size() != sys.n)
        throw SolverError("state size does not match the system");
    if (!u.allFinite())
        throw NonFiniteError("non-finite state at t = " + std::to_string(t));

    const int s = tab.stages;
    std::vector<Vec> k(static_cast<std::size_t>(s));
    StepResult out;
    Vec U = u;
    for (int i = 0; i < s; ++i) {
        Vec K = u;
        for (int j = 0; j < i; ++j)
            K += dt * tab.A(i, j) * k[j];
        const double ti = t + tab.c[i] * dt;
        const double scale = 1.0 / (tab.A(i, i) * dt);

        solver::NonlinearSystem ns;
        ns.n = sys.n;
        ns.residual = [&](const Vec& X) {
            const Vec dX = (X - K) * scale;
            return Vec((sys.mass ? sys.mass(X, dX, ti) : dX) + sys.residual(X, ti));
        };
        if (sys.residual_tangent)
            ns.tangent = [&](const Vec& X, const Vec& V) {
                const Vec dX = (X - K) * scale;
                Vec jv = sys.residual_tangent(X, V, ti);
                if (sys.mass) {
                    jv += sys.mass(X, V, ti) * scale;
                    if (sys.mass_tangent)
                        jv += sys.mass_tangent(X, V, dX, ti);
                } else {
                    jv += V * scale;
                }
                return jv;
            };
        solver::NewtonOptions opt = options;
        if (!ns.tangent)
            opt.mode = solver::JvMode::FiniteDifference;

        // Predictor: the previous stage value.
        auto res = solver::newton_solve(ns, U, opt, factory);
        out.stages.push_back(res.stats);
        if (!res.stats.converged)
            throw SolverError("stage " + std::to_string(i + 1) + " of the step at t = " + std::to_string(t) +
                              " failed: " + res.stats.message);
        U = std::move(res.u);
        k[i] = (U - K) * scale;
    }

    if (tab.stiffly_accurate()) {
        out.u = std::move(U);
    } else {
        out.u = u;
        for (int i = 0; i < s; ++i)
            out.u += dt * tab.b[i] * k[i];
    }
    if (!out.u.allFinite())
        throw NonFiniteError("non-finite state after the step at t = " + std::to_string(t));
    return out;
}

solver::NewtonResult solve_steady(const SemiDiscreteSystem& sys, const Vec& u0, double t,
                                  const solver::NewtonOptions& options, const solver::PreconditionerFactory& factory)
{
    solver::NonlinearSystem ns;
    ns.n = sys.n;
    ns.residual = [&](const Vec& X) { return sys.residual(X, t); };
    solver::NewtonOptions opt = options;
    if (sys.residual_tangent)
        ns.tangent = [&](const Vec& X, const Vec& V) { return sys.residual_tangent(X, V, t); };
    else
        opt.mode = solver::JvMode::FiniteDifference;
    return solver::newton_solve(ns, u0, opt, factory);
}

} // namespace ldg::timeint
