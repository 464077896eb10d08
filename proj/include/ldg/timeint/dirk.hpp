#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ldg/solver/solver.hpp"

namespace ldg::disc {
class Discretization;
}

namespace ldg::timeint {

using solver::Vec;

struct ButcherTableau
{
    int stages = 0;
    int order = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;

    /// Last row of A equals b.
    bool stiffly_accurate() const;
};

/// Supported pairs: (1,1), (2,2), (3,3), (3,4).
ButcherTableau dirk_tableau(int stages, int order);

/// M(U) dU/dt = -R(U, t). Tangent callbacks are optional: a missing
/// residual_tangent forces finite differences, a missing mass_tangent means
/// the mass does not depend on U. A missing mass means identity.
struct SemiDiscreteSystem
{
    Eigen::Index n = 0;
    std::function<Vec(const Vec& U, double t)> residual;
    std::function<Vec(const Vec& U, const Vec& V, double t)> residual_tangent;
    std::function<Vec(const Vec& U, const Vec& X, double t)> mass;
    std::function<Vec(const Vec& U, const Vec& V, const Vec& X, double t)> mass_tangent;
};

/// Wraps a discretization. The object must outlive the returned system.
SemiDiscreteSystem make_system(const disc::Discretization& d);

struct StepResult
{
    Vec u;
    std::vector<solver::SolveStats> stages;
};

/// One DIRK step from (u, t) to t + dt. Each stage solves
/// M(U)(U - K)/(a_ii dt) + R(U, t + c_i dt) = 0. Throws SolverError naming the
/// stage when its Newton solve fails.
StepResult advance_step(const SemiDiscreteSystem& sys, const Vec& u, double t, double dt, const ButcherTableau& tab,
                        const solver::NewtonOptions& options, const solver::PreconditionerFactory& factory = {});

/// Solves R(U, t) = 0 by Newton from u0. Returns the stats even when not
/// converged; callers check `stats.converged`.
solver::NewtonResult solve_steady(const SemiDiscreteSystem& sys, const Vec& u0, double t,
                                  const solver::NewtonOptions& options,
                                  const solver::PreconditionerFactory& factory = {});

} // namespace ldg::timeint
