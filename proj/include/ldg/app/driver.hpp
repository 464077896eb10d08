#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldg/app/config.hpp"
#include "ldg/disc/discretization.hpp"
#include "ldg/timeint/dirk.hpp"

namespace ldg::app {

struct StepRecord
{
    int step = 0;
    double t = 0.0;
    int newton_iters = 0; ///< summed over stages
    int gmres_iters = 0;  ///< summed over stages and Newton steps
    double residual = 0.0; ///< largest final stage residual
};

struct RunResult
{
    bool ok = false;
    std::string error;
    Eigen::VectorXd U;
    double t = 0.0;
    std::vector<StepRecord> steps;
    std::vector<std::string> diagnostic_names;
    std::vector<std::vector<double>> diagnostics; ///< (step, t, values...) per row
    std::vector<std::filesystem::path> files;
    double wall_seconds = 0.0;

    int total_newton() const;
    int total_gmres() const;
    /// Brace-delimited key: value summary.
    std::string summary() const;
};

/// Model (with mu overrides), discretization and solver wiring for one config.
struct Problem
{
    model::PdeModel model;
    std::unique_ptr<disc::Discretization> disc;
    timeint::SemiDiscreteSystem system;
    std::shared_ptr<solver::SnapshotHistory> snapshots;
    solver::PreconditionerFactory factory;
    bool steady = false;
};

std::unique_ptr<Problem> make_problem(const RunConfig& config);

/// Initial condition, time loop or steady solve, outputs. Errors are caught
/// and reported through `ok`/`error`; files written so far are kept.
RunResult run_simulation(const RunConfig& config, std::ostream* log = nullptr);
/// Same on an existing problem; the final state stays in the result.
RunResult simulate(Problem& problem, const RunConfig& config, std::ostream* log = nullptr);

/// CSV with schema comment line then `step,newton_iters,gmres_iters,residual`.
std::string stats_csv(const RunResult& result);
/// `step,t,<diagnostic names...>`
std::string diagnostics_csv(const RunResult& result);

struct ConvergenceRow
{
    int p = 0;
    int n = 0;
    double error_u = 0.0;
    double error_q = 0.0;
    double rate_u = 0.0; ///< NaN when unreliable or undefined
    double rate_q = 0.0;
    std::string status = "ok";
};

/// log(E_prev/E)/log(h_prev/h); NaN when either error is at roundoff level
/// (<= 1e-10), non-positive or non-finite.
double observed_rate(double e_prev, double e, double h_prev, double h);

/// Solves the config for every (p, n) pair on structured meshes with n cells
/// per direction and compares with the model's exact solution at the final time.
std::vector<ConvergenceRow> run_convergence(const RunConfig& config, const std::vector<int>& ns,
                                            const std::vector<int>& ps, std::ostream* log = nullptr);

/// `p,n,error_u,rate_u,error_q,rate_q` with `x` for unavailable rates.
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);
/// Console table in the same column order.
std::string convergence_table(const std::vector<ConvergenceRow>& rows);

} // namespace ldg::app
