#include "ldg/app/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ldg/app/postprocess.hpp"
#include "ldg/app/vtu.hpp"
#include "ldg/error.hpp"

namespace ldg::app {

namespace fs = std::filesystem;

int RunResult::total_newton() const
{
    int n = 0;
    for (const auto& s : steps)
        n += s.newton_iters;
    return n;
}

int RunResult::total_gmres() const
{
    int n = 0;
    for (const auto& s : steps)
        n += s.gmres_iters;
    return n;
}

namespace {

std::string sci(double v)
{
    if (!std::isfinite(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

std::string full(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out || !(out << text))
        throw Error("cannot write '" + path.string() + "'");
}

} // namespace

std::string RunResult::summary() const
{
    std::ostringstream os;
    os << "{\n"
       << "  status: " << (ok ? "ok" : "failed") << "\n";
    if (!ok)
        os << "  error: " << error << "\n";
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", wall_seconds);
    os << "  wall_seconds: " << wall << "\n"
       << "  final_time: " << full(t) << "\n"
       << "  steps: " << steps.size() << "\n"
       << "  newton_iterations: " << total_newton() << "\n"
       << "  gmres_iterations: " << total_gmres() << "\n";
    if (!steps.empty())
        os << "  final_residual: " << sci(steps.back().residual) << "\n";
    if (U.size())
        os << "  state_max_abs: " << sci(U.cwiseAbs().maxCoeff()) << "\n";
    if (!diagnostics.empty())
        for (std::size_t k = 0; k < diagnostic_names.size(); ++k)
            os << "  " << diagnostic_names[k] << ": " << full(diagnostics.back()[k + 2]) << "\n";
    os << "}\n";
    return os.str();
}

std::unique_ptr<Problem> make_problem(const RunConfig& config)
{
    auto pr = std::make_unique<Problem>();
    if (!fs::exists(config.model_path))
        throw ValidationError("model file '" + config.model_path.string() + "' does not exist");
    pr->model = model::load_model(config.model_path);
    model::override_parameters(pr->model, config.mu);
    disc::DiscOptions opt;
    opt.p = config.p;
    opt.quad_degree = config.quad_degree;
    opt.periodic = periodic_pairs(config.mesh);
    pr->disc = std::make_unique<disc::Discretization>(pr->model, build_mesh(config.mesh), opt);
    pr->system = timeint::make_system(*pr->disc);
    pr->steady = config.steady.value_or(pr->model.is_steady());
    pr->snapshots = std::make_shared<solver::SnapshotHistory>(static_cast<std::size_t>(config.precond.rb_rank));
    const auto kind = config.precond.kind;
    std::vector<int> colors;
    if (kind == solver::PreconditionerKind::BlockJacobi || kind == solver::PreconditionerKind::Composite)
        colors = pr->disc->color_elements(pr->disc->coupling_distance());
    pr->factory = solver::make_preconditioner_factory(config.precond, pr->disc->layout().block(), std::move(colors),
                                                      pr->snapshots);
    return pr;
}

RunResult simulate(Problem& pr, const RunConfig& config_in, std::ostream* log)
{
    const auto start = std::chrono::steady_clock::now();
    RunConfig config = config_in;
    RunResult r;
    const auto& d = *pr.disc;
    const bool out = !config.out_dir.empty();
    try {
        if (out)
            fs::create_directories(config.out_dir);
        std::vector<std::string> names, integrands;
        for (const auto& [k, v] : config.diagnostics) {
            names.push_back(k);
            integrands.push_back(v);
        }
        r.diagnostic_names = names;
        auto record = [&](int step, double t, const Eigen::VectorXd& U) {
            if (integrands.empty())
                return;
            std::vector<double> row{double(step), t};
            for (double v : compute_functional(d, U, integrands, t))
                row.push_back(v);
            r.diagnostics.push_back(std::move(row));
        };
        auto write_vtu = [&](int step, const Eigen::VectorXd& U) {
            if (!out || !config.vtu)
                return;
            char name[32];
            std::snprintf(name, sizeof name, "solution_%05d.vtu", step);
            export_vtu(d, U, config.field_names, config.out_dir / name);
            r.files.push_back(config.out_dir / name);
        };

        solver::NewtonOptions newton = config.newton;
        newton.snapshots = pr.snapshots;

        Eigen::VectorXd U = d.interpolate_initial();
        d.check_finite(U);
        double t = 0.0;
        if (pr.steady) {
            const auto res = timeint::solve_steady(pr.system, U, t, newton, pr.factory);
            r.steps.push_back({0, t, res.stats.newton_iters, res.stats.total_gmres(), res.stats.final_residual});
            U = res.u;
            if (log)
                *log << "steady solve: newton " << res.stats.newton_iters << ", gmres " << res.stats.total_gmres()
                     << ", |R| " << sci(res.stats.final_residual) << "\n";
            if (!res.stats.converged)
                throw SolverError("steady solve failed: " + res.stats.message);
            record(0, t, U);
            write_vtu(0, U);
        } else {
            resolve_time(config, pr.model.tf);
            const auto tab = timeint::dirk_tableau(config.stages, config.order);
            const double dt = *config.dt;
            record(0, t, U);
            if (config.output_every > 0)
                write_vtu(0, U);
            for (int k = 1; k <= *config.nt; ++k) {
                const auto step = timeint::advance_step(pr.system, U, t, dt, tab, newton, pr.factory);
                U = step.u;
                t = (k == *config.nt && config.tf) ? *config.tf : k * dt;
                StepRecord rec{k, t, 0, 0, 0.0};
                for (const auto& s : step.stages) {
                    rec.newton_iters += s.newton_iters;
                    rec.gmres_iters += s.total_gmres();
                    rec.residual = std::max(rec.residual, s.final_residual);
                }
                r.steps.push_back(rec);
                record(k, t, U);
                if (log)
                    *log << "step " << k << " t=" << full(t) << " newton " << rec.newton_iters << " gmres "
                         << rec.gmres_iters << " |R| " << sci(rec.residual) << "\n";
                if (config.output_every > 0 && k % config.output_every == 0)
                    write_vtu(k, U);
            }
            if (config.output_every <= 0 || *config.nt % config.output_every != 0)
                write_vtu(*config.nt, U);
        }
        r.U = std::move(U);
        r.t = t;
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out) {
        try {
            write_file(config.out_dir / "stats.csv", stats_csv(r));
            r.files.push_back(config.out_dir / "stats.csv");
            if (!r.diagnostic_names.empty()) {
                write_file(config.out_dir / "diagnostics.csv", diagnostics_csv(r));
                r.files.push_back(config.out_dir / "diagnostics.csv");
            }
            write_file(config.out_dir / "summary.txt", r.summary());
            r.files.push_back(config.out_dir / "summary.txt");
        } catch (const std::exception& e) {
            if (r.ok) {
                r.ok = false;
                r.error = e.what();
            }
        }
    }
    return r;
}

RunResult run_simulation(const RunConfig& config, std::ostream* log)
{
    std::unique_ptr<Problem> pr;
    try {
        pr = make_problem(config);
    } catch (const std::exception& e) {
        RunResult r;
        r.error = e.what();
        return r;
    }
    return simulate(*pr, config, log);
}

std::string stats_csv(const RunResult& r)
{
    std::ostringstream os;
    os << "# schema=stats/1\n"
       << "step,newton_iters,gmres_iters,residual\n";
    for (const auto& s : r.steps)
        os << s.step << ',' << s.newton_iters << ',' << s.gmres_iters << ',' << full(s.residual) << '\n';
    return os.str();
}

std::string diagnostics_csv(const RunResult& r)
{
    std::ostringstream os;
    os << "# schema=diagnostics/1\n"
       << "step,t";
    for (const auto& n : r.diagnostic_names)
        os << ',' << n;
    os << '\n';
    for (const auto& row : r.diagnostics) {
        os << static_cast<int>(row[0]);
        for (std::size_t k = 1; k < row.size(); ++k)
            os << ',' << full(row[k]);
        os << '\n';
    }
    return os.str();
}

double observed_rate(double e_prev, double e, double h_prev, double h)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!(std::isfinite(e_prev) && std::isfinite(e)) || e_prev <= 1e-10 || e <= 1e-10)
        return nan;
    return std::log(e_prev / e) / std::log(h_prev / h);
}

std::vector<ConvergenceRow> run_convergence(const RunConfig& config, const std::vector<int>& ns,
                                            const std::vector<int>& ps, std::ostream* log)
{
    if (config.mesh.type != MeshSource::Type::Structured)
        throw ValidationError("convergence studies need a structured mesh");
    const auto probe = model::load_model(config.model_path);
    if (probe.exact_u.empty())
        throw ValidationError("the model has no [exact] solution");

    std::vector<ConvergenceRow> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int p : ps) {
        const std::size_t first = rows.size();
        for (int n : ns) {
            RunConfig c = config;
            c.p = p;
            std::fill(c.mesh.counts.begin(), c.mesh.counts.end(), n);
            c.out_dir.clear();
            ConvergenceRow row{p, n, nan, nan, nan, nan, "ok"};
            try {
                auto pr = make_problem(c);
                const auto res = simulate(*pr, c, nullptr);
                if (!res.ok)
                    throw Error(res.error);
                const auto err = compute_l2_error(*pr->disc, res.U, pr->model.exact_u, pr->model.exact_q, res.t);
                row.error_u = err.error_u;
                row.error_q = err.error_q;
            } catch (const std::exception& e) {
                row.status = e.what();
            }
            if (rows.size() > first) {
                const auto& prev = rows.back();
                row.rate_u = observed_rate(prev.error_u, row.error_u, 1.0 / prev.n, 1.0 / n);
                row.rate_q = observed_rate(prev.error_q, row.error_q, 1.0 / prev.n, 1.0 / n);
            }
            if (log)
                *log << "p=" << p << " n=" << n << " error_u=" << sci(row.error_u) << " error_q=" << sci(row.error_q)
                     << (row.status == "ok" ? "" : " (" + row.status + ")") << "\n";
            rows.push_back(row);
        }
    }
    return rows;
}

namespace {

std::string rate_text(double r)
{
    if (!std::isfinite(r))
        return "x";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r);
    return buf;
}

} // namespace

std::string convergence_csv(const std::vector<ConvergenceRow>& rows)
{
    std::ostringstream os;
    os << "# schema=convergence/1\n"
       << "p,n,error_u,rate_u,error_q,rate_q\n";
    for (const auto& r : rows)
        os << r.p << ',' << r.n << ',' << sci(r.error_u) << ',' << rate_text(r.rate_u) << ',' << sci(r.error_q) << ','
           << rate_text(r.rate_q) << '\n';
    return os.str();
}

std::string convergence_table(const std::vector<ConvergenceRow>& rows)
{
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%3s %5s %14s %8s %14s %8s\n", "p", "1/h", "E(u)", "rate", "E(q)", "rate");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%3d %5d %14s %8s %14s %8s", r.p, r.n, sci(r.error_u).c_str(),
                      rate_text(r.rate_u).c_str(), sci(r.error_q).c_str(), rate_text(r.rate_q).c_str());
        os << line;
        if (r.status != "ok")
            os << "  failed: " << r.status;
        os << '\n';
    }
    return os.str();
}

} // namespace ldg::app
