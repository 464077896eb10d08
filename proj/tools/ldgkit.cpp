#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ldg/app/config.hpp"
#include "ldg/app/driver.hpp"
#include "ldg/error.hpp"
#include "ldg/expr/parser.hpp"
#include "ldg/expr/plan.hpp"
#include "ldg/mesh/mesh.hpp"
#include "ldg/model/model.hpp"

namespace fs = std::filesystem;
using namespace ldg;

namespace {

struct Overrides
{
    std::optional<double> dt;
    std::optional<int> nt;
    std::optional<int> p;
    std::vector<std::string> mu;
    std::string precond;
    bool reproducible = false;
    std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--dt", o.dt, "time step");
    cmd->add_option("--nt", o.nt, "number of time steps");
    cmd->add_option("--p", o.p, "polynomial degree");
    cmd->add_option("--mu", o.mu, "parameter override k=v (k = 1, mu1, ...)");
    cmd->add_option("--precond", o.precond, "identity, block_jacobi, reduced_basis or composite");
    cmd->add_flag("--reproducible", o.reproducible, "fixed-order reductions");
    cmd->add_option("--out", o.out, "output directory");
}

void apply(const Overrides& o, app::RunConfig& c)
{
    if (o.dt) {
        c.dt = *o.dt;
        if (!o.nt)
            c.nt.reset();
    }
    if (o.nt) {
        c.nt = *o.nt;
        if (!o.dt)
            c.dt.reset();
    }
    if (o.dt && o.nt)
        c.tf.reset();
    if (o.p)
        c.p = *o.p;
    for (const auto& kv : o.mu) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ValidationError("--mu expects k=v, got '" + kv + "'");
        std::string k = kv.substr(0, eq);
        if (k.rfind("mu", 0) == 0)
            k = k.substr(2);
        c.mu[std::stoi(k)] = app::constant_value(kv.substr(eq + 1));
    }
    if (!o.precond.empty())
        c.precond.kind = solver::preconditioner_from_string(o.precond);
    if (o.reproducible)
        c.newton.gmres.reproducible = true;
    if (!o.out.empty())
        c.out_dir = o.out;
}

int cmd_run(const std::string& path, const Overrides& o)
{
    auto config = app::load_config(path);
    apply(o, config);
    const auto r = app::run_simulation(config, &std::cout);
    std::cout << r.summary();
    if (!r.ok) {
        std::cerr << "error: " << r.error << "\n";
        return 1;
    }
    return 0;
}

int cmd_convergence(const std::string& path, const std::string& ns, const std::string& ps, const Overrides& o)
{
    auto config = app::load_config(path);
    apply(o, config);
    const auto rows = app::run_convergence(config, app::parse_int_list(ns), app::parse_int_list(ps), &std::cerr);
    std::cout << app::convergence_table(rows);
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        std::ofstream(config.out_dir / "convergence.csv") << app::convergence_csv(rows);
    }
    for (const auto& r : rows)
        if (r.status != "ok")
            return 1;
    return 0;
}

void emit(const fs::path& dir, const std::string& name, const std::vector<std::string>& exprs,
          const expr::SymbolTable& table)
{
    if (exprs.empty())
        return;
    std::vector<expr::ExpressionGraph> graphs;
    for (const auto& e : exprs)
        graphs.push_back(expr::parse_expression(e, table));
    const auto plan = expr::compile_with_cse(graphs);
    std::ofstream out(dir / (name + ".kernel"));
    if (!out)
        throw Error("cannot write to '" + dir.string() + "'");
    out << "# inputs:";
    for (const auto& s : table.names())
        out << ' ' << s;
    out << "\n" << expr::emit_source(plan);
    std::cout << (dir / (name + ".kernel")).string() << ": " << plan.num_operations() << " operations\n";
}

int cmd_codegen(const std::string& path, const std::string& out)
{
    const auto m = model::load_model(path);
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    const auto vol = model::symbol_table(m, model::SymbolContext::Volume);
    const auto bnd = model::symbol_table(m, model::SymbolContext::Boundary);
    const auto face = model::symbol_table(m, model::SymbolContext::Face);
    emit(dir, "flux", m.flux, vol);
    emit(dir, "source", m.source, vol);
    emit(dir, "mass", m.mass, vol);
    emit(dir, "ode_source", m.ode.source, vol);
    emit(dir, "tau", m.numflux.tau, face);
    if (!m.numflux.wavespeed.empty())
        emit(dir, "wavespeed", {m.numflux.wavespeed}, face);
    emit(dir, "uhat", m.numflux.uhat, face);
    emit(dir, "fhat", m.numflux.fhat, face);
    for (const auto& [tag, bc] : m.bcs) {
        emit(dir, "bc" + std::to_string(tag) + "_data", bc.data, bnd);
        emit(dir, "bc" + std::to_string(tag) + "_trace", bc.trace, bnd);
    }
    return 0;
}

int cmd_mesh_info(const std::string& path)
{
    if (!fs::exists(path))
        throw MeshError("mesh file '" + path + "' does not exist");
    const auto m = mesh::import_msh(path);
    std::cout << mesh::describe(m);
    std::cout << "min jacobian: " << mesh::min_jacobians(m).minCoeff() << "\n"
              << "min edge length: " << mesh::min_edge_length(m) << "\n";
    const auto topo = mesh::build_face_topology(m);
    std::cout << "interior faces: " << topo.interior.size() << "\n"
              << "boundary faces: " << topo.boundary.size() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"High-order LDG solver for parametrized first-order PDE systems"};
    cli.require_subcommand(1);

    Overrides run_o, conv_o;
    std::string run_cfg, conv_cfg, conv_n = "2,4,8", conv_p = "1,2,3", model_path, codegen_out, msh_path;

    auto* run = cli.add_subcommand("run", "run a configuration");
    run->add_option("config", run_cfg, "run configuration file")->required();
    add_overrides(run, run_o);

    auto* conv = cli.add_subcommand("convergence", "mesh-refinement study against the exact solution");
    conv->add_option("config", conv_cfg, "run configuration file")->required();
    conv->add_option("--n", conv_n, "cells per direction, comma separated");
    add_overrides(conv, conv_o);
    conv->remove_option(conv->get_option("--p"));
    conv->add_option("--p", conv_p, "polynomial degrees, comma separated");

    auto* codegen = cli.add_subcommand("codegen", "emit compiled kernels of a model as source text");
    codegen->add_option("model", model_path, "model file")->required();
    codegen->add_option("--out", codegen_out, "output directory");

    auto* info = cli.add_subcommand("mesh-info", "summarize an MSH file");
    info->add_option("msh", msh_path, "MSH 2.2 file")->required();

    CLI11_PARSE(cli, argc, argv);

    try {
        if (*run)
            return cmd_run(run_cfg, run_o);
        if (*conv)
            return cmd_convergence(conv_cfg, conv_n, conv_p, conv_o);
        if (*codegen)
            return cmd_codegen(model_path, codegen_out);
        if (*info)
            return cmd_mesh_info(msh_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
