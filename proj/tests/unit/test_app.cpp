#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "ldg/app/config.hpp"
#include "ldg/app/driver.hpp"
#include "ldg/app/postprocess.hpp"
#include "ldg/app/vtu.hpp"
#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"
#include "ldg/model/model.hpp"
#include "../support/golden.hpp"

using namespace ldg;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = LDG_FIXTURE_DIR;

model::PdeModel poisson2d(const std::string& g)
{
    model::BuiltinOptions o;
    o.nd = 2;
    auto m = model::builtin_model("poisson", o);
    for (int tag = 1; tag <= 4; ++tag)
        m.bcs[tag] = model::BoundaryCondition{model::BcType::Dirichlet, {g}, {}};
    return m;
}

disc::Discretization unit_square(const model::PdeModel& m, int n, int p, ElementKind kind = ElementKind::Quad)
{
    return disc::Discretization(m, mesh::generate_structured(mesh::Box{}, {n, n}, kind), {p});
}

app::RunConfig parse(const std::string& text)
{
    return app::config_from_text(model::parse_sectioned_text(text), kFixtures);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("ldgkit_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_SUITE("app")
{
    TEST_CASE("config sections and defaults")
    {
        const auto c = parse("[run] model=decay.model p=3 scheme=3,4 dt=0.1 nt=5\n"
                             "[mesh] type=structured element=quad n=8,4 lo=-2*pi hi=2*pi periodic=x\n"
                             "[solver] jv=fd precond=block_jacobi rb_rank=4 refresh=2 forcing=tight reproducible=true\n"
                             "[output] dir=out every=2 vtu=true names=h,hu\n"
                             "[mu] mu1=1e4\n"
                             "[diagnostics] mass=u1\n");
        CHECK(c.model_path == fs::path(kFixtures) / "decay.model");
        CHECK(c.p == 3);
        CHECK(c.stages == 3);
        CHECK(c.order == 4);
        CHECK(*c.dt == 0.1);
        CHECK(*c.nt == 5);
        CHECK(!c.tf);
        CHECK(c.mesh.counts == std::vector<int>{8, 4});
        CHECK(c.mesh.box.lo[0] == doctest::Approx(-2 * M_PI));
        CHECK(c.mesh.box.hi[1] == doctest::Approx(2 * M_PI));
        CHECK(c.mesh.periodic_axes == std::vector<int>{0});
        CHECK(c.newton.mode == solver::JvMode::FiniteDifference);
        CHECK(c.newton.forcing == solver::Forcing::Tight);
        CHECK(c.newton.gmres.reproducible);
        CHECK(c.precond.kind == solver::PreconditionerKind::BlockJacobi);
        CHECK(c.precond.rb_rank == 4);
        CHECK(c.precond.refresh == 2);
        CHECK(c.output_every == 2);
        CHECK(c.vtu);
        CHECK(c.field_names == std::vector<std::string>{"h", "hu"});
        CHECK(c.mu.at(1) == 1e4);
        REQUIRE(c.diagnostics.size() == 1);
        CHECK(c.diagnostics[0].second == "u1");

        const auto d = parse("[run] model=m.model\n[mesh] element=hex n=2\n");
        CHECK(d.p == 1);
        CHECK(d.mesh.counts == std::vector<int>{2, 2, 2});
        CHECK(d.precond.kind == solver::PreconditionerKind::Composite);
        CHECK(d.precond.rb_rank == 10);
        CHECK(!d.steady);
    }

    TEST_CASE("config errors")
    {
        CHECK_THROWS_AS(parse("[mesh] n=2\n"), ParseError);
        CHECK_THROWS_AS(parse("[run] p=2\n[mesh] n=2\n"), ParseError);
        CHECK_THROWS_AS(parse("[run] model=m p=2 typo=1\n[mesh] n=2\n"), ParseError);
        CHECK_THROWS_AS(parse("[run] model=m p=0\n[mesh] n=2\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m p=two\n[mesh] n=2\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m scheme=3\n[mesh] n=2\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] n=2,2,2 element=quad\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] type=msh\n"), ParseError);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] type=blob\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] periodic=w\n"), ValidationError);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] n=2\n[solver] precond=ilu\n"), Error);
        CHECK_THROWS_AS(parse("[run] model=m\n[mesh] n=2\n[mu] g=1\n"), ParseError);
        CHECK_THROWS_AS(parse("[run] model=m dt=1/0\n[mesh] n=2\n"), ValidationError);
    }

    TEST_CASE("time resolution")
    {
        app::RunConfig c;
        c.dt = 0.1;
        c.nt = 10;
        app::resolve_time(c, 0);
        CHECK(*c.tf == doctest::Approx(1.0));

        app::RunConfig m;
        m.dt = 0.25;
        app::resolve_time(m, 2.0);
        CHECK(*m.nt == 8);

        app::RunConfig n;
        n.nt = 4;
        n.tf = 2.0;
        app::resolve_time(n, 0);
        CHECK(*n.dt == 0.5);

        app::RunConfig bad;
        bad.dt = 0.1;
        bad.nt = 10;
        bad.tf = 2.0;
        CHECK_THROWS_AS(app::resolve_time(bad, 0), ValidationError);
        app::RunConfig frac;
        frac.dt = 0.3;
        frac.tf = 1.0;
        CHECK_THROWS_AS(app::resolve_time(frac, 0), ValidationError);
        app::RunConfig none;
        CHECK_THROWS_AS(app::resolve_time(none, 0), ValidationError);
        app::RunConfig neg;
        neg.dt = -1;
        neg.nt = 2;
        CHECK_THROWS_AS(app::resolve_time(neg, 0), ValidationError);
    }

    TEST_CASE("L2 error of an interpolated polynomial vanishes")
    {
        const std::string u = "x1*x1 - 2*x1*x2 + 0.5*x2";
        const auto d = unit_square(poisson2d(u), 3, 2);
        const VectorXd U = d.interpolate({u}, {}, {}, 0);
        const auto e = app::compute_l2_error(d, U, {u}, {"-(2*x1 - 2*x2)", "-(-2*x1 + 0.5)"}, 0);
        CHECK(e.error_u <= 1e-12);
        CHECK(e.error_q <= 1e-12);
        CHECK(!e.u_zero_norm);
    }

    TEST_CASE("L2 error of zero against one is one")
    {
        const auto d = unit_square(poisson2d("1"), 2, 1, ElementKind::Tri);
        const auto e = app::compute_l2_error(d, VectorXd::Zero(d.size()), {"1"}, {}, 0);
        CHECK(e.error_u == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(e.norm_u == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::isnan(e.error_q));

        const auto z = app::compute_l2_error(d, VectorXd::Constant(d.size(), 2.0), {"0"}, {}, 0);
        CHECK(z.u_zero_norm);
        CHECK(z.error_u == doctest::Approx(2.0).epsilon(1e-14));
    }

    TEST_CASE("L2 error of a state against itself is zero")
    {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> coef(-2.0, 2.0);
        for (int p = 1; p <= 4; ++p) {
            const auto d = unit_square(poisson2d("0"), 2, p, p % 2 ? ElementKind::Tri : ElementKind::Quad);
            // a random polynomial of degree p is its own interpolant
            std::ostringstream u;
            u.precision(17);
            u << "0";
            for (int i = 0; i <= p; ++i)
                for (int j = 0; i + j <= p; ++j)
                    u << " + " << coef(rng) << "*x1^" << i << "*x2^" << j;
            const VectorXd U = d.interpolate({u.str()}, {}, {}, 0);
            CHECK(app::compute_l2_error(d, U, {u.str()}, {}, 0).error_u <= 1e-13);
        }
    }

    TEST_CASE("functionals")
    {
        const auto d = unit_square(poisson2d("0"), 3, 2, ElementKind::Tri);
        const VectorXd U = d.interpolate({"x1 + x2"}, {}, {}, 0);
        const auto v = app::compute_functional(d, U, {"1", "x1", "u1", "u1*u1"}, 0);
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(v[2] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v[3] == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
        CHECK_THROWS_AS(app::compute_functional(d, U, {"log(x1 - 2)"}, 0), NonFiniteError);
    }

    TEST_CASE("VTU lattice subdivision")
    {
        auto m = poisson2d("0");
        const disc::Discretization d(m, mesh::generate_structured(mesh::Box{}, {1, 1}, ElementKind::Quad), {2});
        const VectorXd U = d.interpolate({"x1"}, {}, {}, 0);
        const auto text = app::vtu_string(d, U, {});
        CHECK(text.find("NumberOfPoints=\"9\" NumberOfCells=\"4\"") != std::string::npos);
        const auto at = text.find("Name=\"u1\"");
        REQUIRE(at != std::string::npos);
        std::istringstream body(text.substr(text.find('\n', at) + 1));
        int count = 0;
        std::string tok;
        while (body >> tok && tok.rfind("</DataArray>", 0) != 0)
            ++count;
        CHECK(count == 9);

        CHECK(app::lattice_cells(ElementKind::Tri, 3).size() == 9);
        CHECK(app::lattice_cells(ElementKind::Hex, 2).size() == 8);
        for (int p = 1; p <= 4; ++p)
            CHECK(app::lattice_cells(ElementKind::Tet, p).size() == std::size_t(p * p * p));
    }

    TEST_CASE("VTU sub-cells of a tetrahedron tile its volume")
    {
        for (int p = 1; p <= 4; ++p) {
            const auto idx = lattice_indices(ElementKind::Tet, p);
            double vol = 0;
            for (const auto& c : app::lattice_cells(ElementKind::Tet, p)) {
                Eigen::Matrix3d J;
                for (int k = 0; k < 3; ++k)
                    for (int r = 0; r < 3; ++r)
                        J(r, k) = idx[std::size_t(c[std::size_t(k + 1)])][std::size_t(r)] -
                                  idx[std::size_t(c[0])][std::size_t(r)];
                CHECK(std::abs(J.determinant()) > 0);
                vol += std::abs(J.determinant()) / 6;
            }
            CHECK(vol == doctest::Approx(p * p * p / 6.0).epsilon(1e-14));
        }
    }

    TEST_CASE("VTU golden file on two triangles")
    {
        auto m = poisson2d("0");
        for (int tag = 1; tag <= 3; ++tag)
            m.bcs[tag] = model::BoundaryCondition{model::BcType::Dirichlet, {"0"}, {}};
        m.bcs.erase(4);
        const disc::Discretization d(m, mesh::import_msh(kFixtures + "/two_triangles.msh"), {2});
        const VectorXd U = d.interpolate({"x1 + 2*x2*x2"}, {}, {}, 0);
        const auto text = app::vtu_string(d, U, {"phi"});
        CHECK(golden::matches("two_triangles.vtu", text));

        const auto dir = scratch("vtu");
        fs::create_directories(dir);
        app::export_vtu(d, U, {"phi"}, dir / "a.vtu");
        CHECK(slurp(dir / "a.vtu") == text);
        CHECK_THROWS_AS(app::export_vtu(d, U, {}, dir / "missing" / "a.vtu"), Error);
    }

    TEST_CASE("observed rates")
    {
        for (double r : {1.0, 2.5, 4.0}) {
            const double C = 3.7;
            const double h1 = 0.25, h2 = 0.125;
            CHECK(std::abs(app::observed_rate(C * std::pow(h1, r), C * std::pow(h2, r), h1, h2) - r) <= 1e-10);
        }
        CHECK(std::isnan(app::observed_rate(1e-12, 1e-13, 0.5, 0.25)));
        CHECK(std::isnan(app::observed_rate(NAN, 1e-3, 0.5, 0.25)));
    }

    TEST_CASE("convergence table marks undefined rates")
    {
        app::RunConfig c;
        c.model_path = kFixtures + "/poisson2d.model";
        c.mesh.element = ElementKind::Quad;
        c.mesh.counts = {2, 2};
        c.precond.kind = solver::PreconditionerKind::Identity;
        c.newton.forcing = solver::Forcing::Tight;
        c.newton.abs_tol = 1e-13;
        c.newton.rel_tol = 1e-12;
        const auto rows = app::run_convergence(c, {2, 4}, {1}, nullptr);
        REQUIRE(rows.size() == 2);
        CHECK(std::isnan(rows[0].rate_u));
        CHECK(rows[1].rate_u > 1.5);
        const auto csv = app::convergence_csv(rows);
        CHECK(csv.rfind("# schema=convergence/1\np,n,error_u,rate_u,error_q,rate_q\n1,2,", 0) == 0);
        CHECK(std::regex_search(csv, std::regex("\n1,2,[0-9.e+-]+,x,[0-9.e+-]+,x\n")));
        CHECK(app::convergence_table(rows).find("E(u)") != std::string::npos);

        // exact solution in the approximation space: errors at roundoff, rates marked
        const auto dir = scratch("exact");
        fs::create_directories(dir);
        std::ofstream(dir / "lin.model") << "[model] name=lin kind=D ncu=1 nd=2 nw=0 nparam=0 tf=0\n"
                                            "[mass] m1=0\n[flux] f1_1=q1_1 f1_2=q1_2\n[source] s1=0\n"
                                            "[bc tag=1 type=dirichlet] g1=x1 + x2\n"
                                            "[bc tag=2 type=dirichlet] g1=x1 + x2\n"
                                            "[bc tag=3 type=dirichlet] g1=x1 + x2\n"
                                            "[bc tag=4 type=dirichlet] g1=x1 + x2\n"
                                            "[init] u1=0\n[exact] u1=x1 + x2 q1_1=-1 q1_2=-1\n";
        c.model_path = dir / "lin.model";
        const auto exact = app::run_convergence(c, {2, 4}, {1, 2}, nullptr);
        for (const auto& r : exact) {
            CHECK(r.status == "ok");
            CHECK(r.error_u <= 1e-10);
            CHECK(r.error_q <= 1e-10);
            CHECK(std::isnan(r.rate_u));
            CHECK(std::isnan(r.rate_q));
        }
        CHECK(app::convergence_csv(exact).find(",x,") != std::string::npos);

        app::RunConfig msh = c;
        msh.mesh.type = app::MeshSource::Type::Msh;
        CHECK_THROWS_AS(app::run_convergence(msh, {2}, {1}), ValidationError);
    }

    TEST_CASE("per-row failures are recorded and the harness continues")
    {
        app::RunConfig c;
        c.model_path = kFixtures + "/poisson2d.model";
        c.mesh.element = ElementKind::Quad;
        c.mesh.counts = {2, 2};
        c.precond.kind = solver::PreconditionerKind::Identity;
        c.newton.max_iter = 0;
        const auto rows = app::run_convergence(c, {2, 4}, {1}, nullptr);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].status != "ok");
        CHECK(rows[1].status != "ok");
        CHECK(app::convergence_table(rows).find("failed") != std::string::npos);
    }

    TEST_CASE("scalar decay run matches the closed form at the scheme order")
    {
        auto c = app::load_config(kFixtures + "/decay.cfg");
        std::vector<double> err;
        for (int nt : {10, 20}) {
            c.nt = nt;
            const auto r = app::run_simulation(c);
            REQUIRE(r.ok);
            CHECK(r.t == 1.0);
            CHECK(r.steps.size() == std::size_t(nt));
            auto pr = app::make_problem(c);
            const VectorXd exact = pr->disc->interpolate({"(1 + x1)*exp(-1)"}, {}, {}, 0);
            err.push_back((r.U - exact).cwiseAbs().maxCoeff());
        }
        CHECK(err[0] <= 1e-4);
        CHECK(std::log2(err[0] / err[1]) == doctest::Approx(3.0).epsilon(0.1));
    }

    TEST_CASE("run outputs, CSV schemas and determinism")
    {
        const auto dir = scratch("run");
        auto c = app::load_config(kFixtures + "/decay.cfg");
        c.nt = 4;
        c.out_dir = dir;
        c.vtu = true;
        c.output_every = 2;
        c.diagnostics = {{"mass", "u1"}, {"one", "1"}};
        const auto a = app::run_simulation(c);
        REQUIRE(a.ok);
        for (const char* f : {"stats.csv", "diagnostics.csv", "summary.txt", "solution_00000.vtu",
                              "solution_00002.vtu", "solution_00004.vtu"})
            CHECK(fs::exists(dir / f));
        CHECK(!fs::exists(dir / "solution_00001.vtu"));

        const auto stats = slurp(dir / "stats.csv");
        CHECK(std::regex_match(stats, std::regex("# schema=stats/1\nstep,newton_iters,gmres_iters,residual\n"
                                                 "(\\d+,\\d+,\\d+,[0-9.e+-]+\n){4}")));
        const auto diag = slurp(dir / "diagnostics.csv");
        CHECK(diag.rfind("# schema=diagnostics/1\nstep,t,mass,one\n0,0,", 0) == 0);
        REQUIRE(a.diagnostics.size() == 5);
        CHECK(a.diagnostics[0][2] == doctest::Approx(1.5).epsilon(1e-14));
        CHECK(a.diagnostics[4][2] == doctest::Approx(1.5 * std::exp(-1.0)).epsilon(1e-3));
        CHECK(a.diagnostics[4][3] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(slurp(dir / "summary.txt") == a.summary());
        CHECK(a.summary().find("status: ok") != std::string::npos);
        CHECK(a.summary().find("newton_iterations: ") != std::string::npos);

        const auto b = app::run_simulation(c);
        REQUIRE(b.ok);
        CHECK(slurp(dir / "diagnostics.csv") == diag);
        CHECK(slurp(dir / "stats.csv") == stats);
        CHECK(a.U == b.U);
        fs::remove_all(dir);
    }

    TEST_CASE("missing mesh file gives a clean error")
    {
        auto c = parse("[run] model=decay.model nt=2 dt=0.5\n[mesh] type=msh path=does_not_exist.msh\n");
        const auto r = app::run_simulation(c);
        CHECK(!r.ok);
        CHECK(r.error.find("does_not_exist.msh") != std::string::npos);
        CHECK(r.summary().find("status: failed") != std::string::npos);

        auto m = parse("[run] model=nothing.model nt=2 dt=0.5\n[mesh] n=2\n");
        CHECK(!app::run_simulation(m).ok);
    }

    TEST_CASE("steady runs and parameter overrides")
    {
        auto c = app::load_config(kFixtures + "/poisson2d.cfg");
        c.p = 1;
        c.mesh.counts = {2, 2};
        const auto r = app::run_simulation(c);
        REQUIRE(r.ok);
        CHECK(r.steps.size() == 1);
        CHECK(r.steps[0].step == 0);

        auto b = app::load_config(kFixtures + "/bickley.cfg");
        b.mu[1] = 9.81;
        b.mesh.counts = {2, 2};
        b.p = 1;
        auto pr = app::make_problem(b);
        CHECK(pr->model.mu[0] == 9.81);
        CHECK(!pr->steady);
    }

    TEST_CASE("mesh sources")
    {
        app::MeshSource s;
        s.type = app::MeshSource::Type::Msh;
        s.path = kFixtures + "/cylinder.msh";
        s.order = 3;
        s.curve = app::CurveSpec{1, Eigen::Vector2d::Zero(), 1.0};
        const auto m = app::build_mesh(s);
        CHECK(m.order == 3);
        CHECK(mesh::min_jacobians(m).minCoeff() > 0);
        auto straight = s;
        straight.curve.reset();
        CHECK((app::build_mesh(straight).nodes - m.nodes).cwiseAbs().maxCoeff() > 1e-3);

        s.path = kFixtures + "/absent.msh";
        CHECK_THROWS_AS(app::build_mesh(s), MeshError);

        app::MeshSource b;
        b.element = ElementKind::Quad;
        b.counts = {3, 3};
        b.periodic_axes = {0, 1};
        CHECK(app::periodic_pairs(b).size() == 2);
    }
}
