#include <cmath>
#include <random>

#include <doctest.h>

#include "ldg/disc/discretization.hpp"
#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"
#include "ldg/model/model.hpp"

using namespace ldg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

mesh::Box box2(double lo, double hi)
{
    mesh::Box b;
    b.lo = {lo, lo, 0};
    b.hi = {hi, hi, 1};
    return b;
}

mesh::Box box3(double lo, double hi)
{
    mesh::Box b;
    b.lo = {lo, lo, lo};
    b.hi = {hi, hi, hi};
    return b;
}

model::PdeModel with_bc(model::PdeModel m, model::BcType type, const std::vector<std::string>& data, int ntags)
{
    for (int tag = 1; tag <= ntags; ++tag)
        m.bcs[tag] = model::BoundaryCondition{type, data, {}};
    return m;
}

model::PdeModel builtin(const std::string& name, int nd)
{
    model::BuiltinOptions o;
    o.nd = nd;
    return model::builtin_model(name, o);
}

VectorXd random_state(Eigen::Index n, unsigned seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    VectorXd v(n);
    for (auto& x : v)
        x = dist(rng);
    return v;
}

/// Sum of residual entries per u component.
VectorXd component_sums(const disc::Discretization& d, const VectorXd& R)
{
    const auto& L = d.layout();
    VectorXd s = VectorXd::Zero(L.ncu);
    for (int e = 0; e < L.ne; ++e)
        for (int c = 0; c < L.ncu; ++c)
            for (int i = 0; i < L.nn; ++i)
                s(c) += R(L.u(e, c, i));
    return s;
}

/// L2 norm of the u components of X.
double l2_u(const disc::Discretization& d, const VectorXd& X)
{
    const MatrixXd vals = d.values_at_quadrature(X);
    return std::sqrt((vals.array().square().colwise() * d.quadrature_weights().array()).sum());
}

double rel_diff(const VectorXd& a, const VectorXd& b)
{
    return (a - b).norm() / std::max(1e-300, b.norm());
}

} // namespace

TEST_SUITE("disc")
{
    TEST_CASE("master element sizes and quadrature weights")
    {
        CHECK(disc::build_master(ElementKind::Tet, 3).n_nodes() == 20);
        const auto quad = disc::build_master(ElementKind::Quad, 4);
        CHECK(quad.n_nodes() == 25);
        CHECK(quad.volume.weights.sum() == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(disc::build_master(ElementKind::Hex, 2).n_nodes() == 27);
        CHECK(disc::build_master(ElementKind::Tri, 5).n_nodes() == 21);
        CHECK_THROWS_AS(disc::build_master(ElementKind::Quad, 0), Error);
        CHECK_THROWS_AS(disc::build_master(ElementKind::Quad, 9), Error);
    }

    TEST_CASE("master element partition of unity and face traces")
    {
        for (auto kind : {ElementKind::Line, ElementKind::Tri, ElementKind::Quad, ElementKind::Tet, ElementKind::Hex})
            for (int p : {1, 3}) {
                const auto m = disc::build_master(kind, p);
                CHECK((m.phi.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
                for (const auto& g : m.dphi)
                    CHECK(g.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
                for (const auto& f : m.faces)
                    CHECK((f.phi.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
                CHECK(m.volume.weights.sum() == doctest::Approx(reference_measure(kind)).epsilon(1e-13));
            }
    }

    TEST_CASE("master triangle integrates xi^2 exactly")
    {
        const auto m = disc::build_master(ElementKind::Tri, 2);
        const double integral = (m.volume.points.row(0).array().square().matrix() * m.volume.weights)(0);
        // int over {xi,eta >= -1, xi+eta <= 0} of xi^2 = 2/3
        CHECK(integral == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }

    TEST_CASE("interpolate initial conditions at nodes")
    {
        mesh::Box b;
        b.lo = {0, 0, 0};
        b.hi = {1, 1, 1};
        auto m = builtin("burgers", 1);
        m.init_u = {"sin(pi*x1)"};
        m = with_bc(m, model::BcType::Dirichlet, {"0"}, 2);
        const disc::Discretization d(m, mesh::generate_structured(b, {5}, ElementKind::Line), {3});
        const VectorXd U = d.interpolate_initial();
        const MatrixXd& x = d.node_coordinates();
        double worst = 0;
        for (Eigen::Index k = 0; k < x.cols(); ++k)
            worst = std::max(worst, std::abs(U(k) - std::sin(M_PI * x(0, k))));
        CHECK(worst == 0.0);

        m.init_u = {"2.5"};
        const disc::Discretization c(m, mesh::generate_structured(b, {3}, ElementKind::Line), {2});
        CHECK((c.interpolate_initial().array() == 2.5).all());
    }

    TEST_CASE("bickley initial condition matches direct evaluation")
    {
        auto m = model::load_model(LDG_FIXTURE_DIR "/bickley.model");
        mesh::Box b;
        b.lo = {-2 * M_PI, -2 * M_PI, 0};
        b.hi = {2 * M_PI, 2 * M_PI, 1};
        const disc::Discretization d(m, mesh::generate_structured(b, {8, 8}, ElementKind::Quad), {3, -1,
                                     mesh::box_periodicity(b, 2, {0, 1})});
        const VectorXd U = d.interpolate_initial();
        CHECK(U.allFinite());
        const auto& L = d.layout();
        const MatrixXd& x = d.node_coordinates();
        double max_disc = 0, max_direct = 0;
        for (int e = 0; e < L.ne; ++e)
            for (int i = 0; i < L.nn; ++i) {
                const double h = U(L.u(e, 0, i));
                max_disc = std::max(max_disc, std::hypot(U(L.u(e, 1, i)) / h, U(L.u(e, 2, i)) / h));
                const double X = x(0, e * L.nn + i), Y = x(1, e * L.nn + i);
                const double env = std::exp(-(Y + 0.05) * (Y + 0.05) / 0.5);
                const double sech = 1.0 / std::cosh(Y);
                const double u = sech * sech +
                                 0.1 * env * std::cos(0.5 * X) * ((Y + 0.05) / 0.25 * std::cos(0.5 * Y) + 0.5 * std::sin(0.5 * Y));
                const double v = -0.05 * env * std::sin(0.5 * X) * std::cos(0.5 * Y);
                max_direct = std::max(max_direct, std::hypot(u, v));
            }
        CHECK(std::abs(max_disc - max_direct) <= 1e-12);
    }

    TEST_CASE("mixed reconstruction of a linear field on one element")
    {
        auto m = with_bc(builtin("poisson", 3), model::BcType::Dirichlet, {"x1"}, 6);
        const disc::Discretization d(m, mesh::generate_structured(box3(0, 1), {1, 1, 1}, ElementKind::Hex), {2});
        const VectorXd U = d.interpolate({"x1"}, {}, {}, 0);
        const VectorXd Q = d.compute_mixed(U, 0);
        const int nn = d.layout().nn;
        CHECK((Q.segment(0, nn).array() + 1.0).abs().maxCoeff() <= 1e-12);
        CHECK(Q.segment(nn, 2 * nn).cwiseAbs().maxCoeff() <= 1e-12);

        auto mc = with_bc(builtin("poisson", 3), model::BcType::Dirichlet, {"0.7"}, 6);
        const disc::Discretization dc(mc, mesh::generate_structured(box3(0, 1), {1, 1, 1}, ElementKind::Hex), {2});
        CHECK(dc.compute_mixed(dc.interpolate({"0.7"}, {}, {}, 0), 0).cwiseAbs().maxCoeff() <= 1e-13);
    }

    TEST_CASE("mixed reconstruction is linear under homogeneous data")
    {
        auto m = with_bc(builtin("poisson", 3), model::BcType::Dirichlet, {"0"}, 6);
        const disc::Discretization d(m, mesh::generate_structured(box3(0, 1), {2, 2, 2}, ElementKind::Tet), {2});
        const VectorXd u1 = random_state(d.size(), 1), u2 = random_state(d.size(), 2);
        const double a = 0.7, b = -1.9;
        const VectorXd lhs = d.compute_mixed(a * u1 + b * u2, 0);
        const VectorXd rhs = a * d.compute_mixed(u1, 0) + b * d.compute_mixed(u2, 0);
        CHECK(rel_diff(lhs, rhs) <= 1e-12);
    }

    TEST_CASE("free-stream preservation on periodic meshes")
    {
        const auto b = box2(0, 1);
        const auto periodic = mesh::box_periodicity(b, 2, {0, 1});
        for (auto kind : {ElementKind::Tri, ElementKind::Quad}) {
            const auto sw = builtin("shallow_water", 2);
            const disc::Discretization d(sw, mesh::generate_structured(b, {3, 4}, kind), {3, -1, periodic});
            const VectorXd U = d.interpolate({"1.3", "0.4", "-0.2"}, {}, {}, 0);
            CHECK(d.residual(U, 0).cwiseAbs().maxCoeff() <= 1e-12);

            const auto pois = builtin("poisson", 2);
            const disc::Discretization dp(pois, mesh::generate_structured(b, {3, 4}, kind), {2, -1, periodic});
            CHECK(dp.residual(dp.interpolate({"2.5"}, {}, {}, 0), 0).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    TEST_CASE("free-stream preservation on the curved cylinder mesh")
    {
        auto msh = mesh::import_msh(LDG_FIXTURE_DIR "/cylinder.msh");
        mesh::set_straight_geometry(msh, 3);
        const auto curved = mesh::curve_boundary(msh, 1, mesh::circle_projection({0, 0}, 1.0));
        auto m = builtin("shallow_water", 2);
        m.bcs[1] = {model::BcType::Dirichlet, {"1.1", "0.3", "0.2"}, {}};
        m.bcs[2] = {model::BcType::Dirichlet, {"1.1", "0.3", "0.2"}, {}};
        const disc::Discretization d(m, curved, {3});
        const VectorXd R = d.residual(d.interpolate({"1.1", "0.3", "0.2"}, {}, {}, 0), 0);
        CHECK(R.cwiseAbs().maxCoeff() <= 1e-10);
    }

    TEST_CASE("discrete conservation with periodic topology")
    {
        const auto b = box2(0, 1);
        const auto periodic = mesh::box_periodicity(b, 2, {0, 1});
        const auto tri = mesh::generate_structured(b, {3, 3}, ElementKind::Tri);
        {
            const disc::Discretization d(builtin("burgers", 2), tri, {3, -1, periodic});
            const VectorXd R = d.residual(random_state(d.size(), 3), 0);
            CHECK(component_sums(d, R).cwiseAbs().maxCoeff() <= 1e-11);
        }
        {
            const disc::Discretization d(builtin("shallow_water", 2), tri, {2, -1, periodic});
            VectorXd U = random_state(d.size(), 4, -0.2, 0.2);
            const auto& L = d.layout();
            for (int e = 0; e < L.ne; ++e)
                for (int i = 0; i < L.nn; ++i)
                    U(L.u(e, 0, i)) += 1.5;
            CHECK(component_sums(d, d.residual(U, 0)).cwiseAbs().maxCoeff() <= 1e-11);
        }
        {
            const disc::Discretization d(builtin("poisson", 2), tri, {2, -1, periodic});
            CHECK(component_sums(d, d.residual(random_state(d.size(), 5), 0)).cwiseAbs().maxCoeff() <= 1e-11);
        }
        {
            const disc::Discretization d(builtin("wave", 2), tri, {2, -1, periodic});
            CHECK(component_sums(d, d.residual(random_state(d.size(), 6), 0)).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }

    TEST_CASE("flux consistency for continuous states")
    {
        // Continuous linear u: both traces agree, so the residual is the
        // exact weak divergence of u^2/2 (1,1), i.e. M * I(u (u_x + u_y)).
        auto m = with_bc(builtin("burgers", 2), model::BcType::Dirichlet, {"0.5 + x1 - 2*x2"}, 4);
        const disc::Discretization d(m, mesh::generate_structured(box2(0, 1), {3, 2}, ElementKind::Tri), {2});
        const VectorXd U = d.interpolate({"0.5 + x1 - 2*x2"}, {}, {}, 0);
        const VectorXd divf = d.interpolate({"-(0.5 + x1 - 2*x2)"}, {}, {}, 0);
        CHECK(rel_diff(d.residual(U, 0), d.apply_mass(U, divf, 0)) <= 1e-12);

        // Linear u for the diffusion operator: q exact, jumps vanish, R = 0.
        auto p = with_bc(builtin("poisson", 2), model::BcType::Dirichlet, {"1 + 2*x1 - 3*x2"}, 4);
        const disc::Discretization dp(p, mesh::generate_structured(box2(0, 1), {3, 3}, ElementKind::Quad), {3});
        const VectorXd Up = dp.interpolate({"1 + 2*x1 - 3*x2"}, {}, {}, 0);
        CHECK(dp.residual(Up, 0).cwiseAbs().maxCoeff() <= 1e-12);
        const VectorXd Q = dp.compute_mixed(Up, 0);
        const int nn = dp.layout().nn;
        for (int e = 0; e < dp.layout().ne; ++e) {
            CHECK((Q.segment(e * 2 * nn, nn).array() + 2.0).abs().maxCoeff() <= 2e-12);
            CHECK((Q.segment(e * 2 * nn + nn, nn).array() - 3.0).abs().maxCoeff() <= 3e-12);
        }
    }

    TEST_CASE("linear advection of polynomial data is exact")
    {
        auto m = builtin("linear_convection", 2);
        m.mu = {1.0, 0.5};
        const std::string u = "x1^2 + x1*x2 - x2 + 0.3";
        m.source = {"(2*x1 + x2) + 0.5*(x1 - 1)"};
        m = with_bc(m, model::BcType::Dirichlet, {u}, 4);
        for (auto kind : {ElementKind::Tri, ElementKind::Quad}) {
            const disc::Discretization d(m, mesh::generate_structured(box2(0, 1), {3, 3}, kind), {2});
            CHECK(d.residual(d.interpolate({u}, {}, {}, 0), 0).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }

    TEST_CASE("manufactured Poisson residual decays under refinement")
    {
        auto m = with_bc(builtin("poisson", 2), model::BcType::Dirichlet, {"sin(pi*x1)*sin(pi*x2)"}, 4);
        m.source = {"2*pi^2*sin(pi*x1)*sin(pi*x2)"};
        const int p = 2;
        std::vector<double> norms;
        for (int n : {4, 8, 16}) {
            const disc::Discretization d(m, mesh::generate_structured(box2(0, 1), {n, n}, ElementKind::Tri), {p});
            norms.push_back(d.residual(d.interpolate({"sin(pi*x1)*sin(pi*x2)"}, {}, {}, 0), 0).cwiseAbs().maxCoeff());
        }
        const double rate = std::log2(norms[1] / norms[2]);
        MESSAGE("residual rate " << rate);
        CHECK(rate >= p);
    }

    TEST_CASE("wave gradient equation")
    {
        auto m = with_bc(builtin("wave", 2), model::BcType::Dirichlet, {"1.5"}, 4);
        const auto mesh2 = mesh::generate_structured(box2(0, 1), {3, 3}, ElementKind::Quad);
        const disc::Discretization d(m, mesh2, {3});
        const auto& L = d.layout();
        // constant u with matching data: every rate of change vanishes except w_t = u
        VectorXd U = d.interpolate({"1.5"}, {"0", "0"}, {"0"}, 0);
        const VectorXd R = d.residual(U, 0);
        double worst = 0;
        for (int e = 0; e < L.ne; ++e)
            for (int i = 0; i < L.nn; ++i) {
                for (int c = 0; c < 2; ++c)
                    worst = std::max(worst, std::abs(R(L.q(e, 0, c, i))));
                worst = std::max(worst, std::abs(R(L.u(e, 0, i))));
                CHECK(R(L.w(e, 0, i)) == doctest::Approx(-1.5));
            }
        CHECK(worst <= 1e-12);

        auto z = with_bc(builtin("wave", 2), model::BcType::Dirichlet, {"0"}, 4);
        const disc::Discretization dz(z, mesh2, {3});
        CHECK(dz.residual(VectorXd::Zero(dz.size()), 0).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("wave semi-discrete rate of change converges at the truncation order")
    {
        auto rate_of = [](const model::PdeModel& m, const std::vector<mesh::Mesh>& meshes, int p,
                          const std::string& u, const std::vector<std::string>& q, const std::string& ut) {
            const double t = 0.3;
            std::vector<double> err;
            for (const auto& msh : meshes) {
                const disc::Discretization d(m, msh, {p});
                const VectorXd U = d.interpolate({u}, q, {"0"}, t);
                const VectorXd rate = -d.apply_inverse_unit_mass(d.residual(U, t));
                err.push_back(l2_u(d, rate - d.interpolate({ut}, {}, {}, t)));
            }
            return std::log2(err[err.size() - 2] / err.back());
        };
        {
            const std::string u = "cos(pi*t)*sin(pi*x1)";
            const auto m = with_bc(builtin("wave", 1), model::BcType::Dirichlet, {u}, 2);
            mesh::Box b;
            std::vector<mesh::Mesh> meshes;
            for (int n : {8, 16, 32})
                meshes.push_back(mesh::generate_structured(b, {n}, ElementKind::Line));
            for (int p : {1, 2, 3}) {
                const double r = rate_of(m, meshes, p, u, {"-sin(pi*t)*cos(pi*x1)"}, "-pi*sin(pi*t)*sin(pi*x1)");
                MESSAGE("1D p=" << p << " rate " << r);
                CHECK(r >= p - 0.3);
            }
        }
        {
            const std::string u = "cos(sqrt(2)*pi*t)*sin(pi*x1)*sin(pi*x2)";
            const auto m = with_bc(builtin("wave", 2), model::BcType::Dirichlet, {u}, 4);
            std::vector<mesh::Mesh> meshes;
            for (int n : {4, 8, 16})
                meshes.push_back(mesh::generate_structured(box2(0, 1), {n, n}, ElementKind::Quad));
            for (int p : {2, 3}) {
                const double r = rate_of(m, meshes, p, u,
                                         {"-sin(sqrt(2)*pi*t)/sqrt(2)*cos(pi*x1)*sin(pi*x2)",
                                          "-sin(sqrt(2)*pi*t)/sqrt(2)*sin(pi*x1)*cos(pi*x2)"},
                                         "-sqrt(2)*pi*sin(sqrt(2)*pi*t)*sin(pi*x1)*sin(pi*x2)");
                MESSAGE("2D p=" << p << " rate " << r);
                CHECK(r >= p - 0.3);
            }
        }
    }

    TEST_CASE("sum factorization matches the naive residual")
    {
        auto m = with_bc(builtin("burgers", 3), model::BcType::Dirichlet, {"0.5"}, 6);
        const disc::Discretization d(m, mesh::generate_structured(box3(0, 1), {2, 2, 2}, ElementKind::Hex), {4});
        const VectorXd U = random_state(d.size(), 11);
        d.reset_operation_count();
        const VectorXd naive = d.residual(U, 0);
        const long long naive_ops = d.volume_operations();
        d.reset_operation_count();
        const VectorXd fast = d.residual_sumfac(U, 0);
        const long long fast_ops = d.volume_operations();
        CHECK(rel_diff(fast, naive) <= 1e-12);
        CHECK(fast_ops < naive_ops);

        auto p = with_bc(builtin("poisson", 3), model::BcType::Dirichlet, {"x1*x2"}, 6);
        const disc::Discretization dp(p, mesh::generate_structured(box3(0, 1), {2, 1, 1}, ElementKind::Hex), {3});
        const VectorXd Up = random_state(dp.size(), 12);
        CHECK(rel_diff(dp.residual_sumfac(Up, 0), dp.residual(Up, 0)) <= 1e-12);

        auto q = with_bc(builtin("burgers", 2), model::BcType::Dirichlet, {"1"}, 4);
        const disc::Discretization dq(q, mesh::generate_structured(box2(0, 1), {1, 1}, ElementKind::Quad), {1});
        const VectorXd Uq = random_state(dq.size(), 13);
        CHECK(rel_diff(dq.residual_sumfac(Uq, 0), dq.residual(Uq, 0)) <= 1e-13);
    }

    TEST_CASE("sum factorization operation count is lower from p = 3")
    {
        auto m = with_bc(builtin("burgers", 3), model::BcType::Dirichlet, {"0"}, 6);
        for (int p = 1; p <= 5; ++p) {
            const disc::Discretization d(m, mesh::generate_structured(box3(0, 1), {1, 1, 1}, ElementKind::Hex), {p});
            const VectorXd U = random_state(d.size(), 20);
            d.reset_operation_count();
            d.residual(U, 0);
            const long long naive = d.volume_operations();
            d.reset_operation_count();
            d.residual_sumfac(U, 0);
            const long long fast = d.volume_operations();
            if (p >= 3)
                CHECK(fast < naive);
        }
    }

    TEST_CASE("tangent residual agrees with finite differences")
    {
        const auto b = box2(0, 1);
        std::vector<disc::Discretization> cases;
        cases.emplace_back(with_bc(builtin("burgers", 2), model::BcType::Dirichlet, {"x1"}, 4),
                           mesh::generate_structured(b, {2, 2}, ElementKind::Tri), disc::DiscOptions{2});
        cases.emplace_back(with_bc(builtin("poisson", 2), model::BcType::Dirichlet, {"x2"}, 4),
                           mesh::generate_structured(b, {2, 2}, ElementKind::Quad), disc::DiscOptions{2});
        cases.emplace_back(with_bc(builtin("wave", 2), model::BcType::Dirichlet, {"0"}, 4),
                           mesh::generate_structured(b, {2, 2}, ElementKind::Tri), disc::DiscOptions{2});
        auto sw = builtin("shallow_water", 2);
        sw.bcs[1] = {model::BcType::Dirichlet, {"1", "0.1", "0"}, {}};
        sw.bcs[2] = {model::BcType::Dirichlet, {"1", "0.1", "0"}, {}};
        sw.bcs[3] = {model::BcType::Neumann, {"0", "0", "0.5*u1^2"}, {}};
        sw.bcs[4] = {model::BcType::Neumann, {"0", "0", "0.5*u1^2"}, {}};
        cases.emplace_back(sw, mesh::generate_structured(b, {2, 2}, ElementKind::Quad), disc::DiscOptions{2});
        unsigned seed = 30;
        for (const auto& d : cases) {
            VectorXd U = random_state(d.size(), seed++, 0.5, 1.5);
            const VectorXd V = random_state(d.size(), seed++);
            const double h = 1e-6;
            const VectorXd fd = (d.residual(U + h * V, 0.1) - d.residual(U - h * V, 0.1)) / (2 * h);
            VectorXd R;
            const VectorXd jv = d.residual_tangent(U, V, 0.1, &R);
            CHECK(rel_diff(jv, fd) <= 1e-7);
            CHECK(rel_diff(R, d.residual(U, 0.1)) <= 1e-15);
            const VectorXd V2 = random_state(d.size(), seed++);
            const VectorXd lin = d.residual_tangent(U, 2.0 * V - 3.0 * V2, 0.1);
            CHECK(rel_diff(lin, 2.0 * jv - 3.0 * d.residual_tangent(U, V2, 0.1)) <= 1e-12);
        }
    }

    TEST_CASE("mass operator and its tangent")
    {
        auto m = with_bc(builtin("burgers", 2), model::BcType::Dirichlet, {"1"}, 4);
        m.mass = {"1 + u1^2"};
        const disc::Discretization d(m, mesh::generate_structured(box2(0, 1), {2, 2}, ElementKind::Tri), {2});
        const VectorXd U = random_state(d.size(), 40), V = random_state(d.size(), 41), X = random_state(d.size(), 42);
        const double h = 1e-6;
        const VectorXd fd = (d.apply_mass(U + h * V, X, 0) - d.apply_mass(U - h * V, X, 0)) / (2 * h);
        CHECK(rel_diff(d.apply_mass_tangent(U, V, X, 0), fd) <= 1e-7);
        CHECK(d.has_mass());
        const disc::Discretization s(with_bc(builtin("poisson", 2), model::BcType::Dirichlet, {"0"}, 4),
                                     mesh::generate_structured(box2(0, 1), {2, 2}, ElementKind::Tri), {1});
        CHECK_FALSE(s.has_mass());
    }

    TEST_CASE("non-finite values report the element")
    {
        auto m = with_bc(builtin("burgers", 2), model::BcType::Dirichlet, {"1"}, 4);
        const disc::Discretization d(m, mesh::generate_structured(box2(0, 1), {2, 2}, ElementKind::Tri), {1});
        VectorXd U = VectorXd::Ones(d.size());
        U(d.layout().u(5, 0, 1)) = std::nan("");
        try {
            d.residual(U, 0);
            FAIL("expected NonFiniteError");
        } catch (const NonFiniteError& e) {
            CHECK(std::string(e.what()).find("element 5") != std::string::npos);
        }
        auto lg = m;
        lg.source = {"log(u1)"};
        const disc::Discretization dl(lg, mesh::generate_structured(box2(0, 1), {2, 2}, ElementKind::Tri), {1});
        VectorXd W = VectorXd::Ones(dl.size());
        for (int i = 0; i < dl.layout().nn; ++i)
            W(dl.layout().u(3, 0, i)) = -1.0;
        try {
            dl.residual(W, 0);
            FAIL("expected NonFiniteError");
        } catch (const NonFiniteError& e) {
            CHECK(std::string(e.what()).find("element 3") != std::string::npos);
        }
    }

    TEST_CASE("missing boundary conditions are rejected")
    {
        auto m = builtin("poisson", 2);
        m.bcs[1] = {model::BcType::Dirichlet, {"0"}, {}};
        CHECK_THROWS_AS(disc::Discretization(m, mesh::generate_structured(box2(0, 1), {2, 2}, ElementKind::Tri), {1}),
                        ValidationError);
    }

    TEST_CASE("distance-2 coloring separates same-colored elements")
    {
        const disc::Discretization d(with_bc(builtin("poisson", 3), model::BcType::Dirichlet, {"0"}, 6),
                                     mesh::generate_structured(box3(0, 1), {3, 3, 3}, ElementKind::Tet), {1});
        CHECK(d.coupling_distance() == 2);
        const auto color = d.color_elements(2);
        const auto& nb = d.element_neighbors();
        for (std::size_t e = 0; e < nb.size(); ++e)
            for (int a : nb[e]) {
                CHECK(color[static_cast<std::size_t>(a)] != color[e]);
                for (int b : nb[static_cast<std::size_t>(a)])
                    if (static_cast<std::size_t>(b) != e)
                        CHECK(color[static_cast<std::size_t>(b)] != color[e]);
            }
    }
}
