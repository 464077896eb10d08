#include <cmath>
#include <random>

#include <doctest.h>

#include "ldg/disc/discretization.hpp"
#include "ldg/error.hpp"
#include "ldg/mesh/mesh.hpp"
#include "ldg/model/model.hpp"
#include "ldg/solver/solver.hpp"
#include "ldg/timeint/dirk.hpp"

using namespace ldg;
using namespace ldg::solver;
using Eigen::MatrixXd;

namespace {

LinearOperator matrix_operator(const MatrixXd& A)
{
    return {A.rows(), [A](const Vec& v) { return Vec(A * v); }};
}

MatrixXd random_matrix(int n, std::mt19937& rng)
{
    std::normal_distribution<double> g;
    MatrixXd A(n, n);
    for (auto& x : A.reshaped())
        x = g(rng);
    return A;
}

Vec random_vector(int n, std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Vec v(n);
    for (auto& x : v)
        x = g(rng);
    return v;
}

/// Diagonally dominant: |a_ii| > sum_j |a_ij|.
MatrixXd dominant_matrix(int n, std::mt19937& rng)
{
    MatrixXd A = random_matrix(n, rng);
    for (int i = 0; i < n; ++i)
        A(i, i) = A.row(i).cwiseAbs().sum() + 1.0;
    return A;
}

/// 2D Poisson on quads with homogeneous Dirichlet data and a smooth source.
disc::Discretization poisson2d(int n, int p)
{
    model::BuiltinOptions o;
    o.nd = 2;
    auto m = model::builtin_model("poisson", o);
    for (int tag = 1; tag <= 4; ++tag)
        m.bcs[tag] = model::BoundaryCondition{model::BcType::Dirichlet, {"0"}, {}};
    m.source = {"2*pi^2*sin(pi*x1)*sin(pi*x2)"};
    mesh::Box b;
    b.lo = {0, 0, 0};
    b.hi = {1, 1, 1};
    return disc::Discretization(m, mesh::generate_structured(b, {n, n}, ElementKind::Quad), {p});
}

/// Newton system for R(U) = 0 of a discretization at t = 0.
NonlinearSystem steady_system(const disc::Discretization& d)
{
    return {d.size(), [&d](const Vec& U) { return d.residual(U, 0.0); },
            [&d](const Vec& U, const Vec& V) { return d.residual_tangent(U, V, 0.0); }};
}

} // namespace

TEST_SUITE("solver")
{
    TEST_CASE("gmres on identity and diagonal operators")
    {
        const Vec b = Vec::LinSpaced(6, 1.0, 6.0);
        const auto r = gmres({6, [](const Vec& v) { return v; }}, b, {}, {});
        CHECK(r.converged);
        CHECK(r.iterations == 1);
        CHECK((r.x - b).norm() <= 1e-14);

        const MatrixXd D = Vec(Eigen::Vector4d(1, 2, 3, 4)).asDiagonal();
        GmresOptions o;
        o.rel_tol = 1e-12;
        const auto s = gmres(matrix_operator(D), Vec::Ones(4), {}, o);
        CHECK(s.converged);
        CHECK((s.x - Vec(Eigen::Vector4d(1, 0.5, 1.0 / 3, 0.25))).cwiseAbs().maxCoeff() <= 1e-10);
    }

    TEST_CASE("gmres agrees with a direct solve on dominant systems")
    {
        std::mt19937 rng(7);
        GmresOptions o;
        o.rel_tol = 1e-11;
        double worst = 0;
        for (int trial = 0; trial < 50; ++trial) {
            const MatrixXd A = dominant_matrix(50, rng);
            const Vec b = random_vector(50, rng);
            const Vec direct = A.fullPivLu().solve(b);
            const auto r = gmres(matrix_operator(A), b, {}, o);
            CHECK(r.converged);
            worst = std::max(worst, (r.x - direct).norm() / direct.norm());
        }
        CHECK(worst <= 1e-8);
    }

    TEST_CASE("unrestarted gmres terminates within n iterations")
    {
        std::mt19937 rng(11);
        for (int n : {3, 10, 20, 30}) {
            const MatrixXd A = random_matrix(n, rng) + 2.0 * std::sqrt(n) * MatrixXd::Identity(n, n);
            const Vec b = random_vector(n, rng);
            GmresOptions o;
            o.rel_tol = 1e-15;
            o.restart = n;
            o.max_iter = n;
            const auto r = gmres(matrix_operator(A), b, {}, o);
            CHECK(r.iterations <= n);
            CHECK((A * r.x - b).norm() <= 1e-8 * b.norm());
        }
    }

    TEST_CASE("gmres residual history is non-increasing, also across restarts")
    {
        std::mt19937 rng(3);
        const MatrixXd A = random_matrix(40, rng) + 5.0 * MatrixXd::Identity(40, 40);
        GmresOptions o;
        o.restart = 5;
        o.rel_tol = 1e-10;
        const auto r = gmres(matrix_operator(A), random_vector(40, rng), {}, o);
        REQUIRE(r.history.size() > 5);
        for (std::size_t i = 1; i < r.history.size(); ++i)
            CHECK(r.history[i] <= r.history[i - 1] * (1 + 1e-12));
    }

    TEST_CASE("gmres reports breakdown and non-finite operators")
    {
        MatrixXd N = MatrixXd::Zero(2, 2);
        N(0, 1) = 1.0;
        const auto r = gmres(matrix_operator(N), Vec::Unit(2, 0), {}, {});
        CHECK_FALSE(r.converged);
        CHECK(r.breakdown);

        LinearOperator bad{3, [](const Vec& v) { return Vec(v * NAN); }};
        CHECK_THROWS_AS(gmres(bad, Vec::Ones(3), {}, {}), NonFiniteError);
        CHECK_THROWS_AS(gmres({2, [](const Vec& v) { return v; }}, Vec::Ones(2), {}, GmresOptions{1.5}),
                        SolverError);
    }

    TEST_CASE("reproducible dot products give identical iterates")
    {
        std::mt19937 rng(5);
        const MatrixXd A = dominant_matrix(30, rng);
        const Vec b = random_vector(30, rng);
        GmresOptions o;
        o.reproducible = true;
        const auto r1 = gmres(matrix_operator(A), b, {}, o);
        const auto r2 = gmres(matrix_operator(A), b, {}, o);
        CHECK(r1.x == r2.x);
        CHECK(dot(b, b, true) == doctest::Approx(b.squaredNorm()).epsilon(1e-14));
    }

    TEST_CASE("jacobian-vector products")
    {
        const ResidualFn lin = [](const Vec& u) { return Vec(3.0 * u); };
        const TangentFn lin_t = [](const Vec&, const Vec& v) { return Vec(3.0 * v); };
        const Vec u = Vec::LinSpaced(5, -1, 2), v = Vec::LinSpaced(5, 0.5, 3);
        CHECK((jacobian_vector(lin, u, v, JvMode::Tangent, lin_t) - 3.0 * v).norm() == 0.0);
        CHECK((jacobian_vector(lin, u, v, JvMode::FiniteDifference) - 3.0 * v).norm() <= 1e-6 * (3.0 * v).norm());

        const ResidualFn sq = [](const Vec& x) { return Vec(x.array().square()); };
        const TangentFn sq_t = [](const Vec& x, const Vec& d) { return Vec(2.0 * x.array() * d.array()); };
        const Vec two = Vec::Constant(3, 2.0);
        CHECK(jacobian_vector(sq, two, Vec::Unit(3, 0), JvMode::Tangent, sq_t) == 4.0 * Vec::Unit(3, 0));
        CHECK_THROWS_AS(jacobian_vector(sq, two, two, JvMode::Tangent), SolverError);
    }

    TEST_CASE("burgers jacobian-vector product: tangent and finite differences agree")
    {
        model::BuiltinOptions o;
        o.nd = 1;
        auto m = model::builtin_model("burgers", o);
        m.bcs[1] = m.bcs[2] = model::BoundaryCondition{model::BcType::Dirichlet, {"0.3"}, {}};
        mesh::Box b;
        b.hi = {1, 1, 1};
        const disc::Discretization d(m, mesh::generate_structured(b, {8}, ElementKind::Line), {3});
        std::mt19937 rng(2);
        const Vec U = random_vector(static_cast<int>(d.size()), rng), V = random_vector(static_cast<int>(d.size()), rng);
        const auto sys = steady_system(d);
        const Vec jt = jacobian_vector(sys.residual, U, V, JvMode::Tangent, sys.tangent);
        const Vec jf = jacobian_vector(sys.residual, U, V, JvMode::FiniteDifference);
        CHECK((jt - jf).norm() <= 1e-5 * jt.norm());

        // linearity in v
        const Vec W = random_vector(static_cast<int>(d.size()), rng);
        const Vec lhs = jacobian_vector(sys.residual, U, 2.0 * V - 0.5 * W, JvMode::Tangent, sys.tangent);
        const Vec rhs = 2.0 * jt - 0.5 * jacobian_vector(sys.residual, U, W, JvMode::Tangent, sys.tangent);
        CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    TEST_CASE("newton converges quadratically on u^2 - 4")
    {
        NonlinearSystem s{1, [](const Vec& u) { return Vec(u.array().square() - 4.0); },
                          [](const Vec& u, const Vec& v) { return Vec(2.0 * u.array() * v.array()); }};
        NewtonOptions o;
        o.abs_tol = 1e-14;
        o.rel_tol = 1e-300;
        const auto r = newton_solve(s, Vec::Constant(1, 3.0), o);
        CHECK(r.stats.converged);
        CHECK(r.u[0] == doctest::Approx(2.0).epsilon(1e-14));
        const auto& h = r.stats.residual_norms;
        for (std::size_t k = 0; k + 1 < h.size(); ++k)
            if (h[k + 1] > 1e-13)
                CHECK(h[k + 1] / (h[k] * h[k]) <= 1.0);
        CHECK(r.stats.final_residual <= o.abs_tol);
    }

    TEST_CASE("newton reports failure on u^2 + 1 without throwing")
    {
        NonlinearSystem s{1, [](const Vec& u) { return Vec(u.array().square() + 1.0); },
                          [](const Vec& u, const Vec& v) { return Vec(2.0 * u.array() * v.array()); }};
        NewtonResult r;
        CHECK_NOTHROW(r = newton_solve(s, Vec::Constant(1, 1.0), {}));
        CHECK_FALSE(r.stats.converged);
        CHECK_FALSE(r.stats.message.empty());

        NewtonOptions nols;
        nols.line_search = false;
        nols.max_iter = 5;
        CHECK_NOTHROW(r = newton_solve(s, Vec::Constant(1, 1.0), nols));
        CHECK_FALSE(r.stats.converged);
    }

    TEST_CASE("a linear system takes one newton iteration")
    {
        std::mt19937 rng(9);
        const MatrixXd A = dominant_matrix(25, rng);
        const Vec f = random_vector(25, rng);
        NonlinearSystem s{25, [&](const Vec& u) { return Vec(A * u - f); },
                          [&](const Vec&, const Vec& v) { return Vec(A * v); }};
        NewtonOptions o;
        o.forcing = Forcing::Tight;
        const auto r = newton_solve(s, Vec::Zero(25), o);
        CHECK(r.stats.converged);
        CHECK(r.stats.newton_iters == 1);
        CHECK(r.stats.residual_norms.size() == 2);
        CHECK(r.stats.gmres_iters.size() == 1);
    }

    TEST_CASE("block jacobi on diagonal, identity and singular operators")
    {
        const Vec diag = Vec::LinSpaced(12, 1, 40);
        const LinearOperator D{12, [diag](const Vec& v) { return Vec(diag.cwiseProduct(v)); }};
        std::vector<int> colors(12, 0);
        const auto P = BlockJacobi::build(D, 1, colors);
        CHECK(P.probes() == 1);
        const auto r = gmres(D, Vec::Ones(12), [&](const Vec& v) { return P.apply(v); }, {});
        CHECK(r.iterations == 1);
        CHECK((r.x - diag.cwiseInverse()).norm() <= 1e-12);

        std::vector<int> distinct(4);
        for (int i = 0; i < 4; ++i)
            distinct[i] = i;
        const auto I = BlockJacobi::build({12, [](const Vec& v) { return v; }}, 3, distinct);
        const Vec x = Vec::LinSpaced(12, -2, 5);
        CHECK((I.apply(x) - x).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(I.regularized_blocks() == 0);

        const auto Z = BlockJacobi::build({12, [](const Vec& v) { return Vec(0.0 * v); }}, 3, distinct);
        CHECK(Z.regularized_blocks() == 4);
        CHECK(Z.apply(x).allFinite());
        CHECK_THROWS_AS(BlockJacobi::build(D, 5, colors), SolverError);
    }

    TEST_CASE("block jacobi probing with coloring recovers the element blocks")
    {
        const auto d = poisson2d(4, 2);
        const auto sys = steady_system(d);
        const Vec U0 = Vec::Zero(d.size());
        const Vec R0 = sys.residual(U0);
        const LinearOperator J{d.size(), [&](const Vec& v) { return sys.tangent(U0, v); }};
        const int B = d.layout().block();
        const auto colored = BlockJacobi::build(J, B, d.color_elements(d.coupling_distance()));
        std::vector<int> own(static_cast<std::size_t>(d.layout().ne));
        for (std::size_t e = 0; e < own.size(); ++e)
            own[e] = static_cast<int>(e);
        const auto exact = BlockJacobi::build(J, B, own);
        CHECK(colored.probes() < exact.probes());
        std::mt19937 rng(4);
        const Vec r = random_vector(static_cast<int>(d.size()), rng);
        CHECK((colored.apply(r) - exact.apply(r)).norm() <= 1e-10 * exact.apply(r).norm());
    }

    TEST_CASE("block jacobi reduces gmres iterations on the Poisson p = 2 solve")
    {
        const auto d = poisson2d(6, 2);
        const auto sys = steady_system(d);
        NewtonOptions o;
        o.forcing = Forcing::Tight;
        o.rel_tol = 1e-10;
        o.gmres.max_iter = 2000;
        o.gmres.restart = 60;
        const auto plain = newton_solve(sys, Vec::Zero(d.size()), o);
        const auto bj = newton_solve(
            sys, Vec::Zero(d.size()), o,
            make_preconditioner_factory({PreconditionerKind::BlockJacobi, 10, 1}, d.layout().block(),
                                        d.color_elements(d.coupling_distance()), nullptr));
        REQUIRE(plain.stats.converged);
        REQUIRE(bj.stats.converged);
        MESSAGE("gmres iterations: identity " << plain.stats.total_gmres() << ", block-Jacobi "
                                              << bj.stats.total_gmres());
        CHECK(bj.stats.total_gmres() < plain.stats.total_gmres());
        // both meet the same residual tolerance; the solutions differ by at most cond(J) times it
        CHECK((bj.u - plain.u).norm() <= 1e-6 * plain.u.norm());
    }

    TEST_CASE("preconditioning does not change the converged solution")
    {
        std::mt19937 rng(17);
        const int n = 40;
        const MatrixXd A = dominant_matrix(n, rng);
        const Vec b = random_vector(n, rng);
        GmresOptions o;
        o.rel_tol = 1e-10;
        const auto plain = gmres(matrix_operator(A), b, {}, o);
        std::vector<int> colors(8);
        for (int i = 0; i < 8; ++i)
            colors[i] = i;
        const auto bj = BlockJacobi::build(matrix_operator(A), 5, colors);
        std::vector<Vec> snaps{random_vector(n, rng), random_vector(n, rng), random_vector(n, rng)};
        const auto rb = ReducedBasis::build(snaps, matrix_operator(A), 3);
        for (const Preconditioner& P : {Preconditioner([&](const Vec& r) { return bj.apply(r); }),
                                        Preconditioner([&](const Vec& r) { return rb.apply(r); })}) {
            const auto r = gmres(matrix_operator(A), b, P, o);
            REQUIRE(r.converged);
            CHECK((r.x - plain.x).norm() <= 10 * o.rel_tol * plain.x.norm());
        }
    }

    TEST_CASE("reduced basis orthonormalization and deflation")
    {
        std::mt19937 rng(21);
        const int n = 20;
        const MatrixXd A = dominant_matrix(n, rng);
        std::vector<Vec> snaps;
        for (int i = 0; i < 6; ++i)
            snaps.push_back(random_vector(n, rng));
        const auto P = ReducedBasis::build(snaps, matrix_operator(A), 6);
        const MatrixXd& W = P.basis();
        CHECK(P.rank() == 6);
        CHECK((W.transpose() * W - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);

        Vec z = random_vector(n, rng);
        z -= W * (W.transpose() * z);
        CHECK((P.apply(z) - z).cwiseAbs().maxCoeff() <= 1e-12);

        // dependent snapshots are dropped
        std::vector<Vec> dep{snaps[0], 2.0 * snaps[0], snaps[1], snaps[0] - snaps[1]};
        CHECK(ReducedBasis::build(dep, matrix_operator(A), 4).rank() == 2);
        CHECK_THROWS_AS(ReducedBasis::build({}, matrix_operator(A), 2), SolverError);
        CHECK_THROWS_AS(ReducedBasis::build(snaps, matrix_operator(A), 0), SolverError);
    }

    TEST_CASE("full-rank reduced basis makes gmres converge in one iteration")
    {
        std::mt19937 rng(8);
        const int n = 15;
        const MatrixXd A = random_matrix(n, rng) + 4.0 * MatrixXd::Identity(n, n);
        std::vector<Vec> snaps;
        for (int i = 0; i < n; ++i)
            snaps.push_back(random_vector(n, rng));
        const auto P = ReducedBasis::build(snaps, matrix_operator(A), n);
        REQUIRE(P.rank() == n);
        const Vec b = random_vector(n, rng);
        const auto r = gmres(matrix_operator(A), b, [&](const Vec& v) { return P.apply(v); }, GmresOptions{1e-10});
        CHECK(r.iterations == 1);
        CHECK((A * r.x - b).norm() <= 1e-10 * b.norm());
    }

    TEST_CASE("reduced basis on dominant eigenvectors reduces iterations")
    {
        std::mt19937 rng(13);
        const int n = 60;
        // SPD with three large outlying eigenvalues
        const MatrixXd Q = random_matrix(n, rng).householderQr().householderQ();
        Vec lambda = Vec::LinSpaced(n, 1.0, 2.0);
        lambda.head(3) << 1e3, 5e2, 2e2;
        const MatrixXd A = Q * lambda.asDiagonal() * Q.transpose();
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A);
        std::vector<Vec> snaps;
        for (int i = 0; i < 3; ++i)
            snaps.push_back(eig.eigenvectors().col(n - 1 - i));
        const auto P = ReducedBasis::build(snaps, matrix_operator(A), 3);
        const Vec b = random_vector(n, rng);
        GmresOptions o;
        o.rel_tol = 1e-10;
        const auto plain = gmres(matrix_operator(A), b, {}, o);
        const auto defl = gmres(matrix_operator(A), b, [&](const Vec& v) { return P.apply(v); }, o);
        MESSAGE("iterations " << plain.iterations << " -> " << defl.iterations);
        CHECK(defl.iterations < plain.iterations);
        CHECK((defl.x - plain.x).norm() <= 10 * o.rel_tol * plain.x.norm());
    }

    TEST_CASE("composite factory uses snapshots from previous solves")
    {
        const auto d = poisson2d(4, 2);
        const auto sys = steady_system(d);
        auto history = std::make_shared<SnapshotHistory>(4);
        NewtonOptions o;
        o.forcing = Forcing::Tight;
        o.snapshots = history;
        auto factory = make_preconditioner_factory({PreconditionerKind::Composite, 4, 1}, d.layout().block(),
                                                   d.color_elements(d.coupling_distance()), history);
        const auto first = newton_solve(sys, Vec::Zero(d.size()), o, factory);
        REQUIRE(first.stats.converged);
        CHECK(history->size() == 1);
        const auto second = newton_solve(sys, Vec::Zero(d.size()), o, factory);
        REQUIRE(second.stats.converged);
        CHECK(history->size() == 2);
        CHECK((second.u - first.u).norm() <= 1e-5 * first.u.norm());
    }

    TEST_CASE("preconditioner names")
    {
        for (auto k : {PreconditionerKind::Identity, PreconditionerKind::BlockJacobi, PreconditionerKind::ReducedBasis,
                       PreconditionerKind::Composite})
            CHECK(preconditioner_from_string(to_string(k)) == k);
        CHECK_THROWS_AS(preconditioner_from_string("ilu"), ValidationError);
        CHECK_FALSE(make_preconditioner_factory({}, 1, {0}, nullptr));
    }
}
