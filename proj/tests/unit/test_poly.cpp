#include <doctest.h>

#include <cmath>

#include "ldg/poly/basis.hpp"
#include "ldg/poly/jacobi.hpp"

using namespace ldg;
using namespace ldg::poly;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of prod_r ((1+xi_r)/2)^e_r over the reference element.
double monomial_integral(ElementKind kind, std::array<int, 3> e)
{
    switch (kind) {
    case ElementKind::Line: return 2.0 / (e[0] + 1);
    case ElementKind::Quad: return 4.0 / ((e[0] + 1) * (e[1] + 1));
    case ElementKind::Hex: return 8.0 / ((e[0] + 1) * (e[1] + 1) * (e[2] + 1));
    case ElementKind::Tri: return 4.0 * factorial(e[0]) * factorial(e[1]) / factorial(e[0] + e[1] + 2);
    case ElementKind::Tet:
        return 8.0 * factorial(e[0]) * factorial(e[1]) * factorial(e[2]) / factorial(e[0] + e[1] + e[2] + 3);
    default: return 1.0;
    }
}

const ElementKind kKinds[] = {ElementKind::Line, ElementKind::Tri, ElementKind::Quad, ElementKind::Tet,
                              ElementKind::Hex};

} // namespace

TEST_SUITE("poly")
{
    TEST_CASE("gauss-jacobi rules integrate weighted monomials")
    {
        for (int n = 1; n <= 8; ++n) {
            const auto rule = gauss_legendre<double>(n);
            for (int k = 0; k <= 2 * n - 1; ++k) {
                const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
                CHECK((rule.weights * rule.points.pow(k)).sum() == doctest::Approx(exact).epsilon(1e-13));
            }
        }
        // int_{-1}^{1} (1-x) dx = 2, int (1-x) x dx = -2/3
        const auto r = gauss_jacobi<double>(3, 1.0, 0.0);
        CHECK(r.weights.sum() == doctest::Approx(2.0));
        CHECK((r.weights * r.points).sum() == doctest::Approx(-2.0 / 3.0));
    }

    TEST_CASE("lobatto points include endpoints and are symmetric")
    {
        const auto x = gauss_lobatto<double>(4);
        CHECK(x(0) == -1.0);
        CHECK(x(4) == 1.0);
        CHECK(x(2) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(x(1) == doctest::Approx(-std::sqrt(3.0 / 7.0)));
    }

    TEST_CASE("quadrature is exact up to its degree on every element")
    {
        for (ElementKind kind : kKinds) {
            const int d = dimension(kind);
            for (int deg = 0; deg <= 7; ++deg) {
                const Quadrature q = quadrature(kind, deg);
                CHECK(q.weights.sum() == doctest::Approx(reference_measure(kind)));
                for (const auto& e : lattice_indices(kind, deg)) {
                    if (is_tensor(kind) && e[0] + e[1] + e[2] > deg)
                        continue;
                    Eigen::ArrayXd f = Eigen::ArrayXd::Ones(q.weights.size());
                    for (int r = 0; r < d; ++r)
                        f *= ((1.0 + q.points.row(r).transpose().array()) / 2).pow(e[static_cast<std::size_t>(r)]);
                    CHECK((q.weights.array() * f).sum() ==
                          doctest::Approx(monomial_integral(kind, e)).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("integral of xi squared over the reference triangle")
    {
        const Quadrature q = quadrature(ElementKind::Tri, 2);
        CHECK((q.weights.array() * q.points.row(0).transpose().array().square()).sum() ==
              doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }

    TEST_CASE("orthonormal bases are orthonormal")
    {
        for (ElementKind kind : kKinds)
            for (int p = 0; p <= 4; ++p) {
                const Quadrature q = quadrature(kind, 2 * p);
                const auto tab = orthonormal_basis(kind, p, q.points);
                REQUIRE(tab.values.cols() == num_basis(kind, p));
                const Eigen::MatrixXd M = tab.values.transpose() * q.weights.asDiagonal() * tab.values;
                CHECK((M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() < 1e-12);
            }
    }

    TEST_CASE("basis gradients match central differences")
    {
        for (ElementKind kind : kKinds) {
            const int d = dimension(kind);
            const Quadrature q = quadrature(kind, 3);
            const auto tab = orthonormal_basis(kind, 4, q.points);
            const double h = 1e-6;
            for (int r = 0; r < d; ++r) {
                Eigen::MatrixXd xp = q.points, xm = q.points;
                xp.row(r).array() += h;
                xm.row(r).array() -= h;
                const Eigen::MatrixXd fd =
                    (orthonormal_basis(kind, 4, xp).values - orthonormal_basis(kind, 4, xm).values) / (2 * h);
                CHECK((fd - tab.gradients[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff() < 1e-6);
            }
        }
    }

    TEST_CASE("nodal basis is cardinal at its nodes and reproduces polynomials")
    {
        for (ElementKind kind : kKinds)
            for (int p = 1; p <= 5; ++p) {
                const NodalBasis nb(kind, p, solution_nodes(kind, p));
                const auto tab = nb.tabulate(nb.nodes());
                CHECK((tab.values - Eigen::MatrixXd::Identity(nb.size(), nb.size())).cwiseAbs().maxCoeff() < 1e-10);
                CHECK(nb.condition_number() < 1e4);
                // interpolate x^p and compare at quadrature points
                const Quadrature q = quadrature(kind, p);
                const Eigen::VectorXd f = nb.nodes().row(0).transpose().array().pow(p);
                const Eigen::VectorXd at = nb.tabulate(q.points).values * f;
                const Eigen::VectorXd exact = q.points.row(0).transpose().array().pow(p);
                CHECK((at - exact).cwiseAbs().maxCoeff() < 1e-10);
                const Eigen::VectorXd dfx = nb.tabulate(q.points).gradients[0] * f;
                const Eigen::VectorXd dexact = p * q.points.row(0).transpose().array().pow(p - 1);
                CHECK((dfx - dexact).cwiseAbs().maxCoeff() < 1e-9);
            }
    }

    TEST_CASE("simplex nodes lie in the element and on edges coincide with Lobatto points")
    {
        for (int p = 1; p <= 6; ++p) {
            const auto gl = gauss_lobatto<double>(p);
            const Eigen::MatrixXd x = solution_nodes(ElementKind::Tri, p);
            for (int i = 0; i <= p; ++i) {
                CHECK(x(0, i) == doctest::Approx(gl(i)).epsilon(1e-12));
                CHECK(x(1, i) == doctest::Approx(-1.0));
            }
            const Eigen::MatrixXd y = solution_nodes(ElementKind::Tet, p);
            CHECK(y.minCoeff() > -1 - 1e-12);
            for (Eigen::Index m = 0; m < y.cols(); ++m)
                CHECK(y.col(m).sum() < -1 + 1e-12);
            for (int i = 0; i <= p; ++i) {
                CHECK(y(0, i) == doctest::Approx(gl(i)).epsilon(1e-12));
                CHECK(y(1, i) == doctest::Approx(-1.0));
                CHECK(y(2, i) == doctest::Approx(-1.0));
            }
        }
    }

    TEST_CASE("reference normals are unit, outward and orthogonal to faces")
    {
        for (ElementKind kind : kKinds) {
            const auto& rv = reference_vertices(kind);
            const Eigen::VectorXd c = rv.rowwise().mean();
            for (int f = 0; f < num_faces(kind); ++f) {
                const auto n = reference_normal(kind, f);
                CHECK(n.norm() == doctest::Approx(1.0));
                const auto& fv = face_vertices(kind)[static_cast<std::size_t>(f)];
                CHECK(n.dot(rv.col(fv[0]) - c) > 0);
                for (std::size_t k = 1; k < fv.size(); ++k)
                    CHECK(std::abs(n.dot(rv.col(fv[k]) - rv.col(fv[0]))) < 1e-14);
            }
        }
    }

    TEST_CASE("face measures add up to the boundary measure")
    {
        // perimeter of the reference triangle: 2 + 2 + 2*sqrt(2)
        double per = 0;
        for (int f = 0; f < 3; ++f)
            per += 2.0 * face_measure_scale(ElementKind::Tri, f);
        CHECK(per == doctest::Approx(4 + 2 * std::sqrt(2.0)));
        // surface of the reference tet: three right triangles of area 2 plus one equilateral of side 2*sqrt(2)
        double area = 0;
        for (int f = 0; f < 4; ++f)
            area += 2.0 * face_measure_scale(ElementKind::Tet, f);
        CHECK(area == doctest::Approx(6 + std::sqrt(3.0) / 4 * 8));
        double hex = 0;
        for (int f = 0; f < 6; ++f)
            hex += 4.0 * face_measure_scale(ElementKind::Hex, f);
        CHECK(hex == doctest::Approx(24.0));
    }

    TEST_CASE("face maps land on the face vertices")
    {
        for (ElementKind kind : kKinds) {
            const ElementKind fk = face_kind(kind);
            const auto& fref = reference_vertices(fk);
            for (int f = 0; f < num_faces(kind); ++f) {
                const Eigen::MatrixXd x = face_to_volume(kind, f, fref);
                const auto& fv = face_vertices(kind)[static_cast<std::size_t>(f)];
                for (std::size_t k = 0; k < fv.size(); ++k)
                    CHECK((x.col(static_cast<Eigen::Index>(k)) - reference_vertices(kind).col(fv[k])).norm() < 1e-14);
            }
        }
    }

    TEST_CASE("lattice sizes and vertex maps")
    {
        CHECK(lattice_size(ElementKind::Tet, 3) == 20);
        CHECK(lattice(ElementKind::Tri, 2).cols() == 6);
        for (ElementKind kind : kKinds) {
            const auto& rv = reference_vertices(kind);
            CHECK((vertex_map(kind, rv, rv) - rv).cwiseAbs().maxCoeff() < 1e-14);
            const Eigen::MatrixXd scaled = 3.0 * rv;
            const Eigen::MatrixXd pts = lattice(kind, 3);
            CHECK((vertex_map(kind, scaled, pts) - 3.0 * pts).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}
