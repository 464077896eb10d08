#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ldg::poly {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Orthonormal Jacobi polynomial P_n^{(alpha,beta)} on [-1,1].
template <typename Scalar>
ArrayX<Scalar> jacobi(const ArrayX<Scalar>& x, Scalar alpha, Scalar beta, int n)
{
    using std::sqrt;
    using std::tgamma;
    const Scalar ab = alpha + beta;
    const Scalar gamma0 = std::pow(Scalar(2), ab + 1) / (ab + 1) * tgamma(alpha + 1) * tgamma(beta + 1) / tgamma(ab + 1);
    ArrayX<Scalar> prev = ArrayX<Scalar>::Constant(x.size(), 1 / sqrt(gamma0));
    if (n == 0)
        return prev;
    const Scalar gamma1 = (alpha + 1) * (beta + 1) / (ab + 3) * gamma0;
    ArrayX<Scalar> cur = ((ab + 2) * x / 2 + (alpha - beta) / 2) / sqrt(gamma1);
    Scalar a_old = 2 / (2 + ab) * sqrt((alpha + 1) * (beta + 1) / (ab + 3));
    for (int i = 1; i < n; ++i) {
        const Scalar h1 = 2 * i + ab;
        const Scalar a_new = 2 / (h1 + 2) * sqrt((i + 1) * (i + 1 + ab) * (i + 1 + alpha) * (i + 1 + beta) / (h1 + 1) / (h1 + 3));
        const Scalar b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2);
        ArrayX<Scalar> next = (-a_old * prev + (x - b_new) * cur) / a_new;
        prev = std::move(cur);
        cur = std::move(next);
        a_old = a_new;
    }
    return cur;
}

template <typename Scalar>
ArrayX<Scalar> jacobi_derivative(const ArrayX<Scalar>& x, Scalar alpha, Scalar beta, int n)
{
    if (n == 0)
        return ArrayX<Scalar>::Zero(x.size());
    return std::sqrt(n * (n + alpha + beta + 1)) * jacobi<Scalar>(x, alpha + 1, beta + 1, n - 1);
}

template <typename Scalar>
struct Rule1D
{
    ArrayX<Scalar> points;
    ArrayX<Scalar> weights;
};

/// Gauss-Jacobi rule with `n` points (exact to degree 2n-1 against (1-x)^alpha (1+x)^beta),
/// via the Golub-Welsch eigenproblem.
template <typename Scalar>
Rule1D<Scalar> gauss_jacobi(int n, Scalar alpha, Scalar beta)
{
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Scalar ab = alpha + beta;
    Rule1D<Scalar> rule;
    if (n == 1) {
        rule.points = ArrayX<Scalar>::Constant(1, -(alpha - beta) / (ab + 2));
        rule.weights = ArrayX<Scalar>::Constant(1, std::pow(Scalar(2), ab + 1) * std::tgamma(alpha + 1) *
                                                       std::tgamma(beta + 1) / std::tgamma(ab + 2));
        return rule;
    }
    Mat J = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const Scalar h1 = 2 * k + ab;
        J(k, k) = -(alpha * alpha - beta * beta) / (h1 + 2) / h1;
        if (k + 1 < n) {
            const Scalar i = k + 1;
            J(k, k + 1) = J(k + 1, k) =
                2 / (h1 + 2) * std::sqrt(i * (i + ab) * (i + alpha) * (i + beta) / (h1 + 1) / (h1 + 3));
        }
    }
    if (ab < 10 * std::numeric_limits<Scalar>::epsilon())
        J(0, 0) = 0;
    Eigen::SelfAdjointEigenSolver<Mat> eig(J);
    rule.points = eig.eigenvalues().array();
    const Scalar mu0 = std::pow(Scalar(2), ab + 1) / (ab + 1) * std::tgamma(alpha + 1) * std::tgamma(beta + 1) /
                       std::tgamma(ab + 1);
    rule.weights = eig.eigenvectors().row(0).transpose().array().square() * mu0;
    return rule;
}

template <typename Scalar>
Rule1D<Scalar> gauss_legendre(int n)
{
    return gauss_jacobi<Scalar>(n, 0, 0);
}

/// Gauss-Lobatto-Jacobi points (n+1 points including the endpoints).
template <typename Scalar>
ArrayX<Scalar> gauss_lobatto(int n, Scalar alpha = 0, Scalar beta = 0)
{
    ArrayX<Scalar> x(n + 1);
    x(0) = -1;
    x(n) = 1;
    if (n >= 2)
        x.segment(1, n - 1) = gauss_jacobi<Scalar>(n - 1, alpha + 1, beta + 1).points;
    return x;
}

} // namespace ldg::poly
