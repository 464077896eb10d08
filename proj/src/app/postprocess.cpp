#include "ldg/app/postprocess.hpp"

#include <cmath>
#include <limits>

#include "ldg/disc/discretization.hpp"
#include "ldg/error.hpp"
#include "ldg/expr/parser.hpp"
#include "ldg/expr/plan.hpp"

namespace ldg::app {

using Eigen::MatrixXd;
using Eigen::VectorXd;

QuadratureFields quadrature_fields(const disc::Discretization& d, const VectorXd& U, double t)
{
    const auto& L = d.layout();
    const auto& phi = d.master().phi;
    const int nq = d.master().n_quad();
    QuadratureFields f;
    f.x = d.quadrature_points().transpose();
    f.u = d.values_at_quadrature(U);
    if (d.model().has_gradient())
        f.q = d.gradient_at_quadrature(U, t);
    f.w.resize(Eigen::Index(L.ne) * nq, L.nw);
    for (int e = 0; e < L.ne; ++e)
        for (int k = 0; k < L.nw; ++k)
            f.w.col(k).segment(Eigen::Index(e) * nq, nq) = phi * U.segment(L.w(e, k, 0), L.nn);
    f.weights = d.quadrature_weights();
    return f;
}

namespace {

/// Evaluates expressions over the reserved volume symbols at every quadrature point.
MatrixXd evaluate_at_quadrature(const disc::Discretization& d, const QuadratureFields& f,
                                const std::vector<std::string>& texts, double t)
{
    const auto& m = d.model();
    const auto table = model::symbol_table(m, model::SymbolContext::Volume);
    std::vector<expr::ExpressionGraph> graphs;
    for (const auto& s : texts)
        graphs.push_back(expr::parse_expression(s, table));
    const auto plan = expr::compile_with_cse(graphs);

    const Eigen::Index n = f.weights.size();
    Eigen::ArrayXXd in(n, table.size());
    for (int c = 0; c < table.size(); ++c) {
        const std::string& name = table.name(c);
        const char head = name[0];
        const int idx = std::atoi(name.c_str() + 1) - 1;
        if (name == "t")
            in.col(c).setConstant(t);
        else if (head == 'x')
            in.col(c) = f.x.col(idx).array();
        else if (head == 'u')
            in.col(c) = f.u.col(idx).array();
        else if (head == 'w')
            in.col(c) = f.w.col(idx).array();
        else if (name.rfind("mu", 0) == 0)
            in.col(c).setConstant(m.mu.at(static_cast<std::size_t>(std::atoi(name.c_str() + 2) - 1)));
        else if (head == 'q') {
            const auto us = name.find('_');
            const int i = std::atoi(name.substr(1, us - 1).c_str()) - 1;
            const int j = std::atoi(name.c_str() + us + 1) - 1;
            in.col(c) = f.q.col(i * m.nd + j).array();
        } else {
            throw ValidationError("symbol '" + name + "' is not available at quadrature points");
        }
    }
    const auto ev = expr::evaluate(plan, in);
    if (ev.non_finite)
        throw NonFiniteError("non-finite value in a quadrature integrand");
    return ev.values.matrix();
}

double weighted_sq(const MatrixXd& v, const VectorXd& w)
{
    return (v.array().square().colwise() * w.array()).sum();
}

} // namespace

L2Error compute_l2_error(const disc::Discretization& d, const VectorXd& U, const std::vector<std::string>& exact_u,
                         const std::vector<std::string>& exact_q, double t)
{
    const auto& m = d.model();
    if (static_cast<int>(exact_u.size()) != m.ncu)
        throw ValidationError("exact solution needs " + std::to_string(m.ncu) + " u expressions");
    const auto f = quadrature_fields(d, U, t);
    L2Error r;

    const MatrixXd ue = evaluate_at_quadrature(d, f, exact_u, t);
    r.norm_u = std::sqrt(weighted_sq(ue, f.weights));
    const double eu = std::sqrt(weighted_sq(f.u - ue, f.weights));
    r.u_zero_norm = r.norm_u == 0.0;
    r.error_u = r.u_zero_norm ? eu : eu / r.norm_u;

    r.error_q = std::numeric_limits<double>::quiet_NaN();
    if (m.has_gradient() && !exact_q.empty()) {
        if (static_cast<int>(exact_q.size()) != m.ncu * m.nd)
            throw ValidationError("exact gradient needs " + std::to_string(m.ncu * m.nd) + " q expressions");
        const MatrixXd qe = evaluate_at_quadrature(d, f, exact_q, t);
        r.norm_q = std::sqrt(weighted_sq(qe, f.weights));
        const double eq = std::sqrt(weighted_sq(f.q - qe, f.weights));
        r.q_zero_norm = r.norm_q == 0.0;
        r.error_q = r.q_zero_norm ? eq : eq / r.norm_q;
    }
    return r;
}

std::vector<double> compute_functional(const disc::Discretization& d, const VectorXd& U,
                                       const std::vector<std::string>& integrands, double t)
{
    if (integrands.empty())
        return {};
    const auto f = quadrature_fields(d, U, t);
    const MatrixXd g = evaluate_at_quadrature(d, f, integrands, t);
    std::vector<double> out;
    for (Eigen::Index c = 0; c < g.cols(); ++c)
        out.push_back(g.col(c).dot(f.weights));
    return out;
}

} // namespace ldg::app
