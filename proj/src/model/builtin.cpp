#include <functional>
#include <string>

#include "ldg/error.hpp"
#include "ldg/model/model.hpp"

namespace ldg::model {

namespace {

std::string S(int i)
{
    return std::to_string(i);
}

std::string u(int i)
{
    return "u" + S(i);
}

std::string q(int i, int j)
{
    return "q" + S(i) + "_" + S(j);
}

PdeModel base(const std::string& name, ModelKind kind, int ncu, int nd, std::vector<double> mu)
{
    PdeModel m;
    m.name = name;
    m.kind = kind;
    m.ncu = ncu;
    m.nd = nd;
    m.nparam = static_cast<int>(mu.size());
    m.mu = std::move(mu);
    m.mass.assign(static_cast<std::size_t>(ncu), "1");
    m.source.assign(static_cast<std::size_t>(ncu), "0");
    m.flux.assign(static_cast<std::size_t>(ncu * nd), "0");
    return m;
}

void set_flux(PdeModel& m, int i, int j, std::string text)
{
    m.flux[static_cast<std::size_t>((i - 1) * m.nd + (j - 1))] = std::move(text);
}

/// n . v for an nd-vector of expressions
std::string dot_normal(int nd, const std::function<std::string(int)>& component)
{
    std::string s;
    for (int j = 1; j <= nd; ++j)
        s += (j > 1 ? " + " : "") + component(j) + "*n" + S(j);
    return "(" + s + ")";
}

void require_nd(const std::string& name, int nd, int lo, int hi)
{
    if (nd < lo || nd > hi)
        throw ValidationError("builtin model '" + name + "' supports nd in [" + S(lo) + "," + S(hi) + "], got " + S(nd));
}

// Euler / Navier-Stokes: u1 = rho, u2.. = momentum, u{nd+2} = total energy; mu1 = gamma.
std::string pressure(int nd)
{
    std::string ke;
    for (int i = 1; i <= nd; ++i)
        ke += (i > 1 ? " + " : "") + u(i + 1) + "*" + u(i + 1);
    return "(mu1 - 1)*(" + u(nd + 2) + " - (" + ke + ")/(2*u1))";
}

void euler_flux(PdeModel& m)
{
    const int nd = m.nd;
    const std::string p = pressure(nd);
    for (int j = 1; j <= nd; ++j) {
        set_flux(m, 1, j, u(j + 1));
        for (int i = 1; i <= nd; ++i)
            set_flux(m, i + 1, j, u(i + 1) + "*" + u(j + 1) + "/u1" + (i == j ? " + " + p : ""));
        set_flux(m, nd + 2, j, "(" + u(nd + 2) + " + " + p + ")*" + u(j + 1) + "/u1");
    }
    m.numflux.wavespeed = "abs" + dot_normal(nd, [](int j) { return u(j + 1); }) + "/u1 + sqrt(mu1*" + p + "/u1)";
}

} // namespace

std::vector<std::string> builtin_names()
{
    return {"linear_convection", "burgers", "shallow_water", "euler", "poisson",
            "convection_diffusion", "compressible_ns", "wave", "linear_elasticity"};
}

PdeModel builtin_model(const std::string& name, const BuiltinOptions& options)
{
    const int nd = options.nd;
    PdeModel m;
    if (name == "linear_convection") {
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Convection, 1, nd, std::vector<double>(static_cast<std::size_t>(nd), 1.0));
        for (int j = 1; j <= nd; ++j)
            set_flux(m, 1, j, "mu" + S(j) + "*u1");
        m.numflux.wavespeed = "abs" + dot_normal(nd, [](int j) { return "mu" + S(j); });
    } else if (name == "burgers") {
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Convection, 1, nd, {});
        for (int j = 1; j <= nd; ++j)
            set_flux(m, 1, j, "u1*u1/2");
        m.numflux.wavespeed = "abs(u1*" + dot_normal(nd, [](int) { return std::string("1"); }) + ")";
    } else if (name == "shallow_water") {
        // states (h, hu[, hv]); mu1 = gravity
        require_nd(name, nd, 1, 2);
        m = base(name, ModelKind::Convection, nd + 1, nd, {1.0});
        if (nd == 1) {
            set_flux(m, 1, 1, "u2");
            set_flux(m, 2, 1, "u2*u2/u1 + mu1*u1*u1/2");
        } else {
            set_flux(m, 1, 1, "u2");
            set_flux(m, 1, 2, "u3");
            set_flux(m, 2, 1, "u2*u2/u1 + mu1*u1*u1/2");
            set_flux(m, 2, 2, "u2*u3/u1");
            set_flux(m, 3, 1, "u2*u3/u1");
            set_flux(m, 3, 2, "u3*u3/u1 + mu1*u1*u1/2");
        }
        m.numflux.wavespeed = "abs" + dot_normal(nd, [](int j) { return u(j + 1); }) + "/u1 + sqrt(mu1*u1)";
    } else if (name == "euler") {
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Convection, nd + 2, nd, {1.4});
        euler_flux(m);
    } else if (name == "poisson") {
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Diffusion, 1, nd, {});
        m.mass = {"0"};
        for (int j = 1; j <= nd; ++j)
            set_flux(m, 1, j, q(1, j));
    } else if (name == "convection_diffusion") {
        // mu1..mu{nd} = velocity, mu{nd+1} = diffusivity
        require_nd(name, nd, 1, 3);
        std::vector<double> mu(static_cast<std::size_t>(nd), 1.0);
        mu.push_back(0.01);
        m = base(name, ModelKind::Diffusion, 1, nd, mu);
        const std::string kappa = "mu" + S(nd + 1);
        for (int j = 1; j <= nd; ++j)
            set_flux(m, 1, j, "mu" + S(j) + "*u1 + " + kappa + "*" + q(1, j));
        m.numflux.tau = {"abs" + dot_normal(nd, [](int j) { return "mu" + S(j); }) + " + 1"};
    } else if (name == "compressible_ns") {
        // mu1 = gamma, mu2 = Reynolds, mu3 = Prandtl; q = -grad(u)
        require_nd(name, nd, 2, 3);
        m = base(name, ModelKind::Diffusion, nd + 2, nd, {1.4, 100.0, 0.72});
        euler_flux(m);
        auto vel = [](int i) { return "(" + u(i + 1) + "/u1)"; };
        // d(v_i)/dx_j = (v_i q1_j - q{i+1}_j)/rho
        auto dv = [&](int i, int j) { return "((" + vel(i) + "*" + q(1, j) + " - " + q(i + 1, j) + ")/u1)"; };
        std::string divv;
        for (int k = 1; k <= nd; ++k)
            divv += (k > 1 ? " + " : "") + dv(k, k);
        auto stress = [&](int i, int j) {
            std::string s = dv(i, j) + " + " + dv(j, i);
            if (i == j)
                s += " - 2*(" + divv + ")/3";
            return "((" + s + ")/mu2)";
        };
        // grad of specific internal energy e = E/rho - |v|^2/2
        auto de = [&](int j) {
            std::string s = "((" + u(nd + 2) + "/u1)*" + q(1, j) + " - " + q(nd + 2, j) + ")/u1";
            for (int k = 1; k <= nd; ++k)
                s += " - " + vel(k) + "*" + dv(k, j);
            return "(" + s + ")";
        };
        for (int j = 1; j <= nd; ++j) {
            for (int i = 1; i <= nd; ++i)
                set_flux(m, i + 1, j, m.flux_entry(i, j - 1) + " - " + stress(i, j));
            std::string work;
            for (int i = 1; i <= nd; ++i)
                work += " - " + vel(i) + "*" + stress(i, j);
            set_flux(m, nd + 2, j, m.flux_entry(nd + 1, j - 1) + work + " - mu1*" + de(j) + "/(mu2*mu3)");
        }
    } else if (name == "wave") {
        // u_t + div(c^2 q) = 0, q_t + grad u = 0, w_t = u; mu1 = c
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Wave, 1, nd, {1.0});
        m.nw = 1;
        m.displacement = true;
        m.ode.alpha = 1.0;
        m.ode.beta = 0.0;
        m.ode.source = {"u1"};
        for (int j = 1; j <= nd; ++j)
            set_flux(m, 1, j, "mu1*mu1*" + q(1, j));
        m.numflux.tau = {"mu1"};
    } else if (name == "linear_elasticity") {
        // f = -sigma with eps = -sym(q); mu1 = lambda, mu2 = shear modulus
        require_nd(name, nd, 1, 3);
        m = base(name, ModelKind::Diffusion, nd, nd, {1.0, 1.0});
        m.mass.assign(static_cast<std::size_t>(nd), "0");
        std::string trace;
        for (int k = 1; k <= nd; ++k)
            trace += (k > 1 ? " + " : "") + q(k, k);
        for (int i = 1; i <= nd; ++i)
            for (int j = 1; j <= nd; ++j)
                set_flux(m, i, j, "mu2*(" + q(i, j) + " + " + q(j, i) + ")" + (i == j ? " + mu1*(" + trace + ")" : ""));
    } else {
        throw ValidationError("unknown builtin model '" + name + "'");
    }
    const auto diags = validate(m);
    if (!diags.empty())
        throw ValidationError("builtin model '" + name + "' failed validation: " + diags.front().message);
    return m;
}

} // namespace ldg::model
