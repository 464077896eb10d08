#include "ldg/app/config.hpp"

#include <cmath>
#include <sstream>

#include "ldg/error.hpp"
#include "ldg/expr/parser.hpp"
#include "ldg/expr/plan.hpp"

namespace ldg::app {

namespace fs = std::filesystem;

double constant_value(const std::string& text)
{
    const auto g = expr::parse_expression(text, expr::SymbolTable{});
    const auto plan = expr::compile_with_cse(g);
    const auto ev = expr::evaluate(plan, Eigen::ArrayXXd(1, 0));
    if (ev.non_finite)
        throw ValidationError("'" + text + "' is not a finite number");
    return ev.values(0, 0);
}

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos)
            out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

int to_int(const std::string& s, const std::string& what)
{
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size())
        throw ValidationError(what + ": '" + s + "' is not an integer");
    return v;
}

bool to_bool(const std::string& s, const std::string& what)
{
    if (s == "true" || s == "yes" || s == "1")
        return true;
    if (s == "false" || s == "no" || s == "0")
        return false;
    throw ValidationError(what + ": expected true or false, got '" + s + "'");
}

int axis_index(const std::string& s)
{
    if (s == "x" || s == "1")
        return 0;
    if (s == "y" || s == "2")
        return 1;
    if (s == "z" || s == "3")
        return 2;
    throw ValidationError("unknown periodic axis '" + s + "'");
}

/// Rejects keys outside `known` so that typos do not pass silently.
void check_keys(const model::Section& s, std::initializer_list<const char*> known)
{
    for (const auto& e : s.entries) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || e.key == k;
        if (!ok)
            throw ParseError("unknown key '" + e.key + "' in [" + s.name + "]", e.line);
    }
}

} // namespace

std::vector<double> parse_number_list(const std::string& text)
{
    std::vector<double> out;
    for (const auto& s : split(text, ','))
        out.push_back(constant_value(s));
    return out;
}

std::vector<int> parse_int_list(const std::string& text)
{
    std::vector<int> out;
    for (const auto& s : split(text, ','))
        out.push_back(to_int(s, "integer list"));
    return out;
}

RunConfig config_from_text(const model::SectionedText& text, const fs::path& base_dir)
{
    RunConfig c;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

    const auto* run = text.find("run");
    if (!run)
        throw ParseError("missing [run] section", 1);
    check_keys(*run, {"model", "p", "quad", "scheme", "dt", "nt", "tf", "steady"});
    const auto model = run->get("model");
    if (!model)
        throw ParseError("[run] needs model=<path>", run->line);
    c.model_path = resolve(*model);
    c.p = to_int(run->get_or("p", "1"), "p");
    if (c.p < 1)
        throw ValidationError("p must be at least 1");
    c.quad_degree = to_int(run->get_or("quad", "-1"), "quad");
    const auto scheme = parse_int_list(run->get_or("scheme", "1,1"));
    if (scheme.size() != 2)
        throw ValidationError("scheme must be 'stages,order'");
    c.stages = scheme[0];
    c.order = scheme[1];
    if (auto v = run->get("dt"))
        c.dt = constant_value(*v);
    if (auto v = run->get("nt"))
        c.nt = to_int(*v, "nt");
    if (auto v = run->get("tf"))
        c.tf = constant_value(*v);
    if (auto v = run->get("steady"); v && *v != "auto")
        c.steady = to_bool(*v, "steady");

    const auto* ms = text.find("mesh");
    if (!ms)
        throw ParseError("missing [mesh] section", 1);
    check_keys(*ms, {"type", "element", "n", "lo", "hi", "periodic", "path", "order", "curve_tag", "curve_center",
                     "curve_radius"});
    const std::string type = ms->get_or("type", "structured");
    c.mesh.order = to_int(ms->get_or("order", "1"), "order");
    if (type == "structured") {
        c.mesh.type = MeshSource::Type::Structured;
        c.mesh.element = element_kind_from_string(ms->get_or("element", "quad"));
        const int nd = dimension(c.mesh.element);
        c.mesh.counts = parse_int_list(ms->get_or("n", "4"));
        if (c.mesh.counts.size() == 1)
            c.mesh.counts.assign(static_cast<std::size_t>(nd), c.mesh.counts[0]);
        if (static_cast<int>(c.mesh.counts.size()) != nd)
            throw ValidationError("[mesh] n needs one count per dimension");
        for (auto [key, side] : {std::pair{"lo", 0}, {"hi", 1}})
            if (auto v = ms->get(key)) {
                auto vals = parse_number_list(*v);
                if (vals.size() == 1)
                    vals.assign(static_cast<std::size_t>(nd), vals[0]);
                if (static_cast<int>(vals.size()) != nd)
                    throw ValidationError(std::string("[mesh] ") + key + " needs one value per dimension");
                for (int r = 0; r < nd; ++r)
                    (side ? c.mesh.box.hi : c.mesh.box.lo)[static_cast<std::size_t>(r)] =
                        vals[static_cast<std::size_t>(r)];
            }
        for (const auto& a : split(ms->get_or("periodic", ""), ','))
            c.mesh.periodic_axes.push_back(axis_index(a));
    } else if (type == "msh") {
        c.mesh.type = MeshSource::Type::Msh;
        const auto path = ms->get("path");
        if (!path)
            throw ParseError("[mesh] type=msh needs path=<file>", ms->line);
        c.mesh.path = resolve(*path);
        if (auto tag = ms->get("curve_tag")) {
            CurveSpec cs;
            cs.tag = to_int(*tag, "curve_tag");
            const auto center = parse_number_list(ms->get_or("curve_center", "0,0"));
            cs.center = Eigen::Map<const Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(center.size()));
            cs.radius = constant_value(ms->get_or("curve_radius", "1"));
            c.mesh.curve = cs;
        }
    } else {
        throw ValidationError("unknown mesh type '" + type + "' (expected structured or msh)");
    }

    if (const auto* s = text.find("solver")) {
        check_keys(*s, {"jv", "abs_tol", "rel_tol", "max_newton", "line_search", "forcing", "restart", "max_gmres",
                        "precond", "rb_rank", "refresh", "reproducible"});
        const std::string jv = s->get_or("jv", "tangent");
        if (jv != "tangent" && jv != "fd")
            throw ValidationError("jv must be tangent or fd");
        c.newton.mode = jv == "fd" ? solver::JvMode::FiniteDifference : solver::JvMode::Tangent;
        c.newton.abs_tol = constant_value(s->get_or("abs_tol", "1e-8"));
        c.newton.rel_tol = constant_value(s->get_or("rel_tol", "1e-6"));
        c.newton.max_iter = to_int(s->get_or("max_newton", "20"), "max_newton");
        c.newton.line_search = to_bool(s->get_or("line_search", "true"), "line_search");
        const std::string forcing = s->get_or("forcing", "adaptive");
        if (forcing != "adaptive" && forcing != "tight")
            throw ValidationError("forcing must be adaptive or tight");
        c.newton.forcing = forcing == "tight" ? solver::Forcing::Tight : solver::Forcing::Adaptive;
        c.newton.gmres.restart = to_int(s->get_or("restart", "30"), "restart");
        c.newton.gmres.max_iter = to_int(s->get_or("max_gmres", "200"), "max_gmres");
        c.newton.gmres.reproducible = to_bool(s->get_or("reproducible", "false"), "reproducible");
        c.precond.kind = solver::preconditioner_from_string(s->get_or("precond", "composite"));
        c.precond.rb_rank = to_int(s->get_or("rb_rank", "10"), "rb_rank");
        c.precond.refresh = to_int(s->get_or("refresh", "10"), "refresh");
        if (c.precond.rb_rank < 1 || c.precond.refresh < 1)
            throw ValidationError("rb_rank and refresh must be at least 1");
    }

    if (const auto* o = text.find("output")) {
        check_keys(*o, {"dir", "every", "vtu", "names"});
        if (auto d = o->get("dir"))
            c.out_dir = resolve(*d);
        c.output_every = to_int(o->get_or("every", "0"), "every");
        c.vtu = to_bool(o->get_or("vtu", "false"), "vtu");
        c.field_names = split(o->get_or("names", ""), ',');
    }

    if (const auto* m = text.find("mu"))
        for (const auto& e : m->entries) {
            if (e.key.rfind("mu", 0) != 0)
                throw ParseError("[mu] keys are mu1, mu2, ...", e.line);
            c.mu[to_int(e.key.substr(2), "parameter index")] = constant_value(e.value);
        }

    if (const auto* d = text.find("diagnostics"))
        for (const auto& e : d->entries)
            c.diagnostics.emplace_back(e.key, e.value);
    return c;
}

RunConfig load_config(const fs::path& path)
{
    return config_from_text(model::read_sectioned_file(path), path.parent_path());
}

void resolve_time(RunConfig& c, double model_tf)
{
    if (c.dt && !(*c.dt > 0))
        throw ValidationError("dt must be positive");
    if (c.nt && *c.nt < 1)
        throw ValidationError("nt must be at least 1");
    if (!c.tf && !(c.dt && c.nt) && model_tf > 0)
        c.tf = model_tf;
    if (c.dt && c.nt && c.tf) {
        if (std::abs(*c.dt * *c.nt - *c.tf) > 1e-12 * std::max(1.0, std::abs(*c.tf)))
            throw ValidationError("dt*nt does not equal tf");
    } else if (c.dt && c.nt) {
        c.tf = *c.dt * *c.nt;
    } else if (c.dt && c.tf) {
        const double n = *c.tf / *c.dt;
        c.nt = static_cast<int>(std::lround(n));
        if (std::abs(n - *c.nt) > 1e-9 * std::max(1.0, n))
            throw ValidationError("tf is not an integer multiple of dt");
    } else if (c.nt && c.tf) {
        c.dt = *c.tf / *c.nt;
    } else {
        throw ValidationError("time-dependent runs need two of dt, nt and tf");
    }
}

mesh::Mesh build_mesh(const MeshSource& s)
{
    if (s.type == MeshSource::Type::Structured)
        return mesh::generate_structured(s.box, s.counts, s.element, s.order);
    if (!fs::exists(s.path))
        throw MeshError("mesh file '" + s.path.string() + "' does not exist");
    mesh::Mesh m = mesh::import_msh(s.path);
    if (s.order > m.order)
        mesh::set_straight_geometry(m, s.order);
    if (s.curve) {
        if (m.nd == 2)
            m = mesh::curve_boundary(m, s.curve->tag, mesh::circle_projection(s.curve->center.head<2>(), s.curve->radius));
        else
            m = mesh::curve_boundary(m, s.curve->tag,
                                     mesh::sphere_projection(s.curve->center.head<3>(), s.curve->radius));
    }
    return m;
}

std::vector<mesh::PeriodicPair> periodic_pairs(const MeshSource& s)
{
    if (s.type != MeshSource::Type::Structured || s.periodic_axes.empty())
        return {};
    return mesh::box_periodicity(s.box, dimension(s.element), s.periodic_axes);
}

} // namespace ldg::app
