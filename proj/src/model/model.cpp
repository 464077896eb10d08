#include "ldg/model/model.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldg/error.hpp"
#include "ldg/expr/parser.hpp"

namespace ldg::model {

char kind_letter(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Convection: return 'C';
    case ModelKind::Diffusion: return 'D';
    case ModelKind::Wave: return 'W';
    }
    return '?';
}

ModelKind kind_from_letter(const std::string& letter)
{
    if (letter == "C")
        return ModelKind::Convection;
    if (letter == "D")
        return ModelKind::Diffusion;
    if (letter == "W")
        return ModelKind::Wave;
    throw ValidationError("unknown model kind '" + letter + "' (expected C, D or W)");
}

std::string to_string(BcType type)
{
    switch (type) {
    case BcType::Dirichlet: return "dirichlet";
    case BcType::Neumann: return "neumann";
    case BcType::Absorbing: return "absorbing";
    case BcType::Periodic: return "periodic";
    }
    return "?";
}

BcType bc_type_from_string(const std::string& name)
{
    for (BcType t : {BcType::Dirichlet, BcType::Neumann, BcType::Absorbing, BcType::Periodic})
        if (to_string(t) == name)
            return t;
    throw ValidationError("unknown boundary condition type '" + name + "'");
}

bool PdeModel::is_steady() const
{
    if (mass.empty())
        return false;
    for (const auto& m : mass) {
        double v = 1.0;
        auto [p, ec] = std::from_chars(m.data(), m.data() + m.size(), v);
        if (ec != std::errc() || p != m.data() + m.size() || v != 0.0)
            return false;
    }
    return true;
}

namespace {

expr::SymbolTable make_table(const PdeModel& m, SymbolContext context, bool with_gradient)
{
    expr::SymbolTable t;
    for (int j = 1; j <= m.nd; ++j)
        t.add("x" + std::to_string(j));
    t.add("t");
    for (int i = 1; i <= m.ncu; ++i)
        t.add("u" + std::to_string(i));
    if (with_gradient)
        for (int i = 1; i <= m.ncu; ++i)
            for (int j = 1; j <= m.nd; ++j)
                t.add("q" + std::to_string(i) + "_" + std::to_string(j));
    for (int k = 1; k <= m.nw; ++k)
        t.add("w" + std::to_string(k));
    for (int k = 1; k <= m.nparam; ++k)
        t.add("mu" + std::to_string(k));
    if (context == SymbolContext::Volume)
        return t;
    for (int j = 1; j <= m.nd; ++j)
        t.add("n" + std::to_string(j));
    if (context == SymbolContext::Boundary)
        return t;
    for (int i = 1; i <= m.ncu; ++i)
        t.add("up" + std::to_string(i));
    if (with_gradient)
        for (int i = 1; i <= m.ncu; ++i)
            for (int j = 1; j <= m.nd; ++j)
                t.add("qp" + std::to_string(i) + "_" + std::to_string(j));
    for (int i = 1; i <= m.ncu; ++i)
        t.add("uh" + std::to_string(i));
    return t;
}

std::optional<int> indexed(std::string_view key, std::string_view prefix)
{
    if (!key.starts_with(prefix) || key.size() == prefix.size())
        return std::nullopt;
    int v = 0;
    const auto digits = key.substr(prefix.size());
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size() || v < 1)
        return std::nullopt;
    return v;
}

std::optional<std::pair<int, int>> indexed2(std::string_view key, std::string_view prefix)
{
    if (!key.starts_with(prefix))
        return std::nullopt;
    const auto rest = key.substr(prefix.size());
    const auto us = rest.find('_');
    if (us == std::string_view::npos)
        return std::nullopt;
    int i = 0, j = 0;
    auto [p1, e1] = std::from_chars(rest.data(), rest.data() + us, i);
    auto [p2, e2] = std::from_chars(rest.data() + us + 1, rest.data() + rest.size(), j);
    if (e1 != std::errc() || e2 != std::errc() || p1 != rest.data() + us || p2 != rest.data() + rest.size() ||
        i < 1 || j < 1)
        return std::nullopt;
    return std::make_pair(i, j);
}

void put(std::vector<std::string>& v, int index, const std::string& value)
{
    if (static_cast<int>(v.size()) < index)
        v.resize(static_cast<std::size_t>(index));
    v[static_cast<std::size_t>(index - 1)] = value;
}

int to_int(const Section& s, const char* key, int fallback)
{
    const auto v = s.get(key);
    if (!v)
        return fallback;
    int out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
        throw ParseError(std::string("[") + s.name + "] " + key + " is not an integer", s.line);
    return out;
}

double to_double(const std::string& text, const std::string& what, std::size_t line)
{
    double out = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParseError(what + " is not a number", line);
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void unknown_key(const Section& s, const Entry& e)
{
    throw ParseError("unknown key '" + e.key + "' in [" + s.name + "] on line " + std::to_string(e.line), e.line);
}

} // namespace

expr::SymbolTable symbol_table(const PdeModel& model, SymbolContext context)
{
    return make_table(model, context, model.has_gradient());
}

std::vector<Diagnostic> validate(const PdeModel& m)
{
    std::vector<Diagnostic> out;
    auto report = [&out](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };

    if (m.nd < 1 || m.nd > 3 || m.ncu < 1 || m.nw < 0 || m.nparam < 0) {
        report("invalid-size", "require 1<=nd<=3, ncu>=1, nw>=0, nparam>=0");
        return out;
    }
    if (static_cast<int>(m.mu.size()) != m.nparam)
        report("parameter-count", "nparam=" + std::to_string(m.nparam) + " but " + std::to_string(m.mu.size()) +
                                      " mu values given");

    auto sized = [&](const std::vector<std::string>& v, int n, const char* what, bool optional) {
        if (optional && v.empty())
            return;
        if (static_cast<int>(v.size()) != n)
            report("dimension-mismatch", std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                                             std::to_string(n));
        for (std::size_t k = 0; k < v.size(); ++k)
            if (v[k].empty())
                report("dimension-mismatch", std::string(what) + " entry " + std::to_string(k + 1) + " is missing");
    };
    sized(m.mass, m.ncu, "mass", false);
    sized(m.flux, m.ncu * m.nd, "flux", false);
    sized(m.source, m.ncu, "source", false);
    sized(m.ode.source, m.nw, "ode source", m.nw == 0);
    sized(m.init_u, m.ncu, "init u", true);
    sized(m.init_q, m.ncu * m.nd, "init q", true);
    sized(m.init_w, m.nw, "init w", true);
    sized(m.exact_u, m.ncu, "exact u", true);
    sized(m.exact_q, m.ncu * m.nd, "exact q", true);
    sized(m.numflux.uhat, m.ncu, "uhat override", true);
    sized(m.numflux.fhat, m.ncu, "fhat override", true);
    if (m.numflux.tau.size() != 1 && static_cast<int>(m.numflux.tau.size()) != m.ncu)
        report("dimension-mismatch", "tau must have 1 or ncu entries");
    if (!m.numflux.switch_vector.empty() && static_cast<int>(m.numflux.switch_vector.size()) != m.nd)
        report("dimension-mismatch", "switch vector must have nd entries");

    if (m.nw > 0 && m.ode.alpha == 0.0 && m.ode.beta == 0.0)
        report("invalid-ode", "alpha and beta are both zero");
    if (m.kind == ModelKind::Wave && m.displacement && m.nw == 0)
        report("missing-ode-state", "wave model requests the displacement field but nw=0");
    if (m.kind == ModelKind::Convection && !m.init_q.empty())
        report("gradient-in-convection", "convection model declares initial gradients");

    // parse every expression against the table of its context; q symbols are
    // always admitted at parse time so that convection models get a specific code
    const auto volume = make_table(m, SymbolContext::Volume, true);
    const auto boundary = make_table(m, SymbolContext::Boundary, true);
    const auto face = make_table(m, SymbolContext::Face, true);
    auto check = [&](const std::string& text, const expr::SymbolTable& table, const std::string& where) {
        if (text.empty())
            return;
        try {
            const auto g = expr::parse_expression(text, table);
            if (m.kind == ModelKind::Convection)
                for (int s : g.used_symbols()) {
                    const auto& name = table.name(s);
                    if (name.starts_with("q"))
                        report("gradient-in-convection", where + " references " + name + " in a convection model");
                }
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            report(msg.starts_with("unknown symbol") ? "unknown-symbol" : "parse-error", where + ": " + msg);
        }
    };
    auto check_all = [&](const std::vector<std::string>& v, const expr::SymbolTable& table, const std::string& where) {
        for (std::size_t k = 0; k < v.size(); ++k)
            check(v[k], table, where + std::to_string(k + 1));
    };
    check_all(m.mass, volume, "mass m");
    check_all(m.flux, volume, "flux entry ");
    check_all(m.source, volume, "source s");
    check_all(m.ode.source, volume, "ode sw");
    check_all(m.init_u, volume, "init u");
    check_all(m.init_q, volume, "init q entry ");
    check_all(m.init_w, volume, "init w");
    check_all(m.exact_u, volume, "exact u");
    check_all(m.exact_q, volume, "exact q entry ");
    check_all(m.numflux.tau, face, "tau");
    check(m.numflux.wavespeed, face, "wavespeed");
    check_all(m.numflux.uhat, face, "uhat");
    check_all(m.numflux.fhat, face, "fhat");

    for (const auto& [tag, bc] : m.bcs) {
        const std::string where = "bc tag=" + std::to_string(tag);
        if (bc.type == BcType::Periodic)
            continue;
        if (static_cast<int>(bc.data.size()) != m.ncu)
            report("invalid-bc", where + " needs " + std::to_string(m.ncu) + " data expressions");
        if (!bc.trace.empty() && static_cast<int>(bc.trace.size()) != m.ncu)
            report("invalid-bc", where + " trace override needs ncu entries");
        check_all(bc.data, boundary, where + " g");
        check_all(bc.trace, boundary, where + " uh");
    }
    return out;
}

PdeModel model_from_text(const SectionedText& text)
{
    PdeModel m;
    const Section* head = text.find("model");
    if (!head)
        throw ParseError("missing [model] section", 1);
    for (const auto& e : head->entries)
        if (e.key != "kind" && e.key != "ncu" && e.key != "nd" && e.key != "nw" && e.key != "nparam" &&
            e.key != "tf" && e.key != "name" && e.key != "displacement")
            unknown_key(*head, e);
    m.kind = kind_from_letter(head->get_or("kind", "D"));
    m.ncu = to_int(*head, "ncu", 1);
    m.nd = to_int(*head, "nd", 1);
    m.nw = to_int(*head, "nw", 0);
    m.nparam = to_int(*head, "nparam", 0);
    m.tf = to_double(head->get_or("tf", "0"), "tf", head->line);
    m.name = head->get_or("name", "");
    m.displacement = head->get_or("displacement", "false") == "true";
    if (!text.find("flux"))
        throw ParseError("missing [flux] section", head->line);

    bool have_mass = false, have_source = false;
    for (const auto& sec : text.sections) {
        if (sec.name == "model")
            continue;
        if (sec.name == "mu") {
            std::vector<std::string> vals;
            for (const auto& e : sec.entries) {
                const auto k = indexed(e.key, "mu");
                if (!k)
                    unknown_key(sec, e);
                put(vals, *k, e.value);
            }
            m.mu.clear();
            for (std::size_t k = 0; k < vals.size(); ++k)
                m.mu.push_back(to_double(vals[k], "mu" + std::to_string(k + 1), sec.line));
        } else if (sec.name == "mass") {
            have_mass = true;
            for (const auto& e : sec.entries) {
                const auto k = indexed(e.key, "m");
                if (!k)
                    unknown_key(sec, e);
                put(m.mass, *k, e.value);
            }
        } else if (sec.name == "flux") {
            for (const auto& e : sec.entries) {
                const auto ij = indexed2(e.key, "f");
                if (!ij)
                    unknown_key(sec, e);
                if (ij->second > m.nd)
                    throw ParseError("flux direction out of range in '" + e.key + "'", e.line);
                put(m.flux, (ij->first - 1) * m.nd + ij->second, e.value);
            }
        } else if (sec.name == "source") {
            have_source = true;
            for (const auto& e : sec.entries) {
                const auto k = indexed(e.key, "s");
                if (!k)
                    unknown_key(sec, e);
                put(m.source, *k, e.value);
            }
        } else if (sec.name == "ode") {
            for (const auto& e : sec.entries) {
                if (e.key == "alpha")
                    m.ode.alpha = to_double(e.value, "alpha", e.line);
                else if (e.key == "beta")
                    m.ode.beta = to_double(e.value, "beta", e.line);
                else if (const auto k = indexed(e.key, "sw"))
                    put(m.ode.source, *k, e.value);
                else
                    unknown_key(sec, e);
            }
        } else if (sec.name == "bc") {
            const auto tag_text = sec.attributes.find("tag");
            const auto type_text = sec.attributes.find("type");
            if (tag_text == sec.attributes.end() || type_text == sec.attributes.end())
                throw ParseError("[bc] needs tag= and type= attributes", sec.line);
            BoundaryCondition bc;
            bc.type = bc_type_from_string(type_text->second);
            for (const auto& e : sec.entries) {
                if (const auto k = indexed(e.key, "g"))
                    put(bc.data, *k, e.value);
                else if (const auto k2 = indexed(e.key, "uh"))
                    put(bc.trace, *k2, e.value);
                else
                    unknown_key(sec, e);
            }
            const int tag = static_cast<int>(to_double(tag_text->second, "tag", sec.line));
            if (m.bcs.count(tag))
                throw ParseError("duplicate [bc] for tag " + std::to_string(tag), sec.line);
            m.bcs[tag] = std::move(bc);
        } else if (sec.name == "init" || sec.name == "exact") {
            const bool init = sec.name == "init";
            for (const auto& e : sec.entries) {
                if (const auto ij = indexed2(e.key, "q")) {
                    if (ij->second > m.nd)
                        throw ParseError("gradient direction out of range in '" + e.key + "'", e.line);
                    put(init ? m.init_q : m.exact_q, (ij->first - 1) * m.nd + ij->second, e.value);
                } else if (const auto k = indexed(e.key, "u"))
                    put(init ? m.init_u : m.exact_u, *k, e.value);
                else if (const auto kw = indexed(e.key, "w"); kw && init)
                    put(m.init_w, *kw, e.value);
                else
                    unknown_key(sec, e);
            }
        } else if (sec.name == "numflux") {
            auto& nf = m.numflux;
            std::vector<std::string> tau;
            for (const auto& e : sec.entries) {
                if (e.key == "trace") {
                    if (e.value == "switch")
                        nf.trace = TraceRule::Switch;
                    else if (e.value == "central")
                        nf.trace = TraceRule::Central;
                    else
                        throw ParseError("trace must be switch or central", e.line);
                } else if (e.key == "gradient") {
                    if (e.value == "opposite")
                        nf.gradient = GradientTrace::Opposite;
                    else if (e.value == "central")
                        nf.gradient = GradientTrace::Central;
                    else
                        throw ParseError("gradient must be opposite or central", e.line);
                } else if (e.key == "switch") {
                    nf.switch_vector.clear();
                    std::stringstream ss(e.value);
                    std::string item;
                    while (std::getline(ss, item, ','))
                        nf.switch_vector.push_back(to_double(item, "switch", e.line));
                } else if (e.key == "tau") {
                    tau = {e.value};
                } else if (const auto k = indexed(e.key, "tau")) {
                    put(tau, *k, e.value);
                } else if (e.key == "wavespeed") {
                    nf.wavespeed = e.value;
                } else if (const auto ku = indexed(e.key, "uhat")) {
                    put(nf.uhat, *ku, e.value);
                } else if (const auto kf = indexed(e.key, "fhat")) {
                    put(nf.fhat, *kf, e.value);
                } else {
                    unknown_key(sec, e);
                }
            }
            if (!tau.empty())
                nf.tau = tau;
        } else {
            throw ParseError("unknown section [" + sec.name + "]", sec.line);
        }
    }
    if (!have_mass)
        m.mass.assign(static_cast<std::size_t>(m.ncu), "1");
    if (!have_source)
        m.source.assign(static_cast<std::size_t>(m.ncu), "0");
    return m;
}

namespace {

void throw_if_invalid(const PdeModel& m)
{
    const auto diags = validate(m);
    if (diags.empty())
        return;
    std::string msg = "invalid model";
    for (const auto& d : diags)
        msg += "\n  [" + d.code + "] " + d.message;
    throw ValidationError(msg);
}

} // namespace

PdeModel load_model_string(std::string_view text)
{
    PdeModel m = model_from_text(parse_sectioned_text(text));
    throw_if_invalid(m);
    return m;
}

PdeModel load_model(const std::filesystem::path& path)
{
    PdeModel m = model_from_text(read_sectioned_file(path));
    throw_if_invalid(m);
    return m;
}

SectionedText model_to_text(const PdeModel& m)
{
    SectionedText out;
    auto section = [&out](std::string name) -> Section& {
        out.sections.push_back(Section{std::move(name), {}, {}, 0});
        return out.sections.back();
    };
    auto add = [](Section& s, std::string key, std::string value) { s.entries.push_back(Entry{std::move(key), std::move(value), 0}); };
    auto add_list = [&](Section& s, const std::string& prefix, const std::vector<std::string>& v) {
        for (std::size_t k = 0; k < v.size(); ++k)
            add(s, prefix + std::to_string(k + 1), v[k]);
    };
    auto add_matrix = [&](Section& s, const std::string& prefix, const std::vector<std::string>& v) {
        for (std::size_t k = 0; k < v.size(); ++k)
            add(s, prefix + std::to_string(k / static_cast<std::size_t>(m.nd) + 1) + "_" +
                       std::to_string(k % static_cast<std::size_t>(m.nd) + 1),
                v[k]);
    };

    auto& head = section("model");
    if (!m.name.empty())
        add(head, "name", m.name);
    add(head, "kind", std::string(1, kind_letter(m.kind)));
    add(head, "ncu", std::to_string(m.ncu));
    add(head, "nd", std::to_string(m.nd));
    add(head, "nw", std::to_string(m.nw));
    add(head, "nparam", std::to_string(m.nparam));
    add(head, "tf", fmt(m.tf));
    if (m.displacement)
        add(head, "displacement", "true");
    if (!m.mu.empty()) {
        auto& s = section("mu");
        for (std::size_t k = 0; k < m.mu.size(); ++k)
            add(s, "mu" + std::to_string(k + 1), fmt(m.mu[k]));
    }
    add_list(section("mass"), "m", m.mass);
    add_matrix(section("flux"), "f", m.flux);
    add_list(section("source"), "s", m.source);
    if (m.nw > 0) {
        auto& s = section("ode");
        add(s, "alpha", fmt(m.ode.alpha));
        add(s, "beta", fmt(m.ode.beta));
        add_list(s, "sw", m.ode.source);
    }
    {
        const NumericalFluxSpec defaults;
        const auto& nf = m.numflux;
        const bool custom = nf.trace != defaults.trace || nf.gradient != defaults.gradient ||
                            !nf.switch_vector.empty() || nf.tau != defaults.tau || !nf.wavespeed.empty() ||
                            !nf.uhat.empty() || !nf.fhat.empty();
        if (custom) {
            auto& s = section("numflux");
            add(s, "trace", nf.trace == TraceRule::Switch ? "switch" : "central");
            add(s, "gradient", nf.gradient == GradientTrace::Opposite ? "opposite" : "central");
            if (!nf.switch_vector.empty()) {
                std::string v;
                for (std::size_t k = 0; k < nf.switch_vector.size(); ++k)
                    v += (k ? "," : "") + fmt(nf.switch_vector[k]);
                add(s, "switch", v);
            }
            if (nf.tau.size() == 1)
                add(s, "tau", nf.tau.front());
            else
                add_list(s, "tau", nf.tau);
            if (!nf.wavespeed.empty())
                add(s, "wavespeed", nf.wavespeed);
            add_list(s, "uhat", nf.uhat);
            add_list(s, "fhat", nf.fhat);
        }
    }
    for (const auto& [tag, bc] : m.bcs) {
        auto& s = section("bc");
        s.attributes["tag"] = std::to_string(tag);
        s.attributes["type"] = to_string(bc.type);
        add_list(s, "g", bc.data);
        add_list(s, "uh", bc.trace);
    }
    if (!m.init_u.empty() || !m.init_q.empty() || !m.init_w.empty()) {
        auto& s = section("init");
        add_list(s, "u", m.init_u);
        add_matrix(s, "q", m.init_q);
        add_list(s, "w", m.init_w);
    }
    if (!m.exact_u.empty() || !m.exact_q.empty()) {
        auto& s = section("exact");
        add_list(s, "u", m.exact_u);
        add_matrix(s, "q", m.exact_q);
    }
    return out;
}

std::string save_model(const PdeModel& model)
{
    return to_string(model_to_text(model));
}

void override_parameters(PdeModel& model, const std::map<int, double>& values)
{
    for (const auto& [k, v] : values) {
        if (k < 1 || k > model.nparam)
            throw ValidationError("parameter mu" + std::to_string(k) + " out of range (nparam=" +
                                  std::to_string(model.nparam) + ")");
        model.mu[static_cast<std::size_t>(k - 1)] = v;
    }
}

} // namespace ldg::model
