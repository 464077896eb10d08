#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <tuple>
#include <sstream>
#include <unordered_map>

#include "internal.hpp"
#include "ldg/error.hpp"

namespace ldg::mesh {

namespace {

class LineReader
{
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    std::size_t line() const { return line_; }

    std::string_view next(const char* what)
    {
        while (pos_ < text_.size()) {
            const auto nl = text_.find('\n', pos_);
            auto raw = text_.substr(pos_, nl == std::string_view::npos ? std::string_view::npos : nl - pos_);
            pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
            ++line_;
            while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ' || raw.back() == '\t'))
                raw.remove_suffix(1);
            while (!raw.empty() && (raw.front() == ' ' || raw.front() == '\t'))
                raw.remove_prefix(1);
            if (!raw.empty())
                return raw;
        }
        fail(std::string("unexpected end of file, expected ") + what);
    }

    [[noreturn]] void fail(const std::string& message) const
    {
        throw ParseError(message + " on line " + std::to_string(line_), line_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

std::vector<double> numbers(const LineReader& in, std::string_view line)
{
    std::vector<double> out;
    std::istringstream ss{std::string(line)};
    std::string tok;
    while (ss >> tok) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            in.fail("malformed number '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

long to_long(const LineReader& in, double v)
{
    if (v != std::floor(v))
        in.fail("expected an integer");
    return static_cast<long>(v);
}

struct MshType
{
    int dim;
    int nv;
    ElementKind kind;
};

std::optional<MshType> msh_type(int type)
{
    switch (type) {
    case 15: return MshType{0, 1, ElementKind::Point};
    case 1: return MshType{1, 2, ElementKind::Line};
    case 2: return MshType{2, 3, ElementKind::Tri};
    case 3: return MshType{2, 4, ElementKind::Quad};
    case 4: return MshType{3, 4, ElementKind::Tet};
    case 5: return MshType{3, 8, ElementKind::Hex};
    default: return std::nullopt;
    }
}

int msh_code(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Point: return 15;
    case ElementKind::Line: return 1;
    case ElementKind::Tri: return 2;
    case ElementKind::Quad: return 3;
    case ElementKind::Tet: return 4;
    case ElementKind::Hex: return 5;
    }
    return 0;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RawElement
{
    MshType type;
    int tag;
    std::vector<long> nodes;
    std::size_t line;
};

} // namespace

Mesh parse_msh(std::string_view text)
{
    LineReader in(text);
    std::unordered_map<long, Eigen::Vector3d> coords;
    std::vector<RawElement> elements;
    bool have_format = false, have_nodes = false, have_elements = false;

    while (!in.done()) {
        std::string_view head;
        try {
            head = in.next("section");
        } catch (const ParseError&) {
            break; // trailing blank lines
        }
        if (head.empty() || head.front() != '$')
            in.fail("expected a section header");
        const std::string name(head.substr(1));
        const std::string end = "$End" + name;
        if (name == "MeshFormat") {
            const auto v = numbers(in, in.next("format line"));
            if (v.size() < 2 || v[0] < 2.0 || v[0] >= 3.0)
                in.fail("unsupported MSH version (only 2.2 ASCII is read)");
            if (v[1] != 0)
                in.fail("binary MSH files are not supported");
            have_format = true;
        } else if (name == "Nodes") {
            const long n = to_long(in, numbers(in, in.next("node count")).at(0));
            for (long k = 0; k < n; ++k) {
                const auto v = numbers(in, in.next("node"));
                if (v.size() != 4)
                    in.fail("node lines need an id and three coordinates");
                coords[to_long(in, v[0])] = Eigen::Vector3d(v[1], v[2], v[3]);
            }
            have_nodes = true;
        } else if (name == "Elements") {
            const long n = to_long(in, numbers(in, in.next("element count")).at(0));
            for (long k = 0; k < n; ++k) {
                const auto v = numbers(in, in.next("element"));
                if (v.size() < 3)
                    in.fail("truncated element line");
                const auto type = msh_type(static_cast<int>(to_long(in, v[1])));
                if (!type)
                    in.fail("unsupported element type " + std::to_string(to_long(in, v[1])));
                const auto ntags = static_cast<std::size_t>(to_long(in, v[2]));
                if (v.size() != 3 + ntags + static_cast<std::size_t>(type->nv))
                    in.fail("element line has the wrong number of entries");
                RawElement el{*type, ntags ? static_cast<int>(to_long(in, v[3])) : 0, {}, in.line()};
                for (int j = 0; j < type->nv; ++j)
                    el.nodes.push_back(to_long(in, v[3 + ntags + static_cast<std::size_t>(j)]));
                elements.push_back(std::move(el));
            }
            have_elements = true;
        } else {
            // skip unknown sections such as $PhysicalNames
            while (in.next(end.c_str()) != end) {
            }
            continue;
        }
        if (in.next(end.c_str()) != end)
            in.fail("expected " + end);
    }
    if (!have_format)
        in.fail("missing $MeshFormat section");
    if (!have_nodes || !have_elements)
        in.fail("missing $Nodes or $Elements section");

    int dim = 0;
    for (const auto& el : elements)
        dim = std::max(dim, el.type.dim);
    if (dim == 0)
        throw ParseError("no volume elements in $Elements", in.line());

    Mesh mesh;
    mesh.nd = dim;
    std::optional<ElementKind> kind;
    std::map<long, int> renumber;
    std::vector<const RawElement*> volume;
    for (const auto& el : elements) {
        for (long id : el.nodes)
            if (!coords.count(id))
                throw ParseError("element references unknown node " + std::to_string(id) + " on line " +
                                     std::to_string(el.line),
                                 el.line);
        if (el.type.dim != dim)
            continue;
        if (kind && *kind != el.type.kind)
            throw ParseError("mixed element kinds are not supported", el.line);
        kind = el.type.kind;
        volume.push_back(&el);
        for (long id : el.nodes)
            renumber.emplace(id, 0);
    }
    mesh.kind = *kind;
    int next = 0;
    for (auto& [id, local] : renumber)
        local = next++;
    mesh.vertices.resize(dim, next);
    for (const auto& [id, local] : renumber)
        mesh.vertices.col(local) = coords[id].head(dim);
    mesh.connectivity.resize(num_vertices(mesh.kind), static_cast<Eigen::Index>(volume.size()));
    for (std::size_t e = 0; e < volume.size(); ++e)
        for (std::size_t k = 0; k < volume[e]->nodes.size(); ++k)
            mesh.connectivity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(e)) = renumber[volume[e]->nodes[k]];
    fix_orientation(mesh);

    std::map<std::vector<int>, std::pair<int, int>> faces;
    const auto& fvs = face_vertices(mesh.kind);
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (std::size_t f = 0; f < fvs.size(); ++f) {
            std::vector<int> key;
            for (int k : fvs[f])
                key.push_back(mesh.connectivity(k, e));
            std::sort(key.begin(), key.end());
            faces[key] = {e, static_cast<int>(f)};
        }
    for (const auto& el : elements) {
        if (el.type.dim != dim - 1)
            continue;
        std::vector<int> key;
        for (long id : el.nodes) {
            const auto it = renumber.find(id);
            if (it == renumber.end())
                throw ParseError("boundary entity does not lie on the volume mesh", el.line);
            key.push_back(it->second);
        }
        std::sort(key.begin(), key.end());
        const auto it = faces.find(key);
        if (it == faces.end())
            throw ParseError("boundary entity does not match an element face", el.line);
        mesh.boundary.push_back({it->second.first, it->second.second, el.tag});
    }
    std::sort(mesh.boundary.begin(), mesh.boundary.end(), [](const BoundaryFace& a, const BoundaryFace& b) {
        return std::tie(a.element, a.face) < std::tie(b.element, b.face);
    });
    set_straight_geometry(mesh, 1);
    return mesh;
}

Mesh import_msh(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open mesh file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_msh(ss.str());
}

std::string write_msh(const Mesh& mesh)
{
    std::ostringstream os;
    os << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.num_vertices() << "\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        os << v + 1;
        for (int r = 0; r < 3; ++r)
            os << ' ' << (r < mesh.nd ? fmt(mesh.vertices(r, v)) : "0");
        os << "\n";
    }
    os << "$EndNodes\n$Elements\n" << mesh.boundary.size() + static_cast<std::size_t>(mesh.num_elements()) << "\n";
    long id = 1;
    const auto& fvs = face_vertices(mesh.kind);
    const int fcode = msh_code(face_kind(mesh.kind));
    for (const auto& b : mesh.boundary) {
        os << id++ << ' ' << fcode << " 2 " << b.tag << ' ' << b.tag;
        for (int k : fvs[static_cast<std::size_t>(b.face)])
            os << ' ' << mesh.connectivity(k, b.element) + 1;
        os << "\n";
    }
    const int code = msh_code(mesh.kind);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        os << id++ << ' ' << code << " 2 0 0";
        for (Eigen::Index k = 0; k < mesh.connectivity.rows(); ++k)
            os << ' ' << mesh.connectivity(k, e) + 1;
        os << "\n";
    }
    os << "$EndElements\n";
    return os.str();
}

std::string dump_mesh(const Mesh& mesh)
{
    std::ostringstream os;
    os << "ldg-mesh 1\nkind " << to_string(mesh.kind) << "\nnd " << mesh.nd << "\norder " << mesh.order << "\n";
    auto columns = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                os << (r ? " " : "") << fmt(m(r, c));
            os << "\n";
        }
    };
    os << "vertices " << mesh.num_vertices() << "\n";
    columns(mesh.vertices);
    os << "elements " << mesh.num_elements() << "\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (Eigen::Index k = 0; k < mesh.connectivity.rows(); ++k)
            os << (k ? " " : "") << mesh.connectivity(k, e);
        os << "\n";
    }
    os << "nodes " << mesh.nodes.cols() << "\n";
    columns(mesh.nodes);
    os << "boundary " << mesh.boundary.size() << "\n";
    for (const auto& b : mesh.boundary)
        os << b.element << ' ' << b.face << ' ' << b.tag << "\n";
    return os.str();
}

Mesh parse_mesh_dump(std::string_view text)
{
    LineReader in(text);
    auto keyed = [&](const std::string& key) {
        const auto line = in.next(key.c_str());
        if (!line.starts_with(key + " "))
            in.fail("expected '" + key + "'");
        return std::string(line.substr(key.size() + 1));
    };
    if (keyed("ldg-mesh") != "1")
        in.fail("unsupported mesh dump version");
    Mesh mesh;
    mesh.kind = element_kind_from_string(keyed("kind"));
    mesh.nd = std::stoi(keyed("nd"));
    mesh.order = std::stoi(keyed("order"));
    auto matrix = [&](const std::string& key, int rows) {
        const long n = std::stol(keyed(key));
        Eigen::MatrixXd m(rows, n);
        for (long c = 0; c < n; ++c) {
            const auto v = numbers(in, in.next(key.c_str()));
            if (static_cast<int>(v.size()) != rows)
                in.fail("wrong number of entries");
            for (int r = 0; r < rows; ++r)
                m(r, c) = v[static_cast<std::size_t>(r)];
        }
        return m;
    };
    mesh.vertices = matrix("vertices", mesh.nd);
    mesh.connectivity = matrix("elements", num_vertices(mesh.kind)).cast<int>();
    mesh.nodes = matrix("nodes", mesh.nd);
    const Eigen::MatrixXd b = matrix("boundary", 3);
    for (Eigen::Index c = 0; c < b.cols(); ++c)
        mesh.boundary.push_back({int(b(0, c)), int(b(1, c)), int(b(2, c))});
    if (mesh.nodes.cols() != Eigen::Index(mesh.num_elements()) * mesh.nodes_per_element())
        in.fail("node count does not match elements and order");
    if (mesh.connectivity.size() > 0 &&
        (mesh.connectivity.minCoeff() < 0 || mesh.connectivity.maxCoeff() >= mesh.num_vertices()))
        in.fail("element references an unknown vertex");
    return mesh;
}

} // namespace ldg::mesh
