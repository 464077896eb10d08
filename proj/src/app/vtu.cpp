#include "ldg/app/vtu.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <functional>
#include <fstream>
#include <map>
#include <sstream>

#include "ldg/disc/discretization.hpp"
#include "ldg/error.hpp"

namespace ldg::app {

std::vector<std::vector<int>> lattice_cells(ElementKind kind, int p)
{
    const auto idx = lattice_indices(kind, p);
    std::map<std::array<int, 3>, int> at;
    for (std::size_t m = 0; m < idx.size(); ++m)
        at[idx[m]] = static_cast<int>(m);
    auto id = [&](int i, int j, int k) { return at.at({i, j, k}); };

    std::vector<std::vector<int>> cells;
    switch (kind) {
    case ElementKind::Line:
        for (int i = 0; i < p; ++i)
            cells.push_back({id(i, 0, 0), id(i + 1, 0, 0)});
        break;
    case ElementKind::Quad:
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i)
                cells.push_back({id(i, j, 0), id(i + 1, j, 0), id(i + 1, j + 1, 0), id(i, j + 1, 0)});
        break;
    case ElementKind::Hex:
        for (int k = 0; k < p; ++k)
            for (int j = 0; j < p; ++j)
                for (int i = 0; i < p; ++i)
                    cells.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k), id(i, j + 1, k),
                                     id(i, j, k + 1), id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1),
                                     id(i, j + 1, k + 1)});
        break;
    case ElementKind::Tri:
        for (int j = 0; j < p; ++j)
            for (int i = 0; i + j < p; ++i) {
                cells.push_back({id(i, j, 0), id(i + 1, j, 0), id(i, j + 1, 0)});
                if (i + j < p - 1)
                    cells.push_back({id(i + 1, j, 0), id(i + 1, j + 1, 0), id(i, j + 1, 0)});
            }
        break;
    case ElementKind::Tet:
        for (int k = 0; k < p; ++k)
            for (int j = 0; j + k < p; ++j)
                for (int i = 0; i + j + k < p; ++i) {
                    cells.push_back({id(i, j, k), id(i + 1, j, k), id(i, j + 1, k), id(i, j, k + 1)});
                    if (i + j + k < p - 1) {
                        // octahedron split along the a-f diagonal
                        const int a = id(i + 1, j, k), b = id(i, j + 1, k), c = id(i, j, k + 1);
                        const int dd = id(i + 1, j + 1, k), e = id(i + 1, j, k + 1), f = id(i, j + 1, k + 1);
                        cells.push_back({a, f, b, dd});
                        cells.push_back({a, f, dd, e});
                        cells.push_back({a, f, e, c});
                        cells.push_back({a, f, c, b});
                    }
                    if (i + j + k < p - 2)
                        cells.push_back({id(i + 1, j + 1, k), id(i + 1, j, k + 1), id(i, j + 1, k + 1),
                                         id(i + 1, j + 1, k + 1)});
                }
        break;
    default: throw Error("no linear subdivision for " + to_string(kind));
    }
    return cells;
}

int vtk_cell_type(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Line: return 3;
    case ElementKind::Tri: return 5;
    case ElementKind::Quad: return 9;
    case ElementKind::Tet: return 10;
    case ElementKind::Hex: return 12;
    default: throw Error("no VTK cell type for " + to_string(kind));
    }
}

namespace {

// Values below 1e-13 of the array's magnitude are written as 0 so that
// roundoff noise does not leak into the 12-digit text.
std::string num(double v, double scale)
{
    if (std::abs(v) < 1e-13 * scale)
        v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

std::string vtu_string(const disc::Discretization& d, const Eigen::VectorXd& U, const std::vector<std::string>& names)
{
    const auto& L = d.layout();
    const int p = d.master().p;
    const auto cells = lattice_cells(d.master().kind, p);
    const int type = vtk_cell_type(d.master().kind);
    const Eigen::MatrixXd& X = d.node_coordinates();
    const Eigen::Index npts = Eigen::Index(L.ne) * L.nn;

    std::vector<std::string> fields;
    std::vector<std::function<Eigen::Index(int, int)>> where;
    for (int c = 0; c < L.ncu; ++c) {
        fields.push_back(c < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                            : "u" + std::to_string(c + 1));
        where.push_back([&L, c](int e, int i) { return L.u(e, c, i); });
    }
    for (int c = 0; c < L.nq / std::max(1, L.nd); ++c)
        for (int j = 0; j < L.nd; ++j) {
            fields.push_back("q" + std::to_string(c + 1) + "_" + std::to_string(j + 1));
            where.push_back([&L, c, j](int e, int i) { return L.q(e, c, j, i); });
        }
    for (int k = 0; k < L.nw; ++k) {
        fields.push_back("w" + std::to_string(k + 1));
        where.push_back([&L, k](int e, int i) { return L.w(e, k, i); });
    }

    std::ostringstream os;
    os << "<?xml version=\"1.0\"?>\n"
       << "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
       << "  <UnstructuredGrid>\n"
       << "    <Piece NumberOfPoints=\"" << npts << "\" NumberOfCells=\"" << cells.size() * L.ne << "\">\n"
       << "      <PointData>\n";
    for (std::size_t f = 0; f < fields.size(); ++f) {
        os << "        <DataArray type=\"Float64\" Name=\"" << fields[f] << "\" format=\"ascii\">\n";
        double scale = 0.0;
        for (int e = 0; e < L.ne; ++e)
            for (int i = 0; i < L.nn; ++i)
                scale = std::max(scale, std::abs(U[where[f](e, i)]));
        for (int e = 0; e < L.ne; ++e) {
            os << "         ";
            for (int i = 0; i < L.nn; ++i)
                os << ' ' << num(U[where[f](e, i)], scale);
            os << '\n';
        }
        os << "        </DataArray>\n";
    }
    os << "      </PointData>\n"
       << "      <Points>\n"
       << "        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
    const double extent = X.size() ? X.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < npts; ++k) {
        os << "         ";
        for (int r = 0; r < 3; ++r)
            os << ' ' << num(r < X.rows() ? X(r, k) : 0.0, extent);
        os << '\n';
    }
    os << "        </DataArray>\n"
       << "      </Points>\n"
       << "      <Cells>\n"
       << "        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n";
    for (int e = 0; e < L.ne; ++e)
        for (const auto& c : cells) {
            os << "         ";
            for (int v : c)
                os << ' ' << Eigen::Index(e) * L.nn + v;
            os << '\n';
        }
    os << "        </DataArray>\n"
       << "        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n";
    long long offset = 0;
    for (int e = 0; e < L.ne; ++e)
        for (const auto& c : cells) {
            offset += static_cast<long long>(c.size());
            os << "          " << offset << '\n';
        }
    os << "        </DataArray>\n"
       << "        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
    for (std::size_t k = 0; k < cells.size() * L.ne; ++k)
        os << "          " << type << '\n';
    os << "        </DataArray>\n"
       << "      </Cells>\n"
       << "    </Piece>\n"
       << "  </UnstructuredGrid>\n"
       << "</VTKFile>\n";
    return os.str();
}

void export_vtu(const disc::Discretization& d, const Eigen::VectorXd& U, const std::vector<std::string>& names,
                const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open '" + path.string() + "' for writing");
    out << vtu_string(d, U, names);
    if (!out)
        throw Error("failed writing '" + path.string() + "'");
}

} // namespace ldg::app
