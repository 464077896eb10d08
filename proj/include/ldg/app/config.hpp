#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldg/mesh/mesh.hpp"
#include "ldg/model/sectioned_text.hpp"
#include "ldg/solver/solver.hpp"

namespace ldg::app {

struct CurveSpec
{
    int tag = 0;
    Eigen::VectorXd center;
    double radius = 1.0;
};

struct MeshSource
{
    enum class Type
    {
        Structured,
        Msh,
    };
    Type type = Type::Structured;
    ElementKind element = ElementKind::Quad;
    std::vector<int> counts;
    mesh::Box box;
    std::vector<int> periodic_axes; ///< 0-based
    std::filesystem::path path;
    int order = 1; ///< geometry order
    std::optional<CurveSpec> curve;
};

/// Run configuration read from `[run]`, `[mesh]`, `[solver]`, `[output]`,
/// `[mu]` and `[diagnostics]` sections.
struct RunConfig
{
    std::filesystem::path model_path;
    MeshSource mesh;
    int p = 1;
    int quad_degree = -1;
    int stages = 1;
    int order = 1;
    std::optional<double> dt;
    std::optional<int> nt;
    std::optional<double> tf;
    /// Empty means: steady exactly when every mass entry is zero.
    std::optional<bool> steady;

    solver::NewtonOptions newton;
    solver::PreconditionerSpec precond{solver::PreconditionerKind::Composite, 10, 10};

    std::filesystem::path out_dir;
    int output_every = 0; ///< VTU cadence in steps; 0 writes only the final state
    bool vtu = false;
    std::vector<std::string> field_names;
    std::map<int, double> mu;
    std::vector<std::pair<std::string, std::string>> diagnostics;
};

/// Throws ParseError or ValidationError. Relative paths resolve against `base_dir`.
RunConfig config_from_text(const model::SectionedText& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Fills the missing one of (dt, nt, tf) and checks dt*nt = tf when all are given.
void resolve_time(RunConfig& config, double model_tf);

/// Value of a constant expression such as "-2*pi".
double constant_value(const std::string& text);

/// Comma-separated list of constant expressions or integers.
std::vector<double> parse_number_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

mesh::Mesh build_mesh(const MeshSource& source);
std::vector<mesh::PeriodicPair> periodic_pairs(const MeshSource& source);

} // namespace ldg::app
