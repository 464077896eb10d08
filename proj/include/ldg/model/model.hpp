#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldg/expr/graph.hpp"
#include "ldg/model/sectioned_text.hpp"

namespace ldg::model {

/// Convection (no gradient equation), diffusion (q + grad u = 0) or wave
/// (dq/dt + grad u = 0, optional displacement ODE).
enum class ModelKind
{
    Convection,
    Diffusion,
    Wave,
};

char kind_letter(ModelKind kind);
ModelKind kind_from_letter(const std::string& letter);

enum class BcType
{
    Dirichlet, ///< data g = boundary state
    Neumann,   ///< data g = normal flux
    Absorbing, ///< data g = normal flux in terms of the interior trace; optional uh trace
    Periodic,  ///< partner tag handled by the face topology
};

std::string to_string(BcType type);
BcType bc_type_from_string(const std::string& name);

struct BoundaryCondition
{
    BcType type = BcType::Dirichlet;
    std::vector<std::string> data;  ///< g1..g_ncu
    std::vector<std::string> trace; ///< optional uh1..uh_ncu override
};

enum class TraceRule
{
    Switch,  ///< one side chosen by n . beta
    Central, ///< average of both sides
};

enum class GradientTrace
{
    Opposite, ///< side opposite to the state trace
    Central,  ///< average of both sides
};

/// Numerical trace and flux choices for interior faces.
struct NumericalFluxSpec
{
    TraceRule trace = TraceRule::Switch;
    GradientTrace gradient = GradientTrace::Opposite;
    /// Switch direction; empty means (1,...,1)/sqrt(nd).
    std::vector<double> switch_vector;
    /// Stabilization per equation (one expression broadcasts to all).
    std::vector<std::string> tau{"1"};
    /// Local wave-speed bound for Lax-Friedrichs on convection models.
    std::string wavespeed;
    /// User overrides; empty means default.
    std::vector<std::string> uhat;
    std::vector<std::string> fhat;
};

struct OdeSpec
{
    double alpha = 1.0;
    double beta = 0.0;
    std::vector<std::string> source; ///< s_w, nw entries
};

/// Symbolic description of one first-order PDE system. Expressions are kept as
/// text and compiled by the discretization.
struct PdeModel
{
    std::string name;
    ModelKind kind = ModelKind::Diffusion;
    int ncu = 1;
    int nd = 1;
    int nw = 0;
    int nparam = 0;
    double tf = 0.0;
    bool displacement = false; ///< wave models: recover the displacement via the ODE

    std::vector<double> mu;
    std::vector<std::string> mass;   ///< ncu
    std::vector<std::string> flux;   ///< ncu*nd, row-major f{i}_{j}
    std::vector<std::string> source; ///< ncu
    OdeSpec ode;
    NumericalFluxSpec numflux;
    std::map<int, BoundaryCondition> bcs;

    std::vector<std::string> init_u;
    std::vector<std::string> init_q;
    std::vector<std::string> init_w;

    /// Optional manufactured/analytic solution for error norms.
    std::vector<std::string> exact_u;
    std::vector<std::string> exact_q;

    bool has_gradient() const { return kind != ModelKind::Convection; }
    /// True when every mass expression is literally zero.
    bool is_steady() const;
    const std::string& flux_entry(int i, int j) const { return flux.at(static_cast<std::size_t>(i * nd + j)); }
};

/// Reserved symbols: x1..x{nd}, t, u1..u{ncu}, q{i}_{j}, w1..w{nw}, mu1..mu{nparam},
/// and on faces n1..n{nd}, up{i}, qp{i}_{j} (exterior trace), uh{i} (state trace).
enum class SymbolContext
{
    Volume,
    Boundary,
    Face,
};

expr::SymbolTable symbol_table(const PdeModel& model, SymbolContext context);

struct Diagnostic
{
    std::string code;
    std::string message;
};

/// Empty iff the model is consistent. Codes: dimension-mismatch, unknown-symbol,
/// parse-error, gradient-in-convection, missing-ode-state, invalid-ode,
/// parameter-count, invalid-size, invalid-bc.
std::vector<Diagnostic> validate(const PdeModel& model);

PdeModel model_from_text(const SectionedText& text);
/// Parses and validates; throws ParseError or ValidationError.
PdeModel load_model(const std::filesystem::path& path);
PdeModel load_model_string(std::string_view text);
SectionedText model_to_text(const PdeModel& model);
std::string save_model(const PdeModel& model);

/// Apply `muK=value` overrides.
void override_parameters(PdeModel& model, const std::map<int, double>& values);

struct BuiltinOptions
{
    int nd = 2;
};

/// Library of classical models: linear_convection, burgers, shallow_water, euler,
/// poisson, convection_diffusion, compressible_ns, wave, linear_elasticity.
PdeModel builtin_model(const std::string& name, const BuiltinOptions& options = {});
std::vector<std::string> builtin_names();

} // namespace ldg::model
