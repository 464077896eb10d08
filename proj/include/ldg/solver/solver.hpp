#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ldg::solver {

using Vec = Eigen::VectorXd;

struct LinearOperator
{
    Eigen::Index n = 0;
    std::function<Vec(const Vec&)> apply;
};

/// z = P r. An empty function means identity.
using Preconditioner = std::function<Vec(const Vec&)>;

/// Dot product; a fixed left-to-right summation when `ordered`.
double dot(const Vec& a, const Vec& b, bool ordered);

struct GmresOptions
{
    double rel_tol = 1e-8;
    int restart = 30;
    int max_iter = 200;
    bool reproducible = false;
};

struct GmresResult
{
    Vec x;
    int iterations = 0;
    bool converged = false;
    bool breakdown = false;
    double residual = 0.0;        ///< true ||b - A x|| at exit
    std::vector<double> history; ///< estimated residual norm after each inner iteration
};

/// Right-preconditioned restarted GMRES (modified Gram-Schmidt with one
/// selective reorthogonalization pass, Givens rotations). Starts from zero.
GmresResult gmres(const LinearOperator& A, const Vec& b, const Preconditioner& M, const GmresOptions& options);

enum class JvMode
{
    FiniteDifference,
    Tangent,
};

using ResidualFn = std::function<Vec(const Vec&)>;
/// (u, v) -> dR/du [v]
using TangentFn = std::function<Vec(const Vec&, const Vec&)>;

/// Forward difference with eps = sqrt(eps_mach) (1 + ||u||_inf) / ||v||_2, or
/// the exact tangent. `Ru` may supply R(u) to save one evaluation.
Vec jacobian_vector(const ResidualFn& R, const Vec& u, const Vec& v, JvMode mode, const TangentFn& tangent = {},
                    const Vec* Ru = nullptr);

/// Per-block dense LU of an operator probed with colored unit directions.
class BlockJacobi
{
public:
    BlockJacobi() = default;
    /// `colors[b]` for each block b; blocks sharing a color must not couple.
    static BlockJacobi build(const LinearOperator& J, int block_size, const std::vector<int>& colors);

    Vec apply(const Vec& r) const;
    int num_blocks() const { return static_cast<int>(lu_.size()); }
    int regularized_blocks() const { return regularized_; }
    /// Number of operator applications used while probing.
    int probes() const { return probes_; }

private:
    int block_ = 0;
    int regularized_ = 0;
    int probes_ = 0;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

/// Deflation P r = W H^-1 W^T r + (I - W W^T) r with H = W^T J W.
class ReducedBasis
{
public:
    ReducedBasis() = default;
    /// Orthonormalizes the snapshots (most recent last) and keeps up to k of the
    /// newest independent directions.
    static ReducedBasis build(const std::vector<Vec>& snapshots, const LinearOperator& J, int k);

    Vec apply(const Vec& r) const;
    int rank() const { return static_cast<int>(W_.cols()); }
    const Eigen::MatrixXd& basis() const { return W_; }

private:
    Eigen::MatrixXd W_;
    Eigen::PartialPivLU<Eigen::MatrixXd> H_;
};

/// Most recent Newton updates, used as reduced-basis snapshots.
class SnapshotHistory
{
public:
    explicit SnapshotHistory(std::size_t capacity = 10) : capacity_(capacity) {}
    void push(const Vec& v);
    std::vector<Vec> snapshots() const { return {items_.begin(), items_.end()}; }
    std::size_t size() const { return items_.size(); }
    void clear() { items_.clear(); }

private:
    std::size_t capacity_;
    std::deque<Vec> items_;
};

enum class PreconditionerKind
{
    Identity,
    BlockJacobi,
    ReducedBasis,
    Composite,
};

PreconditionerKind preconditioner_from_string(const std::string& name);
std::string to_string(PreconditionerKind kind);

struct PreconditionerSpec
{
    PreconditionerKind kind = PreconditionerKind::Identity;
    int rb_rank = 10;
    /// Block-Jacobi blocks are rebuilt every `refresh` factory calls.
    int refresh = 1;
};

/// Builds a preconditioner for the current Newton Jacobian.
using PreconditionerFactory = std::function<Preconditioner(const Vec& u, const LinearOperator& J)>;

/// Stateful factory for a spec. Composite: z = BJ^-1 (RB(r)) with the reduced
/// basis built for the block-Jacobi preconditioned operator.
PreconditionerFactory make_preconditioner_factory(const PreconditionerSpec& spec, int block_size,
                                                  std::vector<int> colors,
                                                  std::shared_ptr<SnapshotHistory> snapshots);

enum class Forcing
{
    Adaptive, ///< eta = min(0.1, sqrt(||R||))
    Tight,    ///< eta chosen so one exact-Newton step meets the tolerance
};

struct NewtonOptions
{
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;
    int max_iter = 20;
    bool line_search = true;
    JvMode mode = JvMode::Tangent;
    Forcing forcing = Forcing::Adaptive;
    GmresOptions gmres{};
    /// Receives every accepted Newton update when set.
    std::shared_ptr<SnapshotHistory> snapshots;
};

struct SolveStats
{
    int newton_iters = 0;
    std::vector<double> residual_norms; ///< ||R|| before each iteration and at exit
    std::vector<int> gmres_iters;       ///< per Newton step
    double final_residual = 0.0;
    bool converged = false;
    std::string message;

    int total_gmres() const;
};

struct NonlinearSystem
{
    Eigen::Index n = 0;
    ResidualFn residual;
    TangentFn tangent; ///< optional; required for JvMode::Tangent
};

struct NewtonResult
{
    Vec u;
    SolveStats stats;
};

/// Inexact Newton with GMRES inner solves and optional backtracking (at most
/// 8 halvings). Never throws on divergence: `stats.converged` reports it.
NewtonResult newton_solve(const NonlinearSystem& system, Vec u0, const NewtonOptions& options,
                          const PreconditionerFactory& factory = {});

} // namespace ldg::solver
