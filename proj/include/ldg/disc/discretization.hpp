#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldg/disc/master.hpp"
#include "ldg/mesh/mesh.hpp"
#include "ldg/model/model.hpp"

namespace ldg::disc {

struct DiscOptions
{
    int p = 1;
    int quad_degree = -1; ///< < 0 selects 2p+1
    std::vector<mesh::PeriodicPair> periodic;
};

/// Element-contiguous unknown layout. Each element owns one block
/// [u (ncu x nn) | q (ncu*nd x nn, wave models only) | w (nw x nn)],
/// with the node index running fastest.
struct Layout
{
    int nn = 0;
    int ncu = 0;
    int nd = 0;
    int nq = 0; ///< q rows stored in the state: ncu*nd for wave models, else 0
    int nw = 0;
    int ne = 0;

    int block() const { return nn * (ncu + nq + nw); }
    Eigen::Index size() const { return Eigen::Index(block()) * ne; }
    Eigen::Index u(int e, int c, int i) const { return Eigen::Index(e) * block() + c * nn + i; }
    Eigen::Index q(int e, int c, int j, int i) const { return Eigen::Index(e) * block() + (ncu + c * nd + j) * nn + i; }
    Eigen::Index w(int e, int k, int i) const { return Eigen::Index(e) * block() + (ncu + nq + k) * nn + i; }
};

namespace detail {
struct Impl;
}

/// Matrix-free LDG discretization of one model on one mesh.
///
/// The semi-discrete system is M(U) dU/dt = -R(U, t). For diffusion models the
/// gradient q is reconstructed element by element and is not part of U. For
/// wave models q is evolved and the ODE states w satisfy alpha w_t + beta w = s_w
/// pointwise at the nodes.
class Discretization
{
public:
    Discretization(model::PdeModel model, mesh::Mesh mesh, const DiscOptions& options = {});
    ~Discretization();
    Discretization(Discretization&&) noexcept;
    Discretization& operator=(Discretization&&) noexcept;

    const model::PdeModel& model() const;
    const mesh::Mesh& mesh() const;
    const mesh::FaceTopology& topology() const;
    const MasterElement& master() const;
    const Layout& layout() const;
    Eigen::Index size() const { return layout().size(); }

    /// Physical node coordinates, nd x (ne*nn).
    const Eigen::MatrixXd& node_coordinates() const;
    /// Physical volume quadrature points, nd x (ne*nq), and weights times det J.
    const Eigen::MatrixXd& quadrature_points() const;
    const Eigen::VectorXd& quadrature_weights() const;
    /// Values of u components at volume quadrature points, (ne*nq) x ncu.
    Eigen::MatrixXd values_at_quadrature(const Eigen::VectorXd& U) const;
    /// Same for a q vector laid out as returned by compute_mixed, (ne*nq) x (ncu*nd).
    Eigen::MatrixXd gradient_at_quadrature(const Eigen::VectorXd& U, double t) const;

    /// Nodal interpolation of the model's initial conditions at t = 0.
    Eigen::VectorXd interpolate_initial() const;
    /// Nodal interpolation of arbitrary expressions (empty lists leave zeros).
    Eigen::VectorXd interpolate(const std::vector<std::string>& u, const std::vector<std::string>& q,
                                const std::vector<std::string>& w, double t) const;

    Eigen::VectorXd residual(const Eigen::VectorXd& U, double t) const;
    /// Same contract; tensor-product elements only.
    Eigen::VectorXd residual_sumfac(const Eigen::VectorXd& U, double t) const;
    /// Directional derivative dR/dU [V] by forward tangents. `R` receives R(U) when given.
    Eigen::VectorXd residual_tangent(const Eigen::VectorXd& U, const Eigen::VectorXd& V, double t,
                                     Eigen::VectorXd* R = nullptr) const;

    /// q = -grad u reconstructed element-locally (diffusion models). Layout per
    /// element: (c*nd + j)*nn + i, block ncu*nd*nn.
    Eigen::VectorXd compute_mixed(const Eigen::VectorXd& U, double t) const;

    /// M(U) X.
    Eigen::VectorXd apply_mass(const Eigen::VectorXd& U, const Eigen::VectorXd& X, double t) const;
    /// d/ds M(U + sV) X at s = 0.
    Eigen::VectorXd apply_mass_tangent(const Eigen::VectorXd& U, const Eigen::VectorXd& V, const Eigen::VectorXd& X,
                                       double t) const;
    /// Inverse of the unit-coefficient mass operator: element mass matrices on
    /// u and q, 1/alpha on w.
    Eigen::VectorXd apply_inverse_unit_mass(const Eigen::VectorXd& X) const;
    /// False when every mass entry is zero (steady model).
    bool has_mass() const;

    /// Throws NonFiniteError naming the first element holding a non-finite value.
    void check_finite(const Eigen::VectorXd& U) const;

    /// Face-sharing neighbours of each element (periodic faces included).
    const std::vector<std::vector<int>>& element_neighbors() const;
    /// Element distance over which the residual couples unknowns: 2 for
    /// diffusion (through the reconstructed gradient), 1 otherwise.
    int coupling_distance() const;
    /// Greedy coloring where equal colors are more than `distance` apart.
    std::vector<int> color_elements(int distance) const;

    /// Multiply-add count of volume basis contractions accumulated since the last reset.
    long long volume_operations() const;
    void reset_operation_count() const;

private:
    std::unique_ptr<detail::Impl> impl_;
};

} // namespace ldg::disc
