#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldg/poly/reference.hpp"

namespace ldg::disc {
class Discretization;
}

namespace ldg::app {

/// Linear sub-cells of an order-p nodal lattice, as lattice point indices.
std::vector<std::vector<int>> lattice_cells(ElementKind kind, int p);

/// VTK cell type id of the linear sub-cells of `kind`.
int vtk_cell_type(ElementKind kind);

/// ASCII VTU with every element split into linear cells on its solution node
/// lattice. Points are duplicated per element so discontinuities survive.
/// Point data: one array per u component (named by `names`, default u1..),
/// then q components for wave models and w components.
std::string vtu_string(const disc::Discretization& d, const Eigen::VectorXd& U,
                       const std::vector<std::string>& names = {});

/// Writes vtu_string to `path`; throws Error on I/O failure.
void export_vtu(const disc::Discretization& d, const Eigen::VectorXd& U, const std::vector<std::string>& names,
                const std::filesystem::path& path);

} // namespace ldg::app
