#pragma once

#include "ldg/mesh/mesh.hpp"

namespace ldg::mesh {

/// Reorder vertices of negatively oriented elements.
void fix_orientation(Mesh& mesh);

} // namespace ldg::mesh
