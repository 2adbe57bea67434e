#pragma once

#include <vector>

#include "asep/model.hpp"

namespace asep::detail {

// M equispaced quadrature nodes on the circle |z| = radius, starting at the
// positive real axis.  M == 0 gives an empty vector.
std::vector<cxl> circle_nodes(double radius, int M);

}  // namespace asep::detail
