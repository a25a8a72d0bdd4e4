#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kaclab {

struct TransportResult {
  double cost = 0.0;       // primal objective
  double dual_value = 0.0; // sum supply*u + demand*v at the final potentials
  std::size_t pivots = 0;
};

// Balanced transportation problem min sum c_ij x_ij, solved by the
// transportation simplex (northwest-corner start, block pivot search).
// cost is row-major m x n.
TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                std::span<const double> cost);

}  // namespace kaclab
