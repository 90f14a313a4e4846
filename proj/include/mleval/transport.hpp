#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mleval {

// Dense row-major matrix of reals.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct TransportPlan {
  Matrix flow;            // t(l, k) >= 0
  double objective = 0.0; // sum of flow * cost
  std::size_t pivots = 0;
};

// Absolute tolerance on |sum(supply) - sum(demand)|.
inline constexpr double kMarginalTolerance = 1e-9;

// Exact minimum-cost plan for the balanced transportation problem, found by
// the transportation simplex (MODI potentials on a spanning-tree basis,
// north-west-corner start). Entering cells follow Dantzig's most-negative
// rule with lowest-index ties; after a run of degenerate pivots the solver
// switches to Bland's lowest-index rule, which cannot cycle.
//
// Throws InfeasibleMarginals when the totals differ, InvalidArgument for
// empty sides, negative weights, or costs that are negative or not finite,
// and NumericalFailure if the pivot budget is exhausted.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand, const Matrix& costs);

}  // namespace mleval
