#pragma once

#include <cstdint>
#include <vector>

#include "stochfv/grid.hpp"
#include "stochfv/rng.hpp"

namespace stochfv {

enum class FieldKind { UncertainShock, FractionalBrownian };

// Description of the random initial data. The shock family is a step
// u = left for x < center + X, u = right otherwise, with X uniform on
// [-half_width, half_width]. The rough family is a midpoint-displacement
// path with Hurst index `hurst`, pinned to 0 at x = a and to a standard
// normal draw at x = b.
struct RandomFieldSpec {
  FieldKind kind = FieldKind::UncertainShock;
  double left = 1.0;
  double right = 0.0;
  double center = 0.5;
  double half_width = 0.1;
  double hurst = 0.5;

  void validate() const {
    if (kind == FieldKind::UncertainShock) {
      if (!(half_width > 0.0))
        throw InvalidParamError("field: half_width must be positive");
    } else {
      if (!(hurst > 0.0) || !(hurst < 1.0))
        throw InvalidParamError("field: hurst must lie in (0, 1)");
    }
  }
};

// One draw of the shock offset, uniform on [-half_width, half_width].
double sample_shock_parameter(const RandomFieldSpec& spec, RngStream& stream);

// Cell-midpoint projection of the step profile for a given offset.
FieldSample shock_initial_field(const RandomFieldSpec& spec, double offset,
                                const GridSpec& grid);

// Midpoint-displacement path on 2^depth + 1 equispaced nodes: node 0 is 0,
// the last node is a standard normal draw, and each bisection level l adds
// sqrt((1 - 2^(2H-2)) / 2^(2lH)) times a fresh normal to the span-endpoint
// average. Levels are consumed coarse to fine, left to right, so a depth
// k-1 path drawn from the same stream is the restriction of the depth k
// path to every second node, bit for bit.
std::vector<double> sample_fbm_nodes(double hurst, int depth, RngStream& stream);

// Initial field whose cell i takes the value of node i (left node of the
// cell) on a grid of 2^depth cells.
FieldSample fbm_initial_field(const RandomFieldSpec& spec, const GridSpec& grid,
                              RngStream& stream);

// Uniform entry point used by the estimators: draws the initial field for
// sample `sample_index` of `level` from its own counter-based stream. Two
// calls with the same triple give bit-identical fields; calls with the same
// triple but nested grids give the coupled coarse/fine pair.
FieldSample initial_sample(const RandomFieldSpec& spec, const GridSpec& grid,
                           std::uint64_t master_seed, std::int64_t level,
                           std::uint64_t sample_index);

}  // namespace stochfv
