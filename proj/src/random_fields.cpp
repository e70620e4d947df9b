#include "stochfv/random_fields.hpp"

#include <bit>
#include <cmath>

namespace stochfv {

double sample_shock_parameter(const RandomFieldSpec& spec, RngStream& stream) {
  spec.validate();
  if (spec.kind != FieldKind::UncertainShock)
    throw InvalidParamError("sample_shock_parameter: field kind is not a shock");
  return stream.uniform(-spec.half_width, spec.half_width);
}

FieldSample shock_initial_field(const RandomFieldSpec& spec, double offset,
                                const GridSpec& grid) {
  spec.validate();
  grid.validate();
  if (spec.kind != FieldKind::UncertainShock)
    throw InvalidParamError("shock_initial_field: field kind is not a shock");
  if (!(offset >= -spec.half_width) || !(offset <= spec.half_width))
    throw InvalidParamError("shock_initial_field: offset outside the support");
  FieldSample out;
  out.grid = grid;
  out.time = 0.0;
  out.values.resize(grid.n_cells);
  const double shock_x = spec.center + offset;
  for (std::int64_t i = 0; i < grid.n_cells; ++i)
    out.values[i] = grid.midpoint(i) < shock_x ? spec.left : spec.right;
  return out;
}

std::vector<double> sample_fbm_nodes(double hurst, int depth, RngStream& stream) {
  if (!(hurst > 0.0) || !(hurst < 1.0))
    throw InvalidParamError("fbm: hurst must lie in (0, 1)");
  if (depth < 0 || depth > 30)
    throw InvalidParamError("fbm: depth must lie in [0, 30]");
  const std::int64_t n = std::int64_t{1} << depth;
  std::vector<double> nodes(n + 1, 0.0);
  nodes[0] = 0.0;
  nodes[n] = stream.normal();
  const double c = 1.0 - std::pow(2.0, 2.0 * hurst - 2.0);
  for (int l = 0; l < depth; ++l) {
    const double scale = std::sqrt(c / std::pow(2.0, 2.0 * l * hurst));
    const std::int64_t span = n >> l;
    const std::int64_t half = span >> 1;
    for (std::int64_t j = 0; j < (std::int64_t{1} << l); ++j) {
      const std::int64_t left = j * span;
      nodes[left + half] =
          0.5 * (nodes[left] + nodes[left + span]) + scale * stream.normal();
    }
  }
  return nodes;
}

FieldSample fbm_initial_field(const RandomFieldSpec& spec, const GridSpec& grid,
                              RngStream& stream) {
  spec.validate();
  grid.validate();
  if (spec.kind != FieldKind::FractionalBrownian)
    throw InvalidParamError("fbm_initial_field: field kind is not fbm");
  const int depth = std::countr_zero(static_cast<std::uint64_t>(grid.n_cells));
  const std::vector<double> nodes = sample_fbm_nodes(spec.hurst, depth, stream);
  FieldSample out;
  out.grid = grid;
  out.time = 0.0;
  out.values.assign(nodes.begin(), nodes.end() - 1);  // left node of each cell
  return out;
}

FieldSample initial_sample(const RandomFieldSpec& spec, const GridSpec& grid,
                           std::uint64_t master_seed, std::int64_t level,
                           std::uint64_t sample_index) {
  RngStream stream = derive_stream(master_seed, level, sample_index);
  if (spec.kind == FieldKind::UncertainShock) {
    const double offset = sample_shock_parameter(spec, stream);
    return shock_initial_field(spec, offset, grid);
  }
  return fbm_initial_field(spec, grid, stream);
}

}  // namespace stochfv
