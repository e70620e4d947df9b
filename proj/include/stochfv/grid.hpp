#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stochfv/errors.hpp"

namespace stochfv {

enum class Boundary { Outflow, Periodic };

inline bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Uniform 1D cell grid over [a, b]. Cell counts are restricted to powers of
// two so that grids at consecutive refinement levels nest exactly.
struct GridSpec {
  std::int64_t n_cells = 1;
  double a = 0.0;
  double b = 1.0;
  Boundary boundary = Boundary::Outflow;

  double dx() const { return (b - a) / static_cast<double>(n_cells); }
  double midpoint(std::int64_t i) const {
    return a + (static_cast<double>(i) + 0.5) * dx();
  }

  void validate() const {
    if (!is_power_of_two(n_cells))
      throw InvalidParamError("grid: n_cells must be a positive power of two, got " +
                              std::to_string(n_cells));
    if (!(a < b)) throw InvalidParamError("grid: requires a < b");
  }

  bool operator==(const GridSpec& o) const {
    return n_cells == o.n_cells && a == o.a && b == o.b && boundary == o.boundary;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

inline GridSpec make_grid(std::int64_t n_cells, double a = 0.0, double b = 1.0,
                          Boundary boundary = Boundary::Outflow) {
  GridSpec g{n_cells, a, b, boundary};
  g.validate();
  return g;
}

// One cell-averaged field at a fixed time.
struct FieldSample {
  GridSpec grid;
  std::vector<double> values;
  double time = 0.0;

  void validate() const {
    grid.validate();
    if (static_cast<std::int64_t>(values.size()) != grid.n_cells)
      throw InvalidParamError("field: values size does not match grid");
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline bool bitwise_equal(const FieldSample& x, const FieldSample& y) {
  return x.grid == y.grid && x.time == y.time && x.values == y.values;
}

// Piecewise-constant prolongation onto a finer nested grid. The fine cell
// count must be a multiple of the coarse one (both powers of two, so the
// ratio is a power of two) over the same interval.
inline std::vector<double> prolong_values(const std::vector<double>& coarse,
                                          std::int64_t n_fine) {
  const std::int64_t n_coarse = static_cast<std::int64_t>(coarse.size());
  if (n_fine % n_coarse != 0)
    throw IncompatibleGridsError("prolong: fine count " + std::to_string(n_fine) +
                                 " not a multiple of coarse count " +
                                 std::to_string(n_coarse));
  const std::int64_t ratio = n_fine / n_coarse;
  std::vector<double> fine(static_cast<std::size_t>(n_fine));
  for (std::int64_t i = 0; i < n_coarse; ++i)
    for (std::int64_t r = 0; r < ratio; ++r) fine[i * ratio + r] = coarse[i];
  return fine;
}

}  // namespace stochfv
