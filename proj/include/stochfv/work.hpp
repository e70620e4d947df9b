#pragma once

#include <cstdint>
#include <map>

namespace stochfv {

// Exact operation count for cost comparisons. One "cell update" is one cell
// touched by one Runge-Kutta stage; a time step on n cells with the two-stage
// integrator adds 2*n.
struct WorkLedger {
  std::uint64_t cell_updates = 0;
  std::map<int, std::uint64_t> samples_by_level;
  int dimension = 1;

  void add_updates(std::uint64_t n) { cell_updates += n; }
  void add_sample(int level, std::uint64_t count = 1) {
    samples_by_level[level] += count;
  }

  WorkLedger& operator+=(const WorkLedger& o) {
    cell_updates += o.cell_updates;
    for (const auto& [lvl, cnt] : o.samples_by_level) samples_by_level[lvl] += cnt;
    return *this;
  }
};

}  // namespace stochfv
