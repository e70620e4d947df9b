#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stochfv/ensemble.hpp"

namespace stochfv {

// Sample counts per level for a resolution ladder whose finest spacing is
// delta_finest and whose coarsest is delta_finest * 2^levels.
//
// allocate_experimental uses the study rule M_0 = round(1 / delta_finest),
// M_l = 16 * 2^(levels - l). allocate_theoretical uses the error-balanced
// rule M_0 = ceil(delta_finest^(-2 s)), M_l = ceil(2^(r (levels - l)) *
// delta_finest^(r / 2 - s)), floored at one sample.
std::vector<std::int64_t> allocate_experimental(int levels, double delta_finest);
std::vector<std::int64_t> allocate_theoretical(int levels, double delta_finest,
                                               double rate_r, double rate_s);

struct LevelPlan {
  GridSpec coarsest;                   // level-0 grid; level l doubles it l times
  std::vector<std::int64_t> samples;   // size levels + 1

  int levels() const { return static_cast<int>(samples.size()) - 1; }
  GridSpec grid_at(int level) const {
    GridSpec g = coarsest;
    g.n_cells = coarsest.n_cells << level;
    return g;
  }
  void validate() const;
};

struct CoupledPair {
  std::vector<double> fine;
  std::vector<double> coarse;
};

struct MlmcOptions {
  int workers = 1;
  // Reuse the level-0 stream coordinate at every level, so the same sample
  // index draws the same initial data on the whole ladder (telescoping
  // collapse check).
  bool share_streams_across_levels = false;
  // Draw the coarse half of each correction pair from an unrelated stream;
  // negative control for the variance-decay diagnostics.
  bool decouple_pairs = false;
};

// Signed-measure representation of the multilevel estimator: the level-0
// ensemble enters with weight +1/M_0 per member, each correction pair at
// level l with weights +1/M_l (fine) and -1/M_l (coarse). The coarse member
// of a pair is a fresh solve on the coarser grid from the same draw.
struct MlmcSummary {
  LevelPlan plan;
  double time = 0.0;
  std::uint64_t master_seed = 0;
  EnsembleSummary level0;
  std::vector<std::vector<CoupledPair>> pairs;  // index l-1 holds level l
  WorkLedger work;
};

MlmcSummary run_mlmc(const RandomFieldSpec& field, const FluxModel& flux,
                     const SchemeConfig& scheme, const LevelPlan& plan,
                     std::uint64_t master_seed, const MlmcOptions& options = {});

// Scalar functional of one member field; receives the member's own grid.
using ScalarFunctional =
    std::function<double(const GridSpec&, const std::vector<double>&)>;

// Telescoped estimate of E[g(u)].
double mlmc_estimate_scalar(const MlmcSummary& summary, const ScalarFunctional& g);

// Telescoped mean field on the finest grid (coarser members are prolonged
// piecewise-constantly before combination).
FieldSample mlmc_estimate_mean_field(const MlmcSummary& summary);

struct MlmcMeanVariance {
  FieldSample mean;
  FieldSample variance_raw;      // E[u^2] - mean^2; may dip below zero
  FieldSample variance_clamped;  // max(variance_raw, 0)
};
MlmcMeanVariance mlmc_estimate_mean_variance(const MlmcSummary& summary);

// Telescoped local structure function at offset h. The offset is snapped once
// on the coarsest grid so every level evaluates the same physical window.
FieldSample mlmc_estimate_structure_function_local(const MlmcSummary& summary,
                                                   double p, double h);

// Telescoped perturbed three-point moment at offsets (h1, h2).
FieldSample mlmc_estimate_three_point(const MlmcSummary& summary, double h1,
                                      double h2);

// v[0] is the population variance of g over level-0 members; v[l] the
// population variance of the correction g(fine) - g(coarse) at level l.
// Requires at least two samples per level.
std::vector<double> estimate_level_variances(const MlmcSummary& summary,
                                             const ScalarFunctional& g);

}  // namespace stochfv
