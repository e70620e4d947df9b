#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stochfv/grid.hpp"
#include "stochfv/random_fields.hpp"
#include "stochfv/scheme.hpp"
#include "stochfv/work.hpp"

namespace stochfv {

// Weighted empirical measure over solution fields on one grid at one time.
struct EnsembleSummary {
  GridSpec grid;
  double time = 0.0;
  std::vector<std::vector<double>> members;
  std::vector<double> weights;

  std::int64_t member_count() const {
    return static_cast<std::int64_t>(members.size());
  }
  void validate() const;
};

// Plain Monte Carlo: member k evolves the initial field drawn from the
// counter-based stream (master_seed, level 0, k); weights are uniform 1/m.
// Members are computed in parallel but stored by index, so the result is
// bit-identical for any worker count. A NonFiniteError from any sample is
// rethrown annotated with the sample index.
EnsembleSummary run_mc(const RandomFieldSpec& field, const FluxModel& flux,
                       const SchemeConfig& scheme, const GridSpec& grid,
                       std::int64_t m, std::uint64_t master_seed, int workers = 1,
                       WorkLedger* ledger = nullptr);

// Deterministic quadrature ensemble: member q uses the shock offset at the
// q-th midpoint node of [-half_width, half_width], weights uniform 1/q_total.
EnsembleSummary midpoint_quadrature_ensemble(const RandomFieldSpec& field,
                                             const FluxModel& flux,
                                             const SchemeConfig& scheme,
                                             const GridSpec& grid, std::int64_t q,
                                             int workers = 1,
                                             WorkLedger* ledger = nullptr);

// Weighted population mean and variance per cell (no Bessel correction).
std::pair<FieldSample, FieldSample> mean_variance(const EnsembleSummary& ens);

// Rounds h to an offset in cells. Throws OffsetNotOnGridError when h is
// negative or the rounded offset leaves the grid.
std::int64_t snap_offset(const GridSpec& grid, double h);

// Per-member building blocks for the statistics below; offsets follow the
// grid's boundary rule (clamp for outflow, wrap for periodic).
std::vector<double> member_structure_function_local(const GridSpec& grid,
                                                    const std::vector<double>& u,
                                                    double p, double h);
double member_structure_function_integrated(const GridSpec& grid,
                                            const std::vector<double>& u, double p,
                                            double h);
std::vector<double> member_three_point(const GridSpec& grid,
                                       const std::vector<double>& u, double h1,
                                       double h2);

// S_p(x; h): weighted mean of |u(x + h) - u(x)|^p over members.
FieldSample structure_function_local(const EnsembleSummary& ens, double p, double h);

// Midpoint-rule integral of the local structure function over the domain.
double structure_function_integrated(const EnsembleSummary& ens, double p, double h);

// Weighted mean of (u(x) - u(x + h1)) * (u(x) - u(x + h2))^2 over members.
FieldSample three_point_moment(const EnsembleSummary& ens, double h1, double h2);

// Binary round-trip: grid header, weights, packed member values, FNV-1a
// checksum. load verifies the checksum and throws CacheCorruptError on any
// mismatch.
void save_ensemble_binary(const EnsembleSummary& ens, const std::string& path);
EnsembleSummary load_ensemble_binary(const std::string& path);

// Long-format CSV: member,cell,x,value with round-trip float formatting.
void save_ensemble_csv(const EnsembleSummary& ens, const std::string& path);

}  // namespace stochfv
