#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stochfv/ensemble.hpp"
#include "stochfv/grid.hpp"

namespace stochfv {

// L1(dx) distance between two fields over the same interval. Grids must be
// dyadically nested; the coarser field is prolonged before comparison.
double l1_distance(const FieldSample& x, const FieldSample& y);

struct AssignmentResult {
  std::vector<std::int64_t> row_to_col;
  double total_cost = 0.0;
};

// Exact minimum-cost perfect matching on a dense n x n cost matrix
// (row-major), by shortest augmenting paths with dual potentials. O(n^3).
AssignmentResult solve_assignment(const std::vector<double>& cost, std::int64_t n);

// 1-Wasserstein distance between two equal-size uniform empirical measures
// in L1: the optimal matching of members under pairwise l1_distance costs,
// averaged over pairs. Hard cap of 4096 members per side.
double wasserstein1_empirical(const EnsembleSummary& a, const EnsembleSummary& b,
                              int workers = 1);

// Fast path for ensembles whose members are totally ordered along a scalar
// parameter: sort both sides by their certificates and match in order.
// Exact whenever the pairwise cost is a monotone matching cost (verified
// against the assignment solver in the tests).
double wasserstein1_sorted(const EnsembleSummary& a,
                           std::span<const double> certificate_a,
                           const EnsembleSummary& b,
                           std::span<const double> certificate_b);

// Distance from an evolved shock ensemble at time t to the exact statistical
// solution, the latter discretized by q midpoint atoms of the offset law
// sampled on the ensemble's grid. Requires q equal to the member count.
double wasserstein_vs_exact_shock(const EnsembleSummary& ens,
                                  const RandomFieldSpec& field,
                                  const FluxModel& flux, double t, std::int64_t q,
                                  int workers = 1);

// Least-squares slope of log2(e) against log2(h): error ~ h^rate.
double fit_rate(std::span<const double> h, std::span<const double> e);

// Work predictions up to constants, d the spatial dimension.
double predicted_work_fvm(double delta, int d = 1);
double predicted_work_mc(double delta, double rate_s, int d = 1);
double predicted_work_mlmc(double delta_finest, int levels, double rate_r,
                           double rate_s, int d = 1);

}  // namespace stochfv
