#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "stochfv/ensemble.hpp"
#include "stochfv/flux.hpp"
#include "stochfv/random_fields.hpp"

namespace stochfv {

// Entropy solution of the step family at offset X: the jump travels at the
// Rankine-Hugoniot speed (f(left) - f(right)) / (left - right). Valid for
// left > right with f convex between the two states.
double exact_shock_solution(const RandomFieldSpec& field, const FluxModel& flux,
                            double offset, double x, double t);

// Pointwise mean and variance of the exact statistical solution at time t,
// the offset being uniform on [-half_width, half_width].
std::pair<double, double> exact_shock_mean_variance(const RandomFieldSpec& field,
                                                    const FluxModel& flux, double x,
                                                    double t);

// Probability that the shock at time t sits inside (x, x + h]. For the
// unit-jump family this is the local structure function S_p for every
// p >= 1; for a general jump it scales by |left - right|^p.
double exact_structure_function(const RandomFieldSpec& field, const FluxModel& flux,
                                double x, double t, double h);

struct ReferenceRequest {
  RandomFieldSpec field;
  FluxModel flux = FluxModel::burgers();
  SchemeConfig scheme;
  GridSpec grid;
  std::int64_t m = 0;
  std::uint64_t master_seed = 0;
};

// Returns the directory used for cached reference ensembles: the
// STOCHFV_REF_CACHE environment variable when set, otherwise ./ref_cache.
std::string reference_cache_dir();

// Content-addressed Monte Carlo reference: computes run_mc for the request
// or reloads a bit-identical copy from the cache. Entries are a binary
// ensemble record plus a human-readable JSON manifest keyed by a hash of
// every request parameter; a checksum or manifest mismatch raises
// CacheCorruptError. Concurrent producers serialize on an advisory lock.
EnsembleSummary reference_solution(const ReferenceRequest& request, int workers = 1,
                                   const std::string& cache_dir = "");

// Cache key for a request (exposed for tests and tooling).
std::string reference_key(const ReferenceRequest& request);

}  // namespace stochfv
