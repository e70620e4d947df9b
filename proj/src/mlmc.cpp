#include "stochfv/mlmc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "stochfv/parallel.hpp"

namespace stochfv {

std::vector<std::int64_t> allocate_experimental(int levels, double delta_finest) {
  if (levels < 0) throw InvalidParamError("allocate: levels must be >= 0");
  if (!(delta_finest > 0.0) || !(delta_finest <= 1.0))
    throw InvalidParamError("allocate: delta_finest must lie in (0, 1]");
  std::vector<std::int64_t> m(levels + 1);
  m[0] = std::llround(1.0 / delta_finest);
  for (int l = 1; l <= levels; ++l)
    m[l] = std::int64_t{16} << (levels - l);
  return m;
}

std::vector<std::int64_t> allocate_theoretical(int levels, double delta_finest,
                                               double rate_r, double rate_s) {
  if (levels < 0) throw InvalidParamError("allocate: levels must be >= 0");
  if (!(delta_finest > 0.0) || !(delta_finest <= 1.0))
    throw InvalidParamError("allocate: delta_finest must lie in (0, 1]");
  if (!(rate_r > 0.0) || !(rate_s > 0.0))
    throw InvalidParamError("allocate: rates r and s must be positive");
  std::vector<std::int64_t> m(levels + 1);
  m[0] = static_cast<std::int64_t>(std::ceil(std::pow(delta_finest, -2.0 * rate_s)));
  m[0] = std::max<std::int64_t>(m[0], 1);
  for (int l = 1; l <= levels; ++l) {
    const double count = std::pow(2.0, rate_r * (levels - l)) *
                         std::pow(delta_finest, rate_r / 2.0 - rate_s);
    m[l] = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(count)), 1);
  }
  return m;
}

void LevelPlan::validate() const {
  coarsest.validate();
  if (samples.empty()) throw InvalidParamError("plan: needs at least one level");
  for (std::int64_t m : samples)
    if (m < 1) throw InvalidParamError("plan: every level needs >= 1 samples");
  if ((coarsest.n_cells << levels()) <= 0)
    throw InvalidParamError("plan: ladder overflows the cell count");
}

MlmcSummary run_mlmc(const RandomFieldSpec& field, const FluxModel& flux,
                     const SchemeConfig& scheme, const LevelPlan& plan,
                     std::uint64_t master_seed, const MlmcOptions& options) {
  field.validate();
  plan.validate();
  scheme.validate();
  for (int l = 1; l <= plan.levels(); ++l) {
    if (plan.samples[l] > plan.samples[l - 1]) {
      std::cerr << "warning: mlmc sample counts increase from level " << l - 1
                << " to " << l << "\n";
      break;
    }
  }

  MlmcSummary summary;
  summary.plan = plan;
  summary.time = scheme.t_end;
  summary.master_seed = master_seed;
  summary.level0 = run_mc(field, flux, scheme, plan.grid_at(0), plan.samples[0],
                          master_seed, options.workers, &summary.work);

  summary.pairs.resize(plan.levels());
  for (int l = 1; l <= plan.levels(); ++l) {
    const GridSpec fine_grid = plan.grid_at(l);
    const GridSpec coarse_grid = plan.grid_at(l - 1);
    const std::int64_t m = plan.samples[l];
    const std::int64_t stream_level = options.share_streams_across_levels ? 0 : l;
    auto& level_pairs = summary.pairs[l - 1];
    level_pairs.resize(m);

    std::vector<WorkLedger> ledgers(m);
    parallel_for(m, options.workers, [&](std::int64_t k) {
      try {
        const std::uint64_t fine_index = static_cast<std::uint64_t>(k);
        const std::uint64_t coarse_index =
            options.decouple_pairs ? (fine_index | (std::uint64_t{1} << 63))
                                   : fine_index;
        FieldSample uf =
            initial_sample(field, fine_grid, master_seed, stream_level, fine_index);
        FieldSample uc = initial_sample(field, coarse_grid, master_seed,
                                        stream_level, coarse_index);
        level_pairs[k].fine =
            std::move(evolve(uf, flux, scheme, &ledgers[k]).state.values);
        level_pairs[k].coarse =
            std::move(evolve(uc, flux, scheme, &ledgers[k]).state.values);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError(std::string(e.what()) + " (level " + std::to_string(l) +
                                 ", sample " + std::to_string(k) + ")",
                             l, k);
      }
    });
    for (std::int64_t k = 0; k < m; ++k) summary.work += ledgers[k];
    summary.work.add_sample(l, static_cast<std::uint64_t>(m));
  }
  return summary;
}

namespace {

double level0_mean(const MlmcSummary& s, const ScalarFunctional& g) {
  const GridSpec grid = s.plan.grid_at(0);
  const double w = 1.0 / static_cast<double>(s.level0.member_count());
  return pairwise_sum(0, s.level0.member_count(), [&](std::int64_t k) {
    return w * g(grid, s.level0.members[k]);
  });
}

}  // namespace

double mlmc_estimate_scalar(const MlmcSummary& s, const ScalarFunctional& g) {
  double estimate = level0_mean(s, g);
  for (int l = 1; l <= s.plan.levels(); ++l) {
    const GridSpec fine_grid = s.plan.grid_at(l);
    const GridSpec coarse_grid = s.plan.grid_at(l - 1);
    const auto& level_pairs = s.pairs[l - 1];
    const double w = 1.0 / static_cast<double>(level_pairs.size());
    estimate += pairwise_sum(
        0, static_cast<std::int64_t>(level_pairs.size()), [&](std::int64_t k) {
          return w * (g(fine_grid, level_pairs[k].fine) -
                      g(coarse_grid, level_pairs[k].coarse));
        });
  }
  return estimate;
}

namespace {

// Telescoped per-cell field on the finest grid. member_map turns one member
// (on its native grid) into the per-cell quantity being averaged.
template <class MemberMap>
std::vector<double> telescoped_field(const MlmcSummary& s, MemberMap&& member_map) {
  const std::int64_t n_fine = s.plan.grid_at(s.plan.levels()).n_cells;
  const GridSpec grid0 = s.plan.grid_at(0);
  const double w0 = 1.0 / static_cast<double>(s.level0.member_count());

  std::vector<double> acc = pairwise_sum_vectors(
      0, s.level0.member_count(), [&](std::int64_t k) {
        std::vector<double> v =
            prolong_values(member_map(grid0, s.level0.members[k]), n_fine);
        for (double& x : v) x *= w0;
        return v;
      });

  for (int l = 1; l <= s.plan.levels(); ++l) {
    const GridSpec fine_grid = s.plan.grid_at(l);
    const GridSpec coarse_grid = s.plan.grid_at(l - 1);
    const auto& level_pairs = s.pairs[l - 1];
    const double w = 1.0 / static_cast<double>(level_pairs.size());
    std::vector<double> detail = pairwise_sum_vectors(
        0, static_cast<std::int64_t>(level_pairs.size()), [&](std::int64_t k) {
          std::vector<double> fine =
              prolong_values(member_map(fine_grid, level_pairs[k].fine), n_fine);
          const std::vector<double> coarse =
              prolong_values(member_map(coarse_grid, level_pairs[k].coarse), n_fine);
          for (std::size_t i = 0; i < fine.size(); ++i)
            fine[i] = w * (fine[i] - coarse[i]);
          return fine;
        });
    for (std::int64_t i = 0; i < n_fine; ++i) acc[i] += detail[i];
  }
  return acc;
}

}  // namespace

FieldSample mlmc_estimate_mean_field(const MlmcSummary& s) {
  FieldSample out;
  out.grid = s.plan.grid_at(s.plan.levels());
  out.time = s.time;
  out.values = telescoped_field(
      s, [](const GridSpec&, const std::vector<double>& u) { return u; });
  return out;
}

MlmcMeanVariance mlmc_estimate_mean_variance(const MlmcSummary& s) {
  MlmcMeanVariance out;
  out.mean = mlmc_estimate_mean_field(s);

  FieldSample mom2;
  mom2.grid = out.mean.grid;
  mom2.time = s.time;
  mom2.values =
      telescoped_field(s, [](const GridSpec&, const std::vector<double>& u) {
        std::vector<double> sq(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) sq[i] = u[i] * u[i];
        return sq;
      });

  out.variance_raw = mom2;
  out.variance_clamped = mom2;
  for (std::size_t i = 0; i < mom2.values.size(); ++i) {
    const double v = mom2.values[i] - out.mean.values[i] * out.mean.values[i];
    out.variance_raw.values[i] = v;
    out.variance_clamped.values[i] = std::max(v, 0.0);
  }
  return out;
}

// Offsets are snapped once on the coarsest grid so every level evaluates the
// same physical window; a per-level snap would shift the window between
// consecutive levels and the detail terms would stop decaying.
static double snap_offset_to_coarsest(const LevelPlan& plan, double h) {
  const GridSpec grid0 = plan.grid_at(0);
  return static_cast<double>(snap_offset(grid0, h)) * grid0.dx();
}

FieldSample mlmc_estimate_structure_function_local(const MlmcSummary& s, double p,
                                                   double h) {
  FieldSample out;
  out.grid = s.plan.grid_at(s.plan.levels());
  out.time = s.time;
  const double h_snap = snap_offset_to_coarsest(s.plan, h);
  out.values =
      telescoped_field(s, [&](const GridSpec& grid, const std::vector<double>& u) {
        return member_structure_function_local(grid, u, p, h_snap);
      });
  return out;
}

FieldSample mlmc_estimate_three_point(const MlmcSummary& s, double h1, double h2) {
  FieldSample out;
  out.grid = s.plan.grid_at(s.plan.levels());
  out.time = s.time;
  const double h1_snap = snap_offset_to_coarsest(s.plan, h1);
  const double h2_snap = snap_offset_to_coarsest(s.plan, h2);
  out.values =
      telescoped_field(s, [&](const GridSpec& grid, const std::vector<double>& u) {
        return member_three_point(grid, u, h1_snap, h2_snap);
      });
  return out;
}

std::vector<double> estimate_level_variances(const MlmcSummary& s,
                                             const ScalarFunctional& g) {
  std::vector<double> v(s.plan.levels() + 1);
  if (s.level0.member_count() < 2)
    throw InsufficientSamplesError("level variances: need >= 2 samples per level");
  {
    const GridSpec grid0 = s.plan.grid_at(0);
    const std::int64_t m = s.level0.member_count();
    std::vector<double> values(m);
    for (std::int64_t k = 0; k < m; ++k) values[k] = g(grid0, s.level0.members[k]);
    const double w = 1.0 / static_cast<double>(m);
    const double mean =
        pairwise_sum(0, m, [&](std::int64_t k) { return w * values[k]; });
    v[0] = pairwise_sum(0, m, [&](std::int64_t k) {
      const double d = values[k] - mean;
      return w * d * d;
    });
  }
  for (int l = 1; l <= s.plan.levels(); ++l) {
    const auto& level_pairs = s.pairs[l - 1];
    const std::int64_t m = static_cast<std::int64_t>(level_pairs.size());
    if (m < 2)
      throw InsufficientSamplesError("level variances: need >= 2 samples per level");
    const GridSpec fine_grid = s.plan.grid_at(l);
    const GridSpec coarse_grid = s.plan.grid_at(l - 1);
    std::vector<double> detail(m);
    for (std::int64_t k = 0; k < m; ++k)
      detail[k] = g(fine_grid, level_pairs[k].fine) -
                  g(coarse_grid, level_pairs[k].coarse);
    const double w = 1.0 / static_cast<double>(m);
    const double mean =
        pairwise_sum(0, m, [&](std::int64_t k) { return w * detail[k]; });
    v[l] = pairwise_sum(0, m, [&](std::int64_t k) {
      const double d = detail[k] - mean;
      return w * d * d;
    });
  }
  return v;
}

}  // namespace stochfv
