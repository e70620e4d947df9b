#include "stochfv/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include "stochfv/csv.hpp"
#include "stochfv/errors.hpp"
#include "stochfv/metrics.hpp"
#include "stochfv/mlmc.hpp"
#include "stochfv/oracles.hpp"
#include "stochfv/parallel.hpp"
#include "stochfv/version.hpp"

namespace stochfv {

std::uint64_t repetition_seed(std::uint64_t base, int rep) {
  return base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(rep);
}

namespace {

namespace fs = std::filesystem;

using Row = std::vector<std::string>;
using Rows = std::vector<Row>;

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_table(StudyResult* out, const std::string& dir, const std::string& name,
                 const std::vector<std::string>& header, const Rows& rows) {
  const std::string path = path_join(dir, name);
  emit_csv(path, header, rows);
  out->files.push_back(path);
}

void write_manifest(StudyResult* out, const ExperimentConfig& cfg) {
  nlohmann::json root;
  root["version"] = kVersion;
  root["config"] = nlohmann::json::parse(config_to_manifest_json(cfg));
  const std::string path = path_join(cfg.out_dir, "manifest.json");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << root.dump(2) << "\n";
  f.flush();
  if (!f) throw IoError("short write: " + path);
  out->files.push_back(path);
}

void write_rates(StudyResult* out, const std::string& dir) {
  Rows rows;
  for (const auto& [name, value] : out->scalars)
    rows.push_back({name, csv_double(value)});
  write_table(out, dir, "rates.csv", {"metric", "value"}, rows);
}

std::int64_t samples_for(const SamplesRule& rule, std::int64_t n_cells) {
  return rule.kind == SamplesRule::Kind::Fixed ? rule.m : n_cells;
}

int ladder_level(std::int64_t n, std::int64_t coarsest) {
  return std::countr_zero(static_cast<std::uint64_t>(n / coarsest));
}

std::string num_label(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Exact-oracle fields sampled at the cell midpoints of `grid`.

std::pair<FieldSample, FieldSample> exact_mean_variance_fields(
    const RandomFieldSpec& field, const FluxModel& flux, const GridSpec& grid,
    double t) {
  FieldSample mean{grid, std::vector<double>(grid.n_cells), t};
  FieldSample var{grid, std::vector<double>(grid.n_cells), t};
  for (std::int64_t i = 0; i < grid.n_cells; ++i) {
    const auto mv = exact_shock_mean_variance(field, flux, grid.midpoint(i), t);
    mean.values[i] = mv.first;
    var.values[i] = mv.second;
  }
  return {std::move(mean), std::move(var)};
}

// Local structure function of the exact statistical solution at the snapped
// offset; scale |jump|^p turns the window probability into S_p.
FieldSample exact_s1_field(const RandomFieldSpec& field, const FluxModel& flux,
                           const GridSpec& grid, double t, double h_eff) {
  const double scale = std::abs(field.left - field.right);
  FieldSample out{grid, std::vector<double>(grid.n_cells), t};
  for (std::int64_t i = 0; i < grid.n_cells; ++i)
    out.values[i] =
        scale * exact_structure_function(field, flux, grid.midpoint(i), t, h_eff);
  return out;
}

// Piecewise-linear interpolation of log2(y) against log2(x), extrapolating
// with the nearest segment's slope. Points need distinct positive x.
double loglog_interpolate(std::vector<std::pair<double, double>> pts, double x) {
  if (pts.size() < 2) throw DegenerateInputError("loglog: need >= 2 points");
  std::sort(pts.begin(), pts.end());
  for (const auto& [px, py] : pts)
    if (!(px > 0.0) || !(py > 0.0))
      throw DegenerateInputError("loglog: points must be positive");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first == pts[i - 1].first)
      throw DegenerateInputError("loglog: repeated abscissa");
  if (!(x > 0.0)) throw DegenerateInputError("loglog: query must be positive");
  const double lx = std::log2(x);
  std::size_t seg = 0;
  while (seg + 2 < pts.size() && std::log2(pts[seg + 1].first) < lx) ++seg;
  const double x0 = std::log2(pts[seg].first);
  const double x1 = std::log2(pts[seg + 1].first);
  const double y0 = std::log2(pts[seg].second);
  const double y1 = std::log2(pts[seg + 1].second);
  const double slope = (y1 - y0) / (x1 - x0);
  return std::exp2(y0 + slope * (lx - x0));
}

void fit_scalar(StudyResult* out, const std::string& key,
                const std::vector<double>& h, const std::vector<double>& e) {
  out->scalars[key] = fit_rate(h, e);
}

void run_deterministic_study(const ExperimentConfig& cfg, int workers,
                             StudyResult* out) {
  (void)workers;
  Rows rows;
  std::vector<double> deltas, errs;
  for (std::int64_t n : cfg.resolutions) {
    const GridSpec grid = make_grid(n);
    WorkLedger ledger;
    const FieldSample initial = shock_initial_field(cfg.field, 0.0, grid);
    const EvolveResult r = evolve(initial, cfg.flux, cfg.scheme, &ledger);
    FieldSample exact{grid, std::vector<double>(n), cfg.scheme.t_end};
    for (std::int64_t i = 0; i < n; ++i)
      exact.values[i] = exact_shock_solution(cfg.field, cfg.flux, 0.0,
                                             grid.midpoint(i), cfg.scheme.t_end);
    const double err = l1_distance(r.state, exact);
    rows.push_back({csv_double(grid.dx()), csv_int(n), csv_int(r.steps),
                    csv_int(static_cast<std::int64_t>(ledger.cell_updates)),
                    csv_double(err)});
    deltas.push_back(grid.dx());
    errs.push_back(err);
  }
  write_table(out, cfg.out_dir, "convergence.csv",
              {"delta", "cells", "steps", "cell_updates", "l1_error"}, rows);
  fit_scalar(out, "rate", deltas, errs);
}

void run_mc_study(const ExperimentConfig& cfg, int workers, StudyResult* out) {
  const bool shock = cfg.field.kind == FieldKind::UncertainShock;
  const bool has_h = !cfg.offsets.empty();
  const double h0 = has_h ? cfg.offsets[0] : 0.0;
  const double t = cfg.scheme.t_end;

  std::vector<std::string> header = {"delta", "cells", "samples", "work_mean"};
  if (shock) {
    header.push_back("err_mean");
    header.push_back("err_variance");
    if (has_h) header.push_back("err_s1");
  }
  Rows rows;
  std::vector<double> deltas, errs_mean, errs_var, errs_s1;

  for (std::int64_t n : cfg.resolutions) {
    const GridSpec grid = make_grid(n);
    const std::int64_t m = samples_for(cfg.samples, n);

    FieldSample exact_mean, exact_var, exact_s1;
    double h_eff = 0.0;
    if (shock) {
      auto mv = exact_mean_variance_fields(cfg.field, cfg.flux, grid, t);
      exact_mean = std::move(mv.first);
      exact_var = std::move(mv.second);
      if (has_h) {
        h_eff = static_cast<double>(snap_offset(grid, h0)) * grid.dx();
        exact_s1 = exact_s1_field(cfg.field, cfg.flux, grid, t, h_eff);
      }
    }

    double err_mean = 0.0, err_var = 0.0, err_s1 = 0.0, work_sum = 0.0;
    FieldSample mean0, var0, s10;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      WorkLedger ledger;
      const EnsembleSummary ens =
          run_mc(cfg.field, cfg.flux, cfg.scheme, grid, m,
                 repetition_seed(cfg.seed, rep), workers, &ledger);
      auto mv = mean_variance(ens);
      FieldSample s1;
      if (has_h) s1 = structure_function_local(ens, 1.0, h0);
      if (shock) {
        err_mean += l1_distance(mv.first, exact_mean);
        err_var += l1_distance(mv.second, exact_var);
        if (has_h) err_s1 += l1_distance(s1, exact_s1);
      }
      work_sum += static_cast<double>(ledger.cell_updates);
      if (rep == 0) {
        mean0 = std::move(mv.first);
        var0 = std::move(mv.second);
        s10 = std::move(s1);
      }
    }
    const double reps = cfg.repetitions;
    err_mean /= reps;
    err_var /= reps;
    err_s1 /= reps;
    const double work_mean = work_sum / reps;

    Row row = {csv_double(grid.dx()), csv_int(n), csv_int(m),
               csv_double(work_mean)};
    if (shock) {
      row.push_back(csv_double(err_mean));
      row.push_back(csv_double(err_var));
      if (has_h) row.push_back(csv_double(err_s1));
    }
    rows.push_back(std::move(row));

    std::vector<std::string> fheader = {"x", "mean", "variance"};
    if (shock) {
      fheader.push_back("exact_mean");
      fheader.push_back("exact_variance");
    }
    if (has_h) {
      fheader.push_back("s1");
      if (shock) fheader.push_back("exact_s1");
    }
    Rows frows;
    for (std::int64_t i = 0; i < n; ++i) {
      Row fr = {csv_double(grid.midpoint(i)), csv_double(mean0.values[i]),
                csv_double(var0.values[i])};
      if (shock) {
        fr.push_back(csv_double(exact_mean.values[i]));
        fr.push_back(csv_double(exact_var.values[i]));
      }
      if (has_h) {
        fr.push_back(csv_double(s10.values[i]));
        if (shock) fr.push_back(csv_double(exact_s1.values[i]));
      }
      frows.push_back(std::move(fr));
    }
    write_table(out, cfg.out_dir, "fields_" + std::to_string(n) + ".csv", fheader,
                frows);

    deltas.push_back(grid.dx());
    errs_mean.push_back(err_mean);
    errs_var.push_back(err_var);
    errs_s1.push_back(err_s1);
  }
  write_table(out, cfg.out_dir, "summary.csv", header, rows);
  if (shock && cfg.resolutions.size() >= 2) {
    fit_scalar(out, "rate_mean", deltas, errs_mean);
    fit_scalar(out, "rate_variance", deltas, errs_var);
    if (has_h) fit_scalar(out, "rate_s1", deltas, errs_s1);
  }
}

void run_mlmc_study(const ExperimentConfig& cfg, int workers, StudyResult* out) {
  const bool shock = cfg.field.kind == FieldKind::UncertainShock;
  const double t = cfg.scheme.t_end;
  // One window for the whole ladder: snap the offset on the coarsest grid so
  // every level, the exact reference, and the single-level comparison all
  // measure the same physical increment.
  const GridSpec coarsest = make_grid(cfg.coarsest_cells);
  const double h_hat =
      static_cast<double>(snap_offset(coarsest, cfg.offsets[0])) * coarsest.dx();
  const ScalarFunctional g_s1 = [h_hat](const GridSpec& grid,
                                        const std::vector<double>& u) {
    return member_structure_function_integrated(grid, u, 1.0, h_hat);
  };
  const ScalarFunctional g_2pt = [h_hat](const GridSpec& grid,
                                         const std::vector<double>& u) {
    return member_structure_function_integrated(grid, u, 2.0, h_hat);
  };
  const ScalarFunctional g_3pt = [h_hat](const GridSpec& grid,
                                         const std::vector<double>& u) {
    const std::vector<double> m = member_three_point(grid, u, h_hat, 2.0 * h_hat);
    double sum = 0.0;
    for (double v : m) sum += v;
    return sum * grid.dx();
  };

  std::vector<std::string> header = {"delta", "cells", "levels", "samples_total",
                                     "work_mean"};
  if (shock) {
    header.push_back("err_mean");
    header.push_back("err_2pt");
    header.push_back("err_3pt");
  }
  if (cfg.compare_mc) {
    header.push_back("mc_samples");
    header.push_back("mc_work_mean");
    if (shock) {
      header.push_back("mc_err_mean");
      header.push_back("mc_err_2pt");
      header.push_back("mc_err_3pt");
    }
  }

  Rows rows;
  std::vector<double> deltas;
  std::vector<double> ml_err_mean, ml_err_2pt, ml_err_3pt, ml_work;
  std::vector<double> mc_err_2pt_curve, mc_work_curve;

  for (std::int64_t n : cfg.resolutions) {
    const GridSpec fine_grid = make_grid(n);
    const int levels = ladder_level(n, cfg.coarsest_cells);
    const double delta = fine_grid.dx();
    const std::vector<std::int64_t> alloc =
        cfg.samples.kind == SamplesRule::Kind::Experimental
            ? allocate_experimental(levels, delta)
            : allocate_theoretical(levels, delta, cfg.samples.rate_r,
                                   cfg.samples.rate_s);
    LevelPlan plan{make_grid(cfg.coarsest_cells), alloc};
    plan.validate();
    std::int64_t samples_total = 0;
    for (std::int64_t m : alloc) samples_total += m;

    // Integrated functionals of the sharp profile telescope to window width
    // times the corresponding jump power, independent of the shock draw.
    const double jump = cfg.field.left - cfg.field.right;
    const double exact_2pt = h_hat * jump * jump;
    const double exact_3pt = h_hat * jump * jump * jump;
    FieldSample exact_mean;
    if (shock)
      exact_mean =
          exact_mean_variance_fields(cfg.field, cfg.flux, fine_grid, t).first;

    double err_mean = 0.0, err_2pt = 0.0, err_3pt = 0.0, work_sum = 0.0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      MlmcOptions opts;
      opts.workers = workers;
      const MlmcSummary summary =
          run_mlmc(cfg.field, cfg.flux, cfg.scheme, plan,
                   repetition_seed(cfg.seed, rep), opts);
      if (shock) {
        const MlmcMeanVariance mv = mlmc_estimate_mean_variance(summary);
        err_mean += l1_distance(mv.mean, exact_mean);
        err_2pt += std::abs(mlmc_estimate_scalar(summary, g_2pt) - exact_2pt);
        err_3pt += std::abs(mlmc_estimate_scalar(summary, g_3pt) - exact_3pt);
      }
      work_sum += static_cast<double>(summary.work.cell_updates);
      if (rep == 0) {
        const std::vector<double> lv = estimate_level_variances(summary, g_s1);
        Rows lrows;
        for (int l = 0; l < static_cast<int>(lv.size()); ++l)
          lrows.push_back({csv_int(l), csv_int(plan.grid_at(l).n_cells),
                           csv_int(alloc[l]), csv_double(lv[l])});
        write_table(out, cfg.out_dir, "levels_" + std::to_string(n) + ".csv",
                    {"level", "cells", "samples", "variance"}, lrows);
      }
    }
    const double reps = cfg.repetitions;
    err_mean /= reps;
    err_2pt /= reps;
    err_3pt /= reps;
    const double work_mean = work_sum / reps;

    Row row = {csv_double(delta), csv_int(n), csv_int(levels),
               csv_int(samples_total), csv_double(work_mean)};
    if (shock) {
      row.push_back(csv_double(err_mean));
      row.push_back(csv_double(err_2pt));
      row.push_back(csv_double(err_3pt));
    }

    if (cfg.compare_mc) {
      const std::int64_t m = n;  // single-level rule: samples equal to cells
      double mc_err_mean = 0.0, mc_err_2pt = 0.0, mc_err_3pt = 0.0,
             mc_work_sum = 0.0;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        WorkLedger ledger;
        const EnsembleSummary ens =
            run_mc(cfg.field, cfg.flux, cfg.scheme, fine_grid, m,
                   repetition_seed(cfg.seed, cfg.repetitions + rep), workers,
                   &ledger);
        if (shock) {
          const auto mv = mean_variance(ens);
          mc_err_mean += l1_distance(mv.first, exact_mean);
          mc_err_2pt += std::abs(
              structure_function_integrated(ens, 2.0, h_hat) - exact_2pt);
          const FieldSample m3 = three_point_moment(ens, h_hat, 2.0 * h_hat);
          double m3_int = 0.0;
          for (double v : m3.values) m3_int += v;
          m3_int *= fine_grid.dx();
          mc_err_3pt += std::abs(m3_int - exact_3pt);
        }
        mc_work_sum += static_cast<double>(ledger.cell_updates);
      }
      mc_err_mean /= reps;
      mc_err_2pt /= reps;
      mc_err_3pt /= reps;
      const double mc_work_mean = mc_work_sum / reps;
      row.push_back(csv_int(m));
      row.push_back(csv_double(mc_work_mean));
      if (shock) {
        row.push_back(csv_double(mc_err_mean));
        row.push_back(csv_double(mc_err_2pt));
        row.push_back(csv_double(mc_err_3pt));
        mc_err_2pt_curve.push_back(mc_err_2pt);
        mc_work_curve.push_back(mc_work_mean);
      }
    }
    rows.push_back(std::move(row));

    deltas.push_back(delta);
    ml_err_mean.push_back(err_mean);
    ml_err_2pt.push_back(err_2pt);
    ml_err_3pt.push_back(err_3pt);
    ml_work.push_back(work_mean);
  }
  write_table(out, cfg.out_dir, "summary.csv", header, rows);

  if (shock && cfg.resolutions.size() >= 2) {
    fit_scalar(out, "rate_mean", deltas, ml_err_mean);
    fit_scalar(out, "rate_2pt", deltas, ml_err_2pt);
    fit_scalar(out, "rate_3pt", deltas, ml_err_3pt);
  }
  if (shock && cfg.compare_mc && mc_work_curve.size() >= 2) {
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = 0; i < mc_work_curve.size(); ++i)
      curve.emplace_back(mc_err_2pt_curve[i], mc_work_curve[i]);
    const std::size_t last = deltas.size() - 1;
    out->scalars["work_ratio_at_finest"] =
        mc_work_curve.back() / ml_work[last];
    try {
      const double mc_work_matched =
          loglog_interpolate(curve, ml_err_2pt[last]);
      out->scalars["mc_work_matched"] = mc_work_matched;
      out->scalars["work_ratio_matched"] = mc_work_matched / ml_work[last];
    } catch (const DegenerateInputError&) {
      // repeated or non-positive errors; the matched ratio is undefined
    }
  }
}

void run_wasserstein_study(const ExperimentConfig& cfg, int workers,
                           StudyResult* out) {
  Rows rows;
  std::vector<double> deltas, w1s;
  for (std::int64_t n : cfg.resolutions) {
    const GridSpec grid = make_grid(n);
    const std::int64_t m = samples_for(cfg.samples, n);
    double w_sum = 0.0, w2_sum = 0.0, work_sum = 0.0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      WorkLedger ledger;
      const EnsembleSummary ens =
          run_mc(cfg.field, cfg.flux, cfg.scheme, grid, m,
                 repetition_seed(cfg.seed, rep), workers, &ledger);
      const double w = wasserstein_vs_exact_shock(ens, cfg.field, cfg.flux,
                                                  cfg.scheme.t_end, m, workers);
      w_sum += w;
      w2_sum += w * w;
      work_sum += static_cast<double>(ledger.cell_updates);
    }
    const double reps = cfg.repetitions;
    const double w_mean = w_sum / reps;
    const double w_sd = std::sqrt(std::max(0.0, w2_sum / reps - w_mean * w_mean));
    rows.push_back({csv_double(grid.dx()), csv_int(n), csv_int(m),
                    csv_double(w_mean), csv_double(w_sd),
                    csv_double(work_sum / reps)});
    deltas.push_back(grid.dx());
    w1s.push_back(w_mean);
  }
  write_table(out, cfg.out_dir, "wasserstein.csv",
              {"delta", "cells", "samples", "w1_mean", "w1_sd", "work_mean"},
              rows);
  if (cfg.resolutions.size() >= 2) fit_scalar(out, "rate", deltas, w1s);
}

void run_midpoint_study(const ExperimentConfig& cfg, int workers,
                        StudyResult* out) {
  Rows rows;
  std::vector<double> deltas, w1s;
  for (std::int64_t n : cfg.resolutions) {
    const GridSpec grid = make_grid(n);
    const std::int64_t q = samples_for(cfg.samples, n);
    WorkLedger ledger;
    const EnsembleSummary ens = midpoint_quadrature_ensemble(
        cfg.field, cfg.flux, cfg.scheme, grid, q, workers, &ledger);
    const double w = wasserstein_vs_exact_shock(ens, cfg.field, cfg.flux,
                                                cfg.scheme.t_end, q, workers);
    rows.push_back({csv_double(grid.dx()), csv_int(n), csv_int(q), csv_double(w),
                    csv_int(static_cast<std::int64_t>(ledger.cell_updates))});
    deltas.push_back(grid.dx());
    w1s.push_back(w);
  }
  write_table(out, cfg.out_dir, "midpoint.csv",
              {"delta", "cells", "points", "w1", "cell_updates"}, rows);
  if (cfg.resolutions.size() >= 2) fit_scalar(out, "rate", deltas, w1s);
}

void run_structure_study(const ExperimentConfig& cfg, int workers,
                         StudyResult* out) {
  for (std::int64_t n : cfg.resolutions) {
    const GridSpec grid = make_grid(n);
    const std::int64_t m = samples_for(cfg.samples, n);
    const std::size_t nh = cfg.offsets.size();
    const std::size_t np = cfg.p_values.size();

    std::vector<std::vector<double>> value(np, std::vector<double>(nh, 0.0));
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const EnsembleSummary ens =
          run_mc(cfg.field, cfg.flux, cfg.scheme, grid, m,
                 repetition_seed(cfg.seed, rep), workers);
      for (std::size_t ip = 0; ip < np; ++ip)
        for (std::size_t ih = 0; ih < nh; ++ih)
          value[ip][ih] += structure_function_integrated(
              ens, cfg.p_values[ip], cfg.offsets[ih]);
    }

    Rows rows;
    for (std::size_t ip = 0; ip < np; ++ip)
      for (std::size_t ih = 0; ih < nh; ++ih) {
        const std::int64_t j = snap_offset(grid, cfg.offsets[ih]);
        rows.push_back({num_label(cfg.p_values[ip]),
                        csv_double(cfg.offsets[ih]), csv_int(j),
                        csv_double(static_cast<double>(j) * grid.dx()),
                        csv_double(value[ip][ih] / cfg.repetitions)});
      }
    write_table(out, cfg.out_dir, "structure_" + std::to_string(n) + ".csv",
                {"p", "h", "h_cells", "h_effective", "value"}, rows);

    if (n == cfg.resolutions.back() && nh >= 2) {
      for (std::size_t ip = 0; ip < np; ++ip) {
        std::vector<double> hs, vs;
        for (std::size_t ih = 0; ih < nh; ++ih) {
          hs.push_back(static_cast<double>(snap_offset(grid, cfg.offsets[ih])) *
                       grid.dx());
          vs.push_back(value[ip][ih] / cfg.repetitions);
        }
        fit_scalar(out, "rate_p" + num_label(cfg.p_values[ip]), hs, vs);
      }
    }
  }
}

void run_level_variance_study(const ExperimentConfig& cfg, int workers,
                              StudyResult* out) {
  // Same fixed-window convention as the multilevel estimators: snap once on
  // the ladder's coarsest grid so every rung measures the same functional.
  const GridSpec anchor = make_grid(cfg.coarsest_cells);
  const double h0 =
      static_cast<double>(snap_offset(anchor, cfg.offsets[0])) * anchor.dx();
  const std::int64_t m = cfg.samples.m;
  Rows rows;
  std::vector<double> deltas, vars;
  for (std::int64_t n : cfg.resolutions) {
    const GridSpec fine_grid = make_grid(n);
    const GridSpec coarse_grid = make_grid(n / 2);
    const int level_id = ladder_level(n, cfg.coarsest_cells);
    double v_sum = 0.0, work_sum = 0.0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = repetition_seed(cfg.seed, rep);
      std::vector<double> detail(m);
      std::vector<WorkLedger> ledgers(m);
      parallel_for(m, workers, [&](std::int64_t k) {
        const FieldSample f0 = initial_sample(
            cfg.field, fine_grid, seed, level_id, static_cast<std::uint64_t>(k));
        const EvolveResult fine = evolve(f0, cfg.flux, cfg.scheme, &ledgers[k]);
        const std::uint64_t coarse_index =
            cfg.coupled ? static_cast<std::uint64_t>(k)
                        : static_cast<std::uint64_t>(k) | (1ull << 63);
        const FieldSample c0 = initial_sample(cfg.field, coarse_grid, seed,
                                              level_id, coarse_index);
        const EvolveResult coarse = evolve(c0, cfg.flux, cfg.scheme, &ledgers[k]);
        detail[k] = member_structure_function_integrated(
                        fine_grid, fine.state.values, 1.0, h0) -
                    member_structure_function_integrated(
                        coarse_grid, coarse.state.values, 1.0, h0);
      });
      WorkLedger total;
      for (const WorkLedger& lg : ledgers) total += lg;
      const double w = 1.0 / static_cast<double>(m);
      const double mean =
          pairwise_sum(0, m, [&](std::int64_t k) { return w * detail[k]; });
      const double var = pairwise_sum(0, m, [&](std::int64_t k) {
        const double d = detail[k] - mean;
        return w * d * d;
      });
      v_sum += var;
      work_sum += static_cast<double>(total.cell_updates);
    }
    const double reps = cfg.repetitions;
    const double v_mean = v_sum / reps;
    rows.push_back({csv_int(level_id), csv_int(n), csv_int(n / 2),
                    csv_double(fine_grid.dx()), csv_int(m), csv_double(v_mean),
                    csv_double(work_sum / reps)});
    deltas.push_back(fine_grid.dx());
    vars.push_back(v_mean);
  }
  write_table(out, cfg.out_dir, "level_variance.csv",
              {"level", "fine_cells", "coarse_cells", "delta_fine", "samples",
               "variance", "work_mean"},
              rows);
  if (cfg.resolutions.size() >= 2) fit_scalar(out, "rate", deltas, vars);
}

}  // namespace

StudyResult run_experiment(const ExperimentConfig& config, int workers) {
  ExperimentConfig cfg = config;
  if (cfg.out_dir.empty()) cfg.out_dir = "out/" + experiment_name(cfg.experiment);
  cfg.validate();
  if (workers < 1) throw InvalidParamError("run_experiment: workers must be >= 1");
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir);

  StudyResult out;
  write_manifest(&out, cfg);
  switch (cfg.experiment) {
    case Experiment::Deterministic:
      run_deterministic_study(cfg, workers, &out);
      break;
    case Experiment::Mc:
      run_mc_study(cfg, workers, &out);
      break;
    case Experiment::Mlmc:
      run_mlmc_study(cfg, workers, &out);
      break;
    case Experiment::Wasserstein:
      run_wasserstein_study(cfg, workers, &out);
      break;
    case Experiment::Midpoint:
      run_midpoint_study(cfg, workers, &out);
      break;
    case Experiment::Structure:
      run_structure_study(cfg, workers, &out);
      break;
    case Experiment::LevelVariance:
      run_level_variance_study(cfg, workers, &out);
      break;
  }
  write_rates(&out, cfg.out_dir);
  return out;
}

}  // namespace stochfv
