#include "stochfv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stochfv/oracles.hpp"
#include "stochfv/parallel.hpp"

namespace stochfv {

double l1_distance(const FieldSample& x, const FieldSample& y) {
  x.validate();
  y.validate();
  if (x.grid.a != y.grid.a || x.grid.b != y.grid.b)
    throw IncompatibleGridsError("l1: fields live on different intervals");
  const std::int64_t n = std::max(x.grid.n_cells, y.grid.n_cells);
  const std::int64_t lo = std::min(x.grid.n_cells, y.grid.n_cells);
  if (n % lo != 0)
    throw IncompatibleGridsError("l1: cell counts are not nested");
  const std::vector<double>* xv = &x.values;
  const std::vector<double>* yv = &y.values;
  std::vector<double> xp, yp;
  if (x.grid.n_cells < n) {
    xp = prolong_values(x.values, n);
    xv = &xp;
  }
  if (y.grid.n_cells < n) {
    yp = prolong_values(y.values, n);
    yv = &yp;
  }
  const double dx = (x.grid.b - x.grid.a) / static_cast<double>(n);
  return dx * pairwise_sum(0, n, [&](std::int64_t i) {
    return std::abs((*xv)[i] - (*yv)[i]);
  });
}

AssignmentResult solve_assignment(const std::vector<double>& cost, std::int64_t n) {
  if (n < 1) throw InvalidParamError("assignment: n must be >= 1");
  if (n > 4096) throw TooLargeError("assignment: n exceeds the 4096 cap");
  if (static_cast<std::int64_t>(cost.size()) != n * n)
    throw InvalidParamError("assignment: cost matrix size is not n * n");
  for (double c : cost)
    if (!std::isfinite(c)) throw NonFiniteError("assignment: non-finite cost");

  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with potentials; rows and columns are
  // 1-based with column 0 as the staging slot for the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<std::int64_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (std::int64_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::int64_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::int64_t i0 = match[j0];
      double delta = inf;
      std::int64_t j1 = -1;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::int64_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::int64_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::int64_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.row_to_col.assign(n, -1);
  for (std::int64_t j = 1; j <= n; ++j)
    if (match[j] != 0) result.row_to_col[match[j] - 1] = j - 1;
  result.total_cost = pairwise_sum(0, n, [&](std::int64_t i) {
    return cost[i * n + result.row_to_col[i]];
  });
  return result;
}

namespace {

void require_uniform_pair(const EnsembleSummary& a, const EnsembleSummary& b) {
  a.validate();
  b.validate();
  if (a.member_count() != b.member_count())
    throw UnequalSupportError("wasserstein: member counts differ");
  if (a.member_count() > 4096)
    throw TooLargeError("wasserstein: more than 4096 members");
  const double w = 1.0 / static_cast<double>(a.member_count());
  for (double x : a.weights)
    if (std::abs(x - w) > 1e-12)
      throw UnequalSupportError("wasserstein: non-uniform weights");
  for (double x : b.weights)
    if (std::abs(x - w) > 1e-12)
      throw UnequalSupportError("wasserstein: non-uniform weights");
  if (a.grid.a != b.grid.a || a.grid.b != b.grid.b)
    throw IncompatibleGridsError("wasserstein: different intervals");
  const std::int64_t hi = std::max(a.grid.n_cells, b.grid.n_cells);
  if (hi % std::min(a.grid.n_cells, b.grid.n_cells) != 0)
    throw IncompatibleGridsError("wasserstein: cell counts are not nested");
}

// Pairwise member distances on the common refined grid.
std::vector<double> member_cost_matrix(const EnsembleSummary& a,
                                       const EnsembleSummary& b, int workers) {
  const std::int64_t m = a.member_count();
  const std::int64_t n = std::max(a.grid.n_cells, b.grid.n_cells);
  const double dx = (a.grid.b - a.grid.a) / static_cast<double>(n);

  auto refined = [n](const EnsembleSummary& e) {
    std::vector<std::vector<double>> out(e.members.size());
    for (std::size_t k = 0; k < e.members.size(); ++k)
      out[k] = e.grid.n_cells == n ? e.members[k] : prolong_values(e.members[k], n);
    return out;
  };
  const std::vector<std::vector<double>> am = refined(a);
  const std::vector<std::vector<double>> bm = refined(b);

  std::vector<double> cost(m * m);
  parallel_for(m, workers, [&](std::int64_t i) {
    const double* ai = am[i].data();
    for (std::int64_t j = 0; j < m; ++j) {
      const double* bj = bm[j].data();
      double s = 0.0;
      for (std::int64_t c = 0; c < n; ++c) s += std::abs(ai[c] - bj[c]);
      cost[i * m + j] = s * dx;
    }
  });
  return cost;
}

}  // namespace

double wasserstein1_empirical(const EnsembleSummary& a, const EnsembleSummary& b,
                              int workers) {
  require_uniform_pair(a, b);
  const std::int64_t m = a.member_count();
  const std::vector<double> cost = member_cost_matrix(a, b, workers);
  const AssignmentResult match = solve_assignment(cost, m);
  return match.total_cost / static_cast<double>(m);
}

double wasserstein1_sorted(const EnsembleSummary& a,
                           std::span<const double> certificate_a,
                           const EnsembleSummary& b,
                           std::span<const double> certificate_b) {
  require_uniform_pair(a, b);
  const std::int64_t m = a.member_count();
  if (static_cast<std::int64_t>(certificate_a.size()) != m ||
      static_cast<std::int64_t>(certificate_b.size()) != m)
    throw InvalidParamError("wasserstein: certificate size does not match members");

  auto order = [m](std::span<const double> cert) {
    std::vector<std::int64_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t x, std::int64_t y) {
      return cert[x] < cert[y];
    });
    return idx;
  };
  const std::vector<std::int64_t> ia = order(certificate_a);
  const std::vector<std::int64_t> ib = order(certificate_b);

  const std::int64_t n = std::max(a.grid.n_cells, b.grid.n_cells);
  const double dx = (a.grid.b - a.grid.a) / static_cast<double>(n);
  const double total = pairwise_sum(0, m, [&](std::int64_t r) {
    const std::vector<double> xa = a.grid.n_cells == n
                                       ? a.members[ia[r]]
                                       : prolong_values(a.members[ia[r]], n);
    const std::vector<double> xb = b.grid.n_cells == n
                                       ? b.members[ib[r]]
                                       : prolong_values(b.members[ib[r]], n);
    double s = 0.0;
    for (std::int64_t c = 0; c < n; ++c) s += std::abs(xa[c] - xb[c]);
    return s * dx;
  });
  return total / static_cast<double>(m);
}

double wasserstein_vs_exact_shock(const EnsembleSummary& ens,
                                  const RandomFieldSpec& field,
                                  const FluxModel& flux, double t, std::int64_t q,
                                  int workers) {
  ens.validate();
  if (q != ens.member_count())
    throw UnequalSupportError(
        "wasserstein: atom count must equal the ensemble member count");
  EnsembleSummary exact;
  exact.grid = ens.grid;
  exact.time = t;
  exact.members.resize(q);
  exact.weights.assign(q, 1.0 / static_cast<double>(q));
  const double hw = field.half_width;
  for (std::int64_t k = 0; k < q; ++k) {
    const double offset =
        -hw + (static_cast<double>(k) + 0.5) * (2.0 * hw / static_cast<double>(q));
    exact.members[k].resize(ens.grid.n_cells);
    for (std::int64_t i = 0; i < ens.grid.n_cells; ++i)
      exact.members[k][i] =
          exact_shock_solution(field, flux, offset, ens.grid.midpoint(i), t);
  }
  return wasserstein1_empirical(ens, exact, workers);
}

double fit_rate(std::span<const double> h, std::span<const double> e) {
  if (h.size() != e.size() || h.size() < 2)
    throw DegenerateInputError("fit_rate: need >= 2 matching points");
  const std::int64_t n = static_cast<std::int64_t>(h.size());
  std::vector<double> lx(n), ly(n);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0) || !(e[i] > 0.0))
      throw DegenerateInputError("fit_rate: values must be positive");
    lx[i] = std::log2(h[i]);
    ly[i] = std::log2(e[i]);
  }
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j)
      if (h[i] == h[j]) throw DegenerateInputError("fit_rate: repeated h value");
  const double mx = pairwise_sum(0, n, [&](std::int64_t i) { return lx[i]; }) / n;
  const double my = pairwise_sum(0, n, [&](std::int64_t i) { return ly[i]; }) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxy / sxx;
}

double predicted_work_fvm(double delta, int d) {
  if (!(delta > 0.0)) throw InvalidParamError("work: delta must be positive");
  return std::pow(delta, -static_cast<double>(d) - 1.0);
}

double predicted_work_mc(double delta, double rate_s, int d) {
  if (!(delta > 0.0)) throw InvalidParamError("work: delta must be positive");
  if (!(rate_s > 0.0)) throw InvalidParamError("work: rate s must be positive");
  return std::pow(delta, -static_cast<double>(d) - 1.0 - 2.0 * rate_s);
}

double predicted_work_mlmc(double delta_finest, int levels, double rate_r,
                           double rate_s, int d) {
  if (!(delta_finest > 0.0)) throw InvalidParamError("work: delta must be positive");
  if (levels < 0) throw InvalidParamError("work: levels must be >= 0");
  if (!(rate_r > 0.0) || !(rate_s > 0.0))
    throw InvalidParamError("work: rates r and s must be positive");
  const double dd = static_cast<double>(d);
  return std::pow(2.0, -levels * (dd + 1.0)) *
             std::pow(delta_finest, -dd - 1.0 - 2.0 * rate_s) +
         std::pow(delta_finest, -dd - 1.0 + rate_r / 2.0 - rate_s) *
             static_cast<double>(levels);
}

}  // namespace stochfv
