#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "stochfv/metrics.hpp"
#include "stochfv/oracles.hpp"
#include "stochfv/random_fields.hpp"

using namespace stochfv;

namespace {

FieldSample field_on(const GridSpec& grid, std::vector<double> values,
                     double time = 0.0) {
  FieldSample f;
  f.grid = grid;
  f.values = std::move(values);
  f.time = time;
  return f;
}

EnsembleSummary manual_ensemble(const GridSpec& grid,
                                std::vector<std::vector<double>> members,
                                double time = 0.0) {
  EnsembleSummary ens;
  ens.grid = grid;
  ens.time = time;
  ens.weights.assign(members.size(), 1.0 / static_cast<double>(members.size()));
  ens.members = std::move(members);
  ens.validate();
  return ens;
}

EnsembleSummary random_ensemble(const GridSpec& grid, std::int64_t m,
                                std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> members(m);
  for (auto& member : members) {
    member.resize(grid.n_cells);
    for (double& x : member) x = u(gen);
  }
  return manual_ensemble(grid, std::move(members));
}

double brute_force_assignment(const std::vector<double>& cost, std::int64_t n) {
  std::vector<std::int64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("l1 distance integrates the absolute difference") {
  const GridSpec g4 = make_grid(4);
  const GridSpec g8 = make_grid(8);

  SUBCASE("identical fields are at distance zero") {
    const FieldSample f = field_on(g8, {1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(l1_distance(f, f) == 0.0);
  }

  SUBCASE("constants differ by their gap") {
    CHECK(l1_distance(field_on(g8, std::vector<double>(8, 0.0)),
                      field_on(g8, std::vector<double>(8, 1.0))) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("the coarser field is prolonged, so aligned steps coincide") {
    const FieldSample coarse = field_on(g4, {1, 1, 0, 0});
    const FieldSample fine = field_on(g8, {1, 1, 1, 1, 0, 0, 0, 0});
    CHECK(l1_distance(coarse, fine) == 0.0);
    CHECK(l1_distance(fine, coarse) == 0.0);

    const FieldSample nudged = field_on(g8, {1, 1, 1, 0, 0, 0, 0, 0});
    CHECK(l1_distance(coarse, nudged) == doctest::Approx(1.0 / 8).epsilon(1e-14));
  }

  SUBCASE("fields on different intervals are rejected") {
    GridSpec shifted = make_grid(4);
    shifted.b = 2.0;
    CHECK_THROWS_AS(l1_distance(field_on(g4, {0, 0, 0, 0}),
                                field_on(shifted, {0, 0, 0, 0})),
                    IncompatibleGridsError);
  }

  SUBCASE("a field whose values do not match its grid is rejected") {
    CHECK_THROWS_AS(l1_distance(field_on(g4, {0, 0, 0}), field_on(g4, {0, 0, 0, 0})),
                    InvalidParamError);
  }
}

TEST_CASE("the assignment solver finds the exact optimum") {
  SUBCASE("pinned two by two costs") {
    const AssignmentResult keep = solve_assignment({0, 1, 1, 0}, 2);
    CHECK(keep.row_to_col == std::vector<std::int64_t>{0, 1});
    CHECK(keep.total_cost == 0.0);

    const AssignmentResult swap = solve_assignment({1, 0, 0, 1}, 2);
    CHECK(swap.row_to_col == std::vector<std::int64_t>{1, 0});
    CHECK(swap.total_cost == 0.0);
  }

  SUBCASE("matches brute force on a thousand random instances") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::int64_t n = 1 + static_cast<std::int64_t>(gen() % 6);
      std::vector<double> cost(n * n);
      for (double& c : cost) c = u(gen);

      const AssignmentResult r = solve_assignment(cost, n);
      std::vector<std::int64_t> sorted = r.row_to_col;
      std::sort(sorted.begin(), sorted.end());
      for (std::int64_t j = 0; j < n; ++j) REQUIRE(sorted[j] == j);

      const double brute = brute_force_assignment(cost, n);
      REQUIRE(r.total_cost == doctest::Approx(brute).epsilon(1e-12));
    }
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(solve_assignment({}, 0), InvalidParamError);
    CHECK_THROWS_AS(solve_assignment({1.0, 2.0, 3.0}, 2), InvalidParamError);
    CHECK_THROWS_AS(
        solve_assignment({std::numeric_limits<double>::quiet_NaN()}, 1),
        NonFiniteError);
    CHECK_THROWS_AS(solve_assignment({}, 4097), TooLargeError);
  }
}

TEST_CASE("empirical wasserstein behaves like a metric") {
  const GridSpec grid = make_grid(16);
  const EnsembleSummary a = random_ensemble(grid, 8, 101);
  const EnsembleSummary b = random_ensemble(grid, 8, 202);
  const EnsembleSummary c = random_ensemble(grid, 8, 303);

  SUBCASE("identity of indiscernibles") {
    CHECK(wasserstein1_empirical(a, a) == 0.0);
  }

  SUBCASE("symmetry") {
    CHECK(wasserstein1_empirical(a, b) ==
          doctest::Approx(wasserstein1_empirical(b, a)).epsilon(1e-12));
  }

  SUBCASE("triangle inequality") {
    const double ab = wasserstein1_empirical(a, b);
    const double bc = wasserstein1_empirical(b, c);
    const double ac = wasserstein1_empirical(a, c);
    CHECK(ac <= ab + bc + 1e-10);
  }

  SUBCASE("worker count does not change the value") {
    CHECK(wasserstein1_empirical(a, b, 4) == wasserstein1_empirical(a, b, 1));
  }

  SUBCASE("a single member reduces to the field distance") {
    const EnsembleSummary one_a = random_ensemble(grid, 1, 5);
    const EnsembleSummary one_b = random_ensemble(grid, 1, 6);
    const double direct = l1_distance(field_on(grid, one_a.members[0]),
                                      field_on(grid, one_b.members[0]));
    CHECK(wasserstein1_empirical(one_a, one_b) ==
          doctest::Approx(direct).epsilon(1e-13));
  }

  SUBCASE("matches brute force over permutations on indicator members") {
    std::mt19937 gen(12);
    const GridSpec g8 = make_grid(8);
    for (int trial = 0; trial < 300; ++trial) {
      const std::int64_t m = 1 + static_cast<std::int64_t>(gen() % 6);
      auto draw = [&]() {
        std::vector<std::vector<double>> members(m);
        for (auto& member : members) {
          member.resize(8);
          for (double& x : member) x = static_cast<double>(gen() % 2);
        }
        return members;
      };
      const EnsembleSummary ea = manual_ensemble(g8, draw());
      const EnsembleSummary eb = manual_ensemble(g8, draw());

      std::vector<double> cost(m * m);
      for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
          cost[i * m + j] = l1_distance(field_on(g8, ea.members[i]),
                                        field_on(g8, eb.members[j]));
      const double brute = brute_force_assignment(cost, m) / m;
      REQUIRE(wasserstein1_empirical(ea, eb) ==
              doctest::Approx(brute).epsilon(1e-12));
    }
  }

  SUBCASE("rejects mismatched supports") {
    CHECK_THROWS_AS(wasserstein1_empirical(a, random_ensemble(grid, 4, 9)),
                    UnequalSupportError);

    EnsembleSummary skewed = a;
    skewed.weights[0] = 0.25;
    skewed.weights[1] = 0.0;  // keep the total at one
    CHECK_THROWS_AS(wasserstein1_empirical(skewed, b), UnequalSupportError);

    GridSpec wide = make_grid(16);
    wide.b = 3.0;
    CHECK_THROWS_AS(wasserstein1_empirical(a, random_ensemble(wide, 8, 1)),
                    IncompatibleGridsError);
  }

  SUBCASE("rejects ensembles over the member cap") {
    const GridSpec tiny = make_grid(1);
    std::vector<std::vector<double>> members(4097, std::vector<double>{0.0});
    const EnsembleSummary big_a = manual_ensemble(tiny, members);
    const EnsembleSummary big_b = manual_ensemble(tiny, std::move(members));
    CHECK_THROWS_AS(wasserstein1_empirical(big_a, big_b), TooLargeError);
  }
}

TEST_CASE("sorted matching reproduces the assignment optimum for shock families") {
  const RandomFieldSpec spec;
  std::mt19937 gen(404);
  std::uniform_real_distribution<double> u(-0.099, 0.099);

  const auto shock_family = [&](const GridSpec& grid, std::int64_t m) {
    std::vector<double> offsets(m);
    std::vector<std::vector<double>> members(m);
    for (std::int64_t k = 0; k < m; ++k) {
      offsets[k] = u(gen);
      members[k] = shock_initial_field(spec, offsets[k], grid).values;
    }
    return std::pair(manual_ensemble(grid, std::move(members)), offsets);
  };

  SUBCASE("same grid") {
    const auto [a, cert_a] = shock_family(make_grid(128), 64);
    const auto [b, cert_b] = shock_family(make_grid(128), 64);
    CHECK(wasserstein1_sorted(a, cert_a, b, cert_b) ==
          doctest::Approx(wasserstein1_empirical(a, b)).epsilon(1e-12));
  }

  SUBCASE("across one refinement") {
    const auto [a, cert_a] = shock_family(make_grid(128), 32);
    const auto [b, cert_b] = shock_family(make_grid(64), 32);
    CHECK(wasserstein1_sorted(a, cert_a, b, cert_b) ==
          doctest::Approx(wasserstein1_empirical(a, b)).epsilon(1e-12));
  }

  SUBCASE("certificate sizes must match the members") {
    const auto [a, cert_a] = shock_family(make_grid(64), 8);
    const auto [b, cert_b] = shock_family(make_grid(64), 8);
    const std::vector<double> short_cert(cert_a.begin(), cert_a.end() - 1);
    CHECK_THROWS_AS(wasserstein1_sorted(a, short_cert, b, cert_b),
                    InvalidParamError);
  }
}

TEST_CASE("distance to the exact shock law vanishes on its own atoms") {
  const RandomFieldSpec spec;
  const FluxModel flux = FluxModel::burgers();
  const GridSpec grid = make_grid(64);
  const std::int64_t q = 8;

  // The same midpoint offsets the comparison discretizes the offset law with.
  std::vector<double> offsets(q);
  for (std::int64_t k = 0; k < q; ++k)
    offsets[k] = -spec.half_width +
                 (k + 0.5) * (2.0 * spec.half_width / static_cast<double>(q));

  // A wider support for building members, so shifted offsets stay legal; the
  // step profile itself only depends on center + offset.
  RandomFieldSpec wide = spec;
  wide.half_width = 0.2;
  const auto family_at = [&](double shift) {
    std::vector<std::vector<double>> members(q);
    for (std::int64_t k = 0; k < q; ++k)
      members[k] = shock_initial_field(wide, offsets[k] + shift, grid).values;
    return manual_ensemble(grid, std::move(members));
  };

  CHECK(wasserstein_vs_exact_shock(family_at(0.0), spec, flux, 0.0, q) == 0.0);

  // Shifting every member by exactly two cells moves each matched pair by
  // 2 dx, and the unit jump turns that into an L1 cost of 2 dx.
  const double dx = grid.dx();
  CHECK(wasserstein_vs_exact_shock(family_at(2.0 * dx), spec, flux, 0.0, q) ==
        doctest::Approx(2.0 * dx).epsilon(1e-13));

  CHECK_THROWS_AS(wasserstein_vs_exact_shock(family_at(0.0), spec, flux, 0.0, 16),
                  UnequalSupportError);
}

TEST_CASE("rate fitting recovers exact power laws") {
  const std::vector<double> h{1.0, 0.5, 0.25, 0.125};

  SUBCASE("pinned slopes") {
    std::vector<double> e(4);
    for (int i = 0; i < 4; ++i) e[i] = 3.0 * h[i];
    CHECK(fit_rate(h, e) == doctest::Approx(1.0).epsilon(1e-12));

    for (int i = 0; i < 4; ++i) e[i] = std::sqrt(h[i]);
    CHECK(fit_rate(h, e) == doctest::Approx(0.5).epsilon(1e-12));

    for (int i = 0; i < 4; ++i) e[i] = 7.0;
    CHECK(fit_rate(h, e) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    for (int i = 0; i < 4; ++i) e[i] = 2.0 / h[i];
    CHECK(fit_rate(h, e) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("degenerate inputs are rejected") {
    const std::vector<double> e{1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    DegenerateInputError);
    CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0, 0.5}, e),
                    DegenerateInputError);
    CHECK_THROWS_AS(
        fit_rate(std::vector<double>{0.5, 0.5, 0.25, 0.125}, e),
        DegenerateInputError);
    CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0, -0.5, 0.25, 0.125}, e),
                    DegenerateInputError);
    CHECK_THROWS_AS(
        fit_rate(h, std::vector<double>{1.0, 0.0, 3.0, 4.0}),
        DegenerateInputError);
  }
}

TEST_CASE("work models predict the textbook costs") {
  SUBCASE("deterministic solve") {
    CHECK(predicted_work_fvm(1.0 / 128) == doctest::Approx(16384.0).epsilon(1e-12));
    CHECK(predicted_work_fvm(1.0 / 128, 2) ==
          doctest::Approx(2097152.0).epsilon(1e-12));
    CHECK_THROWS_AS(predicted_work_fvm(0.0), InvalidParamError);
    CHECK_THROWS_AS(predicted_work_fvm(-0.25), InvalidParamError);
  }

  SUBCASE("monte carlo cost jumps eightfold per mesh halving at s = 1/2") {
    CHECK(predicted_work_mc(1.0 / 64, 0.5) ==
          doctest::Approx(262144.0).epsilon(1e-12));
    for (double delta : {1.0 / 16, 1.0 / 64, 1.0 / 256})
      CHECK(predicted_work_mc(delta / 2, 0.5) / predicted_work_mc(delta, 0.5) ==
            doctest::Approx(8.0).epsilon(1e-12));
    CHECK_THROWS_AS(predicted_work_mc(0.5, 0.0), InvalidParamError);
    CHECK_THROWS_AS(predicted_work_mc(0.0, 0.5), InvalidParamError);
  }

  SUBCASE("multilevel cost grows like the deterministic ladder") {
    CHECK(predicted_work_mlmc(1.0 / 256, 4, 1.0, 0.5) ==
          doctest::Approx(327680.0).epsilon(1e-12));

    // One more level and one more halving multiply the cost by about four.
    const double growth = predicted_work_mlmc(1.0 / 512, 5, 1.0, 0.5) /
                          predicted_work_mlmc(1.0 / 256, 4, 1.0, 0.5);
    CHECK(growth > 3.5);
    CHECK(growth < 5.5);

    // The advantage over single-level sampling widens as the mesh refines.
    const double gain_coarse = predicted_work_mc(1.0 / 256, 0.5) /
                               predicted_work_mlmc(1.0 / 256, 4, 1.0, 0.5);
    const double gain_fine = predicted_work_mc(1.0 / 4096, 0.5) /
                             predicted_work_mlmc(1.0 / 4096, 8, 1.0, 0.5);
    CHECK(gain_coarse > 1.0);
    CHECK(gain_fine > 5.0 * gain_coarse);

    CHECK_THROWS_AS(predicted_work_mlmc(0.5, -1, 1.0, 0.5), InvalidParamError);
    CHECK_THROWS_AS(predicted_work_mlmc(0.5, 2, 0.0, 0.5), InvalidParamError);
    CHECK_THROWS_AS(predicted_work_mlmc(0.5, 2, 1.0, 0.0), InvalidParamError);
    CHECK_THROWS_AS(predicted_work_mlmc(0.0, 2, 1.0, 0.5), InvalidParamError);
  }
}
