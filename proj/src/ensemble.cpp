#include "stochfv/ensemble.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "stochfv/csv.hpp"
#include "stochfv/parallel.hpp"

namespace stochfv {

namespace {

std::uint64_t fnv1a(const unsigned char* data, std::size_t n,
                    std::uint64_t h = 14695981039346656037ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

double power_p(double d, double p) {
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  if (p == 3.0) return d * d * d;
  return std::pow(d, p);
}

// Ensemble statistics reduce member contributions through a pairwise tree
// keyed by member index; see parallel.hpp.
template <class Leaf>
std::vector<double> reduce_members(const EnsembleSummary& ens, Leaf&& leaf) {
  return pairwise_sum_vectors(0, ens.member_count(), [&](std::int64_t k) {
    std::vector<double> v = leaf(k);
    const double w = ens.weights[static_cast<std::size_t>(k)];
    for (double& x : v) x *= w;
    return v;
  });
}

EnsembleSummary run_indexed(
    const GridSpec& grid, double t_end, std::int64_t m, int workers,
    WorkLedger* ledger,
    const std::function<FieldSample(std::int64_t)>& draw_initial,
    const FluxModel& flux, const SchemeConfig& scheme) {
  grid.validate();
  scheme.validate();
  if (m < 1) throw InvalidParamError("ensemble: member count must be >= 1");

  EnsembleSummary ens;
  ens.grid = grid;
  ens.time = t_end;
  ens.members.resize(m);
  ens.weights.assign(m, 1.0 / static_cast<double>(m));

  std::vector<WorkLedger> ledgers(ledger != nullptr ? m : 0);
  parallel_for(m, workers, [&](std::int64_t k) {
    try {
      FieldSample u0 = draw_initial(k);
      WorkLedger* local = ledger != nullptr ? &ledgers[k] : nullptr;
      EvolveResult r = evolve(u0, flux, scheme, local);
      ens.members[k] = std::move(r.state.values);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(std::string(e.what()) + " (level 0, sample " +
                               std::to_string(k) + ")",
                           0, k);
    }
  });

  if (ledger != nullptr) {
    for (std::int64_t k = 0; k < m; ++k) *ledger += ledgers[k];
    ledger->add_sample(0, static_cast<std::uint64_t>(m));
  }
  return ens;
}

}  // namespace

void EnsembleSummary::validate() const {
  grid.validate();
  if (members.empty()) throw InvalidParamError("ensemble: no members");
  if (weights.size() != members.size())
    throw InvalidParamError("ensemble: weights do not match members");
  for (const auto& m : members)
    if (static_cast<std::int64_t>(m.size()) != grid.n_cells)
      throw InvalidParamError("ensemble: member size does not match grid");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidParamError("ensemble: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidParamError("ensemble: weights must sum to 1");
}

EnsembleSummary run_mc(const RandomFieldSpec& field, const FluxModel& flux,
                       const SchemeConfig& scheme, const GridSpec& grid,
                       std::int64_t m, std::uint64_t master_seed, int workers,
                       WorkLedger* ledger) {
  field.validate();
  return run_indexed(
      grid, scheme.t_end, m, workers, ledger,
      [&](std::int64_t k) {
        return initial_sample(field, grid, master_seed, 0,
                              static_cast<std::uint64_t>(k));
      },
      flux, scheme);
}

EnsembleSummary midpoint_quadrature_ensemble(const RandomFieldSpec& field,
                                             const FluxModel& flux,
                                             const SchemeConfig& scheme,
                                             const GridSpec& grid, std::int64_t q,
                                             int workers, WorkLedger* ledger) {
  field.validate();
  if (field.kind != FieldKind::UncertainShock)
    throw InvalidParamError("midpoint ensemble: field kind is not a shock");
  const double hw = field.half_width;
  return run_indexed(
      grid, scheme.t_end, q, workers, ledger,
      [&](std::int64_t k) {
        const double offset =
            -hw + (static_cast<double>(k) + 0.5) * (2.0 * hw / static_cast<double>(q));
        return shock_initial_field(field, offset, grid);
      },
      flux, scheme);
}

std::pair<FieldSample, FieldSample> mean_variance(const EnsembleSummary& ens) {
  ens.validate();
  const std::int64_t n = ens.grid.n_cells;

  FieldSample mean;
  mean.grid = ens.grid;
  mean.time = ens.time;
  mean.values = reduce_members(ens, [&](std::int64_t k) { return ens.members[k]; });

  FieldSample var;
  var.grid = ens.grid;
  var.time = ens.time;
  var.values = reduce_members(ens, [&](std::int64_t k) {
    std::vector<double> sq(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = ens.members[k][i] - mean.values[i];
      sq[i] = d * d;
    }
    return sq;
  });
  return {std::move(mean), std::move(var)};
}

std::int64_t snap_offset(const GridSpec& grid, double h) {
  if (!(h >= 0.0)) throw OffsetNotOnGridError("offset: h must be >= 0");
  const std::int64_t j = std::llround(h / grid.dx());
  if (j >= grid.n_cells)
    throw OffsetNotOnGridError("offset: h = " + std::to_string(h) +
                               " leaves the grid");
  return j;
}

namespace {

inline std::int64_t shifted_index(std::int64_t i, std::int64_t j, std::int64_t n,
                                  Boundary boundary) {
  const std::int64_t s = i + j;
  if (boundary == Boundary::Periodic) return s % n;
  return s < n ? s : n - 1;  // clamp at the outflow edge
}

}  // namespace

std::vector<double> member_structure_function_local(const GridSpec& grid,
                                                    const std::vector<double>& u,
                                                    double p, double h) {
  if (!(p >= 1.0)) throw InvalidParamError("structure function: p must be >= 1");
  const std::int64_t j = snap_offset(grid, h);
  const std::int64_t n = grid.n_cells;
  std::vector<double> out(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = u[shifted_index(i, j, n, grid.boundary)] - u[i];
    out[i] = power_p(std::abs(d), p);
  }
  return out;
}

double member_structure_function_integrated(const GridSpec& grid,
                                            const std::vector<double>& u, double p,
                                            double h) {
  const std::vector<double> local = member_structure_function_local(grid, u, p, h);
  const double dx = grid.dx();
  return dx * pairwise_sum(0, grid.n_cells,
                           [&](std::int64_t i) { return local[i]; });
}

std::vector<double> member_three_point(const GridSpec& grid,
                                       const std::vector<double>& u, double h1,
                                       double h2) {
  const std::int64_t j1 = snap_offset(grid, h1);
  const std::int64_t j2 = snap_offset(grid, h2);
  const std::int64_t n = grid.n_cells;
  std::vector<double> out(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double d1 = u[i] - u[shifted_index(i, j1, n, grid.boundary)];
    const double d2 = u[i] - u[shifted_index(i, j2, n, grid.boundary)];
    out[i] = d1 * d2 * d2;
  }
  return out;
}

FieldSample structure_function_local(const EnsembleSummary& ens, double p, double h) {
  ens.validate();
  FieldSample out;
  out.grid = ens.grid;
  out.time = ens.time;
  out.values = reduce_members(ens, [&](std::int64_t k) {
    return member_structure_function_local(ens.grid, ens.members[k], p, h);
  });
  return out;
}

double structure_function_integrated(const EnsembleSummary& ens, double p, double h) {
  const FieldSample local = structure_function_local(ens, p, h);
  const double dx = ens.grid.dx();
  return dx * pairwise_sum(0, ens.grid.n_cells,
                           [&](std::int64_t i) { return local.values[i]; });
}

FieldSample three_point_moment(const EnsembleSummary& ens, double h1, double h2) {
  ens.validate();
  FieldSample out;
  out.grid = ens.grid;
  out.time = ens.time;
  out.values = reduce_members(ens, [&](std::int64_t k) {
    return member_three_point(ens.grid, ens.members[k], h1, h2);
  });
  return out;
}

namespace {

constexpr char kEnsembleMagic[8] = {'S', 'F', 'V', 'E', 'N', 'S', '0', '1'};

template <class T>
void put(std::vector<unsigned char>& buf, const T& v) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <class T>
T take(const std::vector<unsigned char>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size())
    throw CacheCorruptError("ensemble record: truncated payload");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_ensemble_binary(const EnsembleSummary& ens, const std::string& path) {
  ens.validate();
  std::vector<unsigned char> buf;
  buf.reserve(64 + ens.members.size() * (ens.grid.n_cells + 1) * sizeof(double));
  put(buf, ens.grid.n_cells);
  put(buf, ens.grid.a);
  put(buf, ens.grid.b);
  put(buf, static_cast<std::uint8_t>(ens.grid.boundary));
  put(buf, ens.time);
  put(buf, static_cast<std::int64_t>(ens.members.size()));
  for (double w : ens.weights) put(buf, w);
  for (const auto& m : ens.members)
    for (double v : m) put(buf, v);
  const std::uint64_t checksum = fnv1a(buf.data(), buf.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ensemble record: cannot open " + path);
  out.write(kEnsembleMagic, sizeof(kEnsembleMagic));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!out) throw IoError("ensemble record: write failed for " + path);
}

EnsembleSummary load_ensemble_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ensemble record: cannot open " + path);
  std::vector<unsigned char> all((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (all.size() < sizeof(kEnsembleMagic) + sizeof(std::uint64_t) ||
      std::memcmp(all.data(), kEnsembleMagic, sizeof(kEnsembleMagic)) != 0)
    throw CacheCorruptError("ensemble record: bad magic in " + path);

  const std::size_t payload_end = all.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, all.data() + payload_end, sizeof(stored));
  const std::uint64_t actual =
      fnv1a(all.data() + sizeof(kEnsembleMagic), payload_end - sizeof(kEnsembleMagic));
  if (stored != actual)
    throw CacheCorruptError("ensemble record: checksum mismatch in " + path);

  std::vector<unsigned char> buf(all.begin() + sizeof(kEnsembleMagic),
                                 all.begin() + payload_end);
  std::size_t pos = 0;
  EnsembleSummary ens;
  ens.grid.n_cells = take<std::int64_t>(buf, pos);
  ens.grid.a = take<double>(buf, pos);
  ens.grid.b = take<double>(buf, pos);
  ens.grid.boundary = static_cast<Boundary>(take<std::uint8_t>(buf, pos));
  ens.time = take<double>(buf, pos);
  const std::int64_t m = take<std::int64_t>(buf, pos);
  if (m < 1) throw CacheCorruptError("ensemble record: bad member count");
  ens.weights.resize(m);
  for (std::int64_t k = 0; k < m; ++k) ens.weights[k] = take<double>(buf, pos);
  ens.members.assign(m, std::vector<double>(ens.grid.n_cells));
  for (std::int64_t k = 0; k < m; ++k)
    for (std::int64_t i = 0; i < ens.grid.n_cells; ++i)
      ens.members[k][i] = take<double>(buf, pos);
  if (pos != buf.size())
    throw CacheCorruptError("ensemble record: trailing bytes in " + path);
  ens.validate();
  return ens;
}

void save_ensemble_csv(const EnsembleSummary& ens, const std::string& path) {
  ens.validate();
  std::vector<std::vector<std::string>> rows;
  rows.reserve(ens.members.size() * ens.grid.n_cells);
  for (std::int64_t k = 0; k < ens.member_count(); ++k)
    for (std::int64_t i = 0; i < ens.grid.n_cells; ++i)
      rows.push_back({csv_int(k), csv_int(i), csv_double(ens.grid.midpoint(i)),
                      csv_double(ens.members[k][i])});
  emit_csv(path, {"member", "cell", "x", "value"}, rows);
}

}  // namespace stochfv
