#include "stochfv/oracles.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stochfv/csv.hpp"
#include "stochfv/version.hpp"

namespace stochfv {

namespace {

double shock_speed(const RandomFieldSpec& field, const FluxModel& flux) {
  field.validate();
  if (field.kind != FieldKind::UncertainShock)
    throw InvalidParamError("shock oracle: field kind is not a shock");
  if (!(field.left > field.right))
    throw InvalidParamError("shock oracle: requires left > right");
  return (flux.f(field.left) - flux.f(field.right)) / (field.left - field.right);
}

}  // namespace

double exact_shock_solution(const RandomFieldSpec& field, const FluxModel& flux,
                            double offset, double x, double t) {
  const double speed = shock_speed(field, flux);
  return x < field.center + offset + speed * t ? field.left : field.right;
}

std::pair<double, double> exact_shock_mean_variance(const RandomFieldSpec& field,
                                                    const FluxModel& flux, double x,
                                                    double t) {
  const double speed = shock_speed(field, flux);
  const double c = field.center + speed * t;
  const double hw = field.half_width;
  const double p = std::clamp((c + hw - x) / (2.0 * hw), 0.0, 1.0);
  const double jump = field.left - field.right;
  return {field.right + jump * p, jump * jump * p * (1.0 - p)};
}

double exact_structure_function(const RandomFieldSpec& field, const FluxModel& flux,
                                double x, double t, double h) {
  if (!(h >= 0.0)) throw InvalidParamError("shock oracle: h must be >= 0");
  const double speed = shock_speed(field, flux);
  const double c = field.center + speed * t;
  const double hw = field.half_width;
  if (x + hw + h < c) return 0.0;  // both points left of every shock position
  if (x - hw > c) return 0.0;      // both points right of every shock position
  return (std::min(hw, x + h - c) - std::max(-hw, x - c)) / (2.0 * hw);
}

std::string reference_cache_dir() {
  const char* env = std::getenv("STOCHFV_REF_CACHE");
  if (env != nullptr && env[0] != '\0') return env;
  return "ref_cache";
}

std::string reference_key(const ReferenceRequest& request) {
  request.field.validate();
  request.grid.validate();
  request.scheme.validate();
  if (request.m < 1) throw InvalidParamError("reference: m must be >= 1");

  std::string s;
  auto add = [&s](const std::string& part) {
    s += part;
    s += '|';
  };
  add(request.field.kind == FieldKind::UncertainShock ? "shock" : "fbm");
  add(csv_double(request.field.left));
  add(csv_double(request.field.right));
  add(csv_double(request.field.center));
  add(csv_double(request.field.half_width));
  add(csv_double(request.field.hurst));
  add(std::string(request.flux.name()));
  add(csv_double(request.flux.speed()));
  add(request.scheme.numerical_flux == NumericalFlux::Godunov ? "godunov"
                                                              : "rusanov");
  add(request.scheme.reconstruction == Reconstruction::Weno2 ? "weno2" : "none");
  add(csv_double(request.scheme.cfl));
  add(csv_double(request.scheme.t_end));
  add(csv_int(request.grid.n_cells));
  add(csv_double(request.grid.a));
  add(csv_double(request.grid.b));
  add(request.grid.boundary == Boundary::Outflow ? "outflow" : "periodic");
  add(csv_int(request.m));
  add(std::to_string(request.master_seed));

  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

namespace {

// Holds an advisory exclusive lock for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const std::string& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw IoError("reference: cannot open lock file " + path);
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("reference: cannot lock " + path);
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

nlohmann::json manifest_for(const ReferenceRequest& r, const std::string& key) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["key"] = key;
  j["field"]["kind"] = r.field.kind == FieldKind::UncertainShock ? "shock" : "fbm";
  j["field"]["left"] = r.field.left;
  j["field"]["right"] = r.field.right;
  j["field"]["center"] = r.field.center;
  j["field"]["half_width"] = r.field.half_width;
  j["field"]["hurst"] = r.field.hurst;
  j["flux"]["kind"] = std::string(r.flux.name());
  j["flux"]["speed"] = r.flux.speed();
  j["scheme"]["numerical_flux"] =
      r.scheme.numerical_flux == NumericalFlux::Godunov ? "godunov" : "rusanov";
  j["scheme"]["reconstruction"] =
      r.scheme.reconstruction == Reconstruction::Weno2 ? "weno2" : "none";
  j["scheme"]["cfl"] = r.scheme.cfl;
  j["scheme"]["t_end"] = r.scheme.t_end;
  j["grid"]["n_cells"] = r.grid.n_cells;
  j["grid"]["a"] = r.grid.a;
  j["grid"]["b"] = r.grid.b;
  j["grid"]["boundary"] =
      r.grid.boundary == Boundary::Outflow ? "outflow" : "periodic";
  j["m"] = r.m;
  j["master_seed"] = std::to_string(r.master_seed);
  return j;
}

}  // namespace

EnsembleSummary reference_solution(const ReferenceRequest& request, int workers,
                                   const std::string& cache_dir) {
  const std::string key = reference_key(request);
  const std::filesystem::path dir =
      cache_dir.empty() ? reference_cache_dir() : cache_dir;
  std::filesystem::create_directories(dir);
  const std::string bin_path = (dir / (key + ".bin")).string();
  const std::string manifest_path = (dir / (key + ".json")).string();

  FileLock lock((dir / (key + ".lock")).string());

  if (std::filesystem::exists(bin_path) && std::filesystem::exists(manifest_path)) {
    nlohmann::json stored;
    {
      std::ifstream in(manifest_path);
      if (!in) throw IoError("reference: cannot open " + manifest_path);
      try {
        in >> stored;
      } catch (const nlohmann::json::exception& e) {
        throw CacheCorruptError("reference: manifest is not valid JSON: " +
                                std::string(e.what()));
      }
    }
    if (!stored.contains("key") || stored["key"] != key)
      throw CacheCorruptError("reference: manifest key mismatch for " + key);
    EnsembleSummary ens = load_ensemble_binary(bin_path);
    if (ens.grid != request.grid ||
        ens.member_count() != request.m || ens.time != request.scheme.t_end)
      throw CacheCorruptError("reference: cached ensemble does not match request");
    return ens;
  }

  EnsembleSummary ens = run_mc(request.field, request.flux, request.scheme,
                               request.grid, request.m, request.master_seed,
                               workers);
  save_ensemble_binary(ens, bin_path);
  {
    std::ofstream out(manifest_path);
    if (!out) throw IoError("reference: cannot write " + manifest_path);
    out << manifest_for(request, key).dump(2) << "\n";
  }
  return ens;
}

}  // namespace stochfv
