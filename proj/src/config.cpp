#include "stochfv/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "stochfv/errors.hpp"
#include "stochfv/grid.hpp"

namespace stochfv {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path.empty() ? what : path + ": " + what);
}

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(join_path(path, it.key()), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    std::int64_t s = v.get<std::int64_t>();
    if (s < 0) fail(path, "seed must be non-negative");
    return static_cast<std::uint64_t>(s);
  }
  if (v.is_string()) {
    const std::string& s = v.get<std::string>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      fail(path, "seed string must be decimal digits");
    errno = 0;
    char* end = nullptr;
    std::uint64_t out = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size())
      fail(path, "seed string out of range");
    return out;
  }
  fail(path, "expected an unsigned integer or a digit string");
}

RandomFieldSpec parse_field(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"kind", "left", "right", "center", "half_width", "hurst"});
  const json* kind = find(obj, "kind");
  if (!kind) fail(join_path(path, "kind"), "required");
  std::string k = get_string(*kind, join_path(path, "kind"));
  RandomFieldSpec spec;
  if (k == "shock") {
    spec.kind = FieldKind::UncertainShock;
    if (find(obj, "hurst"))
      fail(join_path(path, "hurst"), "not valid for the shock field");
    if (const json* v = find(obj, "left"))
      spec.left = get_double(*v, join_path(path, "left"));
    if (const json* v = find(obj, "right"))
      spec.right = get_double(*v, join_path(path, "right"));
    if (const json* v = find(obj, "center"))
      spec.center = get_double(*v, join_path(path, "center"));
    if (const json* v = find(obj, "half_width"))
      spec.half_width = get_double(*v, join_path(path, "half_width"));
  } else if (k == "fbm") {
    spec.kind = FieldKind::FractionalBrownian;
    for (const char* bad : {"left", "right", "center", "half_width"})
      if (find(obj, bad))
        fail(join_path(path, bad), "not valid for the fbm field");
    if (const json* v = find(obj, "hurst"))
      spec.hurst = get_double(*v, join_path(path, "hurst"));
  } else {
    fail(join_path(path, "kind"), "expected \"shock\" or \"fbm\"");
  }
  try {
    spec.validate();
  } catch (const InvalidParamError& e) {
    fail(path, e.what());
  }
  return spec;
}

FluxModel parse_flux(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"kind", "speed"});
  const json* kind = find(obj, "kind");
  if (!kind) fail(join_path(path, "kind"), "required");
  std::string k = get_string(*kind, join_path(path, "kind"));
  if (k == "burgers" || k == "cubic") {
    if (find(obj, "speed"))
      fail(join_path(path, "speed"), "only valid for advection");
    return k == "burgers" ? FluxModel::burgers() : FluxModel::cubic();
  }
  if (k == "advection" || k == "linear-advection") {
    double speed = 1.0;
    if (const json* v = find(obj, "speed"))
      speed = get_double(*v, join_path(path, "speed"));
    return FluxModel::linear_advection(speed);
  }
  fail(join_path(path, "kind"),
       "expected \"burgers\", \"cubic\" or \"linear-advection\"");
}

void parse_scheme(const json& obj, const std::string& path, SchemeConfig* out,
                  bool* t_end_set) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"flux", "reconstruction", "cfl", "t_end"});
  if (const json* v = find(obj, "flux")) {
    std::string s = get_string(*v, join_path(path, "flux"));
    if (s == "godunov")
      out->numerical_flux = NumericalFlux::Godunov;
    else if (s == "rusanov")
      out->numerical_flux = NumericalFlux::Rusanov;
    else
      fail(join_path(path, "flux"), "expected \"godunov\" or \"rusanov\"");
  }
  if (const json* v = find(obj, "reconstruction")) {
    std::string s = get_string(*v, join_path(path, "reconstruction"));
    if (s == "weno2")
      out->reconstruction = Reconstruction::Weno2;
    else if (s == "none")
      out->reconstruction = Reconstruction::None;
    else
      fail(join_path(path, "reconstruction"), "expected \"weno2\" or \"none\"");
  }
  if (const json* v = find(obj, "cfl"))
    out->cfl = get_double(*v, join_path(path, "cfl"));
  if (const json* v = find(obj, "t_end")) {
    out->t_end = get_double(*v, join_path(path, "t_end"));
    *t_end_set = true;
  }
}

SamplesRule parse_samples(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"rule", "m", "r", "s"});
  const json* rule = find(obj, "rule");
  if (!rule) fail(join_path(path, "rule"), "required");
  std::string k = get_string(*rule, join_path(path, "rule"));
  SamplesRule out;
  if (k == "fixed") {
    out.kind = SamplesRule::Kind::Fixed;
    const json* m = find(obj, "m");
    if (!m) fail(join_path(path, "m"), "required for rule \"fixed\"");
    out.m = get_int(*m, join_path(path, "m"));
    if (out.m < 1) fail(join_path(path, "m"), "must be at least 1");
  } else if (k == "equal-to-cells") {
    out.kind = SamplesRule::Kind::EqualToCells;
  } else if (k == "experimental") {
    out.kind = SamplesRule::Kind::Experimental;
  } else if (k == "theoretical") {
    out.kind = SamplesRule::Kind::Theoretical;
    if (const json* v = find(obj, "r"))
      out.rate_r = get_double(*v, join_path(path, "r"));
    if (const json* v = find(obj, "s"))
      out.rate_s = get_double(*v, join_path(path, "s"));
    if (!(out.rate_r > 0.0)) fail(join_path(path, "r"), "must be positive");
    if (!(out.rate_s > 0.0)) fail(join_path(path, "s"), "must be positive");
  } else {
    fail(join_path(path, "rule"),
         "expected \"fixed\", \"equal-to-cells\", \"experimental\" or "
         "\"theoretical\"");
  }
  if (k != "fixed" && find(obj, "m"))
    fail(join_path(path, "m"), "only valid for rule \"fixed\"");
  if (k != "theoretical" && (find(obj, "r") || find(obj, "s")))
    fail(path, "r and s are only valid for rule \"theoretical\"");
  return out;
}

ExperimentConfig parse_root(const json& root) {
  if (!root.is_object()) fail("", "config root must be an object");
  reject_unknown_keys(root, "",
                      {"experiment", "seed", "out", "field", "flux", "scheme",
                       "resolutions", "samples", "repetitions", "offsets", "p",
                       "coarsest_cells", "coupled", "compare_mc"});
  ExperimentConfig cfg;
  const json* exp = find(root, "experiment");
  if (!exp) fail("experiment", "required");
  cfg.experiment = experiment_from_name(get_string(*exp, "experiment"));

  if (const json* v = find(root, "field")) cfg.field = parse_field(*v, "field");
  if (const json* v = find(root, "flux")) cfg.flux = parse_flux(*v, "flux");

  bool t_end_set = false;
  if (const json* v = find(root, "scheme"))
    parse_scheme(*v, "scheme", &cfg.scheme, &t_end_set);
  if (!t_end_set)
    cfg.scheme.t_end =
        cfg.field.kind == FieldKind::FractionalBrownian ? 0.05 : 0.2;

  if (const json* v = find(root, "resolutions")) {
    if (!v->is_array()) fail("resolutions", "expected an array of integers");
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.resolutions.push_back(
          get_int((*v)[i], "resolutions[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(root, "samples"))
    cfg.samples = parse_samples(*v, "samples");
  if (const json* v = find(root, "repetitions")) {
    std::int64_t r = get_int(*v, "repetitions");
    if (r < 1 || r > 1000000) fail("repetitions", "must be in [1, 1000000]");
    cfg.repetitions = static_cast<int>(r);
  }
  if (const json* v = find(root, "offsets")) {
    if (!v->is_array()) fail("offsets", "expected an array of numbers");
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.offsets.push_back(
          get_double((*v)[i], "offsets[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(root, "p")) {
    if (!v->is_array()) fail("p", "expected an array of numbers");
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.p_values.push_back(get_double((*v)[i], "p[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(root, "coarsest_cells"))
    cfg.coarsest_cells = get_int(*v, "coarsest_cells");
  if (const json* v = find(root, "coupled"))
    cfg.coupled = get_bool(*v, "coupled");
  if (const json* v = find(root, "compare_mc"))
    cfg.compare_mc = get_bool(*v, "compare_mc");
  if (const json* v = find(root, "seed")) {
    cfg.seed = get_seed(*v, "seed");
    cfg.seed_set = true;
  }
  if (const json* v = find(root, "out")) cfg.out_dir = get_string(*v, "out");
  return cfg;
}

}  // namespace

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Deterministic: return "deterministic";
    case Experiment::Mc: return "mc";
    case Experiment::Mlmc: return "mlmc";
    case Experiment::Wasserstein: return "wasserstein";
    case Experiment::Midpoint: return "midpoint";
    case Experiment::Structure: return "structure";
    case Experiment::LevelVariance: return "level-variance";
  }
  throw InvalidParamError("experiment_name: bad enum value");
}

Experiment experiment_from_name(const std::string& name) {
  if (name == "deterministic") return Experiment::Deterministic;
  if (name == "mc") return Experiment::Mc;
  if (name == "mlmc") return Experiment::Mlmc;
  if (name == "wasserstein") return Experiment::Wasserstein;
  if (name == "midpoint") return Experiment::Midpoint;
  if (name == "structure") return Experiment::Structure;
  if (name == "level-variance") return Experiment::LevelVariance;
  throw ConfigError("experiment: unknown name \"" + name + "\"");
}

void ExperimentConfig::validate() const {
  try {
    field.validate();
    scheme.validate();
  } catch (const InvalidParamError& e) {
    throw ConfigError(e.what());
  }
  if (!(scheme.t_end > 0.0)) throw ConfigError("scheme.t_end: must be positive");
  if (resolutions.empty()) throw ConfigError("resolutions: required");
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    std::string path = "resolutions[" + std::to_string(i) + "]";
    std::int64_t n = resolutions[i];
    if (n < 4 || n > (1 << 22)) throw ConfigError(path + ": out of range");
    if (!is_power_of_two(n))
      throw ConfigError(path + ": must be a power of two");
    if (n <= prev) throw ConfigError(path + ": must be strictly increasing");
    prev = n;
  }
  for (std::size_t i = 0; i < offsets.size(); ++i)
    if (!(offsets[i] > 0.0))
      throw ConfigError("offsets[" + std::to_string(i) + "]: must be positive");
  for (std::size_t i = 0; i < p_values.size(); ++i)
    if (!(p_values[i] >= 1.0))
      throw ConfigError("p[" + std::to_string(i) + "]: must be at least 1");

  bool needs_ladder = experiment == Experiment::Mlmc ||
                      experiment == Experiment::LevelVariance;
  if (needs_ladder) {
    if (coarsest_cells < 4 || !is_power_of_two(coarsest_cells))
      throw ConfigError("coarsest_cells: must be a power of two, at least 4");
    for (std::size_t i = 0; i < resolutions.size(); ++i)
      if (resolutions[i] <= coarsest_cells)
        throw ConfigError("resolutions[" + std::to_string(i) +
                          "]: must exceed coarsest_cells");
  }
  bool sampled_single_level =
      experiment == Experiment::Mc || experiment == Experiment::Wasserstein ||
      experiment == Experiment::Midpoint || experiment == Experiment::Structure;
  if (sampled_single_level && samples.kind != SamplesRule::Kind::Fixed &&
      samples.kind != SamplesRule::Kind::EqualToCells)
    throw ConfigError("samples.rule: " + experiment_name(experiment) +
                      " requires \"fixed\" or \"equal-to-cells\"");
  if (experiment == Experiment::Mlmc) {
    if (samples.kind != SamplesRule::Kind::Experimental &&
        samples.kind != SamplesRule::Kind::Theoretical)
      throw ConfigError(
          "samples.rule: mlmc requires \"experimental\" or \"theoretical\"");
    if (offsets.empty()) throw ConfigError("offsets: required for mlmc");
  }
  if (experiment == Experiment::Structure) {
    if (offsets.empty()) throw ConfigError("offsets: required for structure");
    if (p_values.empty()) throw ConfigError("p: required for structure");
  }
  if (experiment == Experiment::LevelVariance) {
    if (offsets.empty())
      throw ConfigError("offsets: required for level-variance");
    if (samples.kind != SamplesRule::Kind::Fixed)
      throw ConfigError("samples.rule: level-variance requires \"fixed\"");
  }
  if ((experiment == Experiment::Deterministic ||
       experiment == Experiment::Wasserstein ||
       experiment == Experiment::Midpoint) &&
      field.kind != FieldKind::UncertainShock)
    throw ConfigError("field.kind: " + experiment_name(experiment) +
                      " requires the shock field");
  if (experiment != Experiment::Deterministic &&
      experiment != Experiment::Midpoint && !seed_set)
    throw ConfigError("seed: required");
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_root(root);
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_manifest_json(const ExperimentConfig& config) {
  json root;
  root["experiment"] = experiment_name(config.experiment);
  json field;
  if (config.field.kind == FieldKind::UncertainShock) {
    field["kind"] = "shock";
    field["left"] = config.field.left;
    field["right"] = config.field.right;
    field["center"] = config.field.center;
    field["half_width"] = config.field.half_width;
  } else {
    field["kind"] = "fbm";
    field["hurst"] = config.field.hurst;
  }
  root["field"] = field;
  json flux;
  flux["kind"] = std::string(config.flux.name());
  if (config.flux.kind() == FluxKind::LinearAdvection)
    flux["speed"] = config.flux.speed();
  root["flux"] = flux;
  json scheme;
  scheme["flux"] = config.scheme.numerical_flux == NumericalFlux::Godunov
                       ? "godunov"
                       : "rusanov";
  scheme["reconstruction"] =
      config.scheme.reconstruction == Reconstruction::Weno2 ? "weno2" : "none";
  scheme["cfl"] = config.scheme.cfl;
  scheme["t_end"] = config.scheme.t_end;
  root["scheme"] = scheme;
  root["resolutions"] = config.resolutions;
  json samples;
  switch (config.samples.kind) {
    case SamplesRule::Kind::Fixed:
      samples["rule"] = "fixed";
      samples["m"] = config.samples.m;
      break;
    case SamplesRule::Kind::EqualToCells:
      samples["rule"] = "equal-to-cells";
      break;
    case SamplesRule::Kind::Experimental:
      samples["rule"] = "experimental";
      break;
    case SamplesRule::Kind::Theoretical:
      samples["rule"] = "theoretical";
      samples["r"] = config.samples.rate_r;
      samples["s"] = config.samples.rate_s;
      break;
  }
  root["samples"] = samples;
  root["repetitions"] = config.repetitions;
  if (!config.offsets.empty()) root["offsets"] = config.offsets;
  if (!config.p_values.empty()) root["p"] = config.p_values;
  root["coarsest_cells"] = config.coarsest_cells;
  root["coupled"] = config.coupled;
  root["compare_mc"] = config.compare_mc;
  root["seed"] = std::to_string(config.seed);
  root["out"] = config.out_dir;
  return root.dump(2);
}

namespace {

const std::map<std::string, const char*>& preset_map() {
  static const std::map<std::string, const char*> presets = {
      {"shock-mean-var", R"JSON({
  "experiment": "mc",
  "seed": 9001,
  "out": "out/shock-mean-var",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [64, 128, 256, 512, 1024],
  "samples": {"rule": "equal-to-cells"},
  "repetitions": 10,
  "offsets": [0.05]
}
)JSON"},
      {"shock-wasserstein", R"JSON({
  "experiment": "wasserstein",
  "seed": 1,
  "out": "out/shock-wasserstein",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [64, 128, 256, 512, 1024],
  "samples": {"rule": "equal-to-cells"},
  "repetitions": 10
}
)JSON"},
      {"shock-midpoint", R"JSON({
  "experiment": "midpoint",
  "seed": 9003,
  "out": "out/shock-midpoint",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [64, 128, 256, 512, 1024],
  "samples": {"rule": "equal-to-cells"}
}
)JSON"},
      {"shock-2pt", R"JSON({
  "experiment": "mlmc",
  "seed": 9004,
  "out": "out/shock-2pt",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [64, 128, 256, 512],
  "coarsest_cells": 16,
  "samples": {"rule": "experimental"},
  "repetitions": 3,
  "offsets": [0.05],
  "compare_mc": true
}
)JSON"},
      {"shock-3pt", R"JSON({
  "experiment": "mlmc",
  "seed": 9005,
  "out": "out/shock-3pt",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [64, 128, 256, 512],
  "coarsest_cells": 16,
  "samples": {"rule": "experimental"},
  "repetitions": 3,
  "offsets": [0.05],
  "compare_mc": true
}
)JSON"},
      {"fbm-scaling-H05", R"JSON({
  "experiment": "structure",
  "seed": 9006,
  "out": "out/fbm-scaling-H05",
  "field": {"kind": "fbm", "hurst": 0.5},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.5},
  "resolutions": [2048],
  "samples": {"rule": "fixed", "m": 256},
  "offsets": [0.001953125, 0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625],
  "p": [1, 2, 3]
}
)JSON"},
      {"fbm-scaling-H001", R"JSON({
  "experiment": "structure",
  "seed": 9007,
  "out": "out/fbm-scaling-H001",
  "field": {"kind": "fbm", "hurst": 0.01},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.5},
  "resolutions": [2048],
  "samples": {"rule": "fixed", "m": 256},
  "offsets": [0.001953125, 0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625],
  "p": [1, 2, 3]
}
)JSON"},
      {"cubic-scaling", R"JSON({
  "experiment": "structure",
  "seed": 9008,
  "out": "out/cubic-scaling",
  "field": {"kind": "fbm", "hurst": 0.5},
  "flux": {"kind": "cubic"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.8},
  "resolutions": [2048],
  "samples": {"rule": "fixed", "m": 256},
  "offsets": [0.001953125, 0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625],
  "p": [1, 2, 3]
}
)JSON"},
      {"mlmc-vs-mc", R"JSON({
  "experiment": "mlmc",
  "seed": 9009,
  "out": "out/mlmc-vs-mc",
  "field": {"kind": "shock", "left": 1.0, "right": 0.0, "center": 0.5, "half_width": 0.1},
  "flux": {"kind": "burgers"},
  "scheme": {"flux": "godunov", "reconstruction": "weno2", "cfl": 0.475, "t_end": 0.2},
  "resolutions": [128, 256, 512],
  "coarsest_cells": 16,
  "samples": {"rule": "experimental"},
  "repetitions": 3,
  "offsets": [0.05],
  "compare_mc": true
}
)JSON"},
  };
  return presets;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, text] : preset_map()) out.push_back(name);
    return out;
  }();
  return names;
}

std::string preset_text(const std::string& name) {
  const auto& presets = preset_map();
  auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [n, t] : presets) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    throw ConfigError("unknown preset \"" + name + "\" (known: " + known + ")");
  }
  return it->second;
}

}  // namespace stochfv
