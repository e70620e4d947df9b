#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stochfv/flux.hpp"
#include "stochfv/random_fields.hpp"
#include "stochfv/scheme.hpp"

namespace stochfv {

enum class Experiment {
  Deterministic,
  Mc,
  Mlmc,
  Wasserstein,
  Midpoint,
  Structure,
  LevelVariance,
};

std::string experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

struct SamplesRule {
  enum class Kind { Fixed, EqualToCells, Experimental, Theoretical };
  Kind kind = Kind::EqualToCells;
  std::int64_t m = 0;      // Fixed
  double rate_r = 1.0;     // Theoretical
  double rate_s = 0.5;
};

// Fully resolved description of one study run. Parsed from a JSON config
// file with a closed schema: unknown keys are hard errors, reported with
// their field path.
struct ExperimentConfig {
  Experiment experiment = Experiment::Mc;
  RandomFieldSpec field;
  FluxModel flux = FluxModel::burgers();
  SchemeConfig scheme;
  std::vector<std::int64_t> resolutions;
  SamplesRule samples;
  int repetitions = 1;
  std::vector<double> offsets;
  std::vector<double> p_values;
  std::int64_t coarsest_cells = 16;
  bool coupled = true;
  bool compare_mc = true;
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::string out_dir;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

// Resolved-config JSON used for run manifests; stable key order, no
// environment-dependent content.
std::string config_to_manifest_json(const ExperimentConfig& config);

// Built-in study presets, shipped as files under configs/ and compiled in
// so the runner works from any directory. Throws ConfigError for an
// unknown name.
const std::vector<std::string>& preset_names();
std::string preset_text(const std::string& name);

}  // namespace stochfv
