#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stochfv/config.hpp"

namespace stochfv {

struct StudyResult {
  std::vector<std::string> files;          // everything written, in write order
  std::map<std::string, double> scalars;   // fitted rates and derived figures
};

// Master seed for repetition `rep` of a study; rep 0 is the base seed.
std::uint64_t repetition_seed(std::uint64_t base, int rep);

// Executes the configured study: writes manifest.json, the study tables and
// rates.csv under config.out_dir, and returns the fitted scalars. Outputs
// are byte-identical for any worker count.
StudyResult run_experiment(const ExperimentConfig& config, int workers = 1);

}  // namespace stochfv
