#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "stochfv/config.hpp"
#include "stochfv/errors.hpp"
#include "stochfv/experiments.hpp"
#include "stochfv/version.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
};

int run_study(stochfv::Experiment experiment, const CliOptions& opt,
              bool seed_given) {
  using namespace stochfv;
  if (opt.config_path.empty() == opt.preset.empty()) {
    std::cerr << "error: give exactly one of --config or --preset\n";
    return 2;
  }
  ExperimentConfig cfg = opt.config_path.empty()
                             ? parse_config_text(preset_text(opt.preset))
                             : parse_config_file(opt.config_path);
  if (cfg.experiment != experiment) {
    std::cerr << "error: config names experiment \""
              << experiment_name(cfg.experiment) << "\" but subcommand \""
              << experiment_name(experiment) << "\" was invoked\n";
    return 2;
  }
  if (seed_given) {
    cfg.seed = opt.seed;
    cfg.seed_set = true;
  }
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;

  const StudyResult result = run_experiment(cfg, opt.workers);
  for (const std::string& f : result.files) std::cout << "wrote " << f << "\n";
  for (const auto& [name, value] : result.scalars) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    std::cout << name << " = " << buf << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical-solution experiment runner for 1D scalar "
               "conservation laws"};
  app.set_version_flag("--version", stochfv::kVersion);
  app.require_subcommand(0, 1);
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print built-in preset names");

  static const std::vector<std::pair<stochfv::Experiment, const char*>> kStudies =
      {{stochfv::Experiment::Deterministic,
        "solver convergence on the centered step"},
       {stochfv::Experiment::Mc, "Monte Carlo mean/variance/structure study"},
       {stochfv::Experiment::Mlmc,
        "multilevel estimator errors and work comparison"},
       {stochfv::Experiment::Wasserstein,
        "W1 distance of the sampled ensemble to the exact law"},
       {stochfv::Experiment::Midpoint,
        "W1 distance of the quadrature ensemble to the exact law"},
       {stochfv::Experiment::Structure,
        "integrated structure-function scaling in the offset"},
       {stochfv::Experiment::LevelVariance,
        "decay of the fine-minus-coarse detail variance"}};

  CliOptions opt;
  std::vector<std::pair<stochfv::Experiment, CLI::App*>> subs;
  for (const auto& [experiment, blurb] : kStudies) {
    CLI::App* sub =
        app.add_subcommand(stochfv::experiment_name(experiment), blurb);
    sub->add_option("--config", opt.config_path, "path to a JSON study config");
    sub->add_option("--preset", opt.preset, "built-in config name");
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_option("--out", opt.out_dir, "output directory override");
    sub->add_option("--workers", opt.workers, "worker thread count")
        ->check(CLI::Range(1, 256));
    subs.emplace_back(experiment, sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_presets) {
      for (const std::string& name : stochfv::preset_names())
        std::cout << name << "\n";
      return 0;
    }
    for (const auto& [experiment, sub] : subs)
      if (sub->parsed())
        return run_study(experiment, opt, sub->count("--seed") > 0);
    std::cout << app.help();
    return 2;
  } catch (const stochfv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
