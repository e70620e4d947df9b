#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stochfv/csv.hpp"
#include "stochfv/experiments.hpp"

using namespace stochfv;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("stochfv_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string error_text(const std::string& json_text) {
  try {
    parse_config_text(json_text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("config parsing fills every field") {
  const ExperimentConfig cfg = parse_config_text(R"({
    "experiment": "structure",
    "seed": 123,
    "out": "somewhere/else",
    "field": {"kind": "fbm", "hurst": 0.25},
    "flux": {"kind": "cubic"},
    "scheme": {"flux": "rusanov", "reconstruction": "none", "cfl": 0.3, "t_end": 0.7},
    "resolutions": [64, 128],
    "samples": {"rule": "fixed", "m": 5},
    "repetitions": 2,
    "offsets": [0.05, 0.1],
    "p": [1.0, 2.0, 3.0],
    "coarsest_cells": 8,
    "coupled": false,
    "compare_mc": false
  })");

  CHECK(cfg.experiment == Experiment::Structure);
  CHECK(cfg.seed_set);
  CHECK(cfg.seed == 123);
  CHECK(cfg.out_dir == "somewhere/else");
  CHECK(cfg.field.kind == FieldKind::FractionalBrownian);
  CHECK(cfg.field.hurst == 0.25);
  CHECK(cfg.flux.kind() == FluxKind::Cubic);
  CHECK(cfg.scheme.numerical_flux == NumericalFlux::Rusanov);
  CHECK(cfg.scheme.reconstruction == Reconstruction::None);
  CHECK(cfg.scheme.cfl == 0.3);
  CHECK(cfg.scheme.t_end == 0.7);
  CHECK(cfg.resolutions == std::vector<std::int64_t>{64, 128});
  CHECK(cfg.samples.kind == SamplesRule::Kind::Fixed);
  CHECK(cfg.samples.m == 5);
  CHECK(cfg.repetitions == 2);
  CHECK(cfg.offsets == std::vector<double>{0.05, 0.1});
  CHECK(cfg.p_values == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(cfg.coarsest_cells == 8);
  CHECK_FALSE(cfg.coupled);
  CHECK_FALSE(cfg.compare_mc);
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("seeds can be quoted to avoid JSON integer limits") {
    const ExperimentConfig quoted = parse_config_text(R"({
      "experiment": "mc", "seed": "18446744073709551615"
    })");
    CHECK(quoted.seed == 18446744073709551615ull);
  }
}

TEST_CASE("the end time defaults by field family") {
  const ExperimentConfig shock = parse_config_text(R"({
    "experiment": "mc",
    "seed": 1,
    "field": {"kind": "shock"},
    "resolutions": [16]
  })");
  CHECK(shock.scheme.t_end == 0.2);

  const ExperimentConfig rough = parse_config_text(R"({
    "experiment": "mc",
    "seed": 1,
    "field": {"kind": "fbm"},
    "resolutions": [16]
  })");
  CHECK(rough.scheme.t_end == 0.05);

  // An explicit t_end wins even when the rest of the scheme is defaulted.
  const ExperimentConfig pinned = parse_config_text(R"({
    "experiment": "mc",
    "seed": 1,
    "field": {"kind": "fbm"},
    "scheme": {"t_end": 0.4},
    "resolutions": [16]
  })");
  CHECK(pinned.scheme.t_end == 0.4);
}

TEST_CASE("unknown keys are rejected with their full path") {
  CHECK(contains(error_text(R"({"experiment": "mc", "bogus": 1})"),
                 "bogus: unknown key"));
  CHECK(contains(
      error_text(R"({"experiment": "mc", "field": {"kind": "shock", "bogus": 1}})"),
      "field.bogus: unknown key"));
  CHECK(contains(
      error_text(R"({"experiment": "mc", "flux": {"model": "burgers"}})"),
      "flux.model: unknown key"));
  CHECK(contains(
      error_text(R"({"experiment": "mc", "samples": {"rule": "fixed", "m": 4, "q": 1}})"),
      "samples.q: unknown key"));

  SUBCASE("family-specific keys do not leak across field kinds") {
    CHECK(contains(
        error_text(R"({"experiment": "mc", "field": {"kind": "shock", "hurst": 0.5}})"),
        "field.hurst"));
    CHECK(contains(
        error_text(R"({"experiment": "mc", "field": {"kind": "fbm", "left": 1.0}})"),
        "field.left"));
    CHECK(contains(
        error_text(R"({"experiment": "mc", "flux": {"kind": "burgers", "speed": 2.0}})"),
        "flux.speed"));
  }

  SUBCASE("malformed json is a config error") {
    CHECK(contains(error_text("{ not json"), "not valid JSON"));
    CHECK_THROWS_AS(parse_config_text("[1, 2, 3]"), ConfigError);
  }
}

TEST_CASE("experiment names round-trip") {
  for (Experiment e :
       {Experiment::Deterministic, Experiment::Mc, Experiment::Mlmc,
        Experiment::Wasserstein, Experiment::Midpoint, Experiment::Structure,
        Experiment::LevelVariance})
    CHECK(experiment_from_name(experiment_name(e)) == e);
  CHECK_THROWS_AS(experiment_from_name("warp-drive"), ConfigError);
}

TEST_CASE("config validation catches inconsistent studies") {
  const auto base = []() {
    return parse_config_text(R"({
      "experiment": "mc",
      "seed": 1,
      "field": {"kind": "shock"},
      "resolutions": [16, 32],
      "samples": {"rule": "fixed", "m": 4}
    })");
  };
  CHECK_NOTHROW(base().validate());

  SUBCASE("resolutions must be ascending powers of two in range") {
    ExperimentConfig cfg = base();
    cfg.resolutions = {32, 16};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.resolutions = {16, 48};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.resolutions = {2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.resolutions = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("stochastic studies need a seed") {
    ExperimentConfig cfg = base();
    cfg.seed_set = false;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("sampling rules are tied to the study type") {
    ExperimentConfig cfg = base();
    cfg.samples.kind = SamplesRule::Kind::Experimental;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ExperimentConfig ml = base();
    ml.experiment = Experiment::Mlmc;
    ml.samples.kind = SamplesRule::Kind::Experimental;
    ml.offsets = {0.05};
    ml.coarsest_cells = 8;
    CHECK_NOTHROW(ml.validate());
    ml.samples.kind = SamplesRule::Kind::Fixed;
    CHECK_THROWS_AS(ml.validate(), ConfigError);
  }

  SUBCASE("the ladder must reach above its coarsest grid") {
    ExperimentConfig cfg = base();
    cfg.experiment = Experiment::Mlmc;
    cfg.samples.kind = SamplesRule::Kind::Experimental;
    cfg.offsets = {0.05};
    cfg.coarsest_cells = 32;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("shock-only studies reject the rough field") {
    for (Experiment e : {Experiment::Deterministic, Experiment::Wasserstein,
                         Experiment::Midpoint}) {
      ExperimentConfig cfg = base();
      cfg.experiment = e;
      cfg.field.kind = FieldKind::FractionalBrownian;
      if (e == Experiment::Wasserstein) cfg.samples.kind =
          SamplesRule::Kind::EqualToCells;
      CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
  }

  SUBCASE("structure studies need offsets and exponents") {
    ExperimentConfig cfg = base();
    cfg.experiment = Experiment::Structure;
    cfg.offsets = {0.05};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // p missing
    cfg.p_values = {1.0};
    CHECK_NOTHROW(cfg.validate());
    cfg.offsets = {-0.05};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("presets ship in the registry and as identical files") {
  const std::vector<std::string>& names = preset_names();
  CHECK(names.size() == 9);

  for (const std::string& name : names) {
    CAPTURE(name);
    const std::string text = preset_text(name);
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.seed_set);

    const std::string on_disk =
        read_bytes(std::string(STOCHFV_SOURCE_DIR) + "/configs/" + name + ".json");
    CHECK(on_disk == text);
  }

  CHECK_THROWS_AS(preset_text("no-such-preset"), ConfigError);
}

TEST_CASE("manifests are parseable configs and a serialization fixed point") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const ExperimentConfig cfg = parse_config_text(preset_text(name));
    const std::string manifest = config_to_manifest_json(cfg);
    CHECK(contains(manifest, "\"seed\""));

    const ExperimentConfig reparsed = parse_config_text(manifest);
    CHECK(config_to_manifest_json(reparsed) == manifest);
    CHECK(reparsed.seed == cfg.seed);
    CHECK(reparsed.experiment == cfg.experiment);
    CHECK(reparsed.resolutions == cfg.resolutions);
  }
}

TEST_CASE("repetition seeds are stable and collision-free") {
  CHECK(repetition_seed(9001, 0) == 9001);
  CHECK(repetition_seed(9001, 1) == repetition_seed(9001, 1));

  std::set<std::uint64_t> seen;
  for (int rep = 0; rep < 1000; ++rep) seen.insert(repetition_seed(77, rep));
  CHECK(seen.size() == 1000);
}

TEST_CASE("csv writing is exact and stable") {
  SUBCASE("doubles survive a text round trip") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0}) {
      const std::string s = csv_double(x);
      CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(csv_int(-42) == "-42");
  }

  SUBCASE("fields with separators are quoted") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
  }

  SUBCASE("an empty table is just the header with LF endings") {
    TempDir dir("csv");
    const std::string path = dir.str() + "/empty.csv";
    emit_csv(path, {"alpha", "beta"}, {});
    CHECK(read_bytes(path) == "alpha,beta\n");

    emit_csv(path, {"x"}, {{"1"}, {"2"}});
    CHECK(read_bytes(path) == "x\n1\n2\n");
  }

  SUBCASE("ragged rows are rejected") {
    TempDir dir("csv_bad");
    CHECK_THROWS_AS(emit_csv(dir.str() + "/bad.csv", {"a", "b"}, {{"1"}}),
                    IoError);
  }
}

TEST_CASE("studies rerun byte-identically for any worker count") {
  const auto run_twice = [](const std::string& tag, std::string json_text) {
    CAPTURE(tag);
    TempDir dir(tag);
    json_text.replace(json_text.find("OUTDIR"), 6, dir.str());

    const ExperimentConfig cfg = parse_config_text(json_text);
    const StudyResult first = run_experiment(cfg, 1);
    REQUIRE_FALSE(first.files.empty());
    std::map<std::string, std::string> bytes;
    for (const std::string& f : first.files) bytes[f] = read_bytes(f);

    const StudyResult second = run_experiment(cfg, 8);
    REQUIRE(second.files == first.files);
    for (const std::string& f : second.files) CHECK(read_bytes(f) == bytes[f]);
    CHECK(second.scalars == first.scalars);
  };

  SUBCASE("deterministic") {
    run_twice("det", R"({
      "experiment": "deterministic",
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [16, 32]
    })");
  }
  SUBCASE("mc") {
    run_twice("mc", R"({
      "experiment": "mc",
      "seed": 5,
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [16, 32],
      "samples": {"rule": "fixed", "m": 8}
    })");
  }
  SUBCASE("mlmc") {
    run_twice("mlmc", R"({
      "experiment": "mlmc",
      "seed": 6,
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [16, 32],
      "coarsest_cells": 8,
      "offsets": [0.1],
      "samples": {"rule": "experimental"}
    })");
  }
  SUBCASE("wasserstein") {
    run_twice("w1", R"({
      "experiment": "wasserstein",
      "seed": 7,
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [16, 32],
      "samples": {"rule": "equal-to-cells"}
    })");
  }
  SUBCASE("midpoint") {
    run_twice("mid", R"({
      "experiment": "midpoint",
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [16, 32],
      "samples": {"rule": "equal-to-cells"}
    })");
  }
  SUBCASE("structure") {
    run_twice("sf", R"({
      "experiment": "structure",
      "seed": 8,
      "out": "OUTDIR",
      "field": {"kind": "fbm", "hurst": 0.5},
      "resolutions": [16, 32],
      "samples": {"rule": "fixed", "m": 8},
      "offsets": [0.1],
      "p": [1.0, 2.0]
    })");
  }
  SUBCASE("level-variance") {
    run_twice("lv", R"({
      "experiment": "level-variance",
      "seed": 9,
      "out": "OUTDIR",
      "field": {"kind": "shock"},
      "scheme": {"t_end": 0.1},
      "resolutions": [32, 64],
      "coarsest_cells": 8,
      "offsets": [0.1],
      "samples": {"rule": "fixed", "m": 8}
    })");
  }
}

TEST_CASE("run_experiment rejects invalid configs before writing anything") {
  TempDir dir("reject");
  ExperimentConfig cfg = parse_config_text(R"({
    "experiment": "mc",
    "seed": 1,
    "field": {"kind": "shock"},
    "resolutions": [32, 16],
    "samples": {"rule": "fixed", "m": 4}
  })");
  cfg.out_dir = dir.str() + "/sub";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir.path / "sub"));
  CHECK_THROWS_AS(run_experiment(parse_config_text(
                      R"({"experiment": "mc", "seed": 1, "out": "OUT",
                          "resolutions": [16]})"),
                  0),
                  InvalidParamError);
}
