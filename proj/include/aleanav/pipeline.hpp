#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aleanav/estimator.hpp"
#include "aleanav/eval.hpp"
#include "aleanav/io.hpp"
#include "aleanav/scenarios.hpp"
#include "aleanav/uncertainty.hpp"

namespace aleanav {

struct TrainSection {
  TrainConfig train;
  std::size_t datasets = 10;          // simulated training runs, split by seed
  double validation_fraction = 0.2;
  double aor_factor = 9.0;
};

enum class EvalScenarios { Config, MultiObject, GrossOutlier };

struct EvalSection {
  std::vector<FilterMode> modes = {FilterMode::Fixed, FilterMode::Aleatoric, FilterMode::AleatoricSwitching};
  std::size_t seeds = 5;
  unsigned threads = 1;
  EvalScenarios scenarios = EvalScenarios::Config;
};

/// One JSON file with a section per module. Paths are taken relative to the
/// working directory.
struct RunConfig {
  std::uint64_t seed = 1;
  fs::path dataset_dir = "run/dataset";
  fs::path head_file = "run/head.json";
  fs::path output_dir = "run/output";
  TrajectorySpec trajectory;
  ObjectLayout layout = power_pole_layout();
  NoiseProfile noise;
  TrainSection train;
  EstimatorConfig estimator;
  EvalSection eval;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const fs::path& file);
};

/// Seed of the simulated dataset, from the global seed's "sim" stream.
std::uint64_t simulation_seed(std::uint64_t global_seed);

/// A trained head plus what was derived from its training set.
struct HeadBundle {
  UncertaintyHead head{1, 1, 0};
  double aor_max_trace_trans = 0.0;
  double aor_max_trace_rot = 0.0;

  std::string to_json() const;
  static HeadBundle from_json(const std::string& text);
  static HeadBundle load(const fs::path& file);
};

struct TrainOutcome {
  HeadBundle bundle;
  TrainReport report;
  CalibrationReport validation;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

Dataset simulate_from_config(const RunConfig& cfg);

/// Simulates `train.datasets` runs, holds out the last fraction of seeds and
/// reports calibration on them.
TrainOutcome train_from_config(const RunConfig& cfg);

/// Estimator settings for a mode, filling AOR thresholds from the bundle when
/// the config has none.
EstimatorConfig estimator_for_mode(const RunConfig& cfg, FilterMode mode, const HeadBundle* bundle);

std::vector<Scenario> eval_scenarios(const RunConfig& cfg);

/// Throws Io when any of `files` exists and force is false.
void guard_outputs(const std::vector<fs::path>& files, bool force);

}  // namespace aleanav
