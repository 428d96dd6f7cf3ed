#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aleanav/estimator.hpp"
#include "aleanav/eval.hpp"
#include "aleanav/sim.hpp"

namespace aleanav {

namespace fs = std::filesystem;

// JSON forms. Readers accept partial objects and keep defaults for missing
// keys; unknown keys are rejected so typos do not pass silently.
nlohmann::json to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrajectorySpec& spec);
TrajectorySpec trajectory_spec_from_json(const nlohmann::json& j, TrajectorySpec base = {});
nlohmann::json to_json(const NoiseProfile& profile);
NoiseProfile noise_profile_from_json(const nlohmann::json& j, NoiseProfile base = {});
nlohmann::json to_json(const ObjectLayout& layout);
ObjectLayout layout_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EstimatorConfig& config);
EstimatorConfig estimator_config_from_json(const nlohmann::json& j, EstimatorConfig base = {});

/// Shortest text that round-trips the double exactly ("%.17g").
std::string format_double(double x);

/// Writes imu.csv, meas.csv, truth.csv, layout.json and spec.json into dir
/// (created if missing).
void save_dataset(const Dataset& dataset, const fs::path& dir);
/// Throws Io on missing or malformed files.
Dataset load_dataset(const fs::path& dir);

/// Columns: t, px..qw, vx vy vz, one cov_<i> per error-state entry,
/// anchor_id, event (OK, AOR, GATE).
void save_trajectory(const TrajectoryResult& result, const fs::path& file);
/// Restores rows; the core covariance is rebuilt from the stored diagonal and
/// switch / rejection counts are per row, so they can undercount.
TrajectoryResult load_trajectory(const fs::path& file);

/// Per-measurement log: t, object_id, distance, six variances, outcome.
void save_measurement_log(const TrajectoryResult& result, const fs::path& file);

/// Plot data: t, position error (m), orientation error (deg) and the filter's
/// 1-sigma position / attitude bounds.
void save_error_series(const TrajectoryResult& result, std::span<const TruthSample> truth, double imu_rate,
                       const fs::path& file);

std::string read_text(const fs::path& file);
/// Writes through a temporary file and renames it into place.
void write_text(const fs::path& file, const std::string& text);

}  // namespace aleanav
