#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aleanav/estimator.hpp"
#include "aleanav/sim.hpp"
#include "aleanav/uncertainty.hpp"

namespace aleanav {

struct MetricsReport {
  double rmse_position = 0.0;         // m
  double rmse_orientation_deg = 0.0;  // deg, geodesic
  double max_position_error = 0.0;    // m
  double mean_nees = 0.0;             // position, velocity, attitude (9 dof)
  std::array<double, 6> picp{};       // estimate coverage at alpha = 0.95: px py pz, rx ry rz
  int anchor_switches = 0;
  int aor_rejections = 0;
  int gate_rejections = 0;
  std::size_t samples = 0;

  std::string to_json() const;
};

/// Index of the truth sample nearest to t, or -1 when none lies within tol.
long nearest_truth(std::span<const TruthSample> truth, double t, double tol);

/// Error of the estimate: (p, v, theta) with theta = so3_log(R_est^T R_true).
Eigen::Matrix<double, 9, 1> navigation_error(const TrajectoryRow& row, const TruthSample& truth);

/// NEES over the 15-dim core (p, v, theta, bg, ba) against a truth sample
/// that carries biases. Uses a pseudo-inverse so a zero prior gives 0.
double core_nees(const TrajectoryRow& row, const TruthSample& truth);

/// Rows are associated to truth by nearest timestamp within 1 / (2 imu_rate).
/// Throws EmptyOverlap when nothing associates.
MetricsReport compute_metrics(const TrajectoryResult& result, std::span<const TruthSample> truth,
                              double imu_rate);

struct Scenario {
  std::string name;
  TrajectorySpec spec;
  ObjectLayout layout;
  NoiseProfile profile;
};

struct RunRecord {
  std::size_t scenario = 0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  FilterMode mode = FilterMode::Fixed;
  MetricsReport metrics;
};

struct ModeSummary {
  FilterMode mode = FilterMode::Fixed;
  double rmse_position_mean = 0.0, rmse_position_std = 0.0;
  double rmse_orientation_mean = 0.0, rmse_orientation_std = 0.0;
  double max_pe_mean = 0.0, max_pe_std = 0.0;
  double nees_mean = 0.0;
  double switches_mean = 0.0;
  double rejections_mean = 0.0;
  int wins = 0;  // seeds where this mode had the lowest seed-mean position RMSE
};

struct ComparisonTable {
  std::vector<FilterMode> modes;
  std::vector<ModeSummary> summary;
  std::vector<RunRecord> runs;
  /// seed_means[m][s]: mean over scenarios of the position RMSE.
  std::vector<std::vector<double>> seed_mean_rmse_position;
  std::vector<std::vector<double>> seed_mean_rmse_orientation;

  const ModeSummary& of(FilterMode mode) const;
  std::size_t mode_index(FilterMode mode) const;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Dataset seed of one Monte Carlo repetition.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t seed_index);

/// Simulates every (scenario, seed), runs each mode on it and aggregates.
/// Runs fan out over `threads` workers; results do not depend on the count.
ComparisonTable compare_modes(std::span<const Scenario> scenarios, std::span<const FilterMode> modes,
                              std::size_t seeds, std::uint64_t base_seed, const EstimatorConfig& base,
                              const UncertaintyHead* head, unsigned threads = 1);

}  // namespace aleanav
