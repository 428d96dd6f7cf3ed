#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aleanav/eval.hpp"

namespace aleanav {

/// Pole base plus three insulators on a crossarm; anchor is the base.
ObjectLayout power_pole_layout();

/// Two items on a table, for the outlier-rejection experiment.
ObjectLayout table_layout();

/// Steeper distance law, 2% random outliers and per-object occlusion sectors.
NoiseProfile heteroscedastic_profile();

/// Five orbits around the power pole that differ in phase, radius range and
/// height, all with the heteroscedastic profile.
std::vector<Scenario> multi_object_scenarios();

/// Table layout where one object has a viewpoint sector with gross errors.
/// Returns the scenario; `outlier_object` receives the affected id.
Scenario gross_outlier_scenario(ObjectId* outlier_object = nullptr);

/// Error samples from `per_scenario` datasets of every scenario, seeded from
/// a "train" stream so they never coincide with evaluation runs.
std::vector<ErrorSample> training_samples(std::span<const Scenario> scenarios, std::size_t per_scenario,
                                          std::uint64_t base_seed);

/// AOR thresholds at `factor` times the median predicted translation and
/// rotation trace over `samples`.
GatingConfig aor_gating_from_head(const UncertaintyHead& head, std::span<const ErrorSample> samples,
                                  double factor = 9.0);

}  // namespace aleanav
