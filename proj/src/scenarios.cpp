#include "aleanav/scenarios.hpp"

#include <algorithm>
#include <string>

#include "aleanav/error.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

namespace {

Quat yaw(double rad) { return Quat(Eigen::AngleAxisd(rad, Vec3::UnitZ())); }

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2)));
}

}  // namespace

ObjectLayout power_pole_layout() {
  ObjectLayout l;
  l.objects.push_back({0, Pose(Vec3(0.0, 0.0, 1.2), Quat::Identity()), 0.4});
  l.objects.push_back({1, Pose(Vec3(-0.9, 0.0, 1.6), yaw(0.6)), 0.25});
  l.objects.push_back({2, Pose(Vec3(0.9, 0.1, 1.6), yaw(-0.4)), 0.25});
  l.objects.push_back({3, Pose(Vec3(0.0, 0.8, 1.9), yaw(2.0)), 0.25});
  l.anchor_id = 0;
  return l;
}

ObjectLayout table_layout() {
  ObjectLayout l;
  l.objects.push_back({0, Pose(Vec3(0.0, 0.0, 0.8), Quat::Identity()), 0.3});
  l.objects.push_back({1, Pose(Vec3(0.6, 0.3, 0.8), yaw(1.2)), 0.2});
  l.anchor_id = 0;
  return l;
}

NoiseProfile heteroscedastic_profile() {
  NoiseProfile p;
  p.trans_a = 0.004;
  p.trans_b = 0.010;
  p.rot_a = 0.004;
  p.rot_b = 0.010;
  p.outlier_probability = 0.02;
  p.outlier_scale = 5.0;
  p.occlusion = {{0, {{80.0, 120.0}}}, {1, {{150.0, 230.0}}}, {2, {{-30.0, 40.0}}}};
  return p;
}

std::vector<Scenario> multi_object_scenarios() {
  std::vector<Scenario> out;
  for (int i = 0; i < 5; ++i) {
    Scenario s;
    s.name = "pole-" + std::to_string(i);
    s.layout = power_pole_layout();
    s.profile = heteroscedastic_profile();
    s.spec.start_angle_deg = 72.0 * i;
    s.spec.radius_min = 1.5 + 0.1 * i;
    s.spec.radius_max = 4.5 + 0.2 * i;
    s.spec.radius_frequency = 0.03 + 0.01 * i;
    s.spec.height_base = 1.4 + 0.1 * i;
    out.push_back(std::move(s));
  }
  return out;
}

Scenario gross_outlier_scenario(ObjectId* outlier_object) {
  Scenario s;
  s.name = "table-ambiguous";
  s.layout = table_layout();
  s.profile = NoiseProfile{};
  // Views from behind object 1 are ambiguous.
  s.profile.ambiguity = {{1, {{158.0, 180.0}}}};
  s.profile.ambiguity_scale = 20.0;
  s.spec.radius_min = 1.8;
  s.spec.radius_max = 3.0;
  s.spec.height_base = 1.5;
  if (outlier_object) *outlier_object = 1;
  return s;
}

std::vector<ErrorSample> training_samples(std::span<const Scenario> scenarios, std::size_t per_scenario,
                                          std::uint64_t base_seed) {
  std::vector<ErrorSample> out;
  const std::uint64_t train = derive_seed(base_seed, "train");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    for (std::size_t k = 0; k < per_scenario; ++k) {
      TrajectorySpec spec = scenarios[i].spec;
      spec.seed = derive_seed(derive_seed(train, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(k));
      const Dataset ds = simulate_dataset(spec, scenarios[i].layout, scenarios[i].profile);
      const auto samples = make_error_samples(ds.measurements);
      out.insert(out.end(), samples.begin(), samples.end());
    }
  }
  return out;
}

GatingConfig aor_gating_from_head(const UncertaintyHead& head, std::span<const ErrorSample> samples,
                                  double factor) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "aor_gating_from_head: no samples");
  if (!(factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "aor_gating_from_head: factor must be positive");
  std::vector<double> tt;
  std::vector<double> tr;
  tt.reserve(samples.size());
  tr.reserve(samples.size());
  const bool single = head.num_classes() == 1;
  for (const auto& s : samples) {
    const PredictedCovariance c = head.predict(s.features, single ? 0 : s.class_id);
    tt.push_back(c.trans.trace());
    tr.push_back(c.rot.trace());
  }
  GatingConfig g;
  g.aor_enabled = true;
  g.aor_max_trace_trans = factor * median(std::move(tt));
  g.aor_max_trace_rot = factor * median(std::move(tr));
  return g;
}

}  // namespace aleanav
