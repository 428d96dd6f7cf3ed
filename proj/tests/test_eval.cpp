#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aleanav/error.hpp"
#include "aleanav/eval.hpp"
#include "aleanav/scenarios.hpp"

using namespace aleanav;

namespace {

template <typename F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

std::vector<TruthSample> straight_line(std::size_t n, double rate) {
  std::vector<TruthSample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k].t = static_cast<double>(k) / rate;
    out[k].pose = Pose(Vec3(0.5 * out[k].t, 1.0, 2.0), Quat(Eigen::AngleAxisd(0.1 * out[k].t, Vec3::UnitZ())));
    out[k].v = Vec3(0.5, 0, 0);
  }
  return out;
}

TrajectoryRow row_at(const TruthSample& gt) {
  TrajectoryRow r;
  r.t = gt.t;
  r.pose = gt.pose;
  r.v = gt.v;
  r.core_cov.setIdentity();
  r.bg = gt.gyro_bias;
  r.ba = gt.accel_bias;
  return r;
}

TrajectoryResult rows_every(const std::vector<TruthSample>& truth, std::size_t stride) {
  TrajectoryResult res;
  for (std::size_t k = 0; k < truth.size(); k += stride) res.rows.push_back(row_at(truth[k]));
  return res;
}

// Constant-output head: every measurement gets the same variances.
UncertaintyHead constant_head(int classes, double var_t, double var_r) {
  UncertaintyHead head(2, classes, 0);
  head.set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(head.parameter_count())));
  LogVariance lv;
  lv << Vec3::Constant(std::log(var_t)), Vec3::Constant(std::log(var_r));
  for (int c = 0; c < classes; ++c) head.set_output_bias(c, lv);
  return head;
}

Scenario small_scenario(const NoiseProfile& profile, double duration) {
  Scenario s;
  s.name = "small";
  s.spec.duration = duration;
  s.layout = table_layout();
  s.profile = profile;
  return s;
}

}  // namespace

TEST(ComputeMetrics, IdenticalEstimateGivesZero) {
  const auto truth = straight_line(400, 200.0);
  const MetricsReport m = compute_metrics(rows_every(truth, 13), truth, 200.0);
  EXPECT_EQ(m.rmse_position, 0.0);
  EXPECT_EQ(m.rmse_orientation_deg, 0.0);
  EXPECT_EQ(m.max_position_error, 0.0);
  EXPECT_EQ(m.mean_nees, 0.0);
  EXPECT_EQ(m.samples, 31u);
  for (double c : m.picp) EXPECT_EQ(c, 1.0);
}

TEST(ComputeMetrics, ConstantOffset) {
  const auto truth = straight_line(400, 200.0);
  TrajectoryResult res = rows_every(truth, 10);
  for (auto& r : res.rows) {
    r.pose.p.x() += 0.1;
    r.pose.q = canonical(r.pose.q * Quat(Eigen::AngleAxisd(2.0 * std::numbers::pi / 180.0, Vec3::UnitX())));
  }
  const MetricsReport m = compute_metrics(res, truth, 200.0);
  EXPECT_NEAR(m.rmse_position, 0.1, 1e-12);
  EXPECT_NEAR(m.max_position_error, 0.1, 1e-12);
  EXPECT_NEAR(m.rmse_orientation_deg, 2.0, 1e-9);
  // Unit covariance: NEES is the squared error norm.
  const double th = 2.0 * std::numbers::pi / 180.0;
  EXPECT_NEAR(m.mean_nees, 0.01 + th * th, 1e-12);
}

TEST(ComputeMetrics, MatchesHandRolledRmse) {
  const auto truth = straight_line(1000, 200.0);
  TrajectoryResult res = rows_every(truth, 7);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  double ss = 0.0;
  double worst = 0.0;
  double ss_ang = 0.0;
  for (auto& r : res.rows) {
    const Vec3 d(n(rng), n(rng), n(rng));
    const Vec3 w(n(rng), n(rng), n(rng));
    r.pose.p += d;
    r.pose.q = canonical(r.pose.q * quat_exp(w));
    ss += d.squaredNorm();
    worst = std::max(worst, d.norm());
    ss_ang += w.squaredNorm();
  }
  const double k = static_cast<double>(res.rows.size());
  const MetricsReport m = compute_metrics(res, truth, 200.0);
  EXPECT_NEAR(m.rmse_position, std::sqrt(ss / k), 1e-12);
  EXPECT_NEAR(m.max_position_error, worst, 1e-12);
  EXPECT_NEAR(m.rmse_orientation_deg, std::sqrt(ss_ang / k) * 180.0 / std::numbers::pi, 1e-9);
}

TEST(ComputeMetrics, PermutationInvariant) {
  const auto truth = straight_line(600, 200.0);
  TrajectoryResult res = rows_every(truth, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 0.02);
  for (auto& r : res.rows) r.pose.p += Vec3(n(rng), n(rng), n(rng));
  const MetricsReport a = compute_metrics(res, truth, 200.0);
  std::shuffle(res.rows.begin(), res.rows.end(), rng);
  const MetricsReport b = compute_metrics(res, truth, 200.0);
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(ComputeMetrics, AssociatesWithinHalfTick) {
  const auto truth = straight_line(100, 200.0);
  TrajectoryResult res;
  TrajectoryRow r = row_at(truth[10]);
  r.t += 0.002;  // within 2.5 ms
  res.rows.push_back(r);
  EXPECT_EQ(compute_metrics(res, truth, 200.0).samples, 1u);

  res.rows.front().t = 10.0;  // past the end of truth
  expect_code(ErrorCode::EmptyOverlap, [&] { compute_metrics(res, truth, 200.0); });
  expect_code(ErrorCode::EmptyOverlap, [&] { compute_metrics(TrajectoryResult{}, truth, 200.0); });
}

TEST(ComputeMetrics, NearestTruth) {
  const auto truth = straight_line(10, 10.0);
  EXPECT_EQ(nearest_truth(truth, 0.31, 0.05), 3);
  EXPECT_EQ(nearest_truth(truth, 0.36, 0.05), 4);
  EXPECT_EQ(nearest_truth(truth, 0.35, 0.01), -1);
  EXPECT_EQ(nearest_truth(truth, -0.01, 0.05), 0);
  EXPECT_EQ(nearest_truth(truth, 0.93, 0.05), 9);
  EXPECT_EQ(nearest_truth({}, 0.0, 1.0), -1);
}

TEST(ComputeMetrics, CoreNeesUsesPseudoInverse) {
  TruthSample gt;
  gt.gyro_bias = Vec3(0.01, 0, 0);
  TrajectoryRow r = row_at(gt);
  r.bg.setZero();
  r.core_cov.setZero();
  r.core_cov(9, 9) = 1e-4;
  EXPECT_NEAR(core_nees(r, gt), 1.0, 1e-12);
  r.core_cov.setZero();
  EXPECT_EQ(core_nees(r, gt), 0.0);
}

TEST(ComputeMetrics, NonNegativeFieldsAndCounts) {
  const auto truth = straight_line(200, 200.0);
  TrajectoryResult res = rows_every(truth, 4);
  res.anchor_switches = 3;
  res.aor_rejections = 2;
  const MetricsReport m = compute_metrics(res, truth, 200.0);
  EXPECT_EQ(m.anchor_switches, 3);
  EXPECT_EQ(m.aor_rejections, 2);
  EXPECT_NE(m.to_json().find("\"rmse_position_m\""), std::string::npos);
}

TEST(CompareModes, SingleModeTable) {
  const std::vector<Scenario> sc{small_scenario(NoiseProfile{}, 5.0)};
  const std::vector<FilterMode> modes{FilterMode::Fixed};
  const ComparisonTable t = compare_modes(sc, modes, 2, 1, EstimatorConfig{}, nullptr);
  ASSERT_EQ(t.summary.size(), 1u);
  EXPECT_EQ(t.runs.size(), 2u);
  EXPECT_EQ(t.summary[0].wins, 2);
  const std::string csv = t.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("fixed,", csv.find('\n') + 1), csv.find('\n') + 1);
  EXPECT_NE(t.to_text().find("fixed"), std::string::npos);
  expect_code(ErrorCode::InvalidConfig, [&] { t.of(FilterMode::AleatoricAor); });
}

TEST(CompareModes, NoiseFreeModesAreIndistinguishable) {
  const std::vector<Scenario> sc{small_scenario(NoiseProfile::noise_free(), 10.0)};
  const std::vector<FilterMode> modes{FilterMode::Fixed, FilterMode::Aleatoric, FilterMode::AleatoricSwitching};
  EstimatorConfig base;
  base.perturb_initial_state = false;
  const UncertaintyHead head = constant_head(2, 1e-4, 1e-4);
  const ComparisonTable t = compare_modes(sc, modes, 3, 7, base, &head);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t m = 1; m < modes.size(); ++m) {
      EXPECT_LT(std::abs(t.seed_mean_rmse_position[m][s] - t.seed_mean_rmse_position[0][s]), 1e-6);
      EXPECT_LT(std::abs(t.seed_mean_rmse_orientation[m][s] - t.seed_mean_rmse_orientation[0][s]), 1e-4);
    }
  }
  for (const auto& s : t.summary) EXPECT_LT(s.rmse_position_mean, 1e-5);
}

TEST(CompareModes, IndependentOfThreadCount) {
  const std::vector<Scenario> sc{small_scenario(NoiseProfile{}, 4.0), small_scenario(heteroscedastic_profile(), 4.0)};
  const std::vector<FilterMode> modes{FilterMode::Fixed, FilterMode::Aleatoric};
  const UncertaintyHead head = constant_head(2, 1e-4, 1e-4);
  const ComparisonTable a = compare_modes(sc, modes, 3, 11, EstimatorConfig{}, &head, 1);
  const ComparisonTable b = compare_modes(sc, modes, 3, 11, EstimatorConfig{}, &head, 3);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  ASSERT_EQ(a.runs.size(), 12u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].seed, b.runs[i].seed);
    EXPECT_EQ(a.runs[i].metrics.to_json(), b.runs[i].metrics.to_json());
  }
  int wins = 0;
  for (const auto& s : a.summary) wins += s.wins;
  EXPECT_EQ(wins, 3);
}

TEST(CompareModes, ErrorsPropagate) {
  const std::vector<Scenario> sc{small_scenario(NoiseProfile{}, 2.0)};
  const std::vector<FilterMode> modes{FilterMode::Aleatoric};
  expect_code(ErrorCode::MissingHead, [&] { compare_modes(sc, modes, 1, 1, EstimatorConfig{}, nullptr, 2); });
  expect_code(ErrorCode::InvalidConfig, [&] { compare_modes(sc, modes, 0, 1, EstimatorConfig{}, nullptr); });
}

TEST(CompareModes, RunSeedsAreDistinct) {
  EXPECT_NE(run_seed(1, 0), run_seed(1, 1));
  EXPECT_NE(run_seed(1, 0), run_seed(2, 0));
  EXPECT_EQ(run_seed(5, 3), run_seed(5, 3));
}
