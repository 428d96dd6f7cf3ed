#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "aleanav/error.hpp"
#include "aleanav/estimator.hpp"
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

double min_eigenvalue(const Eigen::MatrixXd& P) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return canonical(Quat(n(rng), n(rng), n(rng), n(rng)).normalized());
}

Vec3 random_vec(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return Vec3(x, y, z);
}

NavState random_state(std::mt19937_64& rng, int objects) {
  NavState s;
  s.p = random_vec(rng, 2.0);
  s.v = random_vec(rng, 0.5);
  s.q = random_quat(rng);
  s.bg = random_vec(rng, 1e-3);
  s.ba = random_vec(rng, 1e-2);
  s.imu_camera = Pose(random_vec(rng, 0.1), random_quat(rng));
  for (int k = 0; k < objects; ++k) s.objects.push_back({k, Pose(random_vec(rng, 2.0), random_quat(rng))});
  return s;
}

PriorConfig uniform_prior(double v) {
  PriorConfig p;
  p.position = p.velocity = p.attitude = p.gyro_bias = p.accel_bias = v;
  p.extrinsic_position = p.extrinsic_rotation = v;
  p.object_position = p.object_rotation = v;
  return p;
}

PoseUpdateInput measurement_of(const ObjectRelativeEkf& ekf, ObjectId id, double var_t, double var_r) {
  PoseUpdateInput m;
  m.object_id = id;
  m.measured = pose_inverse(ekf.predict_measurement(id));
  m.covariance = {DiagCov3::isotropic(var_t), DiagCov3::isotropic(var_r)};
  return m;
}

// Filter at a random state with a random positive-definite covariance.
ObjectRelativeEkf random_filter(std::mt19937_64& rng, int objects, const FilterConfig& fc = {}) {
  ObjectRelativeEkf ekf(random_state(rng, objects), 0, uniform_prior(0.01), fc);
  for (int i = 0; i < 20; ++i) {
    ImuSample s;
    s.t = 0.005 * (i + 1);
    s.gyro = random_vec(rng, 0.3);
    s.accel = random_vec(rng, 3.0) + Vec3(0, 0, kGravity);
    ekf.propagate(s);
  }
  return ekf;
}

Dataset quiet_dataset(double duration, const ObjectLayout& layout, const NoiseProfile& profile,
                      std::uint64_t seed = 3) {
  TrajectorySpec spec;
  spec.duration = duration;
  spec.seed = seed;
  return simulate_dataset(spec, layout, profile);
}

}  // namespace

TEST(Initialize, AnchorBlockZeroAndPriorsElsewhere) {
  std::mt19937_64 rng(1);
  const NavState s = random_state(rng, 3);
  PriorConfig prior;
  ObjectRelativeEkf ekf(s, 1, prior, FilterConfig{});
  const Eigen::MatrixXd& P = ekf.covariance();
  ASSERT_EQ(ekf.dim(), 21 + 18);
  const int a = ekf.object_offset(1);
  EXPECT_EQ(a, 27);
  EXPECT_TRUE(P.middleRows(a, 6).isZero(0.0));
  EXPECT_TRUE(P.middleCols(a, 6).isZero(0.0));
  EXPECT_EQ(P(idx::P, idx::P), prior.position);
  EXPECT_EQ(P(idx::BA + 2, idx::BA + 2), prior.accel_bias);
  EXPECT_EQ(P(ekf.object_offset(2) + 4, ekf.object_offset(2) + 4), prior.object_rotation);
  EXPECT_TRUE(P.isApprox(P.transpose(), 0.0));
  EXPECT_GE(min_eigenvalue(P), 0.0);
}

TEST(Initialize, ZeroPriorAtTruthHasZeroError) {
  std::mt19937_64 rng(2);
  const NavState s = random_state(rng, 2);
  ObjectRelativeEkf ekf(s, 0, uniform_prior(0.0), FilterConfig{});
  EXPECT_TRUE(ekf.covariance().isZero(0.0));
  EXPECT_EQ(ekf.state().p, s.p);
  EXPECT_EQ(ekf.state().q.coeffs(), s.q.coeffs());
}

TEST(Initialize, UnknownAnchorThrows) {
  std::mt19937_64 rng(3);
  expect_code(ErrorCode::UnknownAnchor, [&] { ObjectRelativeEkf(random_state(rng, 2), 7, PriorConfig{}, FilterConfig{}); });
}

TEST(Propagate, StationaryWithExactGravityStaysPut) {
  NavState s;
  s.p = Vec3(1, 2, 3);
  s.objects.push_back({0, Pose::identity()});
  ObjectRelativeEkf ekf(s, 0, PriorConfig{}, FilterConfig{});
  for (int k = 0; k <= 2000; ++k) {
    ImuSample imu;
    imu.t = k * 0.005;
    imu.accel = Vec3(0, 0, kGravity);
    ekf.propagate(imu);
  }
  EXPECT_LT((ekf.state().p - s.p).norm(), 1e-12);
  EXPECT_LT(ekf.state().v.norm(), 1e-12);
  EXPECT_LT(geodesic_distance(ekf.state().q, s.q), 1e-12);
}

TEST(Propagate, TraceNondecreasingAndObjectsStatic) {
  std::mt19937_64 rng(4);
  NavState s = random_state(rng, 3);
  s.q = Quat::Identity();
  ObjectRelativeEkf ekf(s, 0, PriorConfig{}, FilterConfig{});
  const Eigen::MatrixXd obj0 = ekf.covariance().bottomRightCorner(18, 18);
  double trace = ekf.covariance().trace();
  for (int k = 1; k <= 2000; ++k) {
    ImuSample imu;
    imu.t = k * 0.005;
    imu.accel = Vec3(0, 0, kGravity);
    ekf.propagate(imu);
    const double tr = ekf.covariance().trace();
    EXPECT_GE(tr, trace - 1e-15);
    trace = tr;
  }
  EXPECT_TRUE(ekf.covariance().bottomRightCorner(18, 18).isApprox(obj0, 1e-15));
  for (std::size_t k = 0; k < s.objects.size(); ++k) {
    EXPECT_EQ(ekf.state().objects[k].world_in_object.p, s.objects[k].world_in_object.p);
  }
  EXPECT_EQ(ekf.state().imu_camera.p, s.imu_camera.p);
}

TEST(Propagate, NonMonotonicTimeThrows) {
  std::mt19937_64 rng(5);
  ObjectRelativeEkf ekf(random_state(rng, 1), 0, PriorConfig{}, FilterConfig{}, 1.0);
  ImuSample imu;
  imu.t = 1.5;
  ekf.propagate(imu);
  imu.t = 1.2;
  expect_code(ErrorCode::NonMonotonicTime, [&] { ekf.propagate(imu); });
}

TEST(Propagate, NoiseFreeDeadReckoningTracksTruth) {
  Dataset ds = quiet_dataset(60.0, power_pole_layout(), NoiseProfile::noise_free());
  ds.measurements.clear();
  EstimatorConfig cfg;
  cfg.perturb_initial_state = false;
  const TrajectoryResult res = run(ds, cfg);
  ASSERT_EQ(res.rows.size(), 900u);
  double worst = 0.0;
  std::size_t ti = 0;
  for (const auto& row : res.rows) {
    while (std::abs(ds.truth[ti].t - row.t) > 1e-9) ++ti;
    worst = std::max(worst, (row.pose.p - ds.truth[ti].pose.p).norm());
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_EQ(res.measurements.size(), 0u);
}

TEST(Measurement, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const ObjectRelativeEkf ekf(random_state(rng, 2), 0, uniform_prior(0.01), FilterConfig{});
    const ObjectId id = 1;  // non-anchor, so its states are perturbable
    const Eigen::MatrixXd H = ekf.measurement_jacobian(id);
    const Pose h0 = ekf.predict_measurement(id);
    Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(6, ekf.dim());
    for (int i = 0; i < ekf.dim(); ++i) {
      ObjectRelativeEkf plus = ekf;
      ObjectRelativeEkf minus = ekf;
      Eigen::VectorXd d = Eigen::VectorXd::Zero(ekf.dim());
      d[i] = eps;
      plus.inject(d);
      minus.inject(-d);
      const Pose hp = plus.predict_measurement(id);
      const Pose hm = minus.predict_measurement(id);
      fd.block<3, 1>(0, i) = (hp.p - hm.p) / (2 * eps);
      fd.block<3, 1>(3, i) = (quat_log(h0.q.conjugate() * hp.q) - quat_log(h0.q.conjugate() * hm.q)) / (2 * eps);
    }
    const double err = (H - fd).cwiseAbs().maxCoeff();
    EXPECT_LT(err, 1e-5 * std::max(1.0, H.cwiseAbs().maxCoeff())) << "trial " << trial;
  }
}

TEST(Measurement, FullCovarianceMatchesMonteCarloOfInvertedPose) {
  std::mt19937_64 rng(7);
  FilterConfig fc;
  fc.covariance_model = CovarianceModel::Full;
  const ObjectRelativeEkf ekf(random_state(rng, 1), 0, PriorConfig{}, fc);
  const Pose T_co(Vec3(0.3, -0.2, 2.5), random_quat(rng));
  PoseUpdateInput in;
  in.measured = T_co;
  in.covariance = {DiagCov3(1e-6, 2e-6, 4e-6), DiagCov3(3e-6, 1e-6, 2e-6)};
  const Mat6 R = ekf.measurement_covariance(in);

  // Noise enters T_CO as the simulator applies it; the residual is taken on
  // the inverted pose exactly as in the update.
  const Pose z0 = pose_inverse(T_co);
  std::normal_distribution<double> n(0.0, 1.0);
  const int N = 200000;
  Mat6 C = Mat6::Zero();
  for (int i = 0; i < N; ++i) {
    const Vec3 nt = in.covariance.trans.var.cwiseSqrt().cwiseProduct(random_vec(rng, 1.0));
    const Vec3 nr = in.covariance.rot.var.cwiseSqrt().cwiseProduct(random_vec(rng, 1.0));
    const Pose noisy(T_co.p + nt, T_co.q * quat_exp(nr));
    const Pose z = pose_inverse(noisy);
    Vec6 r;
    r << z.p - z0.p, quat_log(z0.q.conjugate() * z.q);
    C += r * r.transpose();
  }
  C /= N;
  EXPECT_LT((C - R).norm() / R.norm(), 0.02);

  fc.covariance_model = CovarianceModel::BlockDiagonal;
  const ObjectRelativeEkf bd(ekf.state(), 0, PriorConfig{}, fc);
  const Mat6 Rb = bd.measurement_covariance(in);
  const Mat3 cross = Rb.topRightCorner(3, 3);
  const Mat3 tt = Rb.topLeftCorner(3, 3);
  const Mat3 rr = Rb.bottomRightCorner(3, 3);
  EXPECT_TRUE(cross.isZero(0.0));
  EXPECT_TRUE(tt.isApprox(rotate_covariance(in.covariance.trans, T_co.rotation().transpose())));
  EXPECT_TRUE(rr.isApprox(rotate_covariance(in.covariance.rot, T_co.rotation())));
}

TEST(Update, NoInformationLimit) {
  std::mt19937_64 rng(8);
  ObjectRelativeEkf ekf = random_filter(rng, 2);
  const NavState before = ekf.state();
  PoseUpdateInput m = measurement_of(ekf, 1, 1e12, 1e12);
  m.measured = pose_compose(m.measured, Pose(Vec3(0.2, -0.1, 0.3), Quat(Eigen::AngleAxisd(0.2, Vec3::UnitX()))));
  ASSERT_EQ(ekf.update_object_pose(m).outcome, UpdateOutcome::Accepted);
  const NavState& after = ekf.state();
  EXPECT_LT((after.p - before.p).norm(), 1e-9);
  EXPECT_LT((after.v - before.v).norm(), 1e-9);
  EXPECT_LT(geodesic_distance(after.q, before.q), 1e-9);
  EXPECT_LT((after.objects[1].world_in_object.p - before.objects[1].world_in_object.p).norm(), 1e-9);
}

TEST(Update, RejectionsLeaveFilterBitIdentical) {
  std::mt19937_64 rng(9);
  FilterConfig fc;
  fc.gating.aor_enabled = true;
  fc.gating.aor_max_trace_trans = 1e-3;
  fc.gating.aor_max_trace_rot = 1e-3;
  fc.gating.mahalanobis_threshold = 16.81;
  ObjectRelativeEkf ekf = random_filter(rng, 2, fc);
  const NavState s0 = ekf.state();
  const Eigen::MatrixXd P0 = ekf.covariance();

  PoseUpdateInput big = measurement_of(ekf, 1, 1e-2, 1e-4);
  EXPECT_EQ(ekf.update_object_pose(big).outcome, UpdateOutcome::RejectedAor);

  PoseUpdateInput far = measurement_of(ekf, 1, 1e-6, 1e-6);
  far.measured.p += Vec3(5.0, 0, 0);
  const UpdateResult g = ekf.update_object_pose(far);
  EXPECT_EQ(g.outcome, UpdateOutcome::RejectedGate);
  EXPECT_GT(g.mahalanobis_sq, 16.81);

  EXPECT_TRUE(ekf.covariance() == P0);
  EXPECT_EQ(ekf.state().p, s0.p);
  EXPECT_EQ(ekf.state().v, s0.v);
  EXPECT_EQ(ekf.state().q.coeffs(), s0.q.coeffs());
  EXPECT_EQ(ekf.state().bg, s0.bg);
  EXPECT_EQ(ekf.state().imu_camera.p, s0.imu_camera.p);
  for (std::size_t k = 0; k < s0.objects.size(); ++k) {
    EXPECT_EQ(ekf.state().objects[k].world_in_object.p, s0.objects[k].world_in_object.p);
    EXPECT_EQ(ekf.state().objects[k].world_in_object.q.coeffs(), s0.objects[k].world_in_object.q.coeffs());
  }
}

TEST(Update, SnapsToPreciseMeasurementAndMatchesKalmanOracle) {
  std::mt19937_64 rng(10);
  const NavState truth = random_state(rng, 1);
  PriorConfig prior = uniform_prior(1e-14);
  prior.position = prior.attitude = 1.0;
  NavState guess = truth;
  guess.p += random_vec(rng, 1e-4);
  guess.q = canonical(guess.q * quat_exp(random_vec(rng, 1e-4)));
  ObjectRelativeEkf ekf(guess, 0, prior, FilterConfig{});
  ObjectRelativeEkf truth_filter(truth, 0, prior, FilterConfig{});
  PoseUpdateInput m = measurement_of(truth_filter, 0, 1e-14, 1e-14);

  // Linearized Kalman oracle with a plain dense inverse.
  const Eigen::MatrixXd H = ekf.measurement_jacobian(0);
  const Eigen::MatrixXd P = ekf.covariance();
  const Pose pred = ekf.predict_measurement(0);
  const Pose z = pose_inverse(m.measured);
  Vec6 r;
  r << z.p - pred.p, quat_log(pred.q.conjugate() * z.q);
  const Eigen::MatrixXd S = H * P * H.transpose() + ekf.measurement_covariance(m);
  const Eigen::VectorXd delta = P * H.transpose() * S.inverse() * r;
  ObjectRelativeEkf oracle = ekf;
  oracle.inject(delta);

  ASSERT_EQ(ekf.update_object_pose(m).outcome, UpdateOutcome::Accepted);
  EXPECT_LT((ekf.state().p - oracle.state().p).norm(), 1e-12);
  EXPECT_LT(geodesic_distance(ekf.state().q, oracle.state().q), 1e-12);

  const Pose after = ekf.predict_measurement(0);
  EXPECT_LT((after.p - z.p).norm(), 1e-6);
  EXPECT_LT(geodesic_distance(after.q, z.q), 1e-6);
}

TEST(Update, JosephDiagonalNeverGrowsAndAnchorStaysZero) {
  std::mt19937_64 rng(11);
  ObjectRelativeEkf ekf = random_filter(rng, 3);
  std::uniform_real_distribution<double> u(1e-6, 1e-2);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int i = 0; i < 200; ++i) {
    PoseUpdateInput m = measurement_of(ekf, pick(rng), u(rng), u(rng));
    m.measured.p += random_vec(rng, 0.01);
    const Eigen::VectorXd d0 = ekf.covariance().diagonal();
    ASSERT_EQ(ekf.update_object_pose(m).outcome, UpdateOutcome::Accepted);
    const Eigen::VectorXd d1 = ekf.covariance().diagonal();
    EXPECT_TRUE(((d1 - d0).array() <= 1e-12 * (1.0 + d0.array())).all()) << "update " << i;
    const int a = ekf.object_offset(ekf.anchor());
    EXPECT_TRUE(ekf.covariance().middleRows(a, 6).isZero(0.0));
    EXPECT_GT(min_eigenvalue(ekf.covariance()), -1e-10);
    EXPECT_LT((ekf.covariance() - ekf.covariance().transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Update, AnchorStateIsNeverCorrected) {
  std::mt19937_64 rng(12);
  ObjectRelativeEkf ekf = random_filter(rng, 2);
  const Pose anchor = ekf.state().objects[0].world_in_object;
  PoseUpdateInput m = measurement_of(ekf, 0, 1e-4, 1e-4);
  m.measured.p += Vec3(0.05, 0.02, -0.03);
  ekf.update_object_pose(m);
  EXPECT_EQ(ekf.state().objects[0].world_in_object.p, anchor.p);
  EXPECT_EQ(ekf.state().objects[0].world_in_object.q.coeffs(), anchor.q.coeffs());
}

TEST(Update, InvalidCovarianceAndUnknownObject) {
  std::mt19937_64 rng(13);
  ObjectRelativeEkf ekf = random_filter(rng, 2);
  PoseUpdateInput m = measurement_of(ekf, 1, 1e-4, 1e-4);
  m.covariance.trans.var.x() = 0.0;
  expect_code(ErrorCode::InvalidConfig, [&] { ekf.update_object_pose(m); });
  m = measurement_of(ekf, 1, 1e-4, 1e-4);
  m.object_id = 9;
  expect_code(ErrorCode::UnknownObject, [&] { ekf.update_object_pose(m); });
}

TEST(ChooseAnchor, Examples) {
  AnchorPolicy dyn{AnchorMode::DynamicSwitching, 1.0};
  const std::vector<std::pair<ObjectId, double>> ab{{0, 0.5}, {1, 0.3}};
  EXPECT_EQ(choose_anchor(ab, 0, dyn), 1);

  const std::vector<std::pair<ObjectId, double>> tie{{0, 0.3}, {1, 0.3}};
  EXPECT_EQ(choose_anchor(tie, 0, dyn), 0);
  EXPECT_EQ(choose_anchor(tie, 1, dyn), 1);

  AnchorPolicy rho{AnchorMode::DynamicSwitching, 1.5};
  const std::vector<std::pair<ObjectId, double>> close{{0, 0.4}, {1, 0.3}};
  EXPECT_EQ(choose_anchor(close, 0, rho), 0);
  const std::vector<std::pair<ObjectId, double>> clear{{0, 0.4}, {1, 0.25}};
  EXPECT_EQ(choose_anchor(clear, 0, rho), 1);

  // Current anchor unseen: any measured object wins.
  const std::vector<std::pair<ObjectId, double>> unseen{{1, 9.0}, {2, 7.0}};
  EXPECT_EQ(choose_anchor(unseen, 0, rho), 2);

  EXPECT_EQ(choose_anchor(ab, 0, AnchorPolicy{AnchorMode::Fixed, 1.0}), 0);
  expect_code(ErrorCode::NoMeasurements, [&] { choose_anchor({}, 0, dyn); });
  expect_code(ErrorCode::InvalidConfig, [&] { choose_anchor(ab, 0, AnchorPolicy{AnchorMode::DynamicSwitching, 0.9}); });
}

TEST(SwitchAnchor, TransfersZeroBlockAndReleasesOldAnchor) {
  std::mt19937_64 rng(14);
  ObjectRelativeEkf ekf = random_filter(rng, 3);
  for (int i = 0; i < 10; ++i) {
    PoseUpdateInput m = measurement_of(ekf, 1 + i % 2, 1e-4, 1e-4);
    ekf.update_object_pose(m);
  }
  const NavState s0 = ekf.state();
  ekf.switch_anchor(2);
  EXPECT_EQ(ekf.anchor(), 2);
  EXPECT_EQ(ekf.anchor_switches(), 1);
  const Eigen::MatrixXd& P = ekf.covariance();
  const int k = ekf.object_offset(2);
  const int old = ekf.object_offset(0);
  EXPECT_TRUE(P.middleRows(k, 6).isZero(0.0));
  EXPECT_TRUE(P.middleCols(k, 6).isZero(0.0));
  const PriorConfig prior = uniform_prior(0.01);
  EXPECT_NEAR(P(old, old), prior.object_position, 1e-15);
  EXPECT_NEAR(P(old + 5, old + 5), prior.object_rotation, 1e-15);
  EXPECT_GE(min_eigenvalue(P), -1e-12);
  // Switching moves no state.
  EXPECT_EQ(ekf.state().p, s0.p);
  EXPECT_EQ(ekf.state().objects[2].world_in_object.p, s0.objects[2].world_in_object.p);
  ekf.switch_anchor(2);
  EXPECT_EQ(ekf.anchor_switches(), 1);
}

TEST(SelectAnchor, SkipsUnconvergedCandidatesAndSwitchesOnConverged) {
  std::mt19937_64 rng(15);
  ObjectRelativeEkf ekf(random_state(rng, 2), 0, uniform_prior(0.01), FilterConfig{});
  AnchorPolicy policy{AnchorMode::DynamicSwitching, 1.2, 1e-4};
  std::vector<PoseUpdateInput> epoch{measurement_of(ekf, 0, 1e-2, 1e-2), measurement_of(ekf, 1, 1e-6, 1e-6)};
  // Object 1 still has its 0.01 prior on every axis.
  EXPECT_EQ(ekf.select_anchor(epoch, policy), 0);
  // Object 1 converges once both it and the anchor are seen precisely.
  for (int i = 0; i < 5; ++i) {
    ekf.update_object_pose(measurement_of(ekf, 0, 1e-8, 1e-8));
    ekf.update_object_pose(measurement_of(ekf, 1, 1e-8, 1e-8));
  }
  const int k = ekf.object_offset(1);
  ASSERT_LT(ekf.covariance().block(k, k, 6, 6).trace(), 1e-4);
  EXPECT_EQ(ekf.select_anchor(epoch, policy), 1);
  EXPECT_EQ(ekf.anchor_switches(), 1);
  expect_code(ErrorCode::NoMeasurements, [&] { ekf.select_anchor({}, policy); });
}

TEST(Run, EmptyMeasurementsDeadReckonWithCovarianceGrowth) {
  Dataset ds = quiet_dataset(5.0, power_pole_layout(), NoiseProfile{});
  ds.measurements.clear();
  const TrajectoryResult res = run(ds, EstimatorConfig{});
  ASSERT_EQ(res.rows.size(), 75u);
  EXPECT_GT(res.rows.back().cov_diag[idx::P], res.rows.front().cov_diag[idx::P]);
  EXPECT_EQ(res.anchor_switches, 0);
}

TEST(Run, DeterministicAndUnitQuaternions) {
  const Dataset ds = quiet_dataset(10.0, power_pole_layout(), heteroscedastic_profile());
  const TrajectoryResult a = run(ds, EstimatorConfig{});
  const TrajectoryResult b = run(ds, EstimatorConfig{});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].pose.p, b.rows[i].pose.p);
    EXPECT_EQ(a.rows[i].pose.q.coeffs(), b.rows[i].pose.q.coeffs());
    EXPECT_EQ(a.rows[i].cov_diag, b.rows[i].cov_diag);
    EXPECT_NEAR(a.rows[i].pose.q.norm(), 1.0, 1e-9);
  }
  EXPECT_EQ(a.measurements.size(), ds.measurements.size());
}

TEST(Run, FixedModeTracksWithMeasurements) {
  const Dataset ds = quiet_dataset(30.0, power_pole_layout(), NoiseProfile{});
  const TrajectoryResult res = run(ds, EstimatorConfig{});
  double ss = 0.0;
  std::size_t ti = 0;
  for (const auto& row : res.rows) {
    while (std::abs(ds.truth[ti].t - row.t) > 1e-9) ++ti;
    ss += (row.pose.p - ds.truth[ti].pose.p).squaredNorm();
  }
  EXPECT_LT(std::sqrt(ss / static_cast<double>(res.rows.size())), 0.05);
}

TEST(Run, SwitchingAndAorModesUseHead) {
  const Dataset ds = quiet_dataset(10.0, power_pole_layout(), heteroscedastic_profile());
  EstimatorConfig cfg;
  cfg.mode = FilterMode::AleatoricSwitching;
  expect_code(ErrorCode::MissingHead, [&] { run(ds, cfg); });

  // A head with constant, very small variance for object 2 only.
  UncertaintyHead head(4, 4, 0);
  head.set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(head.parameter_count())));
  for (int c = 0; c < 4; ++c) head.set_output_bias(c, LogVariance::Constant(std::log(c == 2 ? 1e-6 : 1e-4)));
  cfg.max_candidate_trace = 1.0;
  const TrajectoryResult sw = run(ds, cfg, &head);
  EXPECT_GE(sw.anchor_switches, 1);
  bool saw_two = false;
  for (const auto& row : sw.rows) saw_two = saw_two || row.anchor_id == 2;
  EXPECT_TRUE(saw_two);

  cfg.mode = FilterMode::AleatoricAor;
  cfg.gating.aor_max_trace_trans = 1e-4;
  cfg.gating.aor_max_trace_rot = 1e-4;
  const TrajectoryResult aor = run(ds, cfg, &head);
  EXPECT_GT(aor.aor_rejections, 0);
  int logged = 0;
  for (const auto& m : aor.measurements) logged += m.outcome == UpdateOutcome::RejectedAor;
  EXPECT_EQ(logged, aor.aor_rejections);
}

TEST(Run, OracleCovarianceNeedsNoHead) {
  const Dataset ds = quiet_dataset(5.0, power_pole_layout(), NoiseProfile{});
  EstimatorConfig cfg;
  cfg.mode = FilterMode::Aleatoric;
  cfg.oracle_covariance = true;
  const TrajectoryResult res = run(ds, cfg);
  ASSERT_FALSE(res.measurements.empty());
  EXPECT_EQ(res.measurements.front().variances, ds.measurements.front().true_var);
}

TEST(FilterMode, ParseAndNames) {
  for (FilterMode m : {FilterMode::Fixed, FilterMode::Aleatoric, FilterMode::AleatoricSwitching, FilterMode::AleatoricAor}) {
    EXPECT_EQ(parse_filter_mode(to_string(m)), m);
  }
  EXPECT_EQ(parse_filter_mode("au+aor"), FilterMode::AleatoricAor);
  expect_code(ErrorCode::InvalidConfig, [] { parse_filter_mode("kalman"); });
  EXPECT_FALSE(uses_head(FilterMode::Fixed));
  EXPECT_TRUE(uses_head(FilterMode::AleatoricAor));
}
