#include "aleanav/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "aleanav/error.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

namespace {

constexpr double kTimeEps = 1e-9;

using Mat15 = Eigen::Matrix<double, 15, 15>;

ImuSample interpolate(const ImuSample& a, const ImuSample& b, double t) {
  const double span = b.t - a.t;
  const double w = span > 0.0 ? (t - a.t) / span : 1.0;
  ImuSample s;
  s.t = t;
  s.gyro = (1.0 - w) * a.gyro + w * b.gyro;
  s.accel = (1.0 - w) * a.accel + w * b.accel;
  return s;
}

Vec3 draw3(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double sd = std::sqrt(variance);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return sd * Vec3(x, y, z);
}

}  // namespace

int NavState::object_index(ObjectId id) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

PriorConfig PriorConfig::with_profile_biases(const NoiseProfile& profile) {
  PriorConfig p;
  p.gyro_bias = std::max(profile.gyro_bias_init * profile.gyro_bias_init, 1e-12);
  p.accel_bias = std::max(profile.accel_bias_init * profile.accel_bias_init, 1e-12);
  return p;
}

ImuNoise ImuNoise::from_profile(const NoiseProfile& profile) {
  return {profile.gyro_noise_density, profile.accel_noise_density, profile.gyro_bias_walk,
          profile.accel_bias_walk};
}

std::string_view to_string(UpdateOutcome outcome) {
  switch (outcome) {
    case UpdateOutcome::Accepted: return "OK";
    case UpdateOutcome::RejectedAor: return "AOR";
    case UpdateOutcome::RejectedGate: return "GATE";
  }
  return "OK";
}

std::string_view to_string(EpochEvent e) {
  switch (e) {
    case EpochEvent::Ok: return "OK";
    case EpochEvent::Aor: return "AOR";
    case EpochEvent::Gate: return "GATE";
  }
  return "OK";
}

// ---------------------------------------------------------------------------
// Filter

ObjectRelativeEkf::ObjectRelativeEkf(const NavState& initial, ObjectId anchor, const PriorConfig& prior,
                                     const FilterConfig& config, double t0)
    : state_(initial), anchor_(anchor), prior_(prior), config_(config), time_(t0) {
  if (state_.object_index(anchor) < 0) {
    throw Error(ErrorCode::UnknownAnchor, "anchor " + std::to_string(anchor) + " is not a state object");
  }
  const int n = idx::kObjectsOffset + 6 * static_cast<int>(state_.objects.size());
  Eigen::VectorXd d(n);
  d.segment<3>(idx::P).setConstant(prior.position);
  d.segment<3>(idx::V).setConstant(prior.velocity);
  d.segment<3>(idx::TH).setConstant(prior.attitude);
  d.segment<3>(idx::BG).setConstant(prior.gyro_bias);
  d.segment<3>(idx::BA).setConstant(prior.accel_bias);
  d.segment<3>(idx::PIC).setConstant(prior.extrinsic_position);
  d.segment<3>(idx::QIC).setConstant(prior.extrinsic_rotation);
  for (std::size_t k = 0; k < state_.objects.size(); ++k) {
    const int o = idx::kObjectsOffset + 6 * static_cast<int>(k);
    d.segment<3>(o).setConstant(prior.object_position);
    d.segment<3>(o + 3).setConstant(prior.object_rotation);
  }
  P_ = d.asDiagonal();
  enforce_anchor_block();
}

int ObjectRelativeEkf::object_offset(ObjectId id) const {
  const int k = state_.object_index(id);
  if (k < 0) throw Error(ErrorCode::UnknownObject, "unknown object " + std::to_string(id));
  return idx::kObjectsOffset + 6 * k;
}

void ObjectRelativeEkf::enforce_anchor_block() {
  const int a = object_offset(anchor_);
  P_.middleRows(a, 6).setZero();
  P_.middleCols(a, 6).setZero();
}

void ObjectRelativeEkf::symmetrize() {
  P_ = 0.5 * (P_ + P_.transpose()).eval();
}

void ObjectRelativeEkf::propagate(const ImuSample& imu) {
  if (imu.t < time_ - kTimeEps) {
    throw Error(ErrorCode::NonMonotonicTime, "propagate: imu time " + std::to_string(imu.t) +
                                                 " before filter time " + std::to_string(time_));
  }
  const ImuSample start = last_imu_ ? *last_imu_ : imu;
  const double dt = imu.t - time_;
  last_imu_ = imu;
  if (dt <= 0.0) {
    time_ = std::max(time_, imu.t);
    return;
  }

  const Vec3 w0 = start.gyro - state_.bg;
  const Vec3 w1 = imu.gyro - state_.bg;
  const Vec3 a0 = start.accel - state_.ba;
  const Vec3 a1 = imu.accel - state_.ba;
  const Vec3 g(0.0, 0.0, -kGravity);

  const Vec3 w_mid = 0.5 * (w0 + w1);
  const Mat3 R0 = state_.q.toRotationMatrix();
  const Quat q1 = (state_.q * quat_exp(w_mid * dt)).normalized();
  const Mat3 R1 = q1.toRotationMatrix();
  const Vec3 aw0 = R0 * a0 + g;
  const Vec3 aw1 = R1 * a1 + g;

  // Linear acceleration between the two samples.
  state_.p += state_.v * dt + dt * dt * (aw0 / 3.0 + aw1 / 6.0);
  state_.v += 0.5 * (aw0 + aw1) * dt;
  state_.q = canonical(q1);

  const Vec3 a_mid = 0.5 * (a0 + a1);
  const Mat3 I3 = Mat3::Identity();
  Mat15 F = Mat15::Identity();
  F.block<3, 3>(idx::P, idx::V) = I3 * dt;
  F.block<3, 3>(idx::P, idx::TH) = -0.5 * R0 * skew(a_mid) * dt * dt;
  F.block<3, 3>(idx::P, idx::BA) = -0.5 * R0 * dt * dt;
  F.block<3, 3>(idx::V, idx::TH) = -R0 * skew(a_mid) * dt;
  F.block<3, 3>(idx::V, idx::BA) = -R0 * dt;
  F.block<3, 3>(idx::TH, idx::TH) = so3_exp(w_mid * dt).transpose();
  F.block<3, 3>(idx::TH, idx::BG) = -I3 * dt;

  const auto& nz = config_.imu;
  const double sa2 = nz.accel_noise_density * nz.accel_noise_density;
  const double sg2 = nz.gyro_noise_density * nz.gyro_noise_density;
  Mat15 Q = Mat15::Zero();
  Q.block<3, 3>(idx::P, idx::P) = I3 * (sa2 * dt * dt * dt / 3.0);
  Q.block<3, 3>(idx::P, idx::V) = I3 * (sa2 * dt * dt / 2.0);
  Q.block<3, 3>(idx::V, idx::P) = I3 * (sa2 * dt * dt / 2.0);
  Q.block<3, 3>(idx::V, idx::V) = I3 * (sa2 * dt);
  Q.block<3, 3>(idx::TH, idx::TH) = I3 * (sg2 * dt);
  Q.block<3, 3>(idx::BG, idx::BG) = I3 * (nz.gyro_bias_walk * nz.gyro_bias_walk * dt);
  Q.block<3, 3>(idx::BA, idx::BA) = I3 * (nz.accel_bias_walk * nz.accel_bias_walk * dt);

  const int rest = dim() - idx::kCoreDim;
  const Mat15 Pcc = P_.topLeftCorner<15, 15>();
  P_.topLeftCorner<15, 15>() = F * Pcc * F.transpose() + Q;
  if (rest > 0) {
    const Eigen::MatrixXd Pcr = F * P_.topRightCorner(15, rest);
    P_.topRightCorner(15, rest) = Pcr;
    P_.bottomLeftCorner(rest, 15) = Pcr.transpose();
  }
  symmetrize();
  time_ = imu.t;
}

Pose ObjectRelativeEkf::predict_measurement(ObjectId id) const {
  const int k = state_.object_index(id);
  if (k < 0) throw Error(ErrorCode::UnknownObject, "unknown object " + std::to_string(id));
  const Pose& t_ow = state_.objects[static_cast<std::size_t>(k)].world_in_object;
  return pose_compose(pose_compose(t_ow, state_.pose()), state_.imu_camera);
}

Eigen::MatrixXd ObjectRelativeEkf::measurement_jacobian(ObjectId id) const {
  const int o = object_offset(id);
  const Pose& t_ow = state_.objects[static_cast<std::size_t>(state_.object_index(id))].world_in_object;
  const Mat3 R_ow = t_ow.rotation();
  const Mat3 R_wi = state_.q.toRotationMatrix();
  const Mat3 R_ic = state_.imu_camera.rotation();
  const Vec3 x = state_.p + R_wi * state_.imu_camera.p;  // camera origin in world

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(6, dim());
  H.block<3, 3>(0, idx::P) = R_ow;
  H.block<3, 3>(0, idx::TH) = -R_ow * R_wi * skew(state_.imu_camera.p);
  H.block<3, 3>(0, idx::PIC) = R_ow * R_wi;
  H.block<3, 3>(0, o) = Mat3::Identity();
  H.block<3, 3>(0, o + 3) = -R_ow * skew(x);

  H.block<3, 3>(3, idx::TH) = R_ic.transpose();
  H.block<3, 3>(3, idx::QIC) = Mat3::Identity();
  H.block<3, 3>(3, o + 3) = R_ic.transpose() * R_wi.transpose();
  return H;
}

Mat6 ObjectRelativeEkf::measurement_covariance(const PoseUpdateInput& m) const {
  // Measured T_CO, inverted to T_OC. Translation noise lives in the camera
  // frame; rotation noise is right-multiplied on R_CO, so the right residual
  // of R_OC sees it through R_CO.
  const Mat3 R_co = m.measured.rotation();
  const Mat3 R_oc = R_co.transpose();
  const Mat3 sig_t = m.covariance.trans.matrix();
  const Mat3 sig_r = m.covariance.rot.matrix();

  Mat6 R = Mat6::Zero();
  R.topLeftCorner<3, 3>() = rotate_covariance(m.covariance.trans, R_oc);
  R.bottomRightCorner<3, 3>() = rotate_covariance(m.covariance.rot, R_co);
  if (config_.covariance_model == CovarianceModel::Full) {
    const Vec3 p_oc = -(R_oc * m.measured.p);
    const Mat3 L = skew(p_oc);
    R.topLeftCorner<3, 3>() = R_oc * sig_t * R_oc.transpose() + L * sig_r * L.transpose();
    const Mat3 cross = -L * sig_r * R_oc;
    R.topRightCorner<3, 3>() = cross;
    R.bottomLeftCorner<3, 3>() = cross.transpose();
  }
  return 0.5 * (R + R.transpose());
}

void ObjectRelativeEkf::inject(const Eigen::VectorXd& delta) {
  state_.p += delta.segment<3>(idx::P);
  state_.v += delta.segment<3>(idx::V);
  state_.q = canonical(state_.q * quat_exp(delta.segment<3>(idx::TH)));
  state_.bg += delta.segment<3>(idx::BG);
  state_.ba += delta.segment<3>(idx::BA);
  state_.imu_camera.p += delta.segment<3>(idx::PIC);
  state_.imu_camera.q = canonical(state_.imu_camera.q * quat_exp(delta.segment<3>(idx::QIC)));
  for (std::size_t k = 0; k < state_.objects.size(); ++k) {
    if (state_.objects[k].id == anchor_) continue;
    const int o = idx::kObjectsOffset + 6 * static_cast<int>(k);
    Pose& t = state_.objects[k].world_in_object;
    t.p += delta.segment<3>(o);
    t.q = canonical(t.q * quat_exp(delta.segment<3>(o + 3)));
  }
}

UpdateResult ObjectRelativeEkf::update_object_pose(const PoseUpdateInput& m) {
  const int o = object_offset(m.object_id);
  (void)o;
  if (!m.covariance.valid()) {
    throw Error(ErrorCode::InvalidConfig, "measurement covariance must be positive and finite");
  }
  const auto& gate = config_.gating;
  if (gate.aor_enabled && (m.covariance.trans.trace() > gate.aor_max_trace_trans ||
                           m.covariance.rot.trace() > gate.aor_max_trace_rot)) {
    return {UpdateOutcome::RejectedAor, 0.0};
  }

  const Pose predicted = predict_measurement(m.object_id);
  const Pose z = pose_inverse(m.measured);
  Vec6 r;
  r.head<3>() = z.p - predicted.p;
  r.tail<3>() = quat_log(predicted.q.conjugate() * z.q);

  const Eigen::MatrixXd H = measurement_jacobian(m.object_id);
  const Mat6 Rm = measurement_covariance(m);
  const Eigen::MatrixXd HP = H * P_;  // 6 x n
  Mat6 S = HP * H.transpose() + Rm;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::LDLT<Mat6> ldlt(S);
  const double d2 = r.dot(ldlt.solve(r));

  if (gate.mahalanobis_threshold && !(d2 <= *gate.mahalanobis_threshold)) {
    return {UpdateOutcome::RejectedGate, d2};
  }

  const Eigen::MatrixXd K = ldlt.solve(HP).transpose();  // n x 6
  const Eigen::VectorXd delta = K * r;

  Eigen::MatrixXd IKH = -K * H;
  IKH.diagonal().array() += 1.0;
  P_ = IKH * P_ * IKH.transpose() + K * Rm * K.transpose();
  symmetrize();
  enforce_anchor_block();
  inject(delta);
  return {UpdateOutcome::Accepted, d2};
}

ObjectId choose_anchor(std::span<const std::pair<ObjectId, double>> scores, ObjectId current,
                       const AnchorPolicy& policy) {
  if (scores.empty()) throw Error(ErrorCode::NoMeasurements, "choose_anchor: no measurements");
  if (!(policy.hysteresis >= 1.0)) throw Error(ErrorCode::InvalidConfig, "hysteresis must be >= 1");
  if (policy.mode == AnchorMode::Fixed) return current;

  double current_score = std::numeric_limits<double>::infinity();
  for (const auto& [id, s] : scores) {
    if (id == current) current_score = s;
  }
  ObjectId best = current;
  double best_score = current_score;
  for (const auto& [id, s] : scores) {
    if (s < best_score) {
      best = id;
      best_score = s;
    }
  }
  if (best != current && best_score < current_score / policy.hysteresis) return best;
  return current;
}

ObjectId ObjectRelativeEkf::select_anchor(std::span<const PoseUpdateInput> measurements,
                                          const AnchorPolicy& policy) {
  if (measurements.empty()) throw Error(ErrorCode::NoMeasurements, "select_anchor: no measurements");
  std::vector<std::pair<ObjectId, double>> scores;
  scores.reserve(measurements.size());
  for (const auto& m : measurements) {
    if (m.object_id != anchor_) {
      const int k = object_offset(m.object_id);
      if (P_.block<6, 6>(k, k).trace() > policy.max_candidate_trace) continue;
    }
    scores.emplace_back(m.object_id, m.covariance.score());
  }
  if (scores.empty()) return anchor_;
  const ObjectId next = choose_anchor(scores, anchor_, policy);
  if (next != anchor_) switch_anchor(next);
  return anchor_;
}

void ObjectRelativeEkf::switch_anchor(ObjectId id) {
  if (id == anchor_) return;
  const int k = object_offset(id);
  const int old = object_offset(anchor_);

  // Condition on the new anchor's error being exactly zero.
  const Mat6 Pkk = 0.5 * (P_.block<6, 6>(k, k) + P_.block<6, 6>(k, k).transpose());
  const Eigen::SelfAdjointEigenSolver<Mat6> es(Pkk);
  const double tol = 1e-15 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vec6 inv = Vec6::Zero();
  for (int i = 0; i < 6; ++i) {
    if (es.eigenvalues()[i] > tol) inv[i] = 1.0 / es.eigenvalues()[i];
  }
  const Mat6 Pkk_pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd cols = P_.middleCols(k, 6);
  P_ -= cols * Pkk_pinv * cols.transpose();
  P_.middleRows(k, 6).setZero();
  P_.middleCols(k, 6).setZero();

  // Release the previous anchor with the configured prior.
  P_.middleRows(old, 6).setZero();
  P_.middleCols(old, 6).setZero();
  P_.block<3, 3>(old, old) = Mat3::Identity() * prior_.object_position;
  P_.block<3, 3>(old + 3, old + 3) = Mat3::Identity() * prior_.object_rotation;
  symmetrize();

  // Clamp round-off negative eigenvalues.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(P_);
  if (full.eigenvalues().minCoeff() < 0.0) {
    const Eigen::VectorXd ev = full.eigenvalues().cwiseMax(0.0);
    P_ = full.eigenvectors() * ev.asDiagonal() * full.eigenvectors().transpose();
    symmetrize();
  }
  anchor_ = id;
  enforce_anchor_block();
  ++anchor_switches_;
}

// ---------------------------------------------------------------------------
// Runner

std::string_view to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::Fixed: return "fixed";
    case FilterMode::Aleatoric: return "aleatoric";
    case FilterMode::AleatoricSwitching: return "aleatoric+switching";
    case FilterMode::AleatoricAor: return "aleatoric+aor";
  }
  return "fixed";
}

FilterMode parse_filter_mode(std::string_view text) {
  if (text == "fixed") return FilterMode::Fixed;
  if (text == "aleatoric" || text == "au") return FilterMode::Aleatoric;
  if (text == "aleatoric+switching" || text == "au+switch" || text == "switching") {
    return FilterMode::AleatoricSwitching;
  }
  if (text == "aleatoric+aor" || text == "au+aor" || text == "aor") return FilterMode::AleatoricAor;
  throw Error(ErrorCode::InvalidConfig, "unknown filter mode '" + std::string(text) + "'");
}

bool uses_head(FilterMode mode) { return mode != FilterMode::Fixed; }

NavState initial_state_from_truth(const Dataset& dataset) {
  if (dataset.truth.empty()) throw Error(ErrorCode::InvalidSpec, "dataset has no ground truth");
  const TruthSample& t0 = dataset.truth.front();
  NavState s;
  s.p = t0.pose.p;
  s.v = t0.v;
  s.q = t0.pose.q;
  s.imu_camera = dataset.spec.camera_extrinsic;
  std::vector<ObjectSpec> objects = dataset.layout.objects;
  std::sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& o : objects) s.objects.push_back({o.id, pose_inverse(o.pose)});
  return s;
}

NavState perturb_state(const NavState& state, ObjectId anchor, const PriorConfig& prior, Rng& rng) {
  NavState s = state;
  s.p += draw3(rng, prior.position);
  s.v += draw3(rng, prior.velocity);
  s.q = canonical(s.q * quat_exp(draw3(rng, prior.attitude)));
  s.imu_camera.p += draw3(rng, prior.extrinsic_position);
  s.imu_camera.q = canonical(s.imu_camera.q * quat_exp(draw3(rng, prior.extrinsic_rotation)));
  for (auto& o : s.objects) {
    if (o.id == anchor) continue;
    o.world_in_object.p += draw3(rng, prior.object_position);
    o.world_in_object.q = canonical(o.world_in_object.q * quat_exp(draw3(rng, prior.object_rotation)));
  }
  return s;
}

TrajectoryResult run(const Dataset& dataset, const EstimatorConfig& config, const UncertaintyHead* head,
                     const std::optional<NavState>& initial) {
  if (uses_head(config.mode) && !config.oracle_covariance && head == nullptr) {
    throw Error(ErrorCode::MissingHead, std::string("mode '") + std::string(to_string(config.mode)) +
                                            "' needs an uncertainty head");
  }
  if (head && uses_head(config.mode) && head->num_classes() <= dataset.layout.max_id() &&
      head->num_classes() > 1) {
    throw Error(ErrorCode::UnknownObject, "head has fewer classes than the layout has object ids");
  }
  if (dataset.imu.empty()) throw Error(ErrorCode::InvalidSpec, "dataset has no IMU samples");

  const PriorConfig prior = config.prior.value_or(PriorConfig::with_profile_biases(dataset.profile));
  FilterConfig fc;
  fc.imu = config.imu.value_or(ImuNoise::from_profile(dataset.profile));
  fc.gating = config.gating;
  fc.gating.aor_enabled = config.mode == FilterMode::AleatoricAor;
  fc.covariance_model = config.covariance_model;

  AnchorPolicy policy;
  policy.mode = config.mode == FilterMode::AleatoricSwitching ? AnchorMode::DynamicSwitching : AnchorMode::Fixed;
  policy.hysteresis = config.hysteresis;
  policy.max_candidate_trace = config.max_candidate_trace;

  const ObjectId anchor = dataset.layout.anchor_id;
  NavState init;
  if (initial) {
    init = *initial;
  } else {
    init = initial_state_from_truth(dataset);
    if (config.perturb_initial_state) {
      Rng rng(derive_seed(dataset.spec.seed, "init"));
      init = perturb_state(init, anchor, prior, rng);
    }
  }
  ObjectRelativeEkf ekf(init, anchor, prior, fc, dataset.imu.front().t);

  TrajectoryResult result;
  result.mode = config.mode;
  const std::vector<double> frames = dataset.frame_times();
  const auto& meas = dataset.measurements;
  const bool single_class = head && head->num_classes() == 1;

  std::size_t mi = 0;
  std::size_t fi = 0;
  std::vector<PoseUpdateInput> epoch;
  EpochEvent last_event = EpochEvent::Ok;

  auto process_epoch = [&](std::size_t begin, std::size_t end) {
    epoch.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const auto& m = meas[i];
      PoseUpdateInput in;
      in.t = m.t;
      in.object_id = m.object_id;
      in.measured = m.measured;
      if (config.oracle_covariance) {
        in.covariance.trans.var = m.true_var.head<3>();
        in.covariance.rot.var = m.true_var.tail<3>();
        in.aleatoric = true;
      } else if (uses_head(config.mode)) {
        in.covariance = head->predict(m.features, single_class ? 0 : m.object_id);
        in.aleatoric = true;
      } else {
        in.covariance = PredictedCovariance::from_sigmas(config.fixed_sigma_t, config.fixed_sigma_rot);
      }
      epoch.push_back(in);
    }
    if (policy.mode == AnchorMode::DynamicSwitching) ekf.select_anchor(epoch, policy);
    EpochEvent event = EpochEvent::Ok;
    for (std::size_t i = 0; i < epoch.size(); ++i) {
      const UpdateResult u = ekf.update_object_pose(epoch[i]);
      if (u.outcome == UpdateOutcome::RejectedAor) {
        ++result.aor_rejections;
        event = EpochEvent::Aor;
      } else if (u.outcome == UpdateOutcome::RejectedGate) {
        ++result.gate_rejections;
        if (event == EpochEvent::Ok) event = EpochEvent::Gate;
      }
      MeasurementLogEntry log;
      log.t = epoch[i].t;
      log.object_id = epoch[i].object_id;
      log.distance = meas[begin + i].features[0];
      log.variances = epoch[i].covariance.variances();
      log.outcome = u.outcome;
      result.measurements.push_back(log);
    }
    last_event = event;
  };

  auto record = [&](double t) {
    TrajectoryRow row;
    row.t = t;
    const NavState& s = ekf.state();
    row.pose = s.pose();
    row.v = s.v;
    row.bg = s.bg;
    row.ba = s.ba;
    row.cov_diag = ekf.covariance().diagonal();
    row.core_cov = ekf.covariance().topLeftCorner<15, 15>();
    row.anchor_id = ekf.anchor();
    row.event = last_event;
    result.rows.push_back(std::move(row));
    last_event = EpochEvent::Ok;
  };

  // Epochs at time t (all measurements sharing the timestamp).
  auto epoch_end = [&](std::size_t begin) {
    std::size_t end = begin;
    while (end < meas.size() && std::abs(meas[end].t - meas[begin].t) < kTimeEps) ++end;
    return end;
  };
  auto record_frames_until = [&](double t) {
    while (fi < frames.size() && frames[fi] <= t + kTimeEps) {
      if (std::abs(frames[fi] - t) < kTimeEps) record(frames[fi]);
      ++fi;
    }
  };

  for (std::size_t k = 0; k < dataset.imu.size(); ++k) {
    const ImuSample& s = dataset.imu[k];
    while (mi < meas.size() && meas[mi].t < s.t - kTimeEps) {
      const std::size_t end = epoch_end(mi);
      if (meas[mi].t >= ekf.time() - kTimeEps && k > 0) {
        ekf.propagate(interpolate(dataset.imu[k - 1], s, meas[mi].t));
        process_epoch(mi, end);
        record_frames_until(meas[mi].t);
      }
      mi = end;
    }
    ekf.propagate(s);
    while (mi < meas.size() && std::abs(meas[mi].t - s.t) < kTimeEps) {
      const std::size_t end = epoch_end(mi);
      process_epoch(mi, end);
      mi = end;
    }
    record_frames_until(s.t);
  }
  result.anchor_switches = ekf.anchor_switches();
  return result;
}

}  // namespace aleanav
