#include "aleanav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "aleanav/error.hpp"

namespace aleanav {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 draw_normal3(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return Vec3(x, y, z);
}

double wrap_deg(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

bool in_sectors(const std::vector<ObjectSectors>& sectors, ObjectId id, double deg) {
  for (const auto& s : sectors) {
    if (s.object_id != id) continue;
    for (const auto& iv : s.intervals) {
      if (iv.contains(deg)) return true;
    }
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Specs

Pose TrajectorySpec::default_camera_extrinsic() {
  Mat3 R;
  R.col(0) = Vec3(0.0, -1.0, 0.0);
  R.col(1) = Vec3(0.0, 0.0, -1.0);
  R.col(2) = Vec3(1.0, 0.0, 0.0);
  return Pose(Vec3(0.05, 0.0, 0.02), R);
}

void TrajectorySpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (!(duration > 0.0) || !std::isfinite(duration)) fail("duration must be positive");
  if (!(cam_rate > 0.0)) fail("cam_rate must be positive");
  if (!(imu_rate > cam_rate)) fail("imu_rate must exceed cam_rate");
  if (!(radius_min > 0.0) || !(radius_min <= radius_max)) fail("radius range invalid");
  if (!(height_amplitude >= 0.0) || !(height_frequency >= 0.0) || !(radius_frequency >= 0.0)) {
    fail("amplitudes and frequencies must be nonnegative");
  }
  if (!std::isfinite(angular_span_deg) || !std::isfinite(start_angle_deg)) fail("angles must be finite");
}

std::size_t TrajectorySpec::imu_count() const {
  // Samples at k / imu_rate for k / imu_rate < duration.
  return static_cast<std::size_t>(std::ceil(duration * imu_rate - 1e-9));
}

std::vector<std::size_t> TrajectorySpec::frame_imu_indices() const {
  std::vector<std::size_t> out;
  const std::size_t n = imu_count();
  const double ratio = imu_rate / cam_rate;
  for (std::size_t j = 0;; ++j) {
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(j) * ratio));
    if (k >= n) break;
    out.push_back(k);
  }
  return out;
}

void ObjectLayout::validate() const {
  if (objects.empty()) throw Error(ErrorCode::InvalidSpec, "layout needs at least one object");
  std::set<ObjectId> ids;
  for (const auto& o : objects) {
    if (o.id < 0) throw Error(ErrorCode::InvalidSpec, "object ids must be nonnegative");
    if (!ids.insert(o.id).second) {
      throw Error(ErrorCode::InvalidSpec, "duplicate object id " + std::to_string(o.id));
    }
    if (!(o.size > 0.0)) throw Error(ErrorCode::InvalidSpec, "object size must be positive");
  }
  if (!ids.contains(anchor_id)) {
    throw Error(ErrorCode::UnknownAnchor, "anchor id " + std::to_string(anchor_id) + " not in layout");
  }
}

const ObjectSpec& ObjectLayout::object(ObjectId id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw Error(ErrorCode::UnknownObject, "unknown object id " + std::to_string(id));
}

bool ObjectLayout::contains(ObjectId id) const {
  return std::any_of(objects.begin(), objects.end(), [id](const auto& o) { return o.id == id; });
}

Vec3 ObjectLayout::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& o : objects) c += o.pose.p;
  return objects.empty() ? c : Vec3(c / static_cast<double>(objects.size()));
}

int ObjectLayout::max_id() const {
  int m = -1;
  for (const auto& o : objects) m = std::max(m, o.id);
  return m;
}

bool AngleInterval::contains(double deg) const {
  const double lo = wrap_deg(lo_deg);
  const double hi = wrap_deg(hi_deg);
  const double x = wrap_deg(deg);
  if (hi_deg - lo_deg >= 360.0) return true;
  return lo <= hi ? (x >= lo && x <= hi) : (x >= lo || x <= hi);
}

void NoiseProfile::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (!(trans_a > 0.0) || !(trans_b >= 0.0) || !(rot_a > 0.0) || !(rot_b >= 0.0)) {
    fail("noise law needs a > 0 and b >= 0");
  }
  if (!(trans_axis_scale.array() > 0.0).all() || !(rot_axis_scale.array() > 0.0).all()) {
    fail("axis multipliers must be positive");
  }
  if (!(outlier_probability >= 0.0 && outlier_probability < 0.5)) fail("outlier probability must be in [0, 0.5)");
  if (!(outlier_scale >= 1.0) || !(ambiguity_scale >= 1.0)) fail("outlier scales must be >= 1");
  for (double d : {gyro_noise_density, accel_noise_density, gyro_bias_walk, accel_bias_walk,
                   gyro_bias_init, accel_bias_init}) {
    if (!(d >= 0.0)) fail("IMU noise parameters must be nonnegative");
  }
}

Vec3 NoiseProfile::trans_sigma(double distance) const {
  return (trans_a + trans_b * distance) * trans_axis_scale;
}

Vec3 NoiseProfile::rot_sigma(double distance) const {
  return (rot_a + rot_b * distance) * rot_axis_scale;
}

bool NoiseProfile::occluded(ObjectId id, double azimuth_deg) const {
  return in_sectors(occlusion, id, azimuth_deg);
}

bool NoiseProfile::ambiguous(ObjectId id, double view_angle_deg) const {
  return in_sectors(ambiguity, id, view_angle_deg);
}

NoiseProfile NoiseProfile::noise_free() {
  NoiseProfile p;
  // The law must stay positive; the tiny floor is far below double round-off
  // of any pose quantity that matters here.
  p.trans_a = 1e-150;
  p.trans_b = 0.0;
  p.rot_a = 1e-150;
  p.rot_b = 0.0;
  p.gyro_noise_density = 0.0;
  p.accel_noise_density = 0.0;
  p.gyro_bias_walk = 0.0;
  p.accel_bias_walk = 0.0;
  p.gyro_bias_init = 0.0;
  p.accel_bias_init = 0.0;
  return p;
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(const TrajectorySpec& spec, const Vec3& center) : spec_(spec), center_(center) {
  spec_.validate();
}

KinematicState Trajectory::at(double t) const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double r_mid = 0.5 * (spec_.radius_min + spec_.radius_max);
  const double r_amp = 0.5 * (spec_.radius_max - spec_.radius_min);
  const double wr = two_pi * spec_.radius_frequency;
  const double wh = two_pi * spec_.height_frequency;
  const double rate = spec_.angular_span_deg * kDeg / spec_.duration;

  const double r = r_mid + r_amp * std::sin(wr * t);
  const double dr = r_amp * wr * std::cos(wr * t);
  const double ddr = -r_amp * wr * wr * std::sin(wr * t);

  const double phi = spec_.start_angle_deg * kDeg + rate * t;
  const double c = std::cos(phi);
  const double s = std::sin(phi);

  const double h = spec_.height_base + spec_.height_amplitude * std::sin(wh * t);
  const double dh = spec_.height_amplitude * wh * std::cos(wh * t);
  const double ddh = -spec_.height_amplitude * wh * wh * std::sin(wh * t);

  KinematicState k;
  k.t = t;
  k.p = Vec3(center_.x() + r * c, center_.y() + r * s, h);
  k.v = Vec3(dr * c - r * rate * s, dr * s + r * rate * c, dh);
  k.a = Vec3(ddr * c - 2.0 * dr * rate * s - r * rate * rate * c,
             ddr * s + 2.0 * dr * rate * c - r * rate * rate * s, ddh);
  k.q = canonical(Quat(Eigen::AngleAxisd(phi + std::numbers::pi, Vec3::UnitZ())));
  k.omega = Vec3(0.0, 0.0, rate);
  return k;
}

// ---------------------------------------------------------------------------
// IMU

ImuStream sample_imu(const Trajectory& trajectory, const NoiseProfile& profile, std::uint64_t seed) {
  profile.validate();
  const auto& spec = trajectory.spec();
  const std::size_t n = spec.imu_count();
  const double dt = 1.0 / spec.imu_rate;
  const double sqrt_rate = std::sqrt(spec.imu_rate);
  const double sqrt_dt = std::sqrt(dt);
  const Vec3 g(0.0, 0.0, kGravity);

  Rng rng(seed);
  Vec3 bg = profile.gyro_bias_init * draw_normal3(rng);
  Vec3 ba = profile.accel_bias_init * draw_normal3(rng);

  ImuStream out;
  out.samples.reserve(n);
  out.truth.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const KinematicState s = trajectory.at(t);
    const Vec3 ng = draw_normal3(rng);
    const Vec3 na = draw_normal3(rng);

    ImuSample imu;
    imu.t = t;
    imu.gyro = s.omega + bg + profile.gyro_noise_density * sqrt_rate * ng;
    imu.accel = s.q.conjugate() * (s.a + g) + ba + profile.accel_noise_density * sqrt_rate * na;
    out.samples.push_back(imu);

    TruthSample truth;
    truth.t = t;
    truth.pose = Pose(s.p, s.q);
    truth.v = s.v;
    truth.gyro_bias = bg;
    truth.accel_bias = ba;
    out.truth.push_back(truth);

    const Vec3 wg = draw_normal3(rng);
    const Vec3 wa = draw_normal3(rng);
    bg += profile.gyro_bias_walk * sqrt_dt * wg;
    ba += profile.accel_bias_walk * sqrt_dt * wa;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pose sensor

FeatureVec feature_vector(const Pose& camera, const Pose& object, double object_size) {
  const Vec3 p_co = camera.q.conjugate() * (object.p - camera.p);
  const double d = p_co.norm();
  const double azimuth = std::atan2(p_co.x(), p_co.z());
  const double elevation = std::atan2(-p_co.y(), std::hypot(p_co.x(), p_co.z()));
  const Vec3 facing = object.q * Vec3::UnitX();
  const double cos_off = d > 0.0 ? facing.dot(camera.p - object.p) / d : 1.0;
  FeatureVec f;
  f << d, azimuth, elevation, cos_off, d > 0.0 ? object_size / d : 0.0;
  return f;
}

double view_azimuth_deg(const Pose& camera, const Pose& object) {
  const Vec3 rel = camera.p - object.p;
  return wrap_deg(std::atan2(rel.y(), rel.x()) / kDeg);
}

std::optional<MeasurementRecord> simulate_measurement(const Pose& camera, const ObjectSpec& object,
                                                      const NoiseProfile& profile, Rng& rng,
                                                      double t) {
  if (profile.occluded(object.id, view_azimuth_deg(camera, object.pose))) return std::nullopt;

  MeasurementRecord m;
  m.t = t;
  m.object_id = object.id;
  m.truth = pose_compose(pose_inverse(camera), object.pose);
  m.features = feature_vector(camera, object.pose, object.size);

  const double d = m.truth.p.norm();
  Vec3 sig_t = profile.trans_sigma(d);
  Vec3 sig_r = profile.rot_sigma(d);

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const bool random_outlier = uni(rng) < profile.outlier_probability;
  const double view_deg = std::acos(std::clamp(m.features[3], -1.0, 1.0)) / kDeg;
  const bool ambiguous = profile.ambiguous(object.id, view_deg);
  if (random_outlier) {
    sig_t *= profile.outlier_scale;
    sig_r *= profile.outlier_scale;
  }
  if (ambiguous) {
    sig_t *= profile.ambiguity_scale;
    sig_r *= profile.ambiguity_scale;
  }
  m.outlier = random_outlier || ambiguous;
  m.true_var << sig_t.cwiseAbs2(), sig_r.cwiseAbs2();

  const Vec3 nt = sig_t.cwiseProduct(draw_normal3(rng));
  const Vec3 nr = sig_r.cwiseProduct(draw_normal3(rng));
  m.measured = Pose(m.truth.p + nt, m.truth.q * quat_exp(nr));
  return m;
}

std::vector<double> Dataset::frame_times() const {
  std::vector<double> out;
  for (std::size_t k : spec.frame_imu_indices()) out.push_back(static_cast<double>(k) / spec.imu_rate);
  return out;
}

Dataset simulate_dataset(const TrajectorySpec& spec, const ObjectLayout& layout,
                         const NoiseProfile& profile) {
  spec.validate();
  layout.validate();
  profile.validate();

  Dataset ds;
  ds.spec = spec;
  ds.profile = profile;
  ds.layout = layout;

  const Trajectory trajectory(spec, layout.centroid());
  ImuStream imu = sample_imu(trajectory, profile, derive_seed(spec.seed, "imu"));
  ds.imu = std::move(imu.samples);
  ds.truth = std::move(imu.truth);

  std::vector<ObjectSpec> objects = layout.objects;
  std::sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  Rng rng(derive_seed(spec.seed, "measurements"));
  for (std::size_t k : spec.frame_imu_indices()) {
    const TruthSample& truth = ds.truth[k];
    const Pose camera = pose_compose(truth.pose, spec.camera_extrinsic);
    for (const auto& obj : objects) {
      auto m = simulate_measurement(camera, obj, profile, rng, truth.t);
      if (m) ds.measurements.push_back(*m);
    }
  }
  return ds;
}

}  // namespace aleanav
