#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "aleanav/geometry.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

constexpr double kGravity = 9.81;

using ObjectId = int;
using FeatureVec = Eigen::Matrix<double, 5, 1>;

/// Orbit around the layout centroid. Radius and height oscillate
/// sinusoidally, the heading keeps the camera pointed at the centroid.
struct TrajectorySpec {
  double duration = 60.0;   // s
  double imu_rate = 200.0;  // Hz
  double cam_rate = 15.0;   // Hz
  double radius_min = 2.7;  // m
  double radius_max = 3.4;  // m
  double radius_frequency = 0.05;  // Hz
  double height_base = 1.7;        // m
  double height_amplitude = 0.2;   // m
  double height_frequency = 0.1;   // Hz
  double angular_span_deg = 360.0;
  double start_angle_deg = 0.0;
  /// T_IC, camera w.r.t. IMU.
  Pose camera_extrinsic = default_camera_extrinsic();
  std::uint64_t seed = 1;

  /// Camera looking along body +x, image x to body -y, image y to body -z.
  static Pose default_camera_extrinsic();
  void validate() const;
  std::size_t imu_count() const;
  /// Camera frames are triggered on IMU ticks.
  std::vector<std::size_t> frame_imu_indices() const;
};

struct ObjectSpec {
  ObjectId id = 0;
  Pose pose;          // T_WO
  double size = 0.3;  // m, enters the angular-size feature
};

struct ObjectLayout {
  std::vector<ObjectSpec> objects;
  ObjectId anchor_id = 0;

  void validate() const;
  const ObjectSpec& object(ObjectId id) const;
  bool contains(ObjectId id) const;
  Vec3 centroid() const;
  int max_id() const;
};

/// Closed interval on an angle in degrees; wraps when lo > hi.
struct AngleInterval {
  double lo_deg = 0.0;
  double hi_deg = 0.0;
  bool contains(double deg) const;
};

struct ObjectSectors {
  ObjectId object_id = 0;
  std::vector<AngleInterval> intervals;
};

/// Heteroscedastic pose-sensor noise plus inertial noise.
/// Per-axis std: sigma_t,i = (trans_a + trans_b d) trans_axis_scale_i and the
/// same affine law for rotation, with d the camera-object distance.
struct NoiseProfile {
  double trans_a = 0.004;
  double trans_b = 0.006;
  double rot_a = 0.004;
  double rot_b = 0.007;
  Vec3 trans_axis_scale = Vec3(1.0, 1.0, 2.0);
  Vec3 rot_axis_scale = Vec3(1.0, 1.0, 1.0);

  double outlier_probability = 0.0;
  double outlier_scale = 5.0;

  /// Measurement dropouts; angle is the camera azimuth around the object in
  /// the world xy-plane.
  std::vector<ObjectSectors> occlusion;
  /// Viewpoints with gross errors; angle is the off-axis view angle
  /// acos(feature[3]) in [0, 180] deg. Noise is scaled by ambiguity_scale.
  std::vector<ObjectSectors> ambiguity;
  double ambiguity_scale = 20.0;

  double gyro_noise_density = 1.7e-4;   // rad/s/sqrt(Hz)
  double accel_noise_density = 2.0e-3;  // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 2.0e-5;       // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 3.0e-4;      // m/s^3/sqrt(Hz)
  double gyro_bias_init = 1.0e-3;       // rad/s, std of the initial bias
  double accel_bias_init = 2.0e-2;      // m/s^2

  void validate() const;
  Vec3 trans_sigma(double distance) const;
  Vec3 rot_sigma(double distance) const;
  bool occluded(ObjectId id, double azimuth_deg) const;
  bool ambiguous(ObjectId id, double view_angle_deg) const;

  static NoiseProfile noise_free();
};

struct KinematicState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();        // p_WI
  Vec3 v = Vec3::Zero();        // world frame
  Vec3 a = Vec3::Zero();        // world frame, gravity excluded
  Quat q = Quat::Identity();    // q_WI
  Vec3 omega = Vec3::Zero();    // body frame
};

class Trajectory {
 public:
  Trajectory(const TrajectorySpec& spec, const Vec3& center);

  KinematicState at(double t) const;
  const TrajectorySpec& spec() const { return spec_; }

 private:
  TrajectorySpec spec_;
  Vec3 center_;
};

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2, specific force
};

struct TruthSample {
  double t = 0.0;
  Pose pose;  // T_WI
  Vec3 v = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
};

struct ImuStream {
  std::vector<ImuSample> samples;
  std::vector<TruthSample> truth;
};

/// Samples the trajectory at imu_rate with exact kinematics, adds white
/// noise and random-walk biases. Deterministic per seed.
ImuStream sample_imu(const Trajectory& trajectory, const NoiseProfile& profile, std::uint64_t seed);

struct MeasurementRecord {
  double t = 0.0;
  ObjectId object_id = 0;
  Pose measured;  // T_CO
  Pose truth;     // T_CO
  Vec6 true_var = Vec6::Ones();  // translation (m^2) then rotation (rad^2), camera frame
  FeatureVec features = FeatureVec::Zero();
  bool outlier = false;
};

/// (distance, azimuth, elevation, cos off-axis, size / distance). Azimuth and
/// elevation are of the object in the camera frame (z optical, y down); the
/// off-axis angle is between the object's +x axis and the direction to the
/// camera.
FeatureVec feature_vector(const Pose& camera, const Pose& object, double object_size = 0.3);

/// Camera azimuth around the object in the world xy-plane, degrees in [0, 360).
double view_azimuth_deg(const Pose& camera, const Pose& object);

/// Noisy T_CO of one object, or nullopt when occluded. Translation noise is
/// additive in the camera frame, rotation noise right-multiplied.
std::optional<MeasurementRecord> simulate_measurement(const Pose& camera, const ObjectSpec& object,
                                                      const NoiseProfile& profile, Rng& rng,
                                                      double t);

struct Dataset {
  TrajectorySpec spec;
  NoiseProfile profile;
  ObjectLayout layout;
  std::vector<ImuSample> imu;
  std::vector<TruthSample> truth;
  std::vector<MeasurementRecord> measurements;  // sorted by (t, object_id)

  std::vector<double> frame_times() const;
};

Dataset simulate_dataset(const TrajectorySpec& spec, const ObjectLayout& layout,
                         const NoiseProfile& profile);

}  // namespace aleanav
