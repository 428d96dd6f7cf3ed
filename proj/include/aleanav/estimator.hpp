#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "aleanav/geometry.hpp"
#include "aleanav/sim.hpp"
#include "aleanav/uncertainty.hpp"

namespace aleanav {

/// Error-state offsets. Objects follow at kObjectsOffset + 6 k in layout order.
namespace idx {
constexpr int P = 0;
constexpr int V = 3;
constexpr int TH = 6;
constexpr int BG = 9;
constexpr int BA = 12;
constexpr int PIC = 15;
constexpr int QIC = 18;
constexpr int kCoreDim = 15;
constexpr int kObjectsOffset = 21;
}  // namespace idx

struct ObjectState {
  ObjectId id = 0;
  Pose world_in_object;  // (p_OW, q_OW)
};

struct NavState {
  Vec3 p = Vec3::Zero();   // p_WI
  Vec3 v = Vec3::Zero();   // v_WI
  Quat q = Quat::Identity();  // q_WI
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  Pose imu_camera;  // (p_IC, q_IC)
  std::vector<ObjectState> objects;

  Pose pose() const { return Pose(p, q); }
  /// Index of an object in `objects`, or -1.
  int object_index(ObjectId id) const;
};

/// Prior variances of the error state.
struct PriorConfig {
  double position = 1e-4;        // m^2
  double velocity = 1e-4;        // m^2/s^2
  double attitude = 1e-4;        // rad^2
  double gyro_bias = 1e-6;       // rad^2/s^2
  double accel_bias = 4e-4;      // m^2/s^4
  double extrinsic_position = 1e-4;
  double extrinsic_rotation = 1e-4;
  double object_position = 0.1;   // m^2, also used when an anchor is released
  double object_rotation = 0.05;  // rad^2

  static PriorConfig with_profile_biases(const NoiseProfile& profile);
};

struct ImuNoise {
  double gyro_noise_density = 1.7e-4;
  double accel_noise_density = 2.0e-3;
  double gyro_bias_walk = 2.0e-5;
  double accel_bias_walk = 3.0e-4;

  static ImuNoise from_profile(const NoiseProfile& profile);
};

enum class AnchorMode { Fixed, DynamicSwitching };

struct AnchorPolicy {
  AnchorMode mode = AnchorMode::Fixed;
  double hysteresis = 1.2;  // rho >= 1
  /// Objects whose 6x6 error block has a larger trace (m^2 + rad^2) are not
  /// eligible as anchor; the frame would inherit their unconverged estimate.
  double max_candidate_trace = 1e-4;
};

struct GatingConfig {
  bool aor_enabled = false;
  double aor_max_trace_trans = std::numeric_limits<double>::infinity();  // m^2
  double aor_max_trace_rot = std::numeric_limits<double>::infinity();    // rad^2
  /// Chi-square threshold on the 6-dof innovation; disabled when empty.
  std::optional<double> mahalanobis_threshold;
};

/// BlockDiagonal rotates the translation and rotation blocks separately and
/// stacks them. Full also carries the rotation-noise lever arm of the
/// inverted translation, including the cross terms.
enum class CovarianceModel { BlockDiagonal, Full };

struct PoseUpdateInput {
  double t = 0.0;
  ObjectId object_id = 0;
  Pose measured;  // T_CO
  PredictedCovariance covariance;
  bool aleatoric = false;  // covariance predicted by a head rather than fixed
};

enum class UpdateOutcome { Accepted, RejectedAor, RejectedGate };
std::string_view to_string(UpdateOutcome outcome);

struct UpdateResult {
  UpdateOutcome outcome = UpdateOutcome::Accepted;
  double mahalanobis_sq = 0.0;
};

struct FilterConfig {
  ImuNoise imu;
  GatingConfig gating;
  CovarianceModel covariance_model = CovarianceModel::Full;
};

/// Error-state EKF over IMU pose/velocity/biases, IMU-camera extrinsics and
/// the world pose in every object frame. The anchor object's error block is
/// held at exactly zero.
class ObjectRelativeEkf {
 public:
  /// Throws UnknownAnchor when the anchor is not among the state's objects.
  ObjectRelativeEkf(const NavState& initial, ObjectId anchor, const PriorConfig& prior,
                    const FilterConfig& config, double t0 = 0.0);

  /// Midpoint strapdown step from the last sample to imu.t with linearly
  /// interpolated, bias-corrected IMU. Throws NonMonotonicTime.
  void propagate(const ImuSample& imu);

  /// Object-frame camera pose update. Rejections leave the filter untouched.
  UpdateResult update_object_pose(const PoseUpdateInput& m);

  /// Applies the anchor policy to the measurements of one epoch and switches
  /// if needed. Returns the (possibly new) anchor. Throws NoMeasurements.
  ObjectId select_anchor(std::span<const PoseUpdateInput> measurements, const AnchorPolicy& policy);

  /// Makes `id` the anchor: conditions the covariance on its current
  /// estimate (zero block) and re-initializes the previous anchor's block
  /// from the prior.
  void switch_anchor(ObjectId id);

  /// T_OC predicted from the state.
  Pose predict_measurement(ObjectId id) const;
  /// 6 x dim Jacobian of the (translation, rotation) residual.
  Eigen::MatrixXd measurement_jacobian(ObjectId id) const;
  Mat6 measurement_covariance(const PoseUpdateInput& m) const;
  /// Applies an error-state correction (used by updates and tests).
  void inject(const Eigen::VectorXd& delta);

  const NavState& state() const { return state_; }
  const Eigen::MatrixXd& covariance() const { return P_; }
  ObjectId anchor() const { return anchor_; }
  double time() const { return time_; }
  int dim() const { return static_cast<int>(P_.rows()); }
  int object_offset(ObjectId id) const;
  int anchor_switches() const { return anchor_switches_; }
  const FilterConfig& config() const { return config_; }

 private:
  void enforce_anchor_block();
  void symmetrize();

  NavState state_;
  Eigen::MatrixXd P_;
  ObjectId anchor_;
  PriorConfig prior_;
  FilterConfig config_;
  double time_ = 0.0;
  std::optional<ImuSample> last_imu_;
  int anchor_switches_ = 0;
};

/// Pure hysteresis rule: best = argmin score; switch only if
/// best < score(current) / rho. An unmeasured current anchor scores +inf.
ObjectId choose_anchor(std::span<const std::pair<ObjectId, double>> scores, ObjectId current,
                       const AnchorPolicy& policy);

// ---------------------------------------------------------------------------
// Batch runner

enum class FilterMode { Fixed, Aleatoric, AleatoricSwitching, AleatoricAor };
std::string_view to_string(FilterMode mode);
FilterMode parse_filter_mode(std::string_view text);
bool uses_head(FilterMode mode);

struct EstimatorConfig {
  FilterMode mode = FilterMode::Fixed;
  double fixed_sigma_t = 0.03;     // m
  double fixed_sigma_rot = 0.035;  // rad
  GatingConfig gating;             // AOR thresholds; enabled by the AOR mode
  double hysteresis = 1.2;
  double max_candidate_trace = 1e-4;
  CovarianceModel covariance_model = CovarianceModel::Full;
  std::optional<PriorConfig> prior;  // default: PriorConfig with profile biases
  std::optional<ImuNoise> imu;       // default: the dataset's profile
  /// Draw the initial estimate (except the anchor) from the prior.
  bool perturb_initial_state = true;
  /// Diagnostic: feed the simulator's true per-measurement variances instead
  /// of the mode's covariance source.
  bool oracle_covariance = false;
};

enum class EpochEvent { Ok, Aor, Gate };
std::string_view to_string(EpochEvent e);

struct TrajectoryRow {
  double t = 0.0;
  Pose pose;  // T_WI estimate
  Vec3 v = Vec3::Zero();
  Eigen::VectorXd cov_diag;
  Eigen::Matrix<double, 15, 15> core_cov = Eigen::Matrix<double, 15, 15>::Zero();
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  ObjectId anchor_id = 0;
  EpochEvent event = EpochEvent::Ok;
};

struct MeasurementLogEntry {
  double t = 0.0;
  ObjectId object_id = 0;
  double distance = 0.0;
  Vec6 variances = Vec6::Zero();
  UpdateOutcome outcome = UpdateOutcome::Accepted;
};

struct TrajectoryResult {
  FilterMode mode = FilterMode::Fixed;
  std::vector<TrajectoryRow> rows;
  std::vector<MeasurementLogEntry> measurements;
  int anchor_switches = 0;
  int aor_rejections = 0;
  int gate_rejections = 0;
};

NavState initial_state_from_truth(const Dataset& dataset);
/// Perturbs every block but the anchor by a draw from the prior.
NavState perturb_state(const NavState& state, ObjectId anchor, const PriorConfig& prior, Rng& rng);

/// Interleaves propagation and updates by timestamp and records one row per
/// camera frame. Throws MissingHead for head-based modes without a head.
TrajectoryResult run(const Dataset& dataset, const EstimatorConfig& config,
                     const UncertaintyHead* head = nullptr,
                     const std::optional<NavState>& initial = std::nullopt);

}  // namespace aleanav
