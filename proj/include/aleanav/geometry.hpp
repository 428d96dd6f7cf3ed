#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace aleanav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

/// Diagonal 3x3 covariance stored as its three variances (m^2 or rad^2).
struct DiagCov3 {
  Vec3 var = Vec3::Ones();

  DiagCov3() = default;
  explicit DiagCov3(const Vec3& v) : var(v) {}
  DiagCov3(double a, double b, double c) : var(a, b, c) {}

  static DiagCov3 isotropic(double variance) { return DiagCov3(variance, variance, variance); }

  bool valid() const;
  double trace() const { return var.sum(); }
  Mat3 matrix() const { return var.asDiagonal(); }
};

/// Rigid transform T_AB: p_AB is the origin of B in A, q_AB rotates B-frame
/// vectors into A (x_A = R_AB x_B + p_AB). Hamilton quaternions, stored with
/// q_w >= 0.
struct Pose {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& position, const Quat& rotation);
  Pose(const Vec3& position, const Mat3& rotation);

  static Pose identity() { return {}; }

  Mat3 rotation() const { return q.toRotationMatrix(); }
  Vec3 transform(const Vec3& x) const { return q * x + p; }

  /// px py pz qx qy qz qw
  std::array<double, 7> to_array() const;
  static Pose from_array(const std::array<double, 7>& a);
};

Mat3 skew(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Rodrigues map from an axis-angle vector to SO(3).
Mat3 so3_exp(const Vec3& theta);
/// Inverse of so3_exp with the angle in [0, pi]. At exactly pi the axis is
/// chosen with its first nonzero component positive.
Vec3 so3_log(const Mat3& R);

Quat quat_exp(const Vec3& theta);
Vec3 quat_log(const Quat& q);

/// Hemisphere-normalized unit quaternion (q_w >= 0).
Quat canonical(const Quat& q);

/// Rotation from the continuous 6D representation (two stacked 3-vectors).
/// Throws DegenerateInput for near-zero or parallel vectors.
Mat3 gram_schmidt_rotation(const Vec6& m);

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);

/// R diag(var) R^T.
Mat3 rotate_covariance(const DiagCov3& cov, const Mat3& R);
Mat3 rotate_covariance(const Mat3& cov, const Mat3& R);

/// Geodesic angle between two rotations, radians.
double geodesic_distance(const Mat3& a, const Mat3& b);
double geodesic_distance(const Quat& a, const Quat& b);

bool is_rotation(const Mat3& R, double tol = 1e-9);

}  // namespace aleanav
