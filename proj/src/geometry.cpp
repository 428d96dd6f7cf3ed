#include "aleanav/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "aleanav/error.hpp"

namespace aleanav {

namespace {

constexpr double kExpSmallAngle = 1e-8;
constexpr double kLogSmallAngle = 1e-6;
// Below this sin(theta) (with cos < 0) the axis is read from the symmetric part.
constexpr double kLogNearPiSin = 1e-3;

}  // namespace

bool DiagCov3::valid() const {
  return var.allFinite() && (var.array() > 0.0).all();
}

Pose::Pose(const Vec3& position, const Quat& rotation)
    : p(position), q(canonical(rotation)) {}

Pose::Pose(const Vec3& position, const Mat3& rotation)
    : p(position), q(canonical(Quat(rotation))) {}

std::array<double, 7> Pose::to_array() const {
  return {p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w()};
}

Pose Pose::from_array(const std::array<double, 7>& a) {
  return Pose(Vec3(a[0], a[1], a[2]), Quat(a[6], a[3], a[4], a[5]));
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat3 so3_exp(const Vec3& theta) {
  const double angle = theta.norm();
  const Mat3 K = skew(theta);
  if (angle < kExpSmallAngle) {
    return Mat3::Identity() + K + 0.5 * K * K;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * K + b * K * K;
}

Vec3 so3_log(const Mat3& R) {
  const Vec3 w = vee(R - R.transpose());  // 2 sin(theta) v
  const double s = 0.5 * w.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double angle = std::atan2(s, c);

  if (angle < kLogSmallAngle) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    return 0.5 * (1.0 + angle * angle / 6.0) * w;
  }
  if (s < kLogNearPiSin && c < 0.0) {
    // (R + R^T)/2 - c I = (1 - c) v v^T
    const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
    Eigen::Index i = 0;
    B.diagonal().maxCoeff(&i);
    Vec3 axis = B.col(i) / std::sqrt(B(i, i) * (1.0 - c));
    axis.normalize();
    const double d = axis.dot(w);
    if (std::abs(d) > 1e-15) {
      if (d < 0.0) axis = -axis;
    } else {
      for (int k = 0; k < 3; ++k) {
        if (std::abs(axis[k]) > 1e-12) {
          if (axis[k] < 0.0) axis = -axis;
          break;
        }
      }
    }
    return angle * axis;
  }
  return (angle / (2.0 * s)) * w;
}

Quat quat_exp(const Vec3& theta) {
  const double angle = theta.norm();
  if (angle < kExpSmallAngle) {
    const double a2 = angle * angle;
    const Vec3 v = (0.5 - a2 / 48.0) * theta;
    return Quat(1.0 - a2 / 8.0, v.x(), v.y(), v.z()).normalized();
  }
  const double half = 0.5 * angle;
  const Vec3 v = (std::sin(half) / angle) * theta;
  return Quat(std::cos(half), v.x(), v.y(), v.z());
}

Vec3 quat_log(const Quat& q_in) {
  const Quat q = canonical(q_in);
  const Vec3 v = q.vec();
  const double n = v.norm();
  if (n < 1e-12) {
    return (2.0 / q.w()) * v;
  }
  return (2.0 * std::atan2(n, q.w()) / n) * v;
}

Quat canonical(const Quat& q) {
  // normalized() can flip low bits of an already-unit input
  Quat out = std::abs(q.squaredNorm() - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? q : q.normalized();
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

Mat3 gram_schmidt_rotation(const Vec6& m) {
  const Vec3 a1 = m.head<3>();
  const Vec3 a2 = m.tail<3>();
  const double n1 = a1.norm();
  const double n2 = a2.norm();
  if (!(n1 >= 1e-12) || !(n2 >= 1e-12)) {
    throw Error(ErrorCode::DegenerateInput, "gram_schmidt_rotation: zero-length input vector");
  }
  const Vec3 b1 = a1 / n1;
  if ((b1.cross(a2 / n2)).norm() < 1e-12) {
    throw Error(ErrorCode::DegenerateInput, "gram_schmidt_rotation: parallel input vectors");
  }
  const Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b1.cross(b2);
  return R;
}

Pose pose_compose(const Pose& a, const Pose& b) {
  return Pose(a.p + a.q * b.p, a.q * b.q);
}

Pose pose_inverse(const Pose& a) {
  const Quat qi = a.q.conjugate();
  return Pose(-(qi * a.p), qi);
}

Mat3 rotate_covariance(const DiagCov3& cov, const Mat3& R) {
  return rotate_covariance(cov.matrix(), R);
}

Mat3 rotate_covariance(const Mat3& cov, const Mat3& R) {
  const Mat3 out = R * cov * R.transpose();
  return 0.5 * (out + out.transpose());
}

double geodesic_distance(const Mat3& a, const Mat3& b) {
  return so3_log(a.transpose() * b).norm();
}

double geodesic_distance(const Quat& a, const Quat& b) {
  const Quat d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(R.determinant() - 1.0) < tol;
}

}  // namespace aleanav
