#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace safecor {

/// Rigid transform: rotation stored as a unit quaternion plus a translation.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  static Pose Identity() { return Pose{}; }

  static Pose FromAxisAngle(const Eigen::Vector3d& axis, double angle) {
    Pose p;
    p.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
    return p;
  }

  /// Composition: (*this) then applies `other` in this frame.
  Pose operator*(const Pose& other) const {
    Pose out;
    out.position = position + orientation * other.position;
    out.orientation = (orientation * other.orientation).normalized();
    return out;
  }

  /// Map a point expressed in this frame into the parent frame.
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return position + orientation * p;
  }

  /// Rotate a direction (no translation).
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const { return orientation * v; }

  Pose inverse() const {
    Pose out;
    out.orientation = orientation.conjugate();
    out.position = -(out.orientation * position);
    return out;
  }
};

}  // namespace safecor
