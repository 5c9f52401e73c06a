#pragma once

#include <Eigen/Dense>

namespace safecor {

/// Joint-space cubic Hermite segment on [0, duration] matching the boundary
/// positions and velocities exactly.
class CubicHermite {
 public:
  CubicHermite(const Eigen::VectorXd& q0, const Eigen::VectorXd& v0,
               const Eigen::VectorXd& q1, const Eigen::VectorXd& v1, double duration);

  Eigen::VectorXd position(double t) const;
  Eigen::VectorXd velocity(double t) const;
  double duration() const { return duration_; }

 private:
  Eigen::VectorXd q0_, v0_, q1_, v1_;
  double duration_;
};

}  // namespace safecor
