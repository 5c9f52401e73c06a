#include "safecor/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace safecor {

CubicHermite::CubicHermite(const Eigen::VectorXd& q0, const Eigen::VectorXd& v0,
                           const Eigen::VectorXd& q1, const Eigen::VectorXd& v1, double duration)
    : q0_(q0), v0_(v0), q1_(q1), v1_(v1), duration_(duration) {
  if (q0.size() != v0.size() || q0.size() != q1.size() || q0.size() != v1.size()) {
    throw std::invalid_argument("CubicHermite: boundary sizes mismatch");
  }
  if (duration <= 0.0) {
    throw std::invalid_argument("CubicHermite: duration must be positive");
  }
}

Eigen::VectorXd CubicHermite::position(double t) const {
  const double u = std::clamp(t / duration_, 0.0, 1.0);
  const double u2 = u * u, u3 = u2 * u;
  const double cx0 = 2.0 * u3 - 3.0 * u2 + 1.0;
  const double cv0 = duration_ * (u3 - 2.0 * u2 + u);
  const double cx1 = -2.0 * u3 + 3.0 * u2;
  const double cv1 = duration_ * (u3 - u2);
  return cx0 * q0_ + cv0 * v0_ + cx1 * q1_ + cv1 * v1_;
}

Eigen::VectorXd CubicHermite::velocity(double t) const {
  const double u = std::clamp(t / duration_, 0.0, 1.0);
  const double u2 = u * u;
  const double dx0 = (6.0 * u2 - 6.0 * u) / duration_;
  const double dv0 = 3.0 * u2 - 4.0 * u + 1.0;
  const double dx1 = (6.0 * u - 6.0 * u2) / duration_;
  const double dv1 = 3.0 * u2 - 2.0 * u;
  return dx0 * q0_ + dv0 * v0_ + dx1 * q1_ + dv1 * v1_;
}

}  // namespace safecor
