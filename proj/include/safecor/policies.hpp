#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace safecor {

/// What a policy is allowed to see. Policies must not touch the environment
/// or the corrector directly.
struct Observation {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::Vector3d peg_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d goal_center = Eigen::Vector3d::Zero();
  double time = 0.0;
};

struct Action {
  Eigen::VectorXd joint_delta;  // rad, relative to the observed position
  bool gripper_open = false;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs) = 0;
  virtual void reset(uint64_t /*seed*/) {}
};

/// Proportional pull toward a fixed goal configuration: the remaining error
/// when its norm is below `saturation`, otherwise a vector of that magnitude
/// along it. Stands in for a trained reaching policy.
std::unique_ptr<Policy> make_greedy(const Eigen::VectorXd& q_goal, double saturation = 1.0);

/// Greedy pull through a sequence of joint-space targets: advances to the
/// next target once within `advance_tol` of the current one and holds the
/// last. Stands in for a trained task policy that knows the route but not
/// the safety margins.
std::unique_ptr<Policy> make_waypoint(std::vector<Eigen::VectorXd> targets,
                                      double saturation = 1.0, double advance_tol = 0.05);

/// Replays a recorded action sequence, then zeros.
std::unique_ptr<Policy> make_replay(std::vector<Eigen::VectorXd> trace);

/// Seeded uniform noise in [-magnitude, magnitude] per joint.
std::unique_ptr<Policy> make_random(int dof, uint64_t seed, double magnitude);

}  // namespace safecor
