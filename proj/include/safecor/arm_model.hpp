#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "safecor/pose.hpp"
#include "safecor/shapes.hpp"

namespace safecor {

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

/// One revolute joint: fixed offset transform from the parent joint frame,
/// then a rotation of q about `axis` (unit vector in the post-offset frame).
struct LinkSpec {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Pose offset;
};

/// Collision primitive rigidly attached to a link frame.
struct CollisionBody {
  int link = 0;          // index into ArmModel::links
  Primitive shape;
  Pose local_pose;       // body frame expressed in the link frame
  std::string name;      // unique within the model, used in proximity reports
};

/// Serial revolute arm. Link frame i is the frame that rotates with joint i;
/// bodies on link i are expressed in that frame.
struct ArmModel {
  int dof = 0;
  std::vector<LinkSpec> links;
  Pose tool;             // end-effector offset from the last link frame
  Eigen::VectorXd q_min, q_max;     // rad, closed intervals
  Eigen::VectorXd qdot_max;         // rad/s, symmetric bounds
  std::vector<CollisionBody> collision_bodies;
  std::string name;

  /// Throws std::runtime_error naming the offending field when sizes or
  /// orderings are inconsistent.
  void validate() const;
};

struct FkResult {
  std::vector<Pose> link_poses;  // world pose of each link frame
  Pose end_effector;
};

struct LimitViolation {
  enum class Kind { Position, Velocity };
  Kind kind;
  int joint;
  double magnitude;  // distance beyond the violated bound, > 0
};

struct LimitReport {
  std::vector<LimitViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Pose of every link frame plus the end effector at configuration q.
FkResult forward_kinematics(const ArmModel& model, const Eigen::VectorXd& q);

/// 3 x dof positional Jacobian of a world-space point rigidly attached to
/// link `link_index`; columns for joints beyond that link are zero.
Eigen::MatrixXd jacobian(const ArmModel& model, const Eigen::VectorXd& q,
                         const Eigen::Vector3d& point_world, int link_index);

/// Closed-interval limit check: a value exactly at a bound is legal.
LimitReport check_joint_limits(const ArmModel& model, const JointState& state);

/// World pose of one collision body at configuration described by fk.
Pose body_world_pose(const FkResult& fk, const CollisionBody& body);

ArmModel load_arm(const std::string& path);
ArmModel load_arm_json(const std::string& json_text, const std::string& origin);

}  // namespace safecor
