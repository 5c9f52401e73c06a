#pragma once

#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "safecor/arm_model.hpp"
#include "safecor/pose.hpp"
#include "safecor/shapes.hpp"

namespace safecor {

struct Obstacle {
  Primitive shape;
  Pose pose;
  std::string label;
};

struct GoalRegion {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return ((p - center).cwiseAbs().array() <= half_extents.array()).all();
  }
};

/// Static workspace: obstacles, the table surface and the task goal region.
/// Labels listed in non_colliding_labels (e.g. the object being reached for)
/// are skipped by robot-environment distance queries.
struct Scene {
  std::vector<Obstacle> obstacles;
  HalfSpace table;
  GoalRegion goal_region;
  std::set<std::string> non_colliding_labels;
  std::string name;
};

/// Result of one signed distance query. `distance` is negative when the
/// shapes penetrate. When distance >= 0 the witness points realize it:
/// |witness_a - witness_b| == distance. `direction` is the unit vector from
/// the b-side witness toward the a-side witness, derived from the pair's core
/// geometry (center line, segment closest points, face normal) so it stays
/// well defined when the surfaces touch; `degenerate` is set when even the
/// core geometry is ambiguous (a fixed +z is used then).
struct ProximityReport {
  double distance = std::numeric_limits<double>::infinity();
  Eigen::Vector3d witness_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d witness_b = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  std::string body_a, body_b;
  int link_a = -1;  // robot link carrying side a, -1 if static
  int link_b = -1;
  bool degenerate = false;
};

struct DistanceGradient {
  Eigen::VectorXd d_dq;
  bool degenerate = false;
};

/// Signed distance between two posed primitives. Exact for every supported
/// pair except penetrating capsule/box, where the reported value is a
/// conservative (never optimistic) lower bound. Unsupported combinations
/// (box/box, anything/halfspace-halfspace) throw std::runtime_error.
ProximityReport primitive_distance(const Primitive& a, const Pose& pose_a,
                                   const Primitive& b, const Pose& pose_b);

/// Minimum distance between any robot collision body and the scene
/// (obstacles not excluded by label, plus the table).
ProximityReport min_robot_env_distance(const ArmModel& model, const Eigen::VectorXd& q,
                                       const Scene& scene);

/// Minimum distance between robot bodies on non-adjacent links. Links i and
/// i+1 share a joint and are exempt. Returns an infinite-distance report when
/// no candidate pair exists.
ProximityReport min_self_distance(const ArmModel& model, const Eigen::VectorXd& q);

/// Every robot-environment and self pair closer than `radius`, for building
/// the correction constraint set. Distances are computed with the same
/// routines as the min queries.
std::vector<ProximityReport> proximity_pairs(const ArmModel& model, const Eigen::VectorXd& q,
                                             const Scene& scene, double radius);

/// d(distance)/dq for the pair captured in `report`, evaluated at q. Uses the
/// report's witness points and direction: rows are direction^T J(witness).
DistanceGradient distance_gradient(const ArmModel& model, const Eigen::VectorXd& q,
                                   const ProximityReport& report);

Scene load_scene(const std::string& path);
Scene load_scene_json(const std::string& json_text, const std::string& origin);

}  // namespace safecor
