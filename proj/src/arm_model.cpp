#include "safecor/arm_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json_parse.hpp"

namespace safecor {

using detail::json;

void ArmModel::validate() const {
  auto fail = [this](const std::string& what) {
    throw std::runtime_error("arm model '" + name + "': " + what);
  };
  if (dof <= 0) fail("dof must be positive");
  if (static_cast<int>(links.size()) != dof) fail("links must have exactly dof entries");
  if (q_min.size() != dof) fail("q_min must have dof entries");
  if (q_max.size() != dof) fail("q_max must have dof entries");
  if (qdot_max.size() != dof) fail("qdot_max must have dof entries");
  for (int i = 0; i < dof; ++i) {
    if (q_min[i] > q_max[i]) {
      fail("q_min[" + std::to_string(i) + "] exceeds q_max[" + std::to_string(i) + "]");
    }
    if (qdot_max[i] <= 0.0) fail("qdot_max[" + std::to_string(i) + "] must be positive");
    if (std::abs(links[i].axis.norm() - 1.0) > 1e-9) {
      fail("links[" + std::to_string(i) + "].axis must be a unit vector");
    }
  }
  std::set<std::string> names;
  for (const auto& body : collision_bodies) {
    if (body.link < 0 || body.link >= dof) {
      fail("collision body '" + body.name + "' references invalid link " +
           std::to_string(body.link));
    }
    if (!names.insert(body.name).second) {
      fail("duplicate collision body name '" + body.name + "'");
    }
  }
}

FkResult forward_kinematics(const ArmModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof) {
    throw std::invalid_argument("forward_kinematics: q has " + std::to_string(q.size()) +
                                " entries, model has dof " + std::to_string(model.dof));
  }
  FkResult out;
  out.link_poses.reserve(model.dof);
  Pose frame;  // world
  for (int i = 0; i < model.dof; ++i) {
    frame = frame * model.links[i].offset * Pose::FromAxisAngle(model.links[i].axis, q[i]);
    out.link_poses.push_back(frame);
  }
  out.end_effector = frame * model.tool;
  return out;
}

Eigen::MatrixXd jacobian(const ArmModel& model, const Eigen::VectorXd& q,
                         const Eigen::Vector3d& point_world, int link_index) {
  if (link_index < 0 || link_index >= model.dof) {
    throw std::invalid_argument("jacobian: link index " + std::to_string(link_index) +
                                " out of range");
  }
  if (q.size() != model.dof) {
    throw std::invalid_argument("jacobian: q size mismatch");
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, model.dof);
  Pose frame;  // frame *before* applying joint i's rotation
  for (int i = 0; i <= link_index; ++i) {
    frame = frame * model.links[i].offset;
    const Eigen::Vector3d axis_world = frame.rotate(model.links[i].axis);
    J.col(i) = axis_world.cross(point_world - frame.position);
    frame = frame * Pose::FromAxisAngle(model.links[i].axis, q[i]);
  }
  return J;
}

LimitReport check_joint_limits(const ArmModel& model, const JointState& state) {
  if (state.q.size() != model.dof || (state.qdot.size() != 0 && state.qdot.size() != model.dof)) {
    throw std::invalid_argument("check_joint_limits: state size mismatch");
  }
  LimitReport report;
  for (int i = 0; i < model.dof; ++i) {
    if (state.q[i] < model.q_min[i]) {
      report.violations.push_back(
          {LimitViolation::Kind::Position, i, model.q_min[i] - state.q[i]});
    } else if (state.q[i] > model.q_max[i]) {
      report.violations.push_back(
          {LimitViolation::Kind::Position, i, state.q[i] - model.q_max[i]});
    }
  }
  for (int i = 0; i < state.qdot.size(); ++i) {
    const double over = std::abs(state.qdot[i]) - model.qdot_max[i];
    if (over > 0.0) {
      report.violations.push_back({LimitViolation::Kind::Velocity, i, over});
    }
  }
  return report;
}

Pose body_world_pose(const FkResult& fk, const CollisionBody& body) {
  return fk.link_poses[body.link] * body.local_pose;
}

ArmModel load_arm_json(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("arm file '" + origin + "': " + e.what());
  }
  ArmModel model;
  try {
    model.name = j.value("name", origin);
    model.dof = j.at("dof").get<int>();
    for (const auto& link : j.at("links")) {
      LinkSpec spec;
      spec.axis = detail::parse_vec3(link.at("axis"), "links.axis").normalized();
      if (link.contains("offset")) {
        spec.offset = detail::parse_pose(link["offset"], "links.offset");
      }
      model.links.push_back(spec);
    }
    if (j.contains("tool")) model.tool = detail::parse_pose(j["tool"], "tool");
    model.q_min = detail::parse_vec(j.at("q_min"), "q_min", model.dof);
    model.q_max = detail::parse_vec(j.at("q_max"), "q_max", model.dof);
    model.qdot_max = detail::parse_vec(j.at("qdot_max"), "qdot_max", model.dof);
    int auto_id = 0;
    for (const auto& body : j.value("collision_bodies", json::array())) {
      CollisionBody cb;
      cb.link = body.at("link").get<int>();
      cb.shape = detail::parse_primitive(body.at("shape"), "collision_bodies.shape");
      if (body.contains("pose")) {
        cb.local_pose = detail::parse_pose(body["pose"], "collision_bodies.pose");
      }
      cb.name = body.value("name", "body" + std::to_string(auto_id));
      ++auto_id;
      model.collision_bodies.push_back(cb);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("arm file '" + origin + "': " + e.what());
  }
  model.validate();
  return model;
}

ArmModel load_arm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("arm file '" + path + "': cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_arm_json(ss.str(), path);
}

}  // namespace safecor
