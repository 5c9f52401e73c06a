#include "safecor/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "safecor/rng.hpp"

namespace safecor {

Eigen::VectorXd pd_torque(const ControllerGains& gains, const Eigen::VectorXd& q_des,
                          const JointState& state) {
  if (q_des.size() != state.q.size() || state.qdot.size() != state.q.size()) {
    throw std::invalid_argument("pd_torque: dimension mismatch");
  }
  return (gains.kp * (q_des - state.q) - gains.kd * state.qdot)
      .cwiseMax(-gains.tau_max)
      .cwiseMin(gains.tau_max);
}

RewardBreakdown reward(const Eigen::Vector3d& peg, const Eigen::Vector3d& object,
                       double gripper_y, double object_y, bool gripper_open) {
  RewardBreakdown r;
  r.reach = 1.0 - std::tanh(10.0 * (peg - object).norm());
  r.y_align = 1.0 - std::tanh(10.0 * std::abs(gripper_y - object_y));
  r.gripper = gripper_open ? -100.0 : 0.0;
  r.total = r.reach + 0.5 * r.y_align + r.gripper;
  return r;
}

bool is_success(const RewardBreakdown& r, const Eigen::Vector3d& peg, const GoalRegion& goal) {
  constexpr double kMaxReward = 1.5;  // reach + 0.5 * y_align, gripper closed
  return r.total >= 0.975 * kMaxReward || goal.contains(peg);
}

SimEnv::SimEnv(const ArmModel& model, const Scene& scene, const Eigen::VectorXd& start_pose,
               const EnvParams& params)
    : model_(model), scene_(scene), start_pose_(start_pose), params_(params) {
  if (start_pose_.size() != model_.dof) {
    throw std::invalid_argument("SimEnv: start pose size must match the model dof");
  }
  const LimitReport lims = check_joint_limits(model_, {start_pose_, Eigen::VectorXd()});
  if (!lims.ok()) {
    throw std::invalid_argument("SimEnv: start pose violates joint limits");
  }
  q_ = start_pose_;
  qdot_ = Eigen::VectorXd::Zero(model_.dof);
  cached_ = make_observation();
}

EnvObservation SimEnv::make_observation() {
  EnvObservation o;
  const FkResult fk = forward_kinematics(model_, q_);
  o.obs.q = q_;
  o.obs.qdot = qdot_;
  o.obs.peg_position = fk.end_effector.position;  // the peg rides on the tool point
  o.obs.goal_center = scene_.goal_region.center;
  o.obs.time = time_;
  o.min_env_distance = min_robot_env_distance(model_, q_, scene_).distance;
  o.min_self_distance = min_self_distance(model_, q_).distance;
  o.min_distance = std::min(o.min_env_distance, o.min_self_distance);
  o.substep_min_distance = o.min_distance;
  o.reward = reward(o.obs.peg_position, scene_.goal_region.center,
                    fk.end_effector.position.y(), scene_.goal_region.center.y(),
                    params_.gripper_open);
  o.success = is_success(o.reward, o.obs.peg_position, scene_.goal_region);
  o.collided = o.min_distance < 0.0;
  o.done = o.success || o.collided;
  return o;
}

EnvObservation SimEnv::reset(uint64_t seed) {
  for (int attempt = 0; attempt < params_.max_reset_attempts; ++attempt) {
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(attempt)));
    Eigen::VectorXd q = start_pose_;
    for (int i = 0; i < model_.dof; ++i) {
      q[i] += rng.uniform(-params_.start_perturbation, params_.start_perturbation);
      q[i] = std::clamp(q[i], model_.q_min[i], model_.q_max[i]);
    }
    q_ = q;
    qdot_ = Eigen::VectorXd::Zero(model_.dof);
    time_ = 0.0;
    steps_ = 0;
    done_ = false;
    cached_ = make_observation();
    if (cached_.min_distance >= params_.reset_clearance && !cached_.done) {
      return cached_;
    }
  }
  throw std::runtime_error("SimEnv::reset: no clear start found after " +
                           std::to_string(params_.max_reset_attempts) + " attempts");
}

EnvObservation SimEnv::step(const Eigen::VectorXd& q_command) {
  if (done_) {
    throw std::logic_error("SimEnv::step called after the episode finished");
  }
  if (q_command.size() != model_.dof) {
    throw std::invalid_argument("SimEnv::step: command size mismatch");
  }
  // Distances are checked at every substep, not just at command boundaries:
  // contact in between must end the episode, and the reported minimum must
  // cover the whole motion.
  const double h = params_.plant.command_dt / params_.plant.substeps;
  double min_sub = std::numeric_limits<double>::infinity();
  int done_substeps = 0;
  for (int s = 0; s < params_.plant.substeps; ++s) {
    const Eigen::VectorXd tau_cmd = pd_torque(params_.gains, q_command, {q_, qdot_});
    for (int i = 0; i < model_.dof; ++i) {
      const double qddot =
          (tau_cmd[i] - params_.plant.damping * qdot_[i]) / params_.plant.inertia;
      qdot_[i] += h * qddot;   // semi-implicit: velocity first
      q_[i] += h * qdot_[i];
      // hard joint stops
      if (q_[i] < model_.q_min[i]) {
        q_[i] = model_.q_min[i];
        qdot_[i] = std::max(qdot_[i], 0.0);
      } else if (q_[i] > model_.q_max[i]) {
        q_[i] = model_.q_max[i];
        qdot_[i] = std::min(qdot_[i], 0.0);
      }
    }
    ++done_substeps;
    const double d = std::min(min_robot_env_distance(model_, q_, scene_).distance,
                              min_self_distance(model_, q_).distance);
    min_sub = std::min(min_sub, d);
    if (d < 0.0) break;  // contact: freeze the plant where it hit
  }
  time_ += done_substeps * h;
  ++steps_;
  cached_ = make_observation();
  cached_.substep_min_distance = std::min(cached_.min_distance, min_sub);
  cached_.collided = cached_.substep_min_distance < 0.0;
  if (cached_.collided) cached_.success = false;  // contact trumps reaching the goal
  cached_.done = cached_.success || cached_.collided;
  done_ = cached_.done;
  return cached_;
}

}  // namespace safecor
