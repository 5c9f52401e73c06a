#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "safecor/arm_model.hpp"
#include "safecor/geometry.hpp"
#include "safecor/policies.hpp"

namespace safecor {

struct ControllerGains {
  double kp = 50.0;
  double kd = 0.25;
  double tau_max = 20.0;  // saturation, N m
};

/// Per-joint double integrator driven by the PD controller:
///   qddot = (tau - damping * qdot) / inertia
/// integrated semi-implicitly with `substeps` steps per env command.
struct PlantParams {
  double inertia = 0.01;    // kg m^2
  double damping = 1.25;    // N m s
  int substeps = 25;
  double command_dt = 0.05; // seconds of simulated time per env command
};

struct RewardBreakdown {
  double reach = 0.0;
  double y_align = 0.0;
  double gripper = 0.0;
  double total = 0.0;
};

/// PD joint position control law: tau = kp (q_des - q) - kd qdot, saturated
/// elementwise at +/- tau_max. The plant recomputes this every substep.
Eigen::VectorXd pd_torque(const ControllerGains& gains, const Eigen::VectorXd& q_des,
                          const JointState& state);

/// Dense reaching reward: reach and lateral-alignment terms saturate with
/// tanh, an open gripper is heavily penalized. Maximum attainable total with
/// the gripper closed is 1.5.
RewardBreakdown reward(const Eigen::Vector3d& peg, const Eigen::Vector3d& object,
                       double gripper_y, double object_y, bool gripper_open);

/// Success when the reward reaches 97.5% of its maximum or the peg sits
/// inside the goal region box.
bool is_success(const RewardBreakdown& r, const Eigen::Vector3d& peg, const GoalRegion& goal);

struct EnvObservation {
  Observation obs;            // the policy-facing view
  double min_env_distance = 0.0;   // exact robot-scene clearance, m
  double min_self_distance = 0.0;  // exact non-adjacent self clearance, m
  double min_distance = 0.0;       // min of the two, exactly at obs.q
  // Minimum clearance over every physics substep of the last command; the
  // collision verdict and episode metrics come from this channel so motion
  // between command boundaries is never missed. Equals min_distance at rest.
  double substep_min_distance = 0.0;
  RewardBreakdown reward;
  bool done = false;
  bool collided = false;
  bool success = false;
};

struct EnvParams {
  ControllerGains gains;
  PlantParams plant;
  double start_perturbation = 0.05;  // uniform joint noise on reset, rad
  double reset_clearance = 0.02;     // resampled starts must clear this, m
  int max_reset_attempts = 100;
  bool gripper_open = false;         // scripted gripper state for the carry task
};

/// Simulated arm workspace. Commands are absolute joint position targets; a
/// command advances the plant by command_dt seconds. The episode ends on
/// success or on a real collision (exact distance < 0).
class SimEnv {
 public:
  SimEnv(const ArmModel& model, const Scene& scene, const Eigen::VectorXd& start_pose,
         const EnvParams& params = {});

  /// Perturbs the start pose with seeded uniform noise, resampling starts
  /// that violate the clearance; throws std::runtime_error when
  /// max_reset_attempts all fail.
  EnvObservation reset(uint64_t seed);

  /// Throws std::logic_error if called after done.
  EnvObservation step(const Eigen::VectorXd& q_command);

  /// Current cached observation (no state change).
  const EnvObservation& observe() const { return cached_; }

  double time() const { return time_; }
  int steps_taken() const { return steps_; }
  const ArmModel& model() const { return model_; }
  const Scene& scene() const { return scene_; }

 private:
  EnvObservation make_observation();

  const ArmModel& model_;
  const Scene& scene_;
  Eigen::VectorXd start_pose_;
  EnvParams params_;

  Eigen::VectorXd q_, qdot_;
  double time_ = 0.0;
  int steps_ = 0;
  bool done_ = false;
  EnvObservation cached_;
};

}  // namespace safecor
