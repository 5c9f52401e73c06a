#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "safecor/corrector.hpp"
#include "safecor/policies.hpp"
#include "safecor/sim_env.hpp"

namespace safecor {

/// How many of the m corrected points are executed before the policy is
/// queried again: the ceil(m/2) formula, or a fixed count capped at m.
struct NRule {
  enum class Kind { Formula, Fixed };
  Kind kind = Kind::Formula;
  int fixed = 0;

  static NRule Formula() { return NRule{Kind::Formula, 0}; }
  static NRule Fixed(int n) { return NRule{Kind::Fixed, n}; }
};

int select_n(int m, const NRule& rule);

/// Clamp every component of a policy action to [-limit, limit].
Eigen::VectorXd clip_action(const Eigen::VectorXd& delta, double limit);

/// Safe retreat configurations, one per table third (divided across the
/// table width), plus the width used to classify the gripper position.
struct FailsafeBank {
  Eigen::VectorXd left, center, right;
  double table_width = 1.2;  // m, thirds split at +/- width/6
};

/// near_collision=false: the current position is the freshest safe pose.
/// Otherwise pick the bank preset for the table third under the gripper
/// (boundary values resolve to center).
Eigen::VectorXd select_failsafe(const FailsafeBank& bank, const ArmModel& model,
                                const Eigen::VectorXd& q_current, bool near_collision);

/// Throws std::runtime_error if any bank preset violates limits or clears the
/// scene by less than 2x the buffer.
void validate_failsafe_bank(const FailsafeBank& bank, const ArmModel& model,
                            const Scene& scene, double d_coll_buff);

struct ExecutorParams {
  double action_clip = 0.2;        // rad, per joint
  NRule n_rule = NRule::Formula();
  double proximity_margin = 0.005; // early-stop at buffer + margin, m
  int max_policy_queries = 200;
  bool corrector_enabled = true;
  FailsafeBank failsafe;
};

struct EpisodeRecord {
  int episode = 0;
  bool collided = false;
  bool success = false;
  double min_proximity = 0.0;      // min over every observation, m
  int policy_queries = 0;
  int env_steps = 0;
  int corrector_calls = 0;
  double sim_time_s = 0.0;         // simulated episode duration (deterministic)
  double corrector_cpu_s = 0.0;    // measured, informational only
  bool error = false;
  std::string error_message;
  std::vector<double> proximity_trace;  // observed min distance after reset and each step

  double mean_corrector_time() const {
    return corrector_calls > 0 ? corrector_cpu_s / corrector_calls : 0.0;
  }
};

/// One safety-corrected episode: observe, query the policy, correct the
/// requested step, execute the first n corrected points with re-observation
/// and early stop, repeat until done or the query budget runs out. With the
/// corrector disabled, raw policy actions go straight to the environment.
EpisodeRecord run_episode(SimEnv& env, Policy& policy, const Corrector* corrector,
                          const ExecutorParams& params, uint64_t seed, int episode_index);

}  // namespace safecor
