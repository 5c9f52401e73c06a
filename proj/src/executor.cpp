#include "safecor/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "safecor/rng.hpp"

namespace safecor {

int select_n(int m, const NRule& rule) {
  if (m <= 0) throw std::invalid_argument("select_n: m must be positive");
  if (rule.kind == NRule::Kind::Formula) {
    return (m + 1) / 2;  // ceil(m/2)
  }
  if (rule.fixed <= 0) throw std::invalid_argument("select_n: fixed n must be positive");
  return std::min(rule.fixed, m);
}

Eigen::VectorXd clip_action(const Eigen::VectorXd& delta, double limit) {
  if (limit < 0.0) throw std::invalid_argument("clip_action: limit must be non-negative");
  return delta.cwiseMax(-limit).cwiseMin(limit);
}

Eigen::VectorXd select_failsafe(const FailsafeBank& bank, const ArmModel& model,
                                const Eigen::VectorXd& q_current, bool near_collision) {
  if (!near_collision) return q_current;
  const FkResult fk = forward_kinematics(model, q_current);
  const double lateral = fk.end_effector.position.y();
  const double third = bank.table_width / 6.0;
  if (lateral > third) return bank.left;
  if (lateral < -third) return bank.right;
  return bank.center;  // boundary values land here
}

void validate_failsafe_bank(const FailsafeBank& bank, const ArmModel& model, const Scene& scene,
                            double d_coll_buff) {
  if (bank.table_width <= 0.0) {
    throw std::runtime_error("failsafe bank: table_width must be positive");
  }
  const struct {
    const char* name;
    const Eigen::VectorXd& q;
  } presets[] = {{"left", bank.left}, {"center", bank.center}, {"right", bank.right}};
  for (const auto& preset : presets) {
    if (preset.q.size() != model.dof) {
      throw std::runtime_error(std::string("failsafe bank: preset '") + preset.name +
                               "' size must match the model dof");
    }
    if (!check_joint_limits(model, {preset.q, Eigen::VectorXd()}).ok()) {
      throw std::runtime_error(std::string("failsafe bank: preset '") + preset.name +
                               "' violates joint limits");
    }
    const double clearance = std::min(min_robot_env_distance(model, preset.q, scene).distance,
                                      min_self_distance(model, preset.q).distance);
    if (clearance < 2.0 * d_coll_buff) {
      throw std::runtime_error(std::string("failsafe bank: preset '") + preset.name +
                               "' clears the scene by less than twice the buffer");
    }
  }
}

EpisodeRecord run_episode(SimEnv& env, Policy& policy, const Corrector* corrector,
                          const ExecutorParams& params, uint64_t seed, int episode_index) {
  EpisodeRecord rec;
  rec.episode = episode_index;
  const ArmModel& model = env.model();

  try {
    EnvObservation eobs = env.reset(seed);
    policy.reset(Rng::mix(seed, 0x70715EEDull));
    rec.min_proximity = eobs.substep_min_distance;
    rec.proximity_trace.push_back(eobs.substep_min_distance);

    const bool corrected = params.corrector_enabled && corrector != nullptr;
    const double buffer = corrected ? corrector->params().d_coll_buff : 0.0;
    const double near_threshold = buffer + params.proximity_margin;

    Eigen::VectorXd q_last_safe =
        select_failsafe(params.failsafe, model, eobs.obs.q, eobs.min_distance < near_threshold);

    // Metrics cover the continuous rollout (substep minima); the algorithm's
    // own near-collision checks below use the exact distance at the observed
    // configuration, as the re-observation loop prescribes.
    auto track = [&](const EnvObservation& o) {
      rec.min_proximity = std::min(rec.min_proximity, o.substep_min_distance);
      rec.proximity_trace.push_back(o.substep_min_distance);
      ++rec.env_steps;
    };

    while (!eobs.done && rec.policy_queries < params.max_policy_queries) {
      const Action action = policy.act(eobs.obs);
      ++rec.policy_queries;

      if (!corrected) {
        // Baseline: the clipped policy action goes straight to the plant.
        // The clip bounds the action space itself, corrector or not.
        eobs = env.step(eobs.obs.q + clip_action(action.joint_delta, params.action_clip));
        track(eobs);
        continue;
      }

      const Eigen::VectorXd q1 =
          eobs.obs.q + clip_action(action.joint_delta, params.action_clip);
      const auto t0 = std::chrono::steady_clock::now();
      CorrectedTrajectory traj;
      bool corrector_failed = false;
      try {
        traj = corrector->correct(eobs.obs.q, eobs.obs.qdot, q1,
                                  Eigen::VectorXd::Zero(model.dof), q_last_safe);
      } catch (const std::exception&) {
        corrector_failed = true;
      }
      rec.corrector_cpu_s +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ++rec.corrector_calls;

      if (corrector_failed) {
        // Hold for one cycle and engage the failsafe on the next.
        eobs = env.step(eobs.obs.q);
        track(eobs);
        q_last_safe = select_failsafe(params.failsafe, model, eobs.obs.q, true);
        continue;
      }

      // Point 0 is the current state; executing it would hold in place for a
      // cycle. n points of actual motion start at index 1.
      const int m = static_cast<int>(traj.points.size());
      const int n = std::min(select_n(m, params.n_rule), m - 1);
      for (int i = 1; i <= n && !eobs.done; ++i) {
        const EnvObservation& cur = env.observe();  // re-observe before each point
        const Eigen::VectorXd corrected_delta = traj.points[i].q - cur.obs.q;
        eobs = env.step(cur.obs.q + corrected_delta);
        track(eobs);
        const bool near = eobs.min_distance < near_threshold;
        q_last_safe = select_failsafe(params.failsafe, model, eobs.obs.q, near);
        if (near) break;  // stop consuming stale points; replan from fresh state
      }
    }

    rec.success = eobs.success;
    rec.collided = eobs.collided;
    rec.sim_time_s = env.time();
  } catch (const std::exception& e) {
    rec.error = true;
    rec.error_message = e.what();
  }
  return rec;
}

}  // namespace safecor
