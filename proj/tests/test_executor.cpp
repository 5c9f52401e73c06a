// Execution loop building blocks (n selection, clipping, failsafe bank) and
// whole corrected/baseline episodes.

#include <cstdio>

#include "safecor/executor.hpp"
#include "safecor/harness.hpp"
#include "test_util.hpp"

using namespace safecor;

namespace {

void test_select_n() {
  CHECK(select_n(11, NRule::Formula()) == 6);  // ceil(11/2)
  CHECK(select_n(10, NRule::Formula()) == 5);
  CHECK(select_n(1, NRule::Formula()) == 1);
  CHECK(select_n(11, NRule::Fixed(7)) == 7);
  CHECK(select_n(11, NRule::Fixed(20)) == 11);  // capped at m
  CHECK(select_n(11, NRule::Fixed(11)) == 11);
  CHECK_THROWS(select_n(0, NRule::Formula()), std::invalid_argument);
  CHECK_THROWS(select_n(11, NRule::Fixed(0)), std::invalid_argument);
}

void test_clip_action() {
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK_NEAR(clip_action(one, 0.2)[0], 0.2, 1e-15);
  one << -0.05;
  CHECK_NEAR(clip_action(one, 0.2)[0], -0.05, 1e-15);
  Eigen::VectorXd v(3);
  v << 0.3, -0.3, 0.1;
  const Eigen::VectorXd clipped = clip_action(v, 0.2);
  CHECK_NEAR(clipped[0], 0.2, 1e-15);
  CHECK_NEAR(clipped[1], -0.2, 1e-15);
  CHECK_NEAR(clipped[2], 0.1, 1e-15);
  CHECK_THROWS(clip_action(v, -0.1), std::invalid_argument);
}

void test_select_failsafe() {
  const ArmModel arm = testutil::default_arm();
  FailsafeBank bank;
  bank.left = Eigen::Vector3d(1.0, 0.0, 0.0);
  bank.center = Eigen::Vector3d(2.0, 0.0, 0.0);
  bank.right = Eigen::Vector3d(3.0, 0.0, 0.0);

  Eigen::VectorXd q(3);
  q << 0.123, 0.456, 0.789;
  // Not near a collision: the freshest safe pose is the current one.
  CHECK(testutil::eq(select_failsafe(bank, arm, q, false), q));

  // Bent arm yawed left/right puts the gripper in the outer thirds.
  Eigen::VectorXd left_q(3), right_q(3), center_q(3);
  left_q << M_PI / 2.0, 0.5, 0.0;    // EE y ~ +0.36 > 0.2
  right_q << -M_PI / 2.0, 0.5, 0.0;  // EE y ~ -0.36 < -0.2
  center_q << 0.0, 0.5, 0.0;         // EE y = 0
  CHECK(testutil::eq(select_failsafe(bank, arm, left_q, true), bank.left));
  CHECK(testutil::eq(select_failsafe(bank, arm, right_q, true), bank.right));
  CHECK(testutil::eq(select_failsafe(bank, arm, center_q, true), bank.center));
  // The home pose rides the boundary axis (y exactly 0): center.
  CHECK(testutil::eq(select_failsafe(bank, arm, Eigen::VectorXd::Zero(3), true), bank.center));
}

void test_validate_failsafe_bank() {
  const ArmModel arm = testutil::default_arm();
  const ScenarioConfig cfg = load_config(testutil::asset("configs/middle.json"));
  const Scene scene = load_scene(cfg.scene_file);

  // The shipped bank is valid for the shipped scene.
  validate_failsafe_bank(cfg.executor.failsafe, arm, scene, cfg.corrector.d_coll_buff);

  // A preset leaning into the table clears less than 2x the buffer.
  FailsafeBank close = cfg.executor.failsafe;
  Eigen::VectorXd lean(3);
  lean << 0.0, 1.9, 0.0;
  close.center = testutil::bisect_to_clearance(arm, scene, Eigen::VectorXd::Zero(3), lean,
                                               1.5 * cfg.corrector.d_coll_buff);
  bool threw = false;
  try {
    validate_failsafe_bank(close, arm, scene, cfg.corrector.d_coll_buff);
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK_MSG(std::string(e.what()).find("center") != std::string::npos,
              "error should name the preset: %s", e.what());
  }
  CHECK(threw);

  FailsafeBank bad_size = cfg.executor.failsafe;
  bad_size.left = Eigen::VectorXd::Zero(5);
  CHECK_THROWS(validate_failsafe_bank(bad_size, arm, scene, cfg.corrector.d_coll_buff),
               std::runtime_error);

  FailsafeBank bad_width = cfg.executor.failsafe;
  bad_width.table_width = 0.0;
  CHECK_THROWS(validate_failsafe_bank(bad_width, arm, scene, cfg.corrector.d_coll_buff),
               std::runtime_error);
}

void test_zero_policy_episode_and_n_semantics() {
  const ArmModel arm = testutil::default_arm();
  Scene scene;
  scene.name = "table_only";
  const Corrector corrector(arm, scene, {});

  // n = ceil(m/2) = 6 corrected points execute per policy query.
  {
    SimEnv env(arm, scene, Eigen::VectorXd::Zero(3));
    auto policy = make_replay({});  // always zero action
    ExecutorParams params;
    params.max_policy_queries = 10;
    const EpisodeRecord rec = run_episode(env, *policy, &corrector, params, 5, 0);
    CHECK(!rec.error);
    CHECK(!rec.collided);
    CHECK(!rec.success);  // holding still reaches nothing
    CHECK(rec.policy_queries == 10);
    CHECK(rec.env_steps == 60);
    CHECK(rec.corrector_calls == 10);
    CHECK_NEAR(rec.sim_time_s, 60 * 0.05, 1e-9);
    CHECK_NEAR(rec.min_proximity, 0.035, 1e-9);  // base hub over the table, held
    CHECK(rec.proximity_trace.size() == 61);     // reset observation + each step
    CHECK(rec.mean_corrector_time() > 0.0);
  }

  // A fixed n = 1 executes exactly one point per query.
  {
    SimEnv env(arm, scene, Eigen::VectorXd::Zero(3));
    auto policy = make_replay({});
    ExecutorParams params;
    params.max_policy_queries = 5;
    params.n_rule = NRule::Fixed(1);
    const EpisodeRecord rec = run_episode(env, *policy, &corrector, params, 5, 0);
    CHECK(rec.policy_queries == 5);
    CHECK(rec.env_steps == 5);
  }
}

void test_baseline_record_has_no_corrector_cost() {
  const ArmModel arm = testutil::default_arm();
  Scene scene;
  scene.name = "table_only";
  SimEnv env(arm, scene, Eigen::VectorXd::Zero(3));
  auto policy = make_replay({});
  ExecutorParams params;
  params.max_policy_queries = 3;
  params.corrector_enabled = false;
  const EpisodeRecord rec = run_episode(env, *policy, nullptr, params, 1, 4);
  CHECK(rec.episode == 4);
  CHECK(rec.corrector_calls == 0);
  CHECK(rec.mean_corrector_time() == 0.0);
  CHECK(rec.env_steps == 3);  // one raw step per query
}

void test_corrected_middle_episodes_stay_safe() {
  const ScenarioConfig cfg = load_config(testutil::asset("configs/middle.json"));
  const ArmModel arm = load_arm(cfg.arm_file);
  const Scene scene = load_scene(cfg.scene_file);
  const Corrector corrector(arm, scene, cfg.corrector);
  for (int i = 0; i < 3; ++i) {
    SimEnv env(arm, scene, cfg.start_pose, cfg.env);
    std::vector<Eigen::VectorXd> targets = cfg.waypoints;
    targets.push_back(cfg.q_goal);
    auto policy = make_waypoint(targets, cfg.policy_saturation, cfg.policy_advance_tol);
    const EpisodeRecord rec =
        run_episode(env, *policy, &corrector, cfg.executor, Rng::mix(cfg.seed, i), i);
    CHECK_MSG(!rec.error, "episode %d error: %s", i, rec.error_message.c_str());
    CHECK_MSG(!rec.collided, "episode %d collided", i);
    CHECK_MSG(rec.min_proximity >= cfg.corrector.d_coll_buff, "episode %d proximity %.6f", i,
              rec.min_proximity);
    CHECK_MSG(rec.success, "episode %d did not reach the goal", i);
    CHECK(rec.policy_queries < cfg.executor.max_policy_queries);
  }
}

void test_baseline_middle_crashes() {
  const ScenarioConfig cfg = load_config(testutil::asset("configs/middle.json"));
  const ArmModel arm = load_arm(cfg.arm_file);
  const Scene scene = load_scene(cfg.scene_file);
  ExecutorParams params = cfg.executor;
  params.corrector_enabled = false;
  for (int i = 0; i < 2; ++i) {
    SimEnv env(arm, scene, cfg.start_pose, cfg.env);
    std::vector<Eigen::VectorXd> targets = cfg.waypoints;
    targets.push_back(cfg.q_goal);
    auto policy = make_waypoint(targets, cfg.policy_saturation, cfg.policy_advance_tol);
    const EpisodeRecord rec =
        run_episode(env, *policy, nullptr, params, Rng::mix(cfg.seed, i), i);
    CHECK_MSG(rec.collided, "baseline episode %d should collide", i);
    CHECK(rec.min_proximity < 0.0);
    CHECK(!rec.success);
  }
}

void test_episode_determinism() {
  const ScenarioConfig cfg = load_config(testutil::asset("configs/middle.json"));
  const ArmModel arm = load_arm(cfg.arm_file);
  const Scene scene = load_scene(cfg.scene_file);
  const Corrector corrector(arm, scene, cfg.corrector);

  auto run_once = [&]() {
    SimEnv env(arm, scene, cfg.start_pose, cfg.env);
    std::vector<Eigen::VectorXd> targets = cfg.waypoints;
    targets.push_back(cfg.q_goal);
    auto policy = make_waypoint(targets, cfg.policy_saturation, cfg.policy_advance_tol);
    return run_episode(env, *policy, &corrector, cfg.executor, Rng::mix(cfg.seed, 0), 0);
  };
  const EpisodeRecord a = run_once();
  const EpisodeRecord b = run_once();
  CHECK(a.collided == b.collided);
  CHECK(a.success == b.success);
  CHECK(a.min_proximity == b.min_proximity);  // bitwise
  CHECK(a.policy_queries == b.policy_queries);
  CHECK(a.env_steps == b.env_steps);
  CHECK(a.corrector_calls == b.corrector_calls);
  CHECK(a.sim_time_s == b.sim_time_s);
  CHECK(a.proximity_trace == b.proximity_trace);
  // corrector_cpu_s is measured wall time and may differ between runs.
}

void test_greedy_reaches_goal_obstacle_free() {
  const ArmModel arm = testutil::default_arm();
  Eigen::VectorXd q_goal(3);
  q_goal << 0.3, 0.6, 0.4;
  Scene scene;
  scene.name = "open_reach";
  scene.goal_region.center = forward_kinematics(arm, q_goal).end_effector.position;
  scene.goal_region.half_extents = Eigen::Vector3d(0.025, 0.025, 0.03);

  const Corrector corrector(arm, scene, {});
  SimEnv env(arm, scene, Eigen::VectorXd::Zero(3));
  auto policy = make_greedy(q_goal, 1.0);
  ExecutorParams params;
  const EpisodeRecord rec = run_episode(env, *policy, &corrector, params, 3, 0);
  CHECK_MSG(!rec.error, "error: %s", rec.error_message.c_str());
  CHECK(!rec.collided);
  CHECK_MSG(rec.success, "greedy did not reach the goal in %d queries", rec.policy_queries);
  CHECK(rec.policy_queries < params.max_policy_queries);
  CHECK(rec.min_proximity > 0.015);
}

}  // namespace

int main() {
  test_select_n();
  test_clip_action();
  test_select_failsafe();
  test_validate_failsafe_bank();
  test_zero_policy_episode_and_n_semantics();
  test_baseline_record_has_no_corrector_cost();
  test_corrected_middle_episodes_stay_safe();
  test_baseline_middle_crashes();
  test_episode_determinism();
  test_greedy_reaches_goal_obstacle_free();
  std::printf("[PASS] executor\n");
  return 0;
}
