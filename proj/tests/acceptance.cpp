// End-to-end acceptance battery. Every criterion always runs and prints one
// [PASS]/[FAIL] line; the exit code is nonzero if any criterion failed.
// Criteria cover the three shipped scenarios, the executed-points sweep, the
// corrector's safety contract, derivative and QP optimality spot checks, the
// reward shaping, and byte-level reproducibility of the CLI reports.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "safecor/corrector.hpp"
#include "safecor/harness.hpp"
#include "safecor/rng.hpp"
#include "safecor/sim_env.hpp"
#include "safecor/spline.hpp"
#include "test_util.hpp"

using namespace safecor;

namespace {

struct Criterion {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

int g_failures = 0;

void report(int index, const std::string& label, const Criterion& c) {
  if (c.ok) {
    std::printf("[PASS] criterion %d: %s\n", index, label.c_str());
  } else {
    std::printf("[FAIL] criterion %d: %s: %s\n", index, label.c_str(), c.detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double exact_clearance(const ArmModel& arm, const Scene& scene, const Eigen::VectorXd& q) {
  return std::min(min_robot_env_distance(arm, q, scene).distance,
                  min_self_distance(arm, q).distance);
}

double max_limit_violation(const ArmModel& arm, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& qdot) {
  double worst = 0.0;
  for (const auto& v : check_joint_limits(arm, {q, qdot}).violations) {
    worst = std::max(worst, v.magnitude);
  }
  return worst;
}

// ---------------------------------------------------------------------------

void criterion_1_presets(std::map<std::string, ExperimentSummary>& corrected) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const std::string name : {"middle", "partial", "faraway"}) {
    const ScenarioConfig cfg = load_config(testutil::asset("configs/" + name + ".json"));
    corrected[name] = run_experiment(cfg, 1);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Criterion c1;
  for (const auto& [name, s] : corrected) {
    c1.require(s.episodes == 100, name + ": expected 100 episodes");
    c1.require(s.errors == 0, name + ": " + std::to_string(s.errors) + " episode errors");
    c1.require(s.collisions == 0,
               name + ": " + std::to_string(s.collisions) + " collisions (zero tolerance)");
    c1.require(s.min_proximity >= 0.015,
               name + ": min proximity " + num(s.min_proximity) + " m < 0.015 m");
  }
  c1.require(elapsed < 300.0, "runtime " + num(elapsed) + " s exceeds 300 s");
  report(1, "corrected runs keep zero collisions and the 0.015 m buffer on all presets", c1);
}

void criterion_3_success(const std::map<std::string, ExperimentSummary>& corrected) {
  Criterion c3;
  c3.require(corrected.at("partial").success_rate >= 0.95,
             "partial success " + num(corrected.at("partial").success_rate) + " < 0.95");
  c3.require(corrected.at("faraway").success_rate >= 0.95,
             "faraway success " + num(corrected.at("faraway").success_rate) + " < 0.95");
  c3.require(corrected.at("middle").success_rate >= 0.75,
             "middle success " + num(corrected.at("middle").success_rate) + " < 0.75");
  report(3, "corrected success rates clear the per-scenario thresholds", c3);
}

void criterion_2_baselines() {
  auto baseline = [](const std::string& name) {
    ScenarioConfig cfg = load_config(testutil::asset("configs/" + name + ".json"));
    cfg.executor.corrector_enabled = false;
    return run_experiment(cfg, 1);
  };
  const ExperimentSummary mid = baseline("middle");
  const ExperimentSummary far = baseline("faraway");

  Criterion c2;
  c2.require(mid.collision_rate >= 0.80,
             "middle baseline collision rate " + num(mid.collision_rate) + " < 0.80");
  c2.require(far.collision_rate < mid.collision_rate,
             "faraway baseline rate " + num(far.collision_rate) + " not below middle " +
                 num(mid.collision_rate));
  report(2, "raw-policy baselines: middle collides >= 80%, far-away strictly less", c2);
}

void criterion_4_sweep() {
  const ScenarioConfig cfg = load_config(testutil::asset("configs/middle.json"));
  const int m = cfg.corrector.num_points();
  const int half = (m + 1) / 2;
  const std::vector<SweepRow> rows = n_sweep(cfg, {3, half, m}, 1);

  Criterion c4;
  c4.require(rows.size() == 3, "expected three sweep rows");
  if (rows.size() == 3) {
    c4.require(rows[1].summary.collisions == 0,
               "collisions at n=" + std::to_string(half) + ": " +
                   std::to_string(rows[1].summary.collisions));
    c4.require(rows[1].summary.mean_episode_time < rows[0].summary.mean_episode_time,
               "mean episode time at n=" + std::to_string(half) + " (" +
                   num(rows[1].summary.mean_episode_time) + " s) not below n=3 (" +
                   num(rows[0].summary.mean_episode_time) + " s)");

    // n = m consumes the whole horizon without re-observation: it must be
    // flagged as a risk configuration in the emitted table, and any buffer
    // violation that occurs must be counted, not silently dropped.
    c4.require(rows[2].risk_flag, "n=m not flagged as a risk configuration");
    int recount = 0;
    for (const auto& r : rows[2].summary.records) {
      if (r.min_proximity < cfg.corrector.d_coll_buff) ++recount;
    }
    c4.require(rows[2].buffer_violations == recount,
               "reported buffer violations " + std::to_string(rows[2].buffer_violations) +
                   " != recount " + std::to_string(recount));

    std::stringstream table(sweep_csv(rows));
    std::string header, line3, line_half, line_m;
    std::getline(table, header);
    std::getline(table, line3);
    std::getline(table, line_half);
    std::getline(table, line_m);
    c4.require(line_m.size() >= 2 && line_m.substr(line_m.size() - 2) == ",1",
               "risk flag missing from the n=m table row");
    c4.require(line3.size() >= 2 && line3.substr(line3.size() - 2) == ",0",
               "spurious risk flag on the n=3 table row");
  }
  report(4, "executed-points sweep: safe at ceil(m/2), faster than n=3, n=m flagged", c4);
}

void criterion_5_corrector_contract() {
  const ArmModel arm = testutil::default_arm();
  const Scene middle = load_scene(testutil::asset("scenes/middle.json"));
  const CorrectorParams params;  // t1 0.5 s, dt 0.05 s, buffer 0.015 m
  const Corrector corrector(arm, middle, params);

  Criterion c5;
  c5.require(params.num_points() == 11, "horizon point count != 11");

  // (a) randomized correction requests: every returned point keeps the exact
  // clearance above the buffer and stays inside the joint limits.
  Rng rng(20260815);
  int tested = 0, attempts = 0;
  double worst_clearance = std::numeric_limits<double>::infinity();
  double worst_violation = 0.0;
  bool sizes_ok = true;
  while (tested < 500 && attempts < 5000) {
    ++attempts;
    const Eigen::VectorXd q0 = testutil::random_q(arm, rng);
    if (exact_clearance(arm, middle, q0) < 0.02) continue;
    Eigen::VectorXd qdot0(arm.dof), delta(arm.dof);
    for (int i = 0; i < arm.dof; ++i) {
      qdot0[i] = rng.uniform(-0.3, 0.3);
      delta[i] = rng.uniform(-0.2, 0.2);
    }
    const Eigen::VectorXd q1 = q0 + delta;
    const CorrectedTrajectory traj =
        corrector.correct(q0, qdot0, q1, Eigen::VectorXd::Zero(arm.dof), q0);
    sizes_ok = sizes_ok && static_cast<int>(traj.points.size()) == params.num_points();
    for (const auto& pt : traj.points) {
      worst_clearance = std::min(worst_clearance, exact_clearance(arm, middle, pt.q));
      worst_violation = std::max(worst_violation, max_limit_violation(arm, pt.q, pt.qdot));
    }
    ++tested;
  }
  c5.require(tested == 500, "only " + std::to_string(tested) + " usable random requests");
  c5.require(sizes_ok, "a corrected trajectory did not have 11 points");
  c5.require(worst_clearance >= 0.015 - 1e-4,
             "worst exact clearance " + num(worst_clearance) + " m below 0.015 m - 1e-4");
  c5.require(worst_violation <= 1e-9,
             "worst joint-limit violation " + num(worst_violation) + " rad");

  // (c) with no obstacle influence the corrected points reproduce the cubic
  // interpolant between the endpoints.
  const Scene free = testutil::free_scene();
  const Corrector free_corrector(arm, free, params);
  struct Case {
    Eigen::Vector3d q0, qdot0, q1;
  };
  const std::vector<Case> cases = {
      {{0.1, 0.3, -0.5}, {0.0, 0.0, 0.0}, {0.3, 0.15, -0.4}},
      {{-0.4, 0.5, 1.2}, {0.2, -0.1, 0.15}, {-0.25, 0.62, 1.05}},
  };
  double worst_spline = 0.0;
  for (const auto& cs : cases) {
    const Eigen::VectorXd q0 = cs.q0, qdot0 = cs.qdot0, q1 = cs.q1;
    const CubicHermite ref(q0, qdot0, q1, Eigen::VectorXd::Zero(3), params.t1);
    const CorrectedTrajectory traj =
        free_corrector.correct(q0, qdot0, q1, Eigen::VectorXd::Zero(3), q0);
    for (const auto& pt : traj.points) {
      worst_spline =
          std::max(worst_spline, (pt.q - ref.position(pt.t)).cwiseAbs().maxCoeff());
    }
  }
  c5.require(worst_spline <= 1e-4,
             "obstacle-free tracking deviates " + num(worst_spline) + " rad from the spline");

  // (d) the failsafe engages exactly when the start clearance is inside the
  // buffer: states bisected to either side of the boundary must disagree.
  Scene table_only;
  table_only.name = "table_only";
  const Corrector guard(arm, table_only, params);
  const Eigen::VectorXd home = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd lean(3);
  lean << 0.0, 1.9, 0.0;  // pitch forward until the peg passes through the table
  const Eigen::VectorXd just_outside = testutil::bisect_to_clearance(
      arm, table_only, home, lean, params.d_coll_buff + 1e-5);
  const Eigen::VectorXd just_inside = testutil::bisect_to_clearance(
      arm, table_only, home, lean, params.d_coll_buff - 1e-5);
  const Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
  const auto outside = guard.correct(just_outside, zero3, just_outside, zero3, home);
  const auto inside = guard.correct(just_inside, zero3, just_inside, zero3, home);
  const auto safe = guard.correct(home, zero3, home, zero3, home);
  const auto buried = guard.correct(lean, zero3, lean, zero3, home);
  c5.require(!outside.used_failsafe, "failsafe fired just outside the buffer");
  c5.require(inside.used_failsafe, "failsafe silent just inside the buffer");
  c5.require(!safe.used_failsafe, "failsafe fired from a clearly safe start");
  c5.require(buried.used_failsafe, "failsafe silent from a penetrating start");
  report(5, "corrector contract: buffer and limits on random requests, 11-point horizon, "
            "spline tracking, failsafe boundary", c5);
}

void criterion_6_derivatives_and_qp() {
  const ArmModel arm = testutil::default_arm();
  const Scene scene = load_scene(testutil::asset("scenes/middle.json"));
  Criterion c6;

  // Point jacobian of the end effector against central differences.
  Rng rng(4242);
  double worst_jac = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd q = testutil::random_q(arm, rng);
    const FkResult fk = forward_kinematics(arm, q);
    const Eigen::MatrixXd J = jacobian(arm, q, fk.end_effector.position, arm.dof - 1);
    const Eigen::MatrixXd fd = testutil::fd_point_jacobian(
        [&](const Eigen::VectorXd& qq) { return forward_kinematics(arm, qq).end_effector.position; },
        q);
    worst_jac = std::max(worst_jac, (J - fd).cwiseAbs().maxCoeff());
  }
  c6.require(worst_jac <= 1e-4, "jacobian vs finite differences: " + num(worst_jac));

  // Distance gradient of the active pair against central differences of the
  // same pair's distance (the scene minimum can switch pairs under the FD
  // perturbation, the matched pair cannot).
  double worst_grad = 0.0;
  int grad_trials = 0;
  for (int trial = 0; trial < 500 && grad_trials < 200; ++trial) {
    const Eigen::VectorXd q = testutil::random_q(arm, rng);
    const ProximityReport rep = min_robot_env_distance(arm, q, scene);
    if (rep.distance < 1e-3 || rep.degenerate) continue;
    const DistanceGradient grad = distance_gradient(arm, q, rep);
    const CollisionBody* body = nullptr;
    for (const auto& b : arm.collision_bodies) {
      if (b.name == rep.body_a) body = &b;
    }
    const Obstacle* obs = nullptr;
    for (const auto& o : scene.obstacles) {
      if (o.label == rep.body_b) obs = &o;
    }
    if (body == nullptr) continue;
    auto pair_distance = [&](const Eigen::VectorXd& qq) {
      const FkResult fk = forward_kinematics(arm, qq);
      const Pose bp = body_world_pose(fk, *body);
      if (obs != nullptr) {
        return primitive_distance(body->shape, bp, obs->shape, obs->pose).distance;
      }
      return primitive_distance(body->shape, bp, Primitive(scene.table), Pose::Identity())
          .distance;
    };
    const Eigen::VectorXd fd = testutil::fd_gradient(pair_distance, q);
    worst_grad = std::max(worst_grad, (grad.d_dq - fd).cwiseAbs().maxCoeff());
    ++grad_trials;
  }
  c6.require(grad_trials >= 200, "only " + std::to_string(grad_trials) + " gradient trials");
  c6.require(worst_grad <= 1e-4, "distance gradient vs finite differences: " + num(worst_grad));

  // Random QPs: KKT residuals at the reported solution, and no sampled
  // feasible point may beat it.
  Rng qp_rng(99);
  double worst_kkt = 0.0;
  bool all_optimal = true, never_beaten = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int v = 2 + static_cast<int>(qp_rng.uniform(0.0, 4.999));
    const int nrows = static_cast<int>(qp_rng.uniform(0.0, 3.999));
    const testutil::RandomQp rq = testutil::random_feasible_qp(qp_rng, v, nrows);
    const QpSolution sol = solve_qp(rq.p);
    all_optimal = all_optimal && sol.status == QpStatus::Optimal;
    const auto [primal, stationarity] = kkt_residual(rq.p, sol.x);
    worst_kkt = std::max(worst_kkt, std::max(primal, stationarity));
    const double obj = testutil::qp_objective(rq.p, sol.x);
    for (const auto& x : testutil::sample_feasible_points(rq, qp_rng, 1000)) {
      if (testutil::qp_objective(rq.p, x) < obj - 1e-9) never_beaten = false;
    }
  }
  c6.require(all_optimal, "a random QP did not report an optimal solution");
  c6.require(worst_kkt <= 1e-6, "worst KKT residual " + num(worst_kkt));
  c6.require(never_beaten, "a sampled feasible point beat a reported QP solution");
  report(6, "derivatives match finite differences; QP solutions are KKT points that no "
            "sampled feasible point beats", c6);
}

void criterion_7_reward() {
  Criterion c7;

  // Reach term at exactly 0.1 m, lateral offset zero.
  const Eigen::Vector3d object(0.25, 0.18, 0.15);
  const Eigen::Vector3d peg_01 = object + Eigen::Vector3d(0.06, 0.0, 0.08);  // norm 0.1
  const RewardBreakdown r01 = reward(peg_01, object, object.y(), object.y(), false);
  c7.require(std::abs(r01.reach - (1.0 - std::tanh(1.0))) <= 1e-9,
             "reach at 0.1 m: " + num(r01.reach) + " vs " + num(1.0 - std::tanh(1.0)));
  c7.require(r01.y_align == 1.0, "aligned y term != 1");
  c7.require(r01.gripper == 0.0, "closed gripper term != 0");
  c7.require(r01.total == r01.reach + 0.5 * r01.y_align + r01.gripper,
             "total is not reach + 0.5*y_align + gripper");

  // Generic decomposition, open gripper.
  const Eigen::Vector3d peg(0.3, 0.1, 0.2);
  const RewardBreakdown r = reward(peg, object, 0.1, 0.18, true);
  c7.require(std::abs(r.reach - (1.0 - std::tanh(10.0 * (peg - object).norm()))) <= 1e-12,
             "reach term formula");
  c7.require(std::abs(r.y_align - (1.0 - std::tanh(10.0 * 0.08))) <= 1e-12,
             "y alignment term formula");
  c7.require(r.gripper == -100.0, "open gripper term != -100");
  c7.require(r.total == r.reach + 0.5 * r.y_align + r.gripper,
             "total is not reach + 0.5*y_align + gripper (open case)");

  // Perfect grasp pose attains the 1.5 maximum.
  const RewardBreakdown best = reward(object, object, 0.18, 0.18, false);
  c7.require(best.total == 1.5, "perfect pose total " + num(best.total) + " != 1.5");

  // Success threshold: exactly 97.5% of the 1.5 maximum, closed.
  GoalRegion far_goal;
  far_goal.center = Eigen::Vector3d(10, 10, 10);
  // dyadic extent so the closed-boundary probe below is exact in binary64
  far_goal.half_extents = Eigen::Vector3d(0.015625, 0.015625, 0.015625);
  RewardBreakdown at;
  at.total = 0.975 * 1.5;
  RewardBreakdown below;
  below.total = 0.975 * 1.5 - 1e-12;
  c7.require(is_success(at, peg, far_goal), "success did not fire exactly at the threshold");
  c7.require(!is_success(below, peg, far_goal), "success fired below the threshold");
  RewardBreakdown poor;
  poor.total = 0.0;
  c7.require(is_success(poor, far_goal.center + far_goal.half_extents, far_goal),
             "goal-region containment did not grant success");
  report(7, "reward terms and the 97.5% success threshold are exact", c7);
}

void criterion_8_cli_determinism() {
  Criterion c8;
  const std::string cli = SAFECOR_CLI_PATH;
  const std::string config = testutil::asset("configs/middle.json");
  auto run_cli = [&](const std::string& extra, const std::string& out) {
    const std::string cmd = "\"" + cli + "\" run --config \"" + config + "\" --seed 42 " +
                            extra + " --out \"" + out + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string a = "/tmp/safecor_acceptance_a.csv";
  const std::string b = "/tmp/safecor_acceptance_b.csv";
  const std::string c = "/tmp/safecor_acceptance_c.csv";
  c8.require(run_cli("", a) == 0, "first run failed");
  c8.require(run_cli("", b) == 0, "second run failed");
  c8.require(run_cli("--jobs 4", c) == 0, "threaded run failed");
  const std::string body_a = slurp(a);
  c8.require(body_a.rfind("episode,", 0) == 0 && body_a.size() > 100, "report is empty");
  c8.require(body_a == slurp(b), "two identical runs differ byte-for-byte");
  c8.require(body_a == slurp(c), "--jobs 4 changes the report bytes");
  report(8, "CLI reports are byte-identical across reruns and worker counts", c8);
}

}  // namespace

int main() {
  std::map<std::string, ExperimentSummary> corrected;
  criterion_1_presets(corrected);
  criterion_2_baselines();
  criterion_3_success(corrected);
  criterion_4_sweep();
  criterion_5_corrector_contract();
  criterion_6_derivatives_and_qp();
  criterion_7_reward();
  criterion_8_cli_determinism();

  if (g_failures == 0) {
    std::printf("[PASS] acceptance: all 8 criteria hold\n");
    return 0;
  }
  std::printf("[FAIL] acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
