// Command line front end: run experiments, sweep the execution horizon,
// compare corrected vs. raw execution, and self-check invariants.
//
// Exit codes: 0 success, 1 usage/config error, 2 episode-level failure,
// 3 validation violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safecor/harness.hpp"
#include "safecor/rng.hpp"

namespace {

using namespace safecor;

void apply_overrides(ScenarioConfig& cfg, int episodes, int64_t seed, bool no_corrector) {
  if (episodes > 0) cfg.episodes = episodes;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  if (no_corrector) cfg.executor.corrector_enabled = false;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << body;
}

void print_summary(const ExperimentSummary& s) {
  std::printf("%-18s %s  episodes %d  collisions %d (%.1f%%)  successes %d (%.1f%%)"
              "  min proximity %.4f m  mean time %.2f s\n",
              s.scenario.c_str(), s.corrector_enabled ? "corrected" : "baseline ", s.episodes,
              s.collisions, 100.0 * s.collision_rate, s.successes, 100.0 * s.success_rate,
              s.min_proximity, s.mean_episode_time);
}

int episode_exit_code(const ExperimentSummary& s) { return s.errors > 0 ? 2 : 0; }

int cmd_run(const std::string& config_path, int episodes, int64_t seed, bool no_corrector,
            const std::string& out, const std::string& format, int jobs,
            const std::string& trace_out) {
  ScenarioConfig cfg = load_config(config_path);
  apply_overrides(cfg, episodes, seed, no_corrector);
  const ExperimentSummary summary = run_experiment(cfg, jobs);
  print_summary(summary);
  if (!out.empty()) emit_report(summary, out, format);
  if (!trace_out.empty()) {
    write_file(trace_out, proximity_trace_csv(summary, cfg.corrector.d_coll_buff));
  }
  return episode_exit_code(summary);
}

int cmd_sweep(const std::string& config_path, std::vector<int> n_values, int episodes,
              int64_t seed, const std::string& out, const std::string& format, int jobs) {
  ScenarioConfig cfg = load_config(config_path);
  apply_overrides(cfg, episodes, seed, false);
  if (n_values.empty()) {
    const int m = cfg.corrector.num_points();
    n_values = {3, (m + 1) / 2, m};
  }
  const std::vector<SweepRow> rows = n_sweep(cfg, n_values, jobs);
  for (const auto& row : rows) {
    std::printf("n=%-3d collision %.1f%%  success %.1f%%  mean time %.2f s  min prox %.4f m%s\n",
                row.n, 100.0 * row.summary.collision_rate, 100.0 * row.summary.success_rate,
                row.summary.mean_episode_time, row.summary.min_proximity,
                row.risk_flag ? "  [risk: horizon fully consumed before replanning]" : "");
  }
  if (!out.empty()) write_file(out, format == "json" ? sweep_json(rows) : sweep_csv(rows));
  for (const auto& row : rows) {
    if (episode_exit_code(row.summary) != 0) return 2;
  }
  return 0;
}

int cmd_compare(const std::string& config_path, int episodes, int64_t seed,
                const std::string& out, int jobs) {
  ScenarioConfig cfg = load_config(config_path);
  apply_overrides(cfg, episodes, seed, false);
  ScenarioConfig raw = cfg;
  raw.executor.corrector_enabled = false;

  const ExperimentSummary corrected = run_experiment(cfg, jobs);
  const ExperimentSummary baseline = run_experiment(raw, jobs);
  print_summary(corrected);
  print_summary(baseline);
  if (!out.empty()) {
    emit_report(corrected, out + ".corrected.csv", "csv");
    emit_report(baseline, out + ".baseline.csv", "csv");
  }
  return episode_exit_code(corrected) != 0 || episode_exit_code(baseline) != 0 ? 2 : 0;
}

#define VCHECK(cond, msg)                                  \
  do {                                                     \
    if (cond) {                                            \
      std::printf("[ok]   %s\n", msg);                     \
    } else {                                               \
      std::printf("[FAIL] %s\n", msg);                     \
      failed = true;                                       \
    }                                                      \
  } while (0)

int cmd_validate(const std::string& config_path, int jobs) {
  (void)jobs;
  ScenarioConfig cfg = load_config(config_path);
  const ArmModel arm = load_arm(cfg.arm_file);
  const Scene scene = load_scene(cfg.scene_file);
  bool failed = false;

  // Jacobian columns against central differences.
  {
    Rng rng(1234);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd q(arm.dof);
      for (int i = 0; i < arm.dof; ++i) q[i] = rng.uniform(arm.q_min[i], arm.q_max[i]);
      const int link = arm.dof - 1;
      const Eigen::Vector3d local(0.01, 0.02, 0.05);
      const auto point_at = [&](const Eigen::VectorXd& qq) {
        return (forward_kinematics(arm, qq).link_poses[link] *
                Pose{local, Eigen::Quaterniond::Identity()})
            .position;
      };
      const Eigen::Vector3d p = point_at(q);
      const Eigen::MatrixXd J = jacobian(arm, q, p, link);
      const double h = 1e-6;
      for (int c = 0; c < arm.dof; ++c) {
        Eigen::VectorXd qp_ = q, qm = q;
        qp_[c] += h;
        qm[c] -= h;
        const Eigen::Vector3d fd = (point_at(qp_) - point_at(qm)) / (2.0 * h);
        worst = std::max(worst, (fd - J.col(c)).cwiseAbs().maxCoeff());
      }
    }
    VCHECK(worst < 1e-5, "jacobian matches central differences on 50 random configurations");
  }

  // Distance symmetry and witness consistency on random body pairs.
  {
    Rng rng(99);
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
      Eigen::VectorXd q(arm.dof);
      for (int i = 0; i < arm.dof; ++i) q[i] = rng.uniform(arm.q_min[i], arm.q_max[i]);
      const auto rep = min_robot_env_distance(arm, q, scene);
      if (rep.distance >= 0.0) {
        const double gap = std::abs((rep.witness_a - rep.witness_b).norm() - rep.distance);
        ok = ok && gap < 1e-9;
      }
    }
    VCHECK(ok, "witness points realize reported distances on 200 random configurations");
  }

  // QP solutions are KKT points.
  {
    Rng rng(7);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      const int v = 3 + static_cast<int>(rng.uniform_index(5));
      Eigen::MatrixXd B(v, v);
      for (int r = 0; r < v; ++r) {
        for (int c = 0; c < v; ++c) B(r, c) = rng.uniform(-1.0, 1.0);
      }
      QpProblem p;
      p.H = B * B.transpose() + Eigen::MatrixXd::Identity(v, v);
      p.g.resize(v);
      for (int i = 0; i < v; ++i) p.g[i] = rng.uniform(-1.0, 1.0);
      p.A.resize(2, v);
      for (int c = 0; c < v; ++c) {
        p.A(0, c) = rng.uniform(-1.0, 1.0);
        p.A(1, c) = rng.uniform(-1.0, 1.0);
      }
      p.lower = Eigen::VectorXd::Constant(2, -0.5);
      p.upper = Eigen::VectorXd::Constant(2, 0.5);
      const QpSolution sol = solve_qp(p);
      if (sol.status != QpStatus::Optimal) {
        ok = false;
        break;
      }
      const auto [pr, st] = kkt_residual(p, sol.x);
      ok = ok && pr <= 1e-6 && st <= 1e-6;
    }
    VCHECK(ok, "random QPs solve to KKT residuals below 1e-6");
  }

  // Corrector battery on the loaded scene.
  {
    Corrector corrector(arm, scene, cfg.corrector);
    Rng rng(2024);
    bool ok = true;
    int tested = 0;
    for (int trial = 0; trial < 200 && tested < 25; ++trial) {
      Eigen::VectorXd q0(arm.dof);
      for (int i = 0; i < arm.dof; ++i) {
        q0[i] = cfg.start_pose[i] + rng.uniform(-0.3, 0.3);
        q0[i] = std::clamp(q0[i], arm.q_min[i], arm.q_max[i]);
      }
      const double clear0 = std::min(min_robot_env_distance(arm, q0, scene).distance,
                                     min_self_distance(arm, q0).distance);
      if (clear0 < cfg.corrector.d_coll_buff) continue;
      ++tested;
      Eigen::VectorXd q1 = q0;
      for (int i = 0; i < arm.dof; ++i) q1[i] += rng.uniform(-0.2, 0.2);
      const auto traj = corrector.correct(q0, Eigen::VectorXd::Zero(arm.dof), q1,
                                          Eigen::VectorXd::Zero(arm.dof), cfg.start_pose);
      for (size_t k = 0; k < traj.points.size(); ++k) {
        ok = ok && traj.per_point_min_distance[k] >= cfg.corrector.d_coll_buff - 1e-9;
        ok = ok && check_joint_limits(arm, {traj.points[k].q, traj.points[k].qdot}).ok();
      }
    }
    VCHECK(ok && tested == 25, "25 random corrections keep the buffer and joint limits");
  }

  // Failsafe bank clearance.
  {
    bool ok = true;
    try {
      validate_failsafe_bank(cfg.executor.failsafe, arm, scene, cfg.corrector.d_coll_buff);
    } catch (const std::exception& e) {
      std::printf("       %s\n", e.what());
      ok = false;
    }
    VCHECK(ok, "failsafe bank presets clear the scene by at least twice the buffer");
  }

  // Determinism of a correction.
  {
    Corrector corrector(arm, scene, cfg.corrector);
    Eigen::VectorXd q1 = cfg.start_pose;
    q1[0] += 0.1;
    const auto a = corrector.correct(cfg.start_pose, Eigen::VectorXd::Zero(arm.dof), q1,
                                     Eigen::VectorXd::Zero(arm.dof), cfg.start_pose);
    const auto b = corrector.correct(cfg.start_pose, Eigen::VectorXd::Zero(arm.dof), q1,
                                     Eigen::VectorXd::Zero(arm.dof), cfg.start_pose);
    bool ok = a.points.size() == b.points.size();
    for (size_t k = 0; ok && k < a.points.size(); ++k) {
      ok = a.points[k].q == b.points[k].q && a.points[k].qdot == b.points[k].qdot;
    }
    VCHECK(ok, "identical corrections are bit-identical");
  }

  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime safety correction toolkit for joint-space policies"};
  app.require_subcommand(1);

  std::string config_path, out, format = "csv", trace_out;
  int episodes = -1, jobs = 1;
  int64_t seed = -1;
  bool no_corrector = false;
  std::vector<int> n_values;

  auto add_common = [&](CLI::App* cmd, bool with_corrector_flag) {
    cmd->add_option("--config", config_path, "scenario config JSON")->required();
    cmd->add_option("--episodes", episodes, "override episode count");
    cmd->add_option("--seed", seed, "override base seed");
    cmd->add_option("--jobs", jobs, "worker threads (episodes are order-independent)");
    if (with_corrector_flag) {
      cmd->add_flag("--no-corrector", no_corrector, "bypass the corrector (baseline)");
    }
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run, true);
  run->add_option("--out", out, "write per-episode report to this path");
  run->add_option("--format", format, "report format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--trace", trace_out, "write per-step proximity trace CSV");

  CLI::App* sweep = app.add_subcommand("sweep-n", "sweep the executed-points horizon");
  add_common(sweep, false);
  sweep->add_option("--n", n_values, "n values to sweep (default: 3, ceil(m/2), m)");
  sweep->add_option("--out", out, "write the sweep table to this path");
  sweep->add_option("--format", format, "table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* compare = app.add_subcommand("compare", "corrected vs. raw policy execution");
  add_common(compare, false);
  compare->add_option("--out", out, "report path prefix");

  CLI::App* validate = app.add_subcommand("validate", "invariant self-test battery");
  validate->add_option("--config", config_path, "scenario config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, episodes, seed, no_corrector, out, format, jobs, trace_out);
    }
    if (sweep->parsed()) {
      return cmd_sweep(config_path, n_values, episodes, seed, out, format, jobs);
    }
    if (compare->parsed()) {
      return cmd_compare(config_path, episodes, seed, out, jobs);
    }
    if (validate->parsed()) {
      return cmd_validate(config_path, jobs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
