#pragma once

#include <string>
#include <vector>

#include "safecor/corrector.hpp"
#include "safecor/executor.hpp"
#include "safecor/sim_env.hpp"

namespace safecor {

/// Fully resolved experiment description. Paths inside a scenario file are
/// resolved relative to the file itself.
struct ScenarioConfig {
  std::string name;
  std::string arm_file, scene_file;
  Eigen::VectorXd start_pose;   // nominal start configuration
  Eigen::VectorXd q_goal;       // reaching target for the greedy policy
  CorrectorParams corrector;
  ExecutorParams executor;
  EnvParams env;
  std::string policy = "greedy";
  double policy_saturation = 1.0;
  double policy_magnitude = 0.2;   // for the random policy
  double policy_advance_tol = 0.05;              // for the waypoint policy
  std::vector<Eigen::VectorXd> waypoints;        // visited before q_goal
  int episodes = 100;
  uint64_t seed = 0;
};

struct ExperimentSummary {
  std::string scenario;
  bool corrector_enabled = true;
  int episodes = 0;
  int collisions = 0;
  int successes = 0;
  int errors = 0;
  double collision_rate = 0.0;
  double success_rate = 0.0;
  double mean_episode_time = 0.0;   // simulated seconds
  double min_proximity = 0.0;       // min over all episodes, m
  double mean_policy_queries = 0.0;
  std::vector<EpisodeRecord> records;
};

struct SweepRow {
  int n = 0;
  ExperimentSummary summary;
  int buffer_violations = 0;   // episodes whose min_proximity fell below the buffer
  bool risk_flag = false;      // n >= m: no mid-horizon re-observation headroom
};

ScenarioConfig load_config(const std::string& path);

/// Runs config.episodes episodes with per-episode derived seeds. `jobs` > 1
/// distributes episodes across threads; results are identical to the serial
/// run because every episode is self-contained and seeded by index.
ExperimentSummary run_experiment(const ScenarioConfig& config, int jobs = 1);

/// run_experiment at each n (executor n_rule forced to Fixed(n)).
std::vector<SweepRow> n_sweep(const ScenarioConfig& config, const std::vector<int>& n_values,
                              int jobs = 1);

/// Per-episode report. format: "csv" (stable column set, byte-identical for
/// identical config+seed) or "json" (adds summary and measured timings).
void emit_report(const ExperimentSummary& summary, const std::string& path,
                 const std::string& format);
std::string report_csv(const ExperimentSummary& summary);
std::string report_json(const ExperimentSummary& summary);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows);

/// episode, min_proximity_m, buffer_m rows for plotting clearance margins.
std::string proximity_trace_csv(const ExperimentSummary& summary, double buffer);

}  // namespace safecor
