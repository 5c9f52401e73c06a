#include "safecor/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json_parse.hpp"
#include "safecor/policies.hpp"
#include "safecor/rng.hpp"

namespace safecor {

using detail::json;

namespace {

std::string resolve_path(const std::string& base_file, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base_file).parent_path() / p).string();
}

/// Shortest-round-trip decimal formatting so identical runs emit identical
/// bytes regardless of locale.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // try shorter representations that still round-trip
  for (int prec = 1; prec < 17; ++prec) {
    char cand[64];
    std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
    if (std::strtod(cand, nullptr) == v) return cand;
  }
  return buf;
}

}  // namespace

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file '" + path + "': cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.name = j.value("name", std::filesystem::path(path).stem().string());
    cfg.arm_file = resolve_path(path, j.at("arm").get<std::string>());
    cfg.scene_file = resolve_path(path, j.at("scene").get<std::string>());

    if (j.contains("corrector")) {
      const auto& c = j["corrector"];
      cfg.corrector.t1 = c.value("t1", cfg.corrector.t1);
      cfg.corrector.dt = c.value("dt", cfg.corrector.dt);
      cfg.corrector.d_coll_buff = c.value("d_coll_buff", cfg.corrector.d_coll_buff);
      cfg.corrector.w_track = c.value("w_track", cfg.corrector.w_track);
      cfg.corrector.w_smooth = c.value("w_smooth", cfg.corrector.w_smooth);
      cfg.corrector.w_drift = c.value("w_drift", cfg.corrector.w_drift);
      cfg.corrector.interpolate_threshold =
          c.value("interpolate_threshold", cfg.corrector.interpolate_threshold);
      cfg.corrector.max_halvings = c.value("max_halvings", cfg.corrector.max_halvings);
      cfg.corrector.exec_margin = c.value("exec_margin", cfg.corrector.exec_margin);
      cfg.corrector.constraint_gap = c.value("constraint_gap", cfg.corrector.constraint_gap);
    }

    if (j.contains("executor")) {
      const auto& e = j["executor"];
      cfg.executor.action_clip = e.value("action_clip", cfg.executor.action_clip);
      cfg.executor.proximity_margin = e.value("proximity_margin", cfg.executor.proximity_margin);
      cfg.executor.max_policy_queries =
          e.value("max_policy_queries", cfg.executor.max_policy_queries);
      if (e.contains("n_rule")) {
        const auto& n = e["n_rule"];
        if (n.is_string() && n.get<std::string>() == "formula") {
          cfg.executor.n_rule = NRule::Formula();
        } else if (n.is_number_integer()) {
          cfg.executor.n_rule = NRule::Fixed(n.get<int>());
        } else {
          throw std::runtime_error("executor.n_rule must be \"formula\" or an integer");
        }
      }
      if (e.contains("failsafe")) {
        const auto& f = e["failsafe"];
        cfg.executor.failsafe.left = detail::parse_vec(f.at("left"), "failsafe.left");
        cfg.executor.failsafe.center = detail::parse_vec(f.at("center"), "failsafe.center");
        cfg.executor.failsafe.right = detail::parse_vec(f.at("right"), "failsafe.right");
        cfg.executor.failsafe.table_width =
            f.value("table_width", cfg.executor.failsafe.table_width);
      }
    }

    if (j.contains("env")) {
      const auto& e = j["env"];
      cfg.env.gains.kp = e.value("kp", cfg.env.gains.kp);
      cfg.env.gains.kd = e.value("kd", cfg.env.gains.kd);
      cfg.env.gains.tau_max = e.value("tau_max", cfg.env.gains.tau_max);
      cfg.env.plant.inertia = e.value("inertia", cfg.env.plant.inertia);
      cfg.env.plant.damping = e.value("damping", cfg.env.plant.damping);
      cfg.env.plant.substeps = e.value("substeps", cfg.env.plant.substeps);
      cfg.env.plant.command_dt = e.value("command_dt", cfg.env.plant.command_dt);
      cfg.env.start_perturbation = e.value("start_perturbation", cfg.env.start_perturbation);
      cfg.env.reset_clearance = e.value("reset_clearance", cfg.env.reset_clearance);
    }

    const auto& x = j.at("experiment");
    cfg.start_pose = detail::parse_vec(x.at("start_pose"), "experiment.start_pose");
    cfg.q_goal = detail::parse_vec(x.at("q_goal"), "experiment.q_goal");
    cfg.episodes = x.value("episodes", cfg.episodes);
    cfg.seed = x.value("seed", cfg.seed);
    cfg.executor.corrector_enabled = x.value("corrector_enabled", true);
    cfg.policy = x.value("policy", cfg.policy);
    cfg.policy_saturation = x.value("policy_saturation", cfg.policy_saturation);
    cfg.policy_magnitude = x.value("policy_magnitude", cfg.policy_magnitude);
    cfg.policy_advance_tol = x.value("policy_advance_tol", cfg.policy_advance_tol);
    if (x.contains("waypoints")) {
      int idx = 0;
      for (const auto& w : x.at("waypoints")) {
        cfg.waypoints.push_back(
            detail::parse_vec(w, "experiment.waypoints[" + std::to_string(idx++) + "]"));
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }
  if (cfg.episodes <= 0) {
    throw std::runtime_error("config file '" + path + "': experiment.episodes must be positive");
  }
  return cfg;
}

namespace {

std::unique_ptr<Policy> make_policy(const ScenarioConfig& cfg, int dof) {
  if (cfg.policy == "greedy") return make_greedy(cfg.q_goal, cfg.policy_saturation);
  if (cfg.policy == "waypoint") {
    std::vector<Eigen::VectorXd> targets = cfg.waypoints;
    targets.push_back(cfg.q_goal);
    return make_waypoint(std::move(targets), cfg.policy_saturation, cfg.policy_advance_tol);
  }
  if (cfg.policy == "random") return make_random(dof, cfg.seed, cfg.policy_magnitude);
  if (cfg.policy == "zero") return make_replay({});
  throw std::runtime_error("unknown policy '" + cfg.policy + "'");
}

}  // namespace

ExperimentSummary run_experiment(const ScenarioConfig& config, int jobs) {
  if (jobs < 1) throw std::invalid_argument("run_experiment: jobs must be >= 1");
  const ArmModel arm = load_arm(config.arm_file);
  const Scene scene = load_scene(config.scene_file);
  if (config.start_pose.size() != arm.dof || config.q_goal.size() != arm.dof) {
    throw std::runtime_error("config: start_pose and q_goal must match the arm dof");
  }
  validate_failsafe_bank(config.executor.failsafe, arm, scene, config.corrector.d_coll_buff);

  const Corrector corrector(arm, scene, config.corrector);
  std::vector<EpisodeRecord> records(config.episodes);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      for (int i = next.fetch_add(1); i < config.episodes; i = next.fetch_add(1)) {
        SimEnv env(arm, scene, config.start_pose, config.env);
        auto policy = make_policy(config, arm.dof);
        const uint64_t seed = Rng::mix(config.seed, static_cast<uint64_t>(i));
        records[i] = run_episode(env, *policy, &corrector, config.executor, seed, i);
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(config.episodes);  // stop the other workers
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentSummary s;
  s.scenario = config.name;
  s.corrector_enabled = config.executor.corrector_enabled;
  s.episodes = config.episodes;
  s.min_proximity = std::numeric_limits<double>::infinity();
  double time_sum = 0.0, query_sum = 0.0;
  for (const auto& r : records) {
    if (r.error) ++s.errors;
    if (r.collided) ++s.collisions;
    if (r.success) ++s.successes;
    s.min_proximity = std::min(s.min_proximity, r.min_proximity);
    time_sum += r.sim_time_s;
    query_sum += r.policy_queries;
  }
  s.collision_rate = static_cast<double>(s.collisions) / s.episodes;
  s.success_rate = static_cast<double>(s.successes) / s.episodes;
  s.mean_episode_time = time_sum / s.episodes;
  s.mean_policy_queries = query_sum / s.episodes;
  s.records = std::move(records);
  return s;
}

std::vector<SweepRow> n_sweep(const ScenarioConfig& config, const std::vector<int>& n_values,
                              int jobs) {
  std::vector<SweepRow> rows;
  const int m = config.corrector.num_points();
  for (const int n : n_values) {
    ScenarioConfig c = config;
    c.executor.n_rule = NRule::Fixed(n);
    SweepRow row;
    row.n = n;
    row.summary = run_experiment(c, jobs);
    for (const auto& r : row.summary.records) {
      if (r.min_proximity < config.corrector.d_coll_buff) ++row.buffer_violations;
    }
    row.risk_flag = n >= m;  // consuming the whole horizon leaves no replanning headroom
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_csv(const ExperimentSummary& summary) {
  std::string out = "episode,collided,min_proximity_m,success,policy_queries,wall_time_s\n";
  for (const auto& r : summary.records) {
    out += std::to_string(r.episode) + "," + (r.collided ? "1" : "0") + "," +
           fmt(r.min_proximity) + "," + (r.success ? "1" : "0") + "," +
           std::to_string(r.policy_queries) + "," + fmt(r.sim_time_s) + "\n";
  }
  return out;
}

namespace {

json record_json(const EpisodeRecord& r) {
  json o;
  o["episode"] = r.episode;
  o["collided"] = r.collided;
  o["success"] = r.success;
  o["min_proximity_m"] = r.min_proximity;
  o["policy_queries"] = r.policy_queries;
  o["env_steps"] = r.env_steps;
  o["corrector_calls"] = r.corrector_calls;
  o["wall_time_s"] = r.sim_time_s;
  o["corrector_cpu_s"] = r.corrector_cpu_s;
  o["error"] = r.error;
  if (r.error) o["error_message"] = r.error_message;
  o["proximity_trace"] = r.proximity_trace;
  return o;
}

}  // namespace

std::string report_json(const ExperimentSummary& s) {
  json o;
  o["scenario"] = s.scenario;
  o["corrector_enabled"] = s.corrector_enabled;
  o["episodes"] = s.episodes;
  o["collisions"] = s.collisions;
  o["successes"] = s.successes;
  o["errors"] = s.errors;
  o["collision_rate"] = s.collision_rate;
  o["success_rate"] = s.success_rate;
  o["mean_episode_time_s"] = s.mean_episode_time;
  o["min_proximity_m"] = s.min_proximity;
  o["mean_policy_queries"] = s.mean_policy_queries;
  o["records"] = json::array();
  for (const auto& r : s.records) o["records"].push_back(record_json(r));
  return o.dump(2) + "\n";
}

void emit_report(const ExperimentSummary& summary, const std::string& path,
                 const std::string& format) {
  std::string body;
  if (format == "csv") {
    body = report_csv(summary);
  } else if (format == "json") {
    body = report_json(summary);
  } else {
    throw std::invalid_argument("emit_report: unknown format '" + format + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_report: cannot open '" + path + "'");
  out << body;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "n,episodes,collision_rate,success_rate,mean_episode_time_s,min_proximity_m,"
      "buffer_violations,risk_flag\n";
  for (const auto& row : rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.summary.episodes) + "," +
           fmt(row.summary.collision_rate) + "," + fmt(row.summary.success_rate) + "," +
           fmt(row.summary.mean_episode_time) + "," + fmt(row.summary.min_proximity) + "," +
           std::to_string(row.buffer_violations) + "," + (row.risk_flag ? "1" : "0") + "\n";
  }
  return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows) {
    json o;
    o["n"] = row.n;
    o["collision_rate"] = row.summary.collision_rate;
    o["success_rate"] = row.summary.success_rate;
    o["mean_episode_time_s"] = row.summary.mean_episode_time;
    o["min_proximity_m"] = row.summary.min_proximity;
    o["buffer_violations"] = row.buffer_violations;
    o["risk_flag"] = row.risk_flag;
    arr.push_back(o);
  }
  return arr.dump(2) + "\n";
}

std::string proximity_trace_csv(const ExperimentSummary& summary, double buffer) {
  std::string out = "episode,min_proximity_m,buffer_m\n";
  for (const auto& r : summary.records) {
    for (const double d : r.proximity_trace) {
      out += std::to_string(r.episode) + "," + fmt(d) + "," + fmt(buffer) + "\n";
    }
  }
  return out;
}

}  // namespace safecor
