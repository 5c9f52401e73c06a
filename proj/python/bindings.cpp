// Python bindings for the core operations: model/scene loading, kinematics,
// distance queries, the QP solver, the trajectory corrector, the simulated
// environment, and the experiment harness.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "safecor/corrector.hpp"
#include "safecor/executor.hpp"
#include "safecor/geometry.hpp"
#include "safecor/harness.hpp"
#include "safecor/qp.hpp"
#include "safecor/sim_env.hpp"

namespace py = pybind11;
using namespace safecor;

PYBIND11_MODULE(_safecor, m) {
  m.doc() = "Runtime safety correction for joint-space policies";

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def_readwrite("position", &Pose::position)
      .def_property(
          "orientation_wxyz",
          [](const Pose& p) {
            return Eigen::Vector4d(p.orientation.w(), p.orientation.x(), p.orientation.y(),
                                   p.orientation.z());
          },
          [](Pose& p, const Eigen::Vector4d& q) {
            p.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
          })
      .def_static("from_axis_angle", &Pose::FromAxisAngle)
      .def("apply", &Pose::apply)
      .def("rotate", &Pose::rotate)
      .def("inverse", &Pose::inverse)
      .def("__mul__", &Pose::operator*);

  py::class_<Sphere>(m, "Sphere").def(py::init<>()).def_readwrite("radius", &Sphere::radius);
  py::class_<Capsule>(m, "Capsule")
      .def(py::init<>())
      .def_readwrite("half_length", &Capsule::half_length)
      .def_readwrite("radius", &Capsule::radius);
  py::class_<Box>(m, "Box").def(py::init<>()).def_readwrite("half_extents", &Box::half_extents);
  py::class_<HalfSpace>(m, "HalfSpace")
      .def(py::init<>())
      .def_readwrite("normal", &HalfSpace::normal)
      .def_readwrite("offset", &HalfSpace::offset);

  py::class_<ArmModel>(m, "ArmModel")
      .def_readonly("dof", &ArmModel::dof)
      .def_readonly("q_min", &ArmModel::q_min)
      .def_readonly("q_max", &ArmModel::q_max)
      .def_readonly("qdot_max", &ArmModel::qdot_max)
      .def_readonly("name", &ArmModel::name)
      .def("num_collision_bodies",
           [](const ArmModel& a) { return a.collision_bodies.size(); });

  py::class_<GoalRegion>(m, "GoalRegion")
      .def(py::init<>())
      .def_readwrite("center", &GoalRegion::center)
      .def_readwrite("half_extents", &GoalRegion::half_extents)
      .def("contains", &GoalRegion::contains);

  py::class_<Scene>(m, "Scene")
      .def_readonly("name", &Scene::name)
      .def_readonly("goal_region", &Scene::goal_region)
      .def("num_obstacles", [](const Scene& s) { return s.obstacles.size(); });

  py::class_<FkResult>(m, "FkResult")
      .def_readonly("link_poses", &FkResult::link_poses)
      .def_readonly("end_effector", &FkResult::end_effector);

  py::class_<ProximityReport>(m, "ProximityReport")
      .def_readonly("distance", &ProximityReport::distance)
      .def_readonly("witness_a", &ProximityReport::witness_a)
      .def_readonly("witness_b", &ProximityReport::witness_b)
      .def_readonly("direction", &ProximityReport::direction)
      .def_readonly("body_a", &ProximityReport::body_a)
      .def_readonly("body_b", &ProximityReport::body_b)
      .def_readonly("degenerate", &ProximityReport::degenerate);

  m.def("load_arm", &load_arm, py::arg("path"));
  m.def("load_arm_json", &load_arm_json, py::arg("json_text"), py::arg("origin") = "<string>");
  m.def("load_scene", &load_scene, py::arg("path"));
  m.def("load_scene_json", &load_scene_json, py::arg("json_text"),
        py::arg("origin") = "<string>");
  m.def("forward_kinematics", &forward_kinematics, py::arg("model"), py::arg("q"));
  m.def("jacobian", &jacobian, py::arg("model"), py::arg("q"), py::arg("point_world"),
        py::arg("link_index"));
  m.def("min_robot_env_distance", &min_robot_env_distance, py::arg("model"), py::arg("q"),
        py::arg("scene"));
  m.def("min_self_distance", &min_self_distance, py::arg("model"), py::arg("q"));
  m.def("primitive_distance",
        [](const py::object& a, const Pose& pa, const py::object& b, const Pose& pb) {
          auto to_prim = [](const py::object& o) -> Primitive {
            if (py::isinstance<Sphere>(o)) return o.cast<Sphere>();
            if (py::isinstance<Capsule>(o)) return o.cast<Capsule>();
            if (py::isinstance<Box>(o)) return o.cast<Box>();
            if (py::isinstance<HalfSpace>(o)) return o.cast<HalfSpace>();
            throw py::type_error("expected Sphere, Capsule, Box or HalfSpace");
          };
          return primitive_distance(to_prim(a), pa, to_prim(b), pb);
        },
        py::arg("a"), py::arg("pose_a"), py::arg("b"), py::arg("pose_b"));

  py::enum_<QpStatus>(m, "QpStatus")
      .value("Optimal", QpStatus::Optimal)
      .value("PrimalInfeasible", QpStatus::PrimalInfeasible)
      .value("MaxIterations", QpStatus::MaxIterations);

  py::class_<QpSolution>(m, "QpSolution")
      .def_readonly("x", &QpSolution::x)
      .def_readonly("y", &QpSolution::y)
      .def_readonly("status", &QpSolution::status)
      .def_readonly("iterations", &QpSolution::iterations)
      .def_readonly("primal_residual", &QpSolution::primal_residual)
      .def_readonly("dual_residual", &QpSolution::dual_residual);

  m.def("solve_qp",
        [](const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
           const Eigen::VectorXd& x_lb, const Eigen::VectorXd& x_ub) {
          QpProblem p{H, g, A, lower, upper, x_lb, x_ub};
          return solve_qp(p);
        },
        py::arg("H"), py::arg("g"), py::arg("A") = Eigen::MatrixXd(),
        py::arg("lower") = Eigen::VectorXd(), py::arg("upper") = Eigen::VectorXd(),
        py::arg("x_lb") = Eigen::VectorXd(), py::arg("x_ub") = Eigen::VectorXd());
  m.def("kkt_residual",
        [](const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
           const Eigen::VectorXd& x_lb, const Eigen::VectorXd& x_ub,
           const Eigen::VectorXd& x) {
          QpProblem p{H, g, A, lower, upper, x_lb, x_ub};
          return kkt_residual(p, x);
        },
        py::arg("H"), py::arg("g"), py::arg("A"), py::arg("lower"), py::arg("upper"),
        py::arg("x_lb"), py::arg("x_ub"), py::arg("x"));

  py::class_<CorrectorParams>(m, "CorrectorParams")
      .def(py::init<>())
      .def_readwrite("t1", &CorrectorParams::t1)
      .def_readwrite("dt", &CorrectorParams::dt)
      .def_readwrite("d_coll_buff", &CorrectorParams::d_coll_buff)
      .def_readwrite("w_track", &CorrectorParams::w_track)
      .def_readwrite("w_smooth", &CorrectorParams::w_smooth)
      .def_readwrite("w_drift", &CorrectorParams::w_drift)
      .def_readwrite("interpolate_threshold", &CorrectorParams::interpolate_threshold)
      .def_readwrite("max_halvings", &CorrectorParams::max_halvings)
      .def_readwrite("exec_margin", &CorrectorParams::exec_margin)
      .def_readwrite("constraint_gap", &CorrectorParams::constraint_gap)
      .def("num_points", &CorrectorParams::num_points);

  py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
      .def_readonly("q", &TrajectoryPoint::q)
      .def_readonly("qdot", &TrajectoryPoint::qdot)
      .def_readonly("t", &TrajectoryPoint::t);

  py::class_<CorrectedTrajectory>(m, "CorrectedTrajectory")
      .def_readonly("points", &CorrectedTrajectory::points)
      .def_readonly("per_point_min_distance", &CorrectedTrajectory::per_point_min_distance)
      .def_readonly("used_failsafe", &CorrectedTrajectory::used_failsafe)
      .def_readonly("hit_infeasible", &CorrectedTrajectory::hit_infeasible)
      .def_readonly("halved_steps", &CorrectedTrajectory::halved_steps);

  py::class_<Corrector>(m, "Corrector")
      .def(py::init<const ArmModel&, const Scene&, const CorrectorParams&>(),
           py::arg("model"), py::arg("scene"), py::arg("params"),
           py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
      .def("correct", &Corrector::correct, py::arg("q0"), py::arg("qdot0"), py::arg("q1"),
           py::arg("qdot1"), py::arg("q_last_safe"))
      .def_property_readonly("activation_radius", &Corrector::activation_radius);

  py::class_<RewardBreakdown>(m, "RewardBreakdown")
      .def_readonly("reach", &RewardBreakdown::reach)
      .def_readonly("y_align", &RewardBreakdown::y_align)
      .def_readonly("gripper", &RewardBreakdown::gripper)
      .def_readonly("total", &RewardBreakdown::total);

  m.def("pd_torque",
        [](const ControllerGains& gains, const Eigen::VectorXd& q_des, const Eigen::VectorXd& q,
           const Eigen::VectorXd& qdot) { return pd_torque(gains, q_des, {q, qdot}); },
        py::arg("gains"), py::arg("q_des"), py::arg("q"), py::arg("qdot"));
  m.def("reward", &reward, py::arg("peg"), py::arg("object"), py::arg("gripper_y"),
        py::arg("object_y"), py::arg("gripper_open"));

  py::class_<EnvObservation>(m, "EnvObservation")
      .def_property_readonly("q", [](const EnvObservation& o) { return o.obs.q; })
      .def_property_readonly("qdot", [](const EnvObservation& o) { return o.obs.qdot; })
      .def_readonly("min_distance", &EnvObservation::min_distance)
      .def_readonly("substep_min_distance", &EnvObservation::substep_min_distance)
      .def_readonly("reward", &EnvObservation::reward)
      .def_readonly("done", &EnvObservation::done)
      .def_readonly("collided", &EnvObservation::collided)
      .def_readonly("success", &EnvObservation::success);

  py::class_<ControllerGains>(m, "ControllerGains")
      .def(py::init<>())
      .def_readwrite("kp", &ControllerGains::kp)
      .def_readwrite("kd", &ControllerGains::kd)
      .def_readwrite("tau_max", &ControllerGains::tau_max);

  py::class_<EnvParams>(m, "EnvParams")
      .def(py::init<>())
      .def_readwrite("gains", &EnvParams::gains)
      .def_readwrite("start_perturbation", &EnvParams::start_perturbation)
      .def_readwrite("reset_clearance", &EnvParams::reset_clearance);

  py::class_<SimEnv>(m, "SimEnv")
      .def(py::init<const ArmModel&, const Scene&, const Eigen::VectorXd&, const EnvParams&>(),
           py::arg("model"), py::arg("scene"), py::arg("start_pose"),
           py::arg("params") = EnvParams{}, py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
      .def("reset", &SimEnv::reset, py::arg("seed"))
      .def("step", &SimEnv::step, py::arg("q_command"))
      .def("observe", &SimEnv::observe)
      .def_property_readonly("time", &SimEnv::time);

  m.def("select_n",
        [](int m_, int fixed) {
          return select_n(m_, fixed > 0 ? NRule::Fixed(fixed) : NRule::Formula());
        },
        py::arg("m"), py::arg("fixed") = 0,
        "Points to execute per correction; fixed <= 0 selects the ceil(m/2) rule");
  m.def("clip_action", &clip_action, py::arg("delta"), py::arg("limit"));

  py::class_<EpisodeRecord>(m, "EpisodeRecord")
      .def_readonly("episode", &EpisodeRecord::episode)
      .def_readonly("collided", &EpisodeRecord::collided)
      .def_readonly("success", &EpisodeRecord::success)
      .def_readonly("min_proximity", &EpisodeRecord::min_proximity)
      .def_readonly("policy_queries", &EpisodeRecord::policy_queries)
      .def_readonly("env_steps", &EpisodeRecord::env_steps)
      .def_readonly("sim_time_s", &EpisodeRecord::sim_time_s)
      .def_readonly("error", &EpisodeRecord::error)
      .def_readonly("proximity_trace", &EpisodeRecord::proximity_trace);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readwrite("name", &ScenarioConfig::name)
      .def_readwrite("episodes", &ScenarioConfig::episodes)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("start_pose", &ScenarioConfig::start_pose)
      .def_readwrite("q_goal", &ScenarioConfig::q_goal)
      .def_property(
          "corrector_enabled",
          [](const ScenarioConfig& c) { return c.executor.corrector_enabled; },
          [](ScenarioConfig& c, bool v) { c.executor.corrector_enabled = v; });

  py::class_<ExperimentSummary>(m, "ExperimentSummary")
      .def_readonly("scenario", &ExperimentSummary::scenario)
      .def_readonly("corrector_enabled", &ExperimentSummary::corrector_enabled)
      .def_readonly("episodes", &ExperimentSummary::episodes)
      .def_readonly("collisions", &ExperimentSummary::collisions)
      .def_readonly("successes", &ExperimentSummary::successes)
      .def_readonly("errors", &ExperimentSummary::errors)
      .def_readonly("collision_rate", &ExperimentSummary::collision_rate)
      .def_readonly("success_rate", &ExperimentSummary::success_rate)
      .def_readonly("mean_episode_time", &ExperimentSummary::mean_episode_time)
      .def_readonly("min_proximity", &ExperimentSummary::min_proximity)
      .def_readonly("records", &ExperimentSummary::records);

  m.def("load_config", &load_config, py::arg("path"));
  m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("report_csv", &report_csv, py::arg("summary"));
  m.def("report_json", &report_json, py::arg("summary"));
}
