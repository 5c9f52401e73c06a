#include "safecor/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "safecor/spline.hpp"

namespace safecor {

namespace {

double bounding_radius(const Primitive& p) {
  if (const auto* s = std::get_if<Sphere>(&p)) return s->radius;
  if (const auto* c = std::get_if<Capsule>(&p)) return c->half_length + c->radius;
  if (const auto* b = std::get_if<Box>(&p)) return b->half_extents.norm();
  return std::numeric_limits<double>::infinity();  // halfspace: unbounded
}

double exact_min_distance(const ArmModel& model, const Scene& scene, const Eigen::VectorXd& q) {
  const double env = min_robot_env_distance(model, q, scene).distance;
  const double self = min_self_distance(model, q).distance;
  return std::min(env, self);
}

}  // namespace

double max_cartesian_step(const ArmModel& model, const Eigen::VectorXd& dq_max) {
  // A rotation of joint j by dq moves a point at lever R by at most R*dq;
  // levers are bounded by the chain's remaining offsets plus each body's own
  // extent. Summing over joints bounds the composed motion.
  double total = 0.0;
  for (int j = 0; j < model.dof; ++j) {
    double reach = 0.0;
    double chain = 0.0;
    for (int k = j; k < model.dof; ++k) {
      if (k > j) chain += model.links[k].offset.position.norm();
      for (const auto& body : model.collision_bodies) {
        if (body.link != k) continue;
        reach = std::max(reach,
                         chain + body.local_pose.position.norm() + bounding_radius(body.shape));
      }
    }
    total += dq_max[j] * reach;
  }
  return total;
}

StepQpResult step_qp(const ArmModel& model, const Scene& scene, const JointState& state,
                     const Eigen::VectorXd& desired, const CorrectorParams& params,
                     double activation_radius, double min_clearance, double velocity_scale,
                     QpWarmStart* warm) {
  const int dof = model.dof;
  const double dt = params.dt;

  // Box on dq: joint position limits and the per-step velocity bound. The
  // velocity part shrinks under the linearization guard's halvings.
  Eigen::VectorXd lb(dof), ub(dof);
  for (int i = 0; i < dof; ++i) {
    const double vcap = model.qdot_max[i] * dt * velocity_scale;
    lb[i] = std::max(model.q_min[i] - state.q[i], -vcap);
    ub[i] = std::min(model.q_max[i] - state.q[i], vcap);
    if (lb[i] > ub[i]) {  // only possible through fp dust at a bound
      lb[i] = ub[i] = std::clamp(0.0, lb[i], ub[i]);
    }
  }

  // Linearized clearance rows for every pair near enough to matter this step.
  const std::vector<ProximityReport> pairs =
      proximity_pairs(model, state.q, scene, activation_radius);
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> row_lower;
  rows.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const DistanceGradient grad = distance_gradient(model, state.q, pair);
    if (grad.d_dq.norm() < 1e-12) continue;  // no usable direction; exact recheck guards this
    // Aim one gap above the required clearance: pairs above the aim may
    // approach but not pass it, pairs below it must improve by the gap each
    // step. The gap is headroom for the exact-distance recheck — a solution
    // riding its linearized constraint exactly at the floor loses distance to
    // surface curvature on every step, which the recheck would reject forever.
    const double target = std::min(min_clearance, pair.distance) + params.constraint_gap;
    rows.push_back(grad.d_dq);
    row_lower.push_back(target - pair.distance);
  }

  QpProblem qp;
  const double diag = 2.0 * (params.w_track + params.w_smooth / (dt * dt) + params.w_drift);
  qp.H = diag * Eigen::MatrixXd::Identity(dof, dof);
  qp.g = 2.0 * (params.w_track * (state.q - desired) - (params.w_smooth / dt) * state.qdot);
  qp.A.resize(rows.size(), dof);
  qp.lower.resize(rows.size());
  qp.upper = Eigen::VectorXd::Constant(rows.size(), std::numeric_limits<double>::infinity());
  for (size_t r = 0; r < rows.size(); ++r) {
    qp.A.row(r) = rows[r].transpose();
    qp.lower[r] = row_lower[r];
  }
  qp.x_lb = lb;
  qp.x_ub = ub;

  const QpSolution sol = solve_qp(qp, {}, warm);
  if (warm) {
    warm->x = sol.x;
    warm->y = sol.y;
  }

  StepQpResult out;
  out.status = sol.status;
  out.active_pairs = static_cast<int>(rows.size());
  if (sol.status == QpStatus::Optimal) {
    const Eigen::VectorXd dq = sol.x.cwiseMax(lb).cwiseMin(ub);  // exact bound adherence
    out.q = state.q + dq;
    out.qdot = dq / dt;
  } else {
    out.q = state.q;
    out.qdot = Eigen::VectorXd::Zero(dof);
  }
  return out;
}

Corrector::Corrector(const ArmModel& model, const Scene& scene, const CorrectorParams& params)
    : model_(model), scene_(scene), params_(params) {
  if (params_.t1 <= 0.0 || params_.dt <= 0.0 || params_.t1 < params_.dt) {
    throw std::invalid_argument("Corrector: t1 and dt must be positive with t1 >= dt");
  }
  if (params_.d_coll_buff <= 0.0) {
    throw std::invalid_argument("Corrector: d_coll_buff must be positive");
  }
  // Pairs beyond this distance cannot cross into the buffer within one step,
  // so they need no constraint row. Lower-bounded by 5x the buffer.
  const double step_reach = max_cartesian_step(model_, model_.qdot_max * params_.dt);
  activation_radius_ =
      std::max(5.0 * params_.d_coll_buff, params_.d_coll_buff + step_reach + 1e-6);
}

CorrectedTrajectory Corrector::correct(const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0,
                                       const Eigen::VectorXd& q1, const Eigen::VectorXd& qdot1,
                                       const Eigen::VectorXd& q_last_safe) const {
  const int dof = model_.dof;
  if (q0.size() != dof || qdot0.size() != dof || q1.size() != dof || qdot1.size() != dof ||
      q_last_safe.size() != dof) {
    throw std::invalid_argument("correct: state sizes must match the model dof");
  }
  {
    JointState probe{q0, Eigen::VectorXd()};
    const LimitReport lims = check_joint_limits(model_, probe);
    if (!lims.ok()) {
      throw std::invalid_argument("correct: q0 violates joint limits");
    }
  }
  // Observed velocities may carry controller transients; the plan itself only
  // ever commands velocities inside the bounds.
  const Eigen::VectorXd v0 = qdot0.cwiseMax(-model_.qdot_max).cwiseMin(model_.qdot_max);

  CorrectedTrajectory traj;
  const double exact0 = exact_min_distance(model_, scene_, q0);
  traj.used_failsafe = exact0 < params_.d_coll_buff;
  const Eigen::VectorXd target = traj.used_failsafe ? q_last_safe : q1;
  const Eigen::VectorXd vtarget =
      traj.used_failsafe ? Eigen::VectorXd::Zero(dof) : qdot1;
  // Clearance demanded of every point. Starts closer than this (but still
  // outside the buffer) cannot jump outward instantly, so the floor ratchets:
  // never worse than the previous point, up to the margined buffer.
  const double margined = params_.d_coll_buff + params_.exec_margin;

  const int m = params_.num_points();
  const bool interpolate = (target - q0).norm() > params_.interpolate_threshold;
  const CubicHermite spline(q0, v0, target, vtarget, params_.t1);

  JointState state{q0, v0};
  QpWarmStart warm;
  traj.points.reserve(m);
  traj.per_point_min_distance.reserve(m);
  bool infeasible = false;
  double exact_prev = exact0;

  for (int k = 0; k < m; ++k) {
    const double t = k * params_.dt;
    if (infeasible) {  // hold the last feasible point to the horizon
      traj.points.push_back({state.q, Eigen::VectorXd::Zero(dof), t});
      traj.per_point_min_distance.push_back(exact_prev);
      continue;
    }
    const Eigen::VectorXd desired = interpolate ? spline.position(t) : target;
    // Rows below the margined buffer demand improvement (the escape case);
    // everything else keeps the full clearance plus the solver's aim gap.
    StepQpResult step = step_qp(model_, scene_, state, desired, params_, activation_radius_,
                                margined, 1.0, &warm);
    if (step.status != QpStatus::Optimal) {
      traj.hit_infeasible = true;
      infeasible = true;
      traj.points.push_back({state.q, Eigen::VectorXd::Zero(dof), t});
      traj.per_point_min_distance.push_back(exact_prev);
      continue;
    }

    // Linearization guard: the constraint was linear, the world is not.
    // Shrink the step until the exact clearance holds, else hold position
    // (the previous point met the floor, so holding always does).
    const double floor = std::min(margined, exact_prev);
    double exact = exact_min_distance(model_, scene_, step.q);
    double scale = 1.0;
    int halvings = 0;
    while (exact < floor - 1e-9 && halvings < params_.max_halvings) {
      scale *= 0.5;
      ++halvings;
      traj.halved_steps = true;
      step = step_qp(model_, scene_, state, desired, params_, activation_radius_,
                     margined, scale, &warm);
      if (step.status != QpStatus::Optimal) break;
      exact = exact_min_distance(model_, scene_, step.q);
    }
    if (step.status != QpStatus::Optimal || exact < floor - 1e-9) {
      step.q = state.q;
      step.qdot = Eigen::VectorXd::Zero(dof);
      exact = exact_prev;
      traj.halved_steps = true;
    }

    traj.points.push_back({step.q, step.qdot, t});
    traj.per_point_min_distance.push_back(exact);
    state.q = step.q;
    state.qdot = step.qdot;
    exact_prev = exact;
  }
  return traj;
}

}  // namespace safecor
