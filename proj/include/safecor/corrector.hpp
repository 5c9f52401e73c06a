#pragma once

#include <vector>

#include <Eigen/Dense>

#include "safecor/arm_model.hpp"
#include "safecor/geometry.hpp"
#include "safecor/qp.hpp"

namespace safecor {

struct CorrectorParams {
  double t1 = 0.5;               // trajectory horizon, s
  double dt = 0.05;              // point spacing, s
  double d_coll_buff = 0.015;    // hard clearance kept from every collision pair, m
  double w_track = 1.0;          // tracking weight
  double w_smooth = 1e-6;        // velocity-smoothness weight
  double w_drift = 1e-6;         // step-magnitude regularization
  double interpolate_threshold = 0.02;  // |q1-q0| above which the spline is used, rad
  int max_halvings = 3;          // step-halving retries when linearization slips
  // Extra clearance enforced on top of d_coll_buff. The buffer is guaranteed
  // at the trajectory samples; a tracking plant moves between them, and this
  // margin absorbs that inter-sample motion so the buffer holds continuously.
  double exec_margin = 0.003;
  // The QP aims this far above the clearance it must guarantee. Linearized
  // steps lose distance to surface curvature; without headroom between what
  // the QP targets and what the exact recheck demands, sliding along an
  // obstacle degenerates into a permanent position hold.
  double constraint_gap = 0.001;

  /// Number of points the horizon produces: t = 0, dt, ..., t1 inclusive.
  int num_points() const { return static_cast<int>(std::lround(t1 / dt)) + 1; }
};

struct TrajectoryPoint {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  double t = 0.0;
};

struct CorrectedTrajectory {
  std::vector<TrajectoryPoint> points;
  std::vector<double> per_point_min_distance;  // exact, re-evaluated per point, m
  bool used_failsafe = false;   // start state was inside the buffer; target replaced
  bool hit_infeasible = false;  // a step QP had no solution; held position from there
  bool halved_steps = false;    // at least one point needed linearization guards
};

struct StepQpResult {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  QpStatus status = QpStatus::MaxIterations;
  int active_pairs = 0;
};

/// One correction step: solves for dq around `state` so that q + dq tracks
/// `desired` subject to joint limits, the per-step velocity bound, and a
/// linearized clearance constraint for every proximity pair closer than
/// `activation_radius`. `min_clearance` is the right-hand side applied to
/// those constraints (the buffer, or the relaxed escape value).
StepQpResult step_qp(const ArmModel& model, const Scene& scene, const JointState& state,
                     const Eigen::VectorXd& desired, const CorrectorParams& params,
                     double activation_radius, double min_clearance,
                     double velocity_scale = 1.0, QpWarmStart* warm = nullptr);

/// Repairs a requested joint-space motion into a trajectory that keeps every
/// collision pair at least d_coll_buff away and respects joint limits.
class Corrector {
 public:
  Corrector(const ArmModel& model, const Scene& scene, const CorrectorParams& params);

  /// Correct the move from (q0, qdot0) toward (q1, qdot1). If q0 is already
  /// inside the buffer the target is replaced with q_last_safe and the
  /// clearance constraint is relaxed to "never get worse" so the arm can
  /// retreat. Throws std::invalid_argument when q0 violates joint limits or
  /// sizes mismatch.
  CorrectedTrajectory correct(const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0,
                              const Eigen::VectorXd& q1, const Eigen::VectorXd& qdot1,
                              const Eigen::VectorXd& q_last_safe) const;

  /// Pairs farther than this cannot cross into the buffer within one step;
  /// recomputed from the model's reach and velocity bounds at construction.
  double activation_radius() const { return activation_radius_; }

  const CorrectorParams& params() const { return params_; }

 private:
  const ArmModel& model_;
  const Scene& scene_;
  CorrectorParams params_;
  double activation_radius_;
};

/// Conservative bound on how far any body point can move (in meters) when the
/// joints move by dq_max each (radians, per-joint).
double max_cartesian_step(const ArmModel& model, const Eigen::VectorXd& dq_max);

}  // namespace safecor
