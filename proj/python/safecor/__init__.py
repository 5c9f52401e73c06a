"""Runtime safety correction for joint-space policies.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._safecor import (
    ArmModel,
    Box,
    Capsule,
    CorrectedTrajectory,
    Corrector,
    ControllerGains,
    CorrectorParams,
    EnvObservation,
    EnvParams,
    EpisodeRecord,
    ExperimentSummary,
    FkResult,
    GoalRegion,
    HalfSpace,
    Pose,
    ProximityReport,
    QpSolution,
    QpStatus,
    RewardBreakdown,
    ScenarioConfig,
    Scene,
    SimEnv,
    Sphere,
    TrajectoryPoint,
    clip_action,
    forward_kinematics,
    jacobian,
    kkt_residual,
    load_arm,
    load_arm_json,
    load_config,
    load_scene,
    load_scene_json,
    min_robot_env_distance,
    min_self_distance,
    pd_torque,
    primitive_distance,
    report_csv,
    report_json,
    reward,
    run_experiment,
    select_n,
    solve_qp,
)

__all__ = [
    "ArmModel",
    "Box",
    "Capsule",
    "CorrectedTrajectory",
    "Corrector",
    "ControllerGains",
    "CorrectorParams",
    "EnvObservation",
    "EnvParams",
    "EpisodeRecord",
    "ExperimentSummary",
    "FkResult",
    "GoalRegion",
    "HalfSpace",
    "Pose",
    "ProximityReport",
    "QpSolution",
    "QpStatus",
    "RewardBreakdown",
    "ScenarioConfig",
    "Scene",
    "SimEnv",
    "Sphere",
    "TrajectoryPoint",
    "clip_action",
    "forward_kinematics",
    "jacobian",
    "kkt_residual",
    "load_arm",
    "load_arm_json",
    "load_config",
    "load_scene",
    "load_scene_json",
    "min_robot_env_distance",
    "min_self_distance",
    "pd_torque",
    "primitive_distance",
    "report_csv",
    "report_json",
    "reward",
    "run_experiment",
    "select_n",
    "solve_qp",
]

__version__ = "0.1.0"
