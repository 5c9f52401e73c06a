"""End-to-end smoke tests for the python bindings.

Requires SAFECOR_ASSET_DIR to point at the repository's assets directory and
the built extension on PYTHONPATH (ctest wires both up).
"""

import math
import os
import pathlib

import numpy as np
import pytest

import safecor

ASSETS = pathlib.Path(os.environ["SAFECOR_ASSET_DIR"])


@pytest.fixture(scope="module")
def arm():
    return safecor.load_arm(str(ASSETS / "arms" / "desk3.json"))


@pytest.fixture(scope="module")
def scene():
    return safecor.load_scene(str(ASSETS / "scenes" / "middle.json"))


def test_import_surface():
    assert safecor.__version__
    for name in ("Corrector", "SimEnv", "solve_qp", "run_experiment", "reward"):
        assert hasattr(safecor, name)


def test_arm_and_forward_kinematics(arm):
    assert arm.dof == 3
    assert arm.num_collision_bodies() == 4
    fk = safecor.forward_kinematics(arm, np.zeros(3))
    assert np.allclose(fk.end_effector.position, [0.0, 0.0, 0.85], atol=1e-12)

    J = safecor.jacobian(arm, np.zeros(3), fk.end_effector.position, arm.dof - 1)
    assert J.shape == (3, 3)
    # joint 0 spins the vertical axis: it cannot move a point on that axis
    assert np.allclose(J[:, 0], 0.0, atol=1e-12)


def test_primitive_distance():
    a = safecor.Sphere()
    a.radius = 0.1
    b = safecor.Sphere()
    b.radius = 0.2
    pa = safecor.Pose()
    pb = safecor.Pose()
    pb.position = np.array([0.45, 0.0, 0.0])
    rep = safecor.primitive_distance(a, pa, b, pb)
    assert rep.distance == pytest.approx(0.15, abs=1e-12)


def test_scene_queries(arm, scene):
    assert scene.num_obstacles() == 2
    rep = safecor.min_robot_env_distance(arm, np.zeros(3), scene)
    assert rep.distance > 0.0
    assert rep.body_a and rep.body_b


def test_solve_qp_box():
    H = 2.0 * np.eye(2)
    g = np.array([-2.0, -4.0])
    sol = safecor.solve_qp(H, g)
    assert sol.status == safecor.QpStatus.Optimal
    assert np.allclose(sol.x, [1.0, 2.0], atol=1e-8)

    sol = safecor.solve_qp(
        H, g,
        x_lb=np.array([-np.inf, -np.inf]),
        x_ub=np.array([0.5, np.inf]),
    )
    assert sol.status == safecor.QpStatus.Optimal
    assert np.allclose(sol.x, [0.5, 2.0], atol=1e-8)


def test_corrector_contract(arm, scene):
    params = safecor.CorrectorParams()
    assert params.num_points() == 11
    corrector = safecor.Corrector(arm, scene, params)

    q0 = np.array([-0.5247957717, 0.2654693458, 1.9474145069])
    q1 = q0 + np.array([0.05, -0.05, 0.05])
    traj = corrector.correct(q0, np.zeros(3), q1, np.zeros(3), q0)
    assert len(traj.points) == 11
    assert not traj.used_failsafe
    assert min(traj.per_point_min_distance) >= 0.015 - 1e-4
    assert traj.points[0].t == 0.0
    assert traj.points[-1].t == pytest.approx(0.5)


def test_reward_and_success_scalars():
    obj = np.array([0.25, 0.18, 0.15])
    peg = obj + np.array([0.06, 0.0, 0.08])  # 0.1 m away, same y
    r = safecor.reward(peg, obj, obj[1], obj[1], False)
    assert r.reach == pytest.approx(1.0 - math.tanh(1.0), abs=1e-9)
    assert r.y_align == 1.0
    assert r.gripper == 0.0
    assert r.total == r.reach + 0.5 * r.y_align + r.gripper


def test_select_n_and_clip():
    assert safecor.select_n(11) == 6
    assert safecor.select_n(11, fixed=7) == 7
    assert safecor.select_n(11, fixed=20) == 11
    clipped = safecor.clip_action(np.array([1.0, -0.05, -0.7]), 0.2)
    assert np.allclose(clipped, [0.2, -0.05, -0.2])


def test_pd_torque():
    gains = safecor.ControllerGains()
    tau = safecor.pd_torque(gains, np.full(3, 0.1), np.zeros(3), np.zeros(3))
    assert np.allclose(tau, 5.0)


def test_sim_env_round_trip(arm, scene):
    start = np.array([-0.5247957717, 0.2654693458, 1.9474145069])
    env = safecor.SimEnv(arm, scene, start, safecor.EnvParams())
    obs = env.reset(3)
    assert obs.q.shape == (3,)
    assert obs.min_distance >= 0.02
    assert not obs.done
    obs = env.step(obs.q)  # hold in place
    assert not obs.collided
    assert obs.substep_min_distance <= obs.min_distance + 1e-15


def test_two_episode_experiment_and_report_determinism():
    cfg = safecor.load_config(str(ASSETS / "configs" / "middle.json"))
    cfg.episodes = 2
    first = safecor.run_experiment(cfg, jobs=1)
    second = safecor.run_experiment(cfg, jobs=2)
    assert first.episodes == 2
    assert first.collisions == 0
    assert first.min_proximity >= 0.015
    assert first.success_rate == 1.0

    csv_a = safecor.report_csv(first)
    csv_b = safecor.report_csv(second)
    assert csv_a == csv_b
    assert csv_a.startswith("episode,collided,min_proximity_m,success,policy_queries,wall_time_s\n")
    assert csv_a.count("\n") == 3
