"""Swimmer kinematics: helix geometry and the averaged-frame transform."""
import math

import numpy as np
import pytest

from chemoseek.geometry import rot_exp
from chemoseek.kinematics import (
    AveragedPose,
    Pose,
    SwimmerParams,
    averaged_frame,
    averaged_frames,
    body_velocity,
    feedback_coefficients,
    helix_invariants,
    periodic_offset,
    pose_derivative,
)

L0 = 200.0

FIG2 = SwimmerParams(v=200.0, omega_par_0=-5.0, omega_perp_0=-7.0,
                     omega_par_1=-5.0, omega_perp_1=-1.0)
PLANAR = SwimmerParams(v=200.0, omega_par_0=0.0, omega_perp_0=-7.0,
                       omega_par_1=0.0, omega_perp_1=-1.0)


def random_params(rng):
    while True:
        w = rng.uniform(-8.0, 8.0, size=4)
        if math.hypot(w[0], w[1]) > 0.5:
            return SwimmerParams(v=rng.uniform(50.0, 300.0),
                                 omega_par_0=w[0], omega_perp_0=w[1],
                                 omega_par_1=w[2], omega_perp_1=w[3])


def test_params_validation():
    with pytest.raises(ValueError):
        SwimmerParams(v=0.0, omega_par_0=-5.0, omega_perp_0=-7.0)
    with pytest.raises(ValueError):
        SwimmerParams(v=-1.0, omega_par_0=-5.0, omega_perp_0=-7.0)
    with pytest.raises(ValueError):
        SwimmerParams(v=200.0, omega_par_0=0.0, omega_perp_0=0.0)
    with pytest.raises(ValueError):
        SwimmerParams(v=float("nan"), omega_par_0=-5.0, omega_perp_0=-7.0)


def test_derived_quantities():
    assert FIG2.omega == pytest.approx(math.sqrt(74.0), rel=1e-15)
    assert FIG2.eps == pytest.approx(1.0 / math.sqrt(74.0), rel=1e-15)
    assert FIG2.period == pytest.approx(2.0 * math.pi / math.sqrt(74.0), rel=1e-15)
    assert np.allclose(FIG2.base_rates, [-5.0, 0.0, -7.0], atol=0)
    assert np.allclose(FIG2.gain_rates, [-5.0, 0.0, -1.0], atol=0)
    assert np.linalg.norm(FIG2.spin_axis) == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(FIG2.spin_axis * FIG2.omega, FIG2.base_rates, atol=1e-13)


def test_body_velocity():
    V, Om = body_velocity(FIG2, 0.0)
    assert np.array_equal(V, [200.0, 0.0, 0.0])
    assert np.array_equal(Om, [-5.0, 0.0, -7.0])
    _, Om = body_velocity(FIG2, 1.0)
    assert np.allclose(Om, [-10.0, 0.0, -8.0], atol=0)
    with pytest.raises(ValueError):
        body_velocity(FIG2, float("inf"))


def test_pose_derivative():
    pose = Pose(p=np.zeros(3), R=np.eye(3))
    V, Om = body_velocity(FIG2, 0.3)
    dp, dR = pose_derivative(pose, V, Om)
    assert np.array_equal(dp, V)
    # R^T dR must be skew for any rotation R
    rng = np.random.default_rng(21)
    axis = rng.standard_normal(3)
    pose = Pose(p=rng.standard_normal(3), R=rot_exp(axis))
    dp, dR = pose_derivative(pose, V, Om)
    S = pose.R.T @ dR
    assert np.allclose(S, -S.T, atol=1e-13)
    assert abs(np.trace(S)) < 1e-13
    _, dR0 = pose_derivative(pose, V, np.zeros(3))
    assert np.allclose(dR0, 0.0, atol=0)


def test_helix_invariants_reference_tuning():
    inv = helix_invariants(FIG2)
    assert inv.radius == pytest.approx(7.0 / 74.0 * L0, rel=1e-14)
    assert inv.pitch_speed == pytest.approx(5.0 / math.sqrt(74.0) * L0, rel=1e-14)
    assert inv.period == pytest.approx(2.0 * math.pi / math.sqrt(74.0), rel=1e-14)
    # mean drift is along the spin axis with the pitch speed as magnitude
    assert np.linalg.norm(inv.V_bar) == pytest.approx(inv.pitch_speed, rel=1e-13)
    n = FIG2.spin_axis
    assert np.allclose(np.cross(inv.V_bar, n), 0.0, atol=1e-12)


def test_helix_invariants_planar_circle():
    inv = helix_invariants(PLANAR)
    assert np.allclose(inv.V_bar, 0.0, atol=0)
    assert inv.pitch_speed == 0.0
    assert inv.radius == pytest.approx(200.0 / 7.0, rel=1e-14)


def test_periodic_offset_zero_mean_and_periodicity():
    rng = np.random.default_rng(22)
    for _ in range(5):
        params = random_params(rng)
        phases = np.arange(256) * (2.0 * math.pi / 256.0)
        mean = np.mean([periodic_offset(params, s) for s in phases], axis=0)
        assert np.linalg.norm(mean) < 1e-10 * params.v
        s0 = rng.uniform(0.0, 2.0 * math.pi)
        assert np.allclose(periodic_offset(params, s0),
                           periodic_offset(params, s0 + 2.0 * math.pi), atol=1e-12)


def test_periodic_offset_radius():
    # eps * |offset| equals the helix radius at every phase
    rng = np.random.default_rng(23)
    for _ in range(5):
        params = random_params(rng)
        inv = helix_invariants(params)
        for s in rng.uniform(0.0, 7.0, size=4):
            r = params.eps * np.linalg.norm(periodic_offset(params, s))
            assert r == pytest.approx(inv.radius, rel=1e-12, abs=1e-12)


def test_feedback_coefficients_phase_zero():
    gain_vel, gain_rot = feedback_coefficients(FIG2, 0.0)
    assert np.allclose(gain_rot, FIG2.gain_rates, atol=1e-14)
    assert np.allclose(gain_vel, np.cross(periodic_offset(FIG2, 0.0), gain_rot),
                       atol=1e-12)


def test_feedback_coefficients_rotation_mean():
    # the mean of gain_rot over one cycle is the axial projection of the gains
    rng = np.random.default_rng(24)
    for _ in range(5):
        params = random_params(rng)
        phases = np.arange(256) * (2.0 * math.pi / 256.0)
        rots = np.array([feedback_coefficients(params, s)[1] for s in phases])
        n = params.spin_axis
        expected = (n @ params.gain_rates) * n
        assert np.allclose(rots.mean(axis=0), expected, atol=1e-10)


def test_feedback_coefficients_planar_constant_rotation():
    # with gains parallel to the spin axis the rotation coefficient is constant
    for s in (0.0, 1.0, 2.5, 6.0):
        _, gain_rot = feedback_coefficients(PLANAR, s)
        assert np.allclose(gain_rot, PLANAR.gain_rates, atol=1e-14)


def test_feedback_coefficients_velocity_mean_nonzero():
    # steering requires a nonzero mean velocity coefficient for skewed tunings
    phases = np.arange(512) * (2.0 * math.pi / 512.0)
    vels = np.array([feedback_coefficients(FIG2, s)[0] for s in phases])
    assert np.linalg.norm(vels.mean(axis=0)) > 1.0


def exact_unforced_pose(params, pose0, t):
    """Closed-form pose of the eta = 0 helix started from pose0."""
    bar0 = averaged_frame(pose0, 0.0, params)
    inv = helix_invariants(params)
    p_bar = bar0.p_bar + (bar0.R_bar @ inv.V_bar) * t
    E = rot_exp(params.base_rates * t)
    R = bar0.R_bar @ E
    sigma = params.omega * t
    p = p_bar + params.eps * (bar0.R_bar @ periodic_offset(params, sigma))
    return Pose(p=p, R=R), AveragedPose(p_bar=p_bar, R_bar=bar0.R_bar)


def test_averaged_frame_strips_helix():
    # on an exact helix the averaged frame is constant in rotation and drifts
    # linearly in position
    rng = np.random.default_rng(25)
    for _ in range(10):
        params = random_params(rng)
        pose0 = Pose(p=rng.uniform(-100.0, 100.0, size=3),
                     R=rot_exp(rng.standard_normal(3)))
        t = rng.uniform(0.0, 20.0)
        pose_t, bar_t = exact_unforced_pose(params, pose0, t)
        out = averaged_frame(pose_t, t, params)
        assert np.allclose(out.R_bar, bar_t.R_bar, atol=1e-11)
        assert np.allclose(out.p_bar, bar_t.p_bar, atol=1e-9 * L0)


def test_averaged_frame_identity_times():
    pose = Pose(p=np.array([3.0, -2.0, 7.0]), R=rot_exp(np.array([0.2, 0.4, -0.1])))
    out0 = averaged_frame(pose, 0.0, FIG2)
    assert np.allclose(out0.R_bar, pose.R, atol=0)
    expected_p = pose.p - FIG2.eps * (pose.R @ periodic_offset(FIG2, 0.0))
    assert np.allclose(out0.p_bar, expected_p, atol=1e-14)
    # after one full cycle the phase factor is the identity again
    outT = averaged_frame(pose, FIG2.period, FIG2)
    assert np.allclose(outT.R_bar, pose.R, atol=1e-13)
    with pytest.raises(ValueError):
        averaged_frame(pose, float("nan"), FIG2)


def test_averaged_frames_matches_scalar():
    rng = np.random.default_rng(26)
    t = np.sort(rng.uniform(0.0, 10.0, size=32))
    p = rng.uniform(-50.0, 50.0, size=(32, 3))
    R = np.array([rot_exp(rng.standard_normal(3)) for _ in range(32)])
    p_bar, R_bar = averaged_frames(t, p, R, FIG2)
    for i in range(32):
        one = averaged_frame(Pose(p=p[i], R=R[i]), float(t[i]), FIG2)
        assert np.allclose(p_bar[i], one.p_bar, atol=1e-11)
        assert np.allclose(R_bar[i], one.R_bar, atol=1e-12)
