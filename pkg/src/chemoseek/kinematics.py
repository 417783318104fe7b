"""Swimmer kinematics: body-frame velocities, pose derivatives, and the exact
averaged-frame transform.

The swimmer translates along its body x-axis at constant speed and rotates
with body rates (w_par, 0, w_perp), each rate being an affine function of the
steering feedback eta. With eta frozen at zero the motion is a helix; the
averaged frame strips that baseline helical wobble off the pose, leaving
slow dynamics driven purely by eta.

Averaged-frame identities used throughout (n is the unit baseline spin axis,
w the baseline spin magnitude, V the body velocity):

    drift      = (n . V) n                       mean body-frame velocity
    wobble(s)  = sin(s) V_perp - cos(s) (n x V_perp)   zero-mean, 2pi-periodic
    gain_rot(s)= exp(s hat(n)) @ gains           rotation-rate coefficient
    gain_vel(s)= wobble(s) x gain_rot(s)         velocity coefficient

With R_bar = R @ exp(hat(spin) t)^T and p_bar = p - (1/w) R_bar wobble(w t),
the transformed pose obeys

    d(p_bar)/dt = R_bar (eta/w * gain_vel(w t) + drift)
    d(R_bar)/dt = R_bar hat(gain_rot(w t)) eta

exactly, for any feedback signal eta(t). The test suite verifies this
identity by direct numerical integration, including the failure of the
opposite cross-product sign in gain_vel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import hat, rot_exp

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SwimmerParams:
    """Swim speed, baseline spin rates, and steering feedback gains.

    v is the body-frame speed (length/s, > 0). omega_par_0 / omega_perp_0 are
    the constant spin rates about the body x and z axes (rad/s); omega_par_1 /
    omega_perp_1 scale the dimensionless feedback into extra spin (rad/s per
    unit of feedback).
    """

    v: float
    omega_par_0: float
    omega_perp_0: float
    omega_par_1: float = 0.0
    omega_perp_1: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.v, self.omega_par_0, self.omega_perp_0,
                self.omega_par_1, self.omega_perp_1)
        if not all(math.isfinite(x) for x in vals):
            raise ValueError("swimmer parameters must be finite")
        if self.v <= 0.0:
            raise ValueError("swim speed v must be > 0")
        if self.omega == 0.0:
            raise ValueError("at least one constant spin rate must be nonzero")

    @property
    def omega(self) -> float:
        """Baseline spin magnitude sqrt(omega_perp_0^2 + omega_par_0^2) (rad/s)."""
        return math.hypot(self.omega_perp_0, self.omega_par_0)

    @property
    def eps(self) -> float:
        """Time scale of one swimming cycle, 1/omega (s)."""
        return 1.0 / self.omega

    @property
    def period(self) -> float:
        """Duration of one baseline swimming cycle, 2*pi/omega (s)."""
        return TWO_PI / self.omega

    @property
    def base_rates(self) -> np.ndarray:
        """Constant body angular velocity (omega_par_0, 0, omega_perp_0)."""
        return np.array([self.omega_par_0, 0.0, self.omega_perp_0])

    @property
    def gain_rates(self) -> np.ndarray:
        """Feedback gain vector (omega_par_1, 0, omega_perp_1)."""
        return np.array([self.omega_par_1, 0.0, self.omega_perp_1])

    @property
    def spin_axis(self) -> np.ndarray:
        """Unit vector along the baseline spin, base_rates / omega."""
        return self.base_rates / self.omega


@dataclass
class Pose:
    """Position and body-to-fixed rotation of the swimmer."""

    p: np.ndarray
    R: np.ndarray


@dataclass
class AveragedPose:
    """Pose with the baseline periodic swimming component removed."""

    p_bar: np.ndarray
    R_bar: np.ndarray


@dataclass(frozen=True)
class HelixInvariants:
    """Geometry of the feedback-free helix."""

    V_bar: np.ndarray      # mean body-frame velocity (length/s)
    radius: float          # helix radius (length)
    pitch_speed: float     # drift speed along the helix axis (length/s)
    period: float          # one turn (s)


def body_velocity(params: SwimmerParams, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame linear and angular velocity at feedback level eta."""
    if not math.isfinite(eta):
        raise ValueError("eta must be finite")
    V = np.array([params.v, 0.0, 0.0])
    Omega = np.array([
        params.omega_par_0 + params.omega_par_1 * eta,
        0.0,
        params.omega_perp_0 + params.omega_perp_1 * eta,
    ])
    return V, Omega


def pose_derivative(pose: Pose, V: np.ndarray, Omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative of the pose: dp = R V, dR = R hat(Omega)."""
    return pose.R @ V, pose.R @ hat(Omega)


def _drift_and_wobble_basis(params: SwimmerParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the body velocity into its axial mean and transverse circle basis."""
    n = params.spin_axis
    V = np.array([params.v, 0.0, 0.0])
    V_bar = (n @ V) * n
    V_perp = V - V_bar
    return V_bar, V_perp, np.cross(n, V_perp)


def helix_invariants(params: SwimmerParams) -> HelixInvariants:
    """Closed-form geometry of the unforced (eta = 0) helical path."""
    w = params.omega
    V_bar, _, _ = _drift_and_wobble_basis(params)
    return HelixInvariants(
        V_bar=V_bar,
        radius=params.v * abs(params.omega_perp_0) / (w * w),
        pitch_speed=params.v * abs(params.omega_par_0) / w,
        period=params.period,
    )


def periodic_offset(params: SwimmerParams, sigma: float) -> np.ndarray:
    """Zero-mean periodic position wobble, evaluated at phase sigma = omega*t.

    Scaled so that eps * periodic_offset carries length: the unforced path is
    p(t) = p_bar(t) + eps * R_bar @ periodic_offset(params, omega*t).
    """
    _, V_perp, n_x_Vperp = _drift_and_wobble_basis(params)
    s = math.remainder(sigma, TWO_PI)
    return math.sin(s) * V_perp - math.cos(s) * n_x_Vperp


def feedback_coefficients(params: SwimmerParams, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Periodic coefficients multiplying the feedback in the averaged dynamics.

    Returns (gain_vel, gain_rot) at phase sigma: the averaged rotation rate is
    R_bar hat(gain_rot) * eta and the averaged velocity gains
    R_bar gain_vel * eta * eps on top of the mean drift. Both are 2pi-periodic
    with nonzero mean (gain_rot averages to the axial projection of the gain
    vector).
    """
    s = math.remainder(sigma, TWO_PI)
    gain_rot = rot_exp(params.spin_axis * s) @ params.gain_rates
    gain_vel = np.cross(periodic_offset(params, s), gain_rot)
    return gain_vel, gain_rot


def averaged_frame(pose: Pose, t: float, params: SwimmerParams) -> AveragedPose:
    """Strip the baseline periodic swimming component off a pose at time t."""
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    sigma = math.remainder(params.omega * t, TWO_PI)
    E = rot_exp(params.spin_axis * sigma)
    R_bar = pose.R @ E.T
    p_bar = pose.p - params.eps * (R_bar @ periodic_offset(params, sigma))
    return AveragedPose(p_bar=p_bar, R_bar=R_bar)


def averaged_frames(t: np.ndarray, p: np.ndarray, R: np.ndarray,
                    params: SwimmerParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized averaged_frame over trajectory arrays.

    t has shape (n,), p (n, 3), R (n, 3, 3); returns (p_bar, R_bar) with the
    same shapes as (p, R).
    """
    sigma = np.remainder(params.omega * np.asarray(t, dtype=float), TWO_PI)
    n = params.spin_axis
    H = hat(n)
    H2 = H @ H
    # Rodrigues for a fixed axis and many angles: E = I + sin(s) H + (1-cos(s)) H^2
    sin_s = np.sin(sigma)[:, None, None]
    cos_s = np.cos(sigma)[:, None, None]
    E = np.eye(3)[None, :, :] + sin_s * H[None, :, :] + (1.0 - cos_s) * H2[None, :, :]
    R_bar = np.einsum('nij,nkj->nik', R, E)
    _, V_perp, n_x_Vperp = _drift_and_wobble_basis(params)
    delta = np.sin(sigma)[:, None] * V_perp[None, :] - np.cos(sigma)[:, None] * n_x_Vperp[None, :]
    p_bar = p - params.eps * np.einsum('nij,nj->ni', R_bar, delta)
    return p_bar, R_bar
