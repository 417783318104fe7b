"""Diagnostics for the averaged picture of the closed loop.

Three claims about the slow dynamics are checked here against full
simulations: the sign condition that decides whether the loop climbs or
descends the concentration field, the proportionality of the climb rate
to the local gradient magnitude (with a fitted, never hard-coded, rate
constant), and the alignment of the mean swimming axis with the gradient
in 3D. A fourth utility integrates the averaged equations directly under
a prescribed feedback signal and measures how well they reconstruct the
full motion; the relation between the two is exact, so the error should
sit at the integrator's own tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernel
from .fields import FieldSpec, concentration_many, gradient_many
from .geometry import rot_exp
from .kinematics import SwimmerParams, periodic_offset
from .signaling import FilterParams, transfer_gain_phase
from .simulate import Trajectory


@dataclass(frozen=True)
class AscentReport:
    """Sign diagnosis of the slow dynamics, optionally with a fitted rate."""

    condition_value: float
    is_ascent: bool
    gamma_fit: float | None = None
    residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "condition_value": self.condition_value,
            "is_ascent": self.is_ascent,
            "gamma_fit": self.gamma_fit,
            "residual": self.residual,
        }


def transient_cutoff(swimmer: SwimmerParams, filt: FilterParams) -> float:
    """Time to discard before any quasi-steady fit."""
    return max(20.0 * filt.sigma1, 20.0 * filt.mu, 10.0 * swimmer.period)


def ascent_condition(swimmer: SwimmerParams, filt: FilterParams) -> AscentReport:
    """Evaluate omega_perp_0 * omega_perp_1 * sin(phase at the spin frequency).

    The loop climbs the field only when this product is strictly negative;
    zero (e.g. a tuning with no phase lag) is the boundary, not ascent.
    """
    _, phi = transfer_gain_phase(filt, swimmer.omega)
    value = swimmer.omega_perp_0 * swimmer.omega_perp_1 * math.sin(phi)
    return AscentReport(condition_value=value, is_ascent=value < 0.0)


def _period_bins(t: np.ndarray, values: np.ndarray, t_start: float,
                 period: float) -> tuple[np.ndarray, np.ndarray]:
    """Means of `values` over consecutive whole periods starting at t_start."""
    nbins = int(math.floor((t[-1] - t_start) / period))
    centers = np.empty(nbins)
    means = np.empty(nbins)
    idx = np.searchsorted(t, t_start + np.arange(nbins + 1) * period)
    for k in range(nbins):
        lo, hi = idx[k], idx[k + 1]
        if hi <= lo:
            raise ValueError("trajectory too sparsely recorded to bin by period")
        centers[k] = 0.5 * (t[lo] + t[hi - 1])
        means[k] = values[lo:hi].mean()
    return centers, means


def fit_gamma(traj: Trajectory, field: FieldSpec, swimmer: SwimmerParams,
              filt: FilterParams) -> AscentReport:
    """Fit the climb-rate constant on a planar run in a known field.

    The slow model says d/dt of the mean-path concentration equals
    gamma * (-omega_perp_0 * omega_perp_1 * sin(phi)) * |grad c|.
    Both sides are averaged over whole periods past the transient, then
    gamma comes from a least-squares fit through the origin. The residual
    is the relative RMS misfit.
    """
    if swimmer.omega_par_0 != 0.0 or swimmer.omega_par_1 != 0.0:
        raise ValueError("fit_gamma requires a planar tuning "
                         "(omega_par_0 = omega_par_1 = 0)")
    cut = transient_cutoff(swimmer, filt)
    period = swimmer.period
    if traj.t[-1] - cut < 50.0 * period:
        raise ValueError("need at least 50 periods past the transient "
                         f"(have {(traj.t[-1] - cut) / period:.1f})")
    report = ascent_condition(swimmer, filt)
    c_bar = concentration_many(field, traj.p_bar)
    gnorm = np.linalg.norm(gradient_many(field, traj.p_bar), axis=1)
    if not np.any(gnorm > 0.0):
        raise ValueError("zero gradient everywhere; nothing to fit")
    tc, c_means = _period_bins(traj.t, c_bar, cut, period)
    _, g_means = _period_bins(traj.t, gnorm, cut, period)
    y = np.gradient(c_means, tc)
    x = -report.condition_value * g_means
    sxx = float(x @ x)
    if sxx == 0.0:
        raise ValueError("regressor vanished; tuning has no steering signal")
    gamma = float(x @ y) / sxx
    rms_y = math.sqrt(float(y @ y) / y.size)
    resid = math.sqrt(float((y - gamma * x) @ (y - gamma * x)) / y.size)
    residual = resid / rms_y if rms_y > 0.0 else 0.0
    return AscentReport(condition_value=report.condition_value,
                        is_ascent=report.is_ascent,
                        gamma_fit=gamma, residual=residual)


def alignment_angle_series(traj: Trajectory, field: FieldSpec,
                           swimmer: SwimmerParams
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Angle between the slow-frame spin axis and the gradient, per row.

    The axis is the averaged frame applied to the unit spin axis. Note the
    spin axis is a line, not a ray: when the axial rate is negative the
    body drifts along the negative axis, so a perfectly source-bound
    approach shows up near 180 degrees rather than 0. Rows with zero
    gradient are omitted.
    """
    axis_lab = traj.R_bar @ swimmer.spin_axis
    grad = gradient_many(field, traj.p_bar)
    gn = np.linalg.norm(grad, axis=1)
    keep = gn > 0.0
    if not np.any(keep):
        return np.empty(0), np.empty(0)
    dots = np.einsum("ij,ij->i", axis_lab[keep], grad[keep]) / gn[keep]
    angles = np.arccos(np.clip(dots, -1.0, 1.0))
    return traj.t[keep], angles


class ExactnessReport(NamedTuple):
    max_pos_err: float
    max_rot_err: float


def exactness_error(swimmer: SwimmerParams,
                    eta_terms: Sequence[tuple[float, float, float]],
                    periods: int = 10,
                    steps_per_period: int = 2000,
                    p0: np.ndarray | None = None,
                    R0: np.ndarray | None = None,
                    flip_velocity_gain: bool = False) -> ExactnessReport:
    """Reconstruction error of the averaged dynamics against the full motion.

    Both systems are integrated under the same prescribed feedback signal
    eta(t) = sum of amp*sin(freq*t + phase) terms, then the full pose is
    rebuilt from the averaged one at every recorded row. The worst position
    error (absolute length units) and rotation error (Frobenius) over the
    run are returned. `flip_velocity_gain` negates the velocity coupling in
    the averaged system; the reconstruction then has no reason to hold, and
    tests use it to prove the comparison has teeth.
    """
    if periods < 1 or steps_per_period < 8:
        raise ValueError("need at least 1 period and 8 steps per period")
    p0 = np.zeros(3) if p0 is None else np.asarray(p0, dtype=float)
    R0 = np.eye(3) if R0 is None else np.asarray(R0, dtype=float)
    amp = np.array([a for a, _, _ in eta_terms], dtype=float)
    freq = np.array([f for _, f, _ in eta_terms], dtype=float)
    phase = np.array([q for _, _, q in eta_terms], dtype=float)
    dt = swimmer.period / steps_per_period
    nsteps = periods * steps_per_period
    stride = max(1, steps_per_period // 200)
    nrows = nsteps // stride + 1
    y0 = np.empty(12)
    y0[0:3] = p0
    y0[3:12] = R0.reshape(9)
    td = np.empty(nrows)
    yd = np.empty((nrows, 12))
    _kernel.integrate_direct_forced(
        y0, nsteps, dt, stride,
        swimmer.v, swimmer.omega_par_0, swimmer.omega_perp_0,
        swimmer.omega_par_1, swimmer.omega_perp_1,
        amp, freq, phase, td, yd)
    # the averaged system starts from the transformed pose: at t = 0 the
    # frame factor is the identity but the position sheds the wobble offset
    y0a = y0.copy()
    y0a[0:3] = p0 - swimmer.eps * (R0 @ periodic_offset(swimmer, 0.0))
    ta = np.empty(nrows)
    ya = np.empty((nrows, 12))
    sign = -1.0 if flip_velocity_gain else 1.0
    _kernel.integrate_averaged_forced(
        y0a, nsteps, dt, stride, sign,
        swimmer.v, swimmer.omega_par_0, swimmer.omega_perp_0,
        swimmer.omega_par_1, swimmer.omega_perp_1,
        amp, freq, phase, ta, ya)
    base = swimmer.base_rates
    eps = swimmer.eps
    max_pos = 0.0
    max_rot = 0.0
    for i in range(nrows):
        t = td[i]
        p_bar = ya[i, 0:3]
        R_bar = ya[i, 3:12].reshape(3, 3)
        p_rec = p_bar + eps * (R_bar @ periodic_offset(swimmer, swimmer.omega * t))
        R_rec = R_bar @ rot_exp(base * t)
        max_pos = max(max_pos, float(np.linalg.norm(yd[i, 0:3] - p_rec)))
        max_rot = max(max_rot, float(np.linalg.norm(
            yd[i, 3:12].reshape(3, 3) - R_rec)))
    return ExactnessReport(max_pos_err=max_pos, max_rot_err=max_rot)
