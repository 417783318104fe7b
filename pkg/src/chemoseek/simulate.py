"""Closed-loop simulation of the steered helical swimmer.

The joint state is 15-dimensional: position (3), body rotation (9,
row-major), the two filter stages and the adaptive gain. A fixed-step
4th-order scheme advances the whole state at once so the phase relation
between stimulus and feedback is preserved exactly; adaptive stepping
would break bit-reproducibility across runs and sweeps.

`run` drives the compiled kernel and attaches the averaged-frame columns;
`step` is a plain-numpy reference of the same recurrence, kept for tests
and debugging (the two are cross-checked in the test suite).
"""
from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from . import _kernel
from .fields import FieldSpec, NoiseSpec, concentration, noise_sequence
from .geometry import hat, orthonormalize
from .kinematics import SwimmerParams, averaged_frames, body_velocity
from .signaling import FilterParams, FilterState, filter_derivative

_FIELD_CODES = {"uniform": 0, "radial-inverse": 1, "linear": 2, "gaussian": 3}


def _pack_field(spec: FieldSpec) -> tuple[int, np.ndarray]:
    """Flatten a field spec into (code, 8-float params) for the kernel."""
    fp = np.zeros(8)
    if spec.variant == "uniform":
        fp[0] = spec.level
    elif spec.variant == "radial-inverse":
        fp[0] = spec.l0
        fp[1:4] = spec.source
        fp[4] = spec.clamp_radius
    elif spec.variant == "linear":
        fp[0] = spec.offset
        fp[1:4] = spec.source
        fp[4] = spec.slope
        fp[5:8] = spec.direction
    else:
        fp[0] = spec.peak
        fp[1:4] = spec.source
        fp[4] = spec.width
    return _FIELD_CODES[spec.variant], fp


@dataclass(frozen=True)
class SimConfig:
    """Everything needed for one deterministic run."""

    swimmer: SwimmerParams
    filter: FilterParams
    field: FieldSpec
    t_end: float
    dt: float | None = None
    noise: NoiseSpec = dc_field(default_factory=NoiseSpec)
    p0: np.ndarray = dc_field(default_factory=lambda: np.zeros(3))
    R0: np.ndarray = dc_field(default_factory=lambda: np.eye(3))
    zeta1_0: float | None = None
    zeta2_0: float | None = None
    rho0: float = 1.0
    record_stride: int = 1
    renorm_stride: int = 1
    stream: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float).reshape(3).copy())
        R0 = np.asarray(self.R0, dtype=float).reshape(3, 3)
        object.__setattr__(self, "R0", orthonormalize(R0))
        if self.dt is None:
            object.__setattr__(self, "dt", self.swimmer.period / 200.0)
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end >= self.dt):
            raise ValueError(f"t_end must satisfy t_end >= dt, got {self.t_end}")
        if self.dt > self.swimmer.period / 50.0:
            warnings.warn(
                f"dt={self.dt:g} exceeds period/50={self.swimmer.period / 50.0:g}; "
                "helix resolution will be poor",
                stacklevel=2,
            )
        for name in ("record_stride", "renorm_stride"):
            val = getattr(self, name)
            if not isinstance(val, int) or val < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {val!r}")
        if not (math.isfinite(self.rho0) and self.rho0 > 0.0):
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        c0 = concentration(self.field, self.p0)
        if self.zeta1_0 is None:
            object.__setattr__(self, "zeta1_0", c0)
        if self.zeta2_0 is None:
            object.__setattr__(self, "zeta2_0", c0)
        if self.stream < 0:
            raise ValueError(f"stream must be >= 0, got {self.stream}")

    @property
    def n_steps(self) -> int:
        # tiny slack so t_end that is an exact multiple of dt in intent
        # is not lost to rounding
        return int(math.floor(self.t_end / self.dt + 1e-9))

    @property
    def n_rows(self) -> int:
        return self.n_steps // self.record_stride + 1

    def initial_state(self) -> np.ndarray:
        """Pack the initial condition into the 15-vector layout."""
        y = np.empty(15)
        y[0:3] = self.p0
        y[3:12] = self.R0.reshape(9)
        y[12] = self.zeta1_0
        y[13] = self.zeta2_0
        y[14] = self.rho0
        return y


@dataclass
class SimState:
    """Mutable cursor for the reference stepper."""

    y: np.ndarray
    t: float = 0.0
    step_index: int = 0


@dataclass(frozen=True)
class Trajectory:
    """Recorded rows of one run, including the averaged-frame columns."""

    t: np.ndarray
    p: np.ndarray
    R: np.ndarray
    s: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    rho: np.ndarray
    eta: np.ndarray
    p_bar: np.ndarray
    R_bar: np.ndarray
    status: str = "ok"
    abort_step: int | None = None

    @property
    def n_rows(self) -> int:
        return self.t.shape[0]


class ArrivalMetrics(NamedTuple):
    hit: bool
    t_hit: float
    min_dist: float
    final_c: float


def _rhs_reference(y: np.ndarray, s: float, swimmer: SwimmerParams,
                   filt: FilterParams) -> np.ndarray:
    """Reference right-hand side matching the compiled kernel."""
    state = FilterState(zeta1=y[12], zeta2=y[13], rho=y[14])
    eta = state.rho * (state.zeta2 - state.zeta1)
    V, Omega = body_velocity(swimmer, eta)
    R = y[3:12].reshape(3, 3)
    d = np.empty(15)
    d[0:3] = R @ V
    d[3:12] = (R @ hat(Omega)).reshape(9)
    d[12:15] = filter_derivative(state, filt, s)
    return d


def step(state: SimState, config: SimConfig, noise: float = 0.0) -> SimState:
    """One fixed-step advance of the reference recurrence.

    The noise value is held constant across the four stages, exactly as in
    the compiled path. Raises ArithmeticError on a non-finite result.
    """
    dt = config.dt
    swimmer, filt, fld = config.swimmer, config.filter, config.field
    y = state.y

    def stim(z: np.ndarray) -> float:
        return concentration(fld, z[0:3]) + noise

    try:
        k1 = _rhs_reference(y, stim(y), swimmer, filt)
        y2 = y + 0.5 * dt * k1
        k2 = _rhs_reference(y2, stim(y2), swimmer, filt)
        y3 = y + 0.5 * dt * k2
        k3 = _rhs_reference(y3, stim(y3), swimmer, filt)
        y4 = y + dt * k3
        k4 = _rhs_reference(y4, stim(y4), swimmer, filt)
    except ValueError as exc:
        # a stage state already overflowed; same failure as the final check
        raise ArithmeticError(
            f"non-finite state after step {state.step_index + 1}") from exc
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if out[14] > filt.rho_max:
        out[14] = filt.rho_max
    idx = state.step_index + 1
    if idx % config.renorm_stride == 0:
        out[3:12] = orthonormalize(out[3:12].reshape(3, 3)).reshape(9)
    if not np.all(np.isfinite(out)):
        raise ArithmeticError(f"non-finite state after step {idx}")
    return SimState(y=out, t=idx * dt, step_index=idx)


def run(config: SimConfig) -> Trajectory:
    """Integrate the closed loop and return the recorded trajectory.

    Deterministic for a given config: the stimulus noise sequence is drawn
    up front from the config's seed and stream. On a non-finite state the
    trajectory is truncated at the last good recorded row and flagged.
    """
    nsteps = config.n_steps
    nrows = config.n_rows
    noise = noise_sequence(config.noise, nsteps + 1, stream=config.stream)
    code, fp = _pack_field(config.field)
    out_t = np.empty(nrows)
    out_state = np.empty((nrows, 15))
    out_stim = np.empty(nrows)
    sw, fl = config.swimmer, config.filter
    status_code, rows, abort_step = _kernel.integrate(
        config.initial_state(), nsteps, config.dt,
        config.record_stride, config.renorm_stride,
        sw.v, sw.omega_par_0, sw.omega_perp_0, sw.omega_par_1, sw.omega_perp_1,
        fl.sigma1, fl.sigma2, fl.mu, fl.rho_max,
        code, fp, noise, out_t, out_state, out_stim)
    t = out_t[:rows]
    state = out_state[:rows]
    p = state[:, 0:3]
    R = state[:, 3:12].reshape(rows, 3, 3)
    zeta1 = state[:, 12]
    zeta2 = state[:, 13]
    rho = state[:, 14]
    eta = rho * (zeta2 - zeta1)
    p_bar, R_bar = averaged_frames(t, p, R, config.swimmer)
    if status_code == _kernel.STATUS_NONFINITE:
        status = "nonfinite"
        print(f"chemoseek: non-finite state at step {abort_step}; "
              f"trajectory truncated after row {rows - 1}", file=sys.stderr)
    else:
        status = "ok"
        abort_step = None
    return Trajectory(t=t, p=p, R=R, s=out_stim[:rows], zeta1=zeta1,
                      zeta2=zeta2, rho=rho, eta=eta, p_bar=p_bar, R_bar=R_bar,
                      status=status, abort_step=abort_step)


def arrival_metrics(traj: Trajectory, field: FieldSpec) -> ArrivalMetrics:
    """Whether and when the path first entered the source's clamp sphere.

    t_hit is the first recorded time within clamp_radius of the source,
    or the final recorded time when there is no hit.
    """
    if traj.n_rows == 0:
        raise ValueError("empty trajectory")
    dist = np.linalg.norm(traj.p - field.source, axis=1)
    inside = dist <= field.clamp_radius
    hit = bool(inside.any())
    t_hit = float(traj.t[int(np.argmax(inside))]) if hit else float(traj.t[-1])
    final_c = concentration(field, traj.p[-1])
    return ArrivalMetrics(hit=hit, t_hit=t_hit,
                          min_dist=float(dist.min()), final_c=final_c)
