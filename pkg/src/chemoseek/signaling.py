"""Signaling pathway model: a two-stage band-pass filter with an adaptive
output gain, plus the analytic frequency response of its linear part.

The filter tracks a stimulus s(t) with a fast stage (time constant sigma2)
and a slow stage (sigma1); their difference zeta rejects constant stimulus
levels and passes mid-band variation. The gain state rho adapts on the time
scale mu so that the output eta = rho * zeta settles near unit amplitude
regardless of how strong the stimulus swings are.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FilterParams:
    """Time constants (s) and gain ceiling of the signaling filter."""

    sigma1: float
    sigma2: float
    mu: float
    rho_max: float = 1e6

    def __post_init__(self) -> None:
        if not all(math.isfinite(x) for x in (self.sigma1, self.sigma2, self.mu, self.rho_max)):
            raise ValueError("filter parameters must be finite")
        if not (0.0 < self.sigma2 <= self.sigma1):
            raise ValueError("need 0 < sigma2 <= sigma1")
        if self.mu <= 0.0:
            raise ValueError("mu must be > 0")
        if self.rho_max < 1.0:
            raise ValueError("rho_max must be >= 1")


@dataclass
class FilterState:
    """Internal filter states (concentration scale) and adaptive gain."""

    zeta1: float
    zeta2: float
    rho: float = 1.0


def filter_derivative(state: FilterState, params: FilterParams,
                      s: float) -> tuple[float, float, float]:
    """Time derivatives (dzeta1, dzeta2, drho) under stimulus s.

    The gain derivative is clipped to be non-increasing once rho has reached
    rho_max; without stimulus variation the gain equation would otherwise
    grow without bound.
    """
    zeta = state.zeta2 - state.zeta1
    eta = state.rho * zeta
    dz1 = zeta / params.sigma1
    dz2 = (s - state.zeta2) / params.sigma2
    drho = state.rho * (1.0 - eta * eta) / params.mu
    if state.rho >= params.rho_max:
        drho = min(drho, 0.0)
    return dz1, dz2, drho


def filter_output(state: FilterState) -> float:
    """Steering feedback eta = rho * (zeta2 - zeta1)."""
    return state.rho * (state.zeta2 - state.zeta1)


def transfer_gain_phase(params: FilterParams, freq: float) -> tuple[float, float]:
    """Gain and phase of the linear stage (stimulus -> zeta) at freq (rad/s).

    gain = sigma1*f / sqrt((1 + sigma1^2 f^2)(1 + sigma2^2 f^2))
    phase = pi/2 - atan(sigma1 f) - atan(sigma2 f), in (-pi/2, pi/2]
    """
    if freq < 0.0:
        raise ValueError("freq must be >= 0")
    a = params.sigma1 * freq
    b = params.sigma2 * freq
    gain = a / math.sqrt((1.0 + a * a) * (1.0 + b * b))
    phase = 0.5 * math.pi - math.atan(a) - math.atan(b)
    return gain, phase


def quasi_steady_fit(t: np.ndarray, values: np.ndarray,
                     freq: float) -> tuple[float, float, float]:
    """Least-squares fit of a + b*cos(freq*t + psi) to a sampled signal.

    Returns (a, b, psi) with b >= 0; psi is reported as 0 when the harmonic
    amplitude is negligible. Requires coverage of at least 5 periods at an
    average of 32 samples per period.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.shape != values.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-d arrays of equal length")
    if freq <= 0.0:
        raise ValueError("freq must be > 0")
    period = 2.0 * math.pi / freq
    span = t[-1] - t[0]
    if span < 5.0 * period:
        raise ValueError("series must cover at least 5 periods")
    if len(t) < 32 * span / period:
        raise ValueError("series must average at least 32 samples per period")
    design = np.column_stack([np.ones_like(t), np.cos(freq * t), np.sin(freq * t)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    a, c, s = coef
    b = math.hypot(c, s)
    # below rounding level the phase is meaningless; report 0 by convention
    psi = math.atan2(-s, c) if b > 1e-12 * max(1.0, abs(a)) else 0.0
    return float(a), float(b), float(psi)
