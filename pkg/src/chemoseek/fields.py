"""Analytic concentration fields with exact gradients, and stimulus sampling
with optional additive noise.

Four field variants are supported:

    radial-inverse   c(p) = l0 / max(|p - source|, clamp_radius)
    linear           c(p) = max(0, offset + slope * direction . (p - source))
    gaussian         c(p) = peak * exp(-|p - source|^2 / (2 width^2))
    uniform          c(p) = level

The radial variant diverges at the source; the clamp keeps values finite and
defines the arrival radius used by the simulator. Inside the clamp the
gradient is zero. The linear gradient is the unclamped slope everywhere (the
max(0, .) only enforces physical non-negativity of the concentration).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VARIANTS = ("radial-inverse", "linear", "gaussian", "uniform")
NOISE_KINDS = ("none", "additive-gaussian")


def _as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError("expected a 3-vector")
    return v


@dataclass(frozen=True)
class FieldSpec:
    """Concentration field description.

    Only the parameters of the chosen variant matter; the rest keep their
    defaults. `direction` is normalized on construction.
    """

    variant: str
    source: np.ndarray = field(default_factory=lambda: np.zeros(3))
    l0: float = 200.0            # length scale; strength of the radial variant
    clamp_radius: float | None = None   # default 0.01 * l0
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    slope: float = 1.0           # linear: concentration per length
    offset: float = 0.0          # linear: concentration at the source point
    width: float = 1.0           # gaussian
    peak: float = 1.0            # gaussian
    level: float = 1.0           # uniform

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown field variant {self.variant!r}")
        object.__setattr__(self, "source", _as_vec3(self.source))
        if self.l0 <= 0.0:
            raise ValueError("l0 must be > 0")
        if self.clamp_radius is None:
            object.__setattr__(self, "clamp_radius", 0.01 * self.l0)
        if self.clamp_radius <= 0.0:
            raise ValueError("clamp_radius must be > 0")
        d = _as_vec3(self.direction)
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "direction", d / norm)
        if self.width <= 0.0:
            raise ValueError("width must be > 0")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive stimulus noise: kind, standard deviation, and seed."""

    kind: str = "none"
    std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.std < 0.0:
            raise ValueError("std must be >= 0")


def concentration(spec: FieldSpec, p: np.ndarray) -> float:
    """Concentration value at p (always >= 0)."""
    p = np.asarray(p, dtype=float)
    d = p - spec.source
    if spec.variant == "radial-inverse":
        r = max(float(np.linalg.norm(d)), spec.clamp_radius)
        return spec.l0 / r
    if spec.variant == "linear":
        return max(0.0, spec.offset + spec.slope * float(spec.direction @ d))
    if spec.variant == "gaussian":
        r2 = float(d @ d)
        return spec.peak * math.exp(-r2 / (2.0 * spec.width ** 2))
    return spec.level


def gradient(spec: FieldSpec, p: np.ndarray) -> np.ndarray:
    """Exact gradient of the concentration at p."""
    p = np.asarray(p, dtype=float)
    d = p - spec.source
    if spec.variant == "radial-inverse":
        r = float(np.linalg.norm(d))
        if r <= spec.clamp_radius:
            return np.zeros(3)
        return -spec.l0 * d / r ** 3
    if spec.variant == "linear":
        return spec.slope * spec.direction.copy()
    if spec.variant == "gaussian":
        c = concentration(spec, p)
        return -c * d / spec.width ** 2
    return np.zeros(3)


def concentration_many(spec: FieldSpec, P: np.ndarray) -> np.ndarray:
    """Concentration at each row of an (n, 3) array of positions."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    d = P - spec.source
    if spec.variant == "radial-inverse":
        r = np.maximum(np.linalg.norm(d, axis=1), spec.clamp_radius)
        return spec.l0 / r
    if spec.variant == "linear":
        return np.maximum(0.0, spec.offset + spec.slope * (d @ spec.direction))
    if spec.variant == "gaussian":
        r2 = np.einsum("ij,ij->i", d, d)
        return spec.peak * np.exp(-r2 / (2.0 * spec.width ** 2))
    return np.full(P.shape[0], spec.level)


def gradient_many(spec: FieldSpec, P: np.ndarray) -> np.ndarray:
    """Gradient at each row of an (n, 3) array of positions."""
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    d = P - spec.source
    if spec.variant == "radial-inverse":
        r = np.linalg.norm(d, axis=1)
        out = np.zeros_like(d)
        far = r > spec.clamp_radius
        out[far] = -spec.l0 * d[far] / r[far, None] ** 3
        return out
    if spec.variant == "linear":
        return np.broadcast_to(spec.slope * spec.direction, d.shape).copy()
    if spec.variant == "gaussian":
        c = concentration_many(spec, P)
        return -c[:, None] * d / spec.width ** 2
    return np.zeros_like(d)


def make_rng(noise: NoiseSpec, stream: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for (seed, stream).

    Distinct streams (e.g. sweep grid indices) give statistically independent
    sequences for the same seed; identical (seed, stream) pairs reproduce
    bit-identical draws.
    """
    return np.random.default_rng(np.random.SeedSequence(noise.seed, spawn_key=(stream,)))


def sample_stimulus(spec: FieldSpec, noise: NoiseSpec, p: np.ndarray,
                    rng: np.random.Generator) -> tuple[float, np.random.Generator]:
    """Concentration at p plus one noise draw; advances and returns the rng."""
    s = concentration(spec, p)
    if noise.kind == "additive-gaussian" and noise.std > 0.0:
        s += noise.std * float(rng.standard_normal())
    return s, rng


def noise_sequence(noise: NoiseSpec, n: int, stream: int = 0) -> np.ndarray:
    """Pre-drawn additive noise values for n stimulus evaluations."""
    if noise.kind == "additive-gaussian" and noise.std > 0.0:
        return noise.std * make_rng(noise, stream).standard_normal(n)
    return np.zeros(n)
