"""Minimal 3D rotation algebra: skew operator, rotation exponential, drift repair.

Rotation matrices map body-frame vectors to fixed-frame vectors. All functions
are pure and operate on plain numpy arrays (shape (3,) and (3, 3)).
"""
from __future__ import annotations

import numpy as np

# Below this rotation angle the Rodrigues formula is replaced by its
# second-order series to avoid a 0/0 in the normalized axis.
SMALL_ANGLE = 1e-8

_EYE3 = np.eye(3)


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of v, satisfying hat(v) @ w == np.cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rot_exp(v: np.ndarray) -> np.ndarray:
    """Rotation matrix exp(hat(v)) for a rotation vector v (radians).

    Uses the Rodrigues closed form; falls back to the second-order series
    for angles below SMALL_ANGLE.
    """
    v = np.asarray(v, dtype=float)
    angle = float(np.sqrt(v @ v))
    H = hat(v)
    if angle < SMALL_ANGLE:
        return _EYE3 + H + 0.5 * (H @ H)
    s = np.sin(angle) / angle
    c = (1.0 - np.cos(angle)) / (angle * angle)
    return _EYE3 + s * H + c * (H @ H)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Project a drifted rotation matrix onto the nearest rotation.

    Newton iteration for the orthogonal polar factor, X <- X (3I - X^T X)/2,
    which converges quadratically for inputs near SO(3). Raises ValueError
    for near-singular input (det <= 0.5); callers are expected to repair
    small integration drift, not arbitrary matrices.
    """
    R = np.asarray(R, dtype=float)
    if np.linalg.det(R) <= 0.5:
        raise ValueError("matrix too far from a rotation (det <= 0.5)")
    X = R
    for _ in range(8):
        err = X.T @ X - _EYE3
        if np.sqrt(np.sum(err * err)) <= 1e-13:
            break
        X = 1.5 * X - 0.5 * (X @ (X.T @ X))
    return X
