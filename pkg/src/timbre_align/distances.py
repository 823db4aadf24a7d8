"""Pairwise distance functions over flattened representations.

All functions accept equal-dimension real vectors and accumulate in double
precision: the downstream rank metrics are sensitive to near-ties, so inputs
are promoted to float64 on entry regardless of their stored precision.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, ZeroVectorError

POINCARE_EPS = 1e-5


def _as_pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimensionError(f"vector dimensions differ: {u.size} vs {v.size}")
    if u.size < 1:
        raise DimensionError("vectors must have dimension >= 1")
    return u, v


def l2(u, v) -> float:
    """Euclidean distance."""
    u, v = _as_pair(u, v)
    return float(np.linalg.norm(u - v))


def l1(u, v) -> float:
    """Sum of absolute coordinate differences."""
    u, v = _as_pair(u, v)
    return float(np.abs(u - v).sum())


def cosine(u, v) -> float:
    """One minus the cosine similarity; in [0, 2] for non-zero vectors.

    The similarity is normalized by sqrt(<u,u> <v,v>), which keeps identical
    inputs at distance exactly 0, and clamped so rounding never leaves the
    [0, 2] range.
    """
    u, v = _as_pair(u, v)
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        raise ZeroVectorError("cosine distance is undefined for a zero vector")
    similarity = float(np.dot(u, v)) / math.sqrt(uu * vv)
    return 1.0 - min(1.0, max(-1.0, similarity))


def neg_dot(u, v) -> float:
    """Negative dot product. May be negative; per-block rescaling maps it to [0, 1]."""
    u, v = _as_pair(u, v)
    return float(-np.dot(u, v))


def poincare(u, v) -> float:
    """Hyperbolic distance on the open unit ball.

    arcosh(1 + 2 * |u - v|^2 / ((1 - |u|^2) (1 - |v|^2))). Callers must first
    bring vectors inside the ball, normally via ``ball_projection``.
    """
    u, v = _as_pair(u, v)
    nu2, nv2 = float(np.dot(u, u)), float(np.dot(v, v))
    diff2 = float(np.dot(u - v, u - v))
    denom = (1.0 - nu2) * (1.0 - nv2)
    if denom <= 0.0:
        raise ValueError(
            "points lie on or outside the unit ball; apply ball_projection first"
        )
    return float(np.arccosh(1.0 + 2.0 * diff2 / denom))


def ball_projection(vectors: np.ndarray, eps: float = POINCARE_EPS) -> tuple[np.ndarray, float]:
    """Scale a batch of vectors into the open unit ball by one common factor.

    If the largest norm reaches 1 - eps, every vector is multiplied by
    s = (1 - eps) / max-norm, preserving relative geometry; otherwise the
    batch is returned unchanged (s = 1). Returns (projected, s).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ValueError(f"expected a (n, dim) batch, got shape {vectors.shape}")
    max_norm = float(np.linalg.norm(vectors, axis=1).max()) if vectors.size else 0.0
    scale = projection_scale(max_norm, eps)
    if scale == 1.0:
        return vectors, 1.0
    return vectors * scale, scale


def projection_scale(max_norm: float, eps: float = POINCARE_EPS) -> float:
    """Common scale factor used by ``ball_projection`` for a given max norm."""
    if max_norm >= 1.0 - eps:
        return (1.0 - eps) / max_norm
    return 1.0


#: name -> (function, needs ball projection before use)
DISTANCES = {
    "l1": (l1, False),
    "l2": (l2, False),
    "cosine": (cosine, False),
    "negdot": (neg_dot, False),
    "poincare": (poincare, True),
}
