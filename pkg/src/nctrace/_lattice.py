"""Shared integer-lattice enumeration.

Shell membership is decided on exact integer squared norms, so no point near a
radius boundary is ever misclassified. Iteration order is fixed (blocks of the
first coordinate, remaining axes in C order), which makes every downstream
reduction deterministic.
"""

from __future__ import annotations

from math import isqrt
from typing import Iterator

import numpy as np


def iter_shell(d: int, r2_min: int, r2_max: int, target: int = 1 << 22) -> Iterator[np.ndarray]:
    """Yield chunks of integer points n with r2_min < |n|^2 <= r2_max.

    Chunks are int64 arrays of shape (k, d). Points come in a fixed order; chunk
    sizes aim at `target` candidate points each. With r2_min = 0 the origin is
    excluded automatically.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if r2_max < 0 or r2_max <= r2_min:
        return
    M = isqrt(r2_max)
    axis = np.arange(-M, M + 1, dtype=np.int64)
    width = axis.size
    inner = width ** (d - 1)
    rows = max(1, min(width, target // max(inner, 1)))
    for start in range(0, width, rows):
        block = axis[start : start + rows]
        mesh = np.meshgrid(block, *([axis] * (d - 1)), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        r2 = np.einsum("ij,ij->i", pts, pts)
        keep = (r2 > r2_min) & (r2 <= r2_max)
        if np.any(keep):
            yield pts[keep]


def ball_points(d: int, radius: int, include_origin: bool = True) -> np.ndarray:
    """All integer points with |n| <= radius, materialized. Small radii only."""
    chunks = list(iter_shell(d, -1 if include_origin else 0, radius * radius))
    if not chunks:
        return np.zeros((0, d), dtype=np.int64)
    return np.concatenate(chunks, axis=0)


def count_shell(d: int, r2_min: int, r2_max: int) -> int:
    return sum(len(c) for c in iter_shell(d, r2_min, r2_max))


def unit_directions(points: np.ndarray) -> np.ndarray:
    """Normalize nonzero integer points to unit vectors (float)."""
    pts = points.astype(float)
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    return pts / norms
