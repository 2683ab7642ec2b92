"""Seeded sample-point protocol used by every sampled-equality check.

Checks in this package compare fields by evaluating both sides on a
deterministic batch of points drawn from a box that stays away from the
coordinate singularities of the built-in charts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_SEED = 42
DEFAULT_COUNT = 64
DEFAULT_BOX = (0.2, 1.5)

# Relative tolerance for symbolic-against-symbolic comparisons.
SYMBOLIC_RTOL = 1e-9
# Looser tolerance when one side is a finite-difference oracle.
ORACLE_RTOL = 1e-6


def sample_points(
    dim: int,
    *,
    seed: int = DEFAULT_SEED,
    count: int = DEFAULT_COUNT,
    box: tuple[float, float] = DEFAULT_BOX,
    reject: Callable[[np.ndarray], bool] | None = None,
    max_tries: int = 10,
) -> np.ndarray:
    """Draw count points uniformly from box**dim with a fixed seed.

    reject(point) -> True marks a point unusable (for example a chart
    singularity); each slot is redrawn up to max_tries times before the
    protocol gives up.
    """
    lo, hi = box
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"invalid sampling box {box}")
    rng = np.random.default_rng(seed)
    points = np.empty((count, dim), dtype=np.float64)
    for i in range(count):
        for attempt in range(max_tries + 1):
            p = rng.uniform(lo, hi, size=dim)
            if reject is None or not reject(p):
                points[i] = p
                break
        else:
            raise RuntimeError(
                f"could not sample a regular point after {max_tries} redraws"
            )
    return points


def max_abs_difference(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.asarray(a).size else 0.0


def relative_residual(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| / (1 + max(|a|, |b|)) over matching entries."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    scale = 1.0 + np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.abs(a - b) / scale))


def worst_point(points: np.ndarray, residuals: Sequence[float]) -> np.ndarray:
    """Point attaining the largest residual; ties go to the earliest draw."""
    idx = int(np.argmax(np.asarray(residuals)))
    return np.asarray(points)[idx]


@dataclass(frozen=True)
class SampledCheck:
    """Outcome of one sampled-equality check."""

    passed: bool
    residual: float
    worst_point: tuple | None = None
