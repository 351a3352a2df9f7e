"""Input validation helpers used across the package and the estimator API."""

from __future__ import annotations

import numpy as np

from .exceptions import (
    DuplicateSensorError,
    RankOutOfRangeError,
    SensorIndexError,
)


def as_matrix(x, name: str = "array", *, require_finite: bool = True) -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array, optionally checking finiteness."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if require_finite and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return a


def as_snapshot_matrix(x, name: str = "data") -> np.ndarray:
    """Validate an n x m snapshot matrix (n spatial points, m >= 2 snapshots)."""
    a = as_matrix(x, name)
    n, m = a.shape
    if n < 1 or m < 2:
        raise ValueError(
            f"{name} must have at least 1 row and 2 columns, got {n} x {m}"
        )
    return a


def check_ranks(r1: int, r2: int, max_rank: int) -> tuple[int, int]:
    """Check 1 <= r1 < r2 <= max_rank and return the pair as plain ints."""
    r1, r2 = int(r1), int(r2)
    if not (1 <= r1 < r2 <= max_rank):
        raise RankOutOfRangeError(
            f"ranks must satisfy 1 <= r1 < r2 <= {max_rank}, got r1={r1}, r2={r2}"
        )
    return r1, r2


def as_sensor_indices(sensors, n: int) -> np.ndarray:
    """Validate sensor indices: distinct integers in [0, n), at least one.

    Order is preserved; a read-only int64 array is returned.
    """
    idx = np.atleast_1d(np.asarray(sensors))
    if idx.ndim != 1 or idx.size == 0:
        raise SensorIndexError("sensor set must be a non-empty 1-D sequence of indices")
    if not np.issubdtype(idx.dtype, np.integer):
        as_int = idx.astype(np.int64)
        if not np.array_equal(as_int, idx):
            raise ValueError("sensor indices must be integers")
        idx = as_int
    else:
        idx = idx.astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= n):
        bad = idx[(idx < 0) | (idx >= n)]
        raise SensorIndexError(f"sensor indices {bad.tolist()} outside [0, {n})")
    if np.unique(idx).size != idx.size:
        raise DuplicateSensorError("sensor indices must be distinct")
    idx.setflags(write=False)
    return idx


def selection_matrix(sensors, n: int) -> np.ndarray:
    """Dense p x n selection matrix H with H[j, sensors[j]] = 1.

    Intended for small oracle/test instances; the solvers never form H.
    """
    idx = as_sensor_indices(sensors, n)
    h = np.zeros((idx.size, n))
    h[np.arange(idx.size), idx] = 1.0
    return h
