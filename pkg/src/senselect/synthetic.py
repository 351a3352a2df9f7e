"""Reproducible synthetic snapshot matrices with a controlled spectrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError

INV_SQRT = "inv-sqrt"


@dataclass(frozen=True)
class SyntheticSpec:
    """Size, singular spectrum, and seed of one synthetic dataset.

    ``spectrum`` is either ``"inv-sqrt"`` (k-th singular value 1/sqrt(k),
    1-based) or an explicit positive non-increasing vector of length ``m``.
    """

    n: int
    m: int
    spectrum: object = INV_SQRT
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise DimensionMismatchError("m must be >= 2")
        if self.n < self.m:
            raise DimensionMismatchError("n must be >= m")


def spectrum_values(spec: SyntheticSpec) -> np.ndarray:
    """Resolve the singular-value vector of a spec."""
    if isinstance(spec.spectrum, str):
        if spec.spectrum != INV_SQRT:
            raise ValueError(f"unknown spectrum name {spec.spectrum!r}")
        return 1.0 / np.sqrt(np.arange(1, spec.m + 1, dtype=np.float64))
    values = np.asarray(spec.spectrum, dtype=np.float64)
    if values.shape != (spec.m,):
        raise DimensionMismatchError(
            f"custom spectrum must have length m={spec.m}, got shape {values.shape}"
        )
    if not np.all(values > 0.0) or np.any(np.diff(values) > 0.0):
        raise ValueError("custom spectrum must be positive and non-increasing")
    return values


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormal columns from QR of a standard-normal matrix.

    The triangular factor's diagonal is forced positive so the result does
    not depend on the QR implementation's sign choices.
    """
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    signs = np.sign(np.diagonal(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def generate(spec: SyntheticSpec) -> np.ndarray:
    """Snapshot matrix U diag(S) V^T with the requested spectrum.

    U (n x m) and V (m x m) are drawn from independent streams spawned
    from the seed, so the pair is reproducible across platforms and the
    two factors never share randomness.
    """
    values = spectrum_values(spec)
    seq_u, seq_v = np.random.SeedSequence(spec.seed).spawn(2)
    u = _orthonormal(np.random.default_rng(seq_u), spec.n, spec.m)
    v = _orthonormal(np.random.default_rng(seq_v), spec.m, spec.m)
    return (u * values) @ v.T
