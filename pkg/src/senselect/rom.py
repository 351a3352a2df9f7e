"""Reduced-order model and low-rank correlated-noise covariance.

The training snapshot matrix is factored by a thin SVD.  The leading ``r1``
modes form the sensor candidate basis, and modes ``r1+1 .. r2`` define a
low-rank spatial noise covariance.  A diagonal correction restores the exact
diagonal lost when modes beyond ``r2`` are dropped, so the model

    R ~= UQ diag(SQ^2) UQ^T + diag(delta)

reproduces the full truncated-mode covariance on its diagonal while keeping
all operations linear in the number of candidate locations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateNoiseError,
    NumericalFailureError,
    RankOutOfRangeError,
)
from .validation import as_sensor_indices, as_snapshot_matrix, check_ranks

# Cancellation guard for diagonal-correction entries and relative floor
# applied to the noise weighting diagonal before inverse square roots.
DELTA_NEG_TOL = 1e-12
RD_FLOOR_REL = 1e-14
# First truncated singular value below this fraction of the leading one
# means the data is numerically low rank and has no noise to model.
NOISE_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class ReducedOrderModel:
    """Thin-SVD factors of a snapshot matrix with a rank split (r1, r2).

    ``u`` has orthonormal columns (spatial modes), ``s`` is the descending
    vector of singular values and ``v`` holds the temporal modes, so that
    ``u @ diag(s) @ v.T`` reconstructs the training data.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    r1: int
    r2: int

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.v.shape[0]

    @property
    def rank(self) -> int:
        return self.s.shape[0]

    @property
    def basis(self) -> np.ndarray:
        """Sensor candidate matrix: the leading r1 spatial modes (n x r1)."""
        return self.u[:, : self.r1]


@dataclass(frozen=True)
class NoiseModel:
    """Low-rank noise covariance R = uq diag(sq^2) uq^T + diag(delta).

    ``rd`` is the diagonal of R after flooring and doubles as the noise
    weighting term used for normalization.
    """

    uq: np.ndarray
    sq: np.ndarray
    delta: np.ndarray
    rd: np.ndarray

    @property
    def n(self) -> int:
        return self.uq.shape[0]

    @property
    def noise_rank(self) -> int:
        return self.sq.shape[0]


def fit_rom(data, r1: int, r2: int) -> ReducedOrderModel:
    """Fit the reduced-order model of a snapshot matrix by thin SVD.

    Parameters
    ----------
    data : array_like, shape (n, m)
        Snapshot matrix, one column per snapshot.
    r1 : int
        Number of retained signal modes (latent variables).
    r2 : int
        Last mode index used for the noise covariance; requires
        ``1 <= r1 < r2 <= min(n, m)``.

    Returns
    -------
    ReducedOrderModel
    """
    x = as_snapshot_matrix(data)
    n, m = x.shape
    r1, r2 = check_ranks(r1, r2, min(n, m))
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD did not converge: {exc}") from exc
    return ReducedOrderModel(u=u, s=s, v=vt.T, r1=r1, r2=r2)


def build_noise_model(rom: ReducedOrderModel) -> NoiseModel:
    """Derive the low-rank noise covariance from truncated SVD modes.

    Modes ``r1+1 .. r2`` give the low-rank part; the diagonal correction
    collects the energy of modes beyond ``r2`` so that the diagonal of the
    model equals the diagonal of the full truncated-mode covariance.  The
    correction is accumulated column-wise from ``u`` and ``s`` (O(n m) work);
    the full n x n covariance is never formed.

    Raises
    ------
    DegenerateNoiseError
        If the modes beyond ``r1`` carry no variance relative to the
        leading mode, i.e. the data is numerically rank-r1 (noiseless).
    """
    r1, r2 = rom.r1, rom.r2
    if r2 > rom.rank:
        raise RankOutOfRangeError(f"r2={r2} exceeds available rank {rom.rank}")
    if rom.s[r1] <= NOISE_FLOOR_REL * rom.s[0]:
        raise DegenerateNoiseError(
            "no noise content: modes beyond r1 are zero to working precision"
        )
    uq = rom.u[:, r1:r2]
    sq = rom.s[r1:r2]
    delta = (rom.u[:, r2:] ** 2) @ (rom.s[r2:] ** 2)
    # Direct sums of squares cannot go negative, but guard against a future
    # cancellation-prone computation path.
    if np.any(delta < -DELTA_NEG_TOL):
        raise NumericalFailureError("negative diagonal correction entries")
    delta = np.where(delta < 0.0, 0.0, delta)
    rd = delta + (uq**2) @ (sq**2)
    rd_max = float(rd.max()) if rd.size else 0.0
    if rd_max <= 0.0:
        raise DegenerateNoiseError(
            "all-zero noise model: no variance in modes beyond r1"
        )
    floor = RD_FLOOR_REL * rd_max
    rd = np.maximum(rd, floor)
    return NoiseModel(uq=uq, sq=sq, delta=delta, rd=rd)


def covariance_submatrix(noise: NoiseModel, sensors) -> np.ndarray:
    """Noise covariance R_p for a set of selected sensors.

    Assembled from the selected rows of the low-rank factor plus the diagonal
    terms only, at O(p^2 q) cost for q noise modes.  The diagonal is taken
    from the (floored) weighting vector, so singleton submatrices equal the
    corresponding ``rd`` entries exactly.
    """
    idx = as_sensor_indices(sensors, noise.n)
    uq_p = noise.uq[idx]
    g = (uq_p * noise.sq**2) @ uq_p.T
    g = 0.5 * (g + g.T)
    g[np.diag_indices_from(g)] = noise.rd[idx]
    return g
