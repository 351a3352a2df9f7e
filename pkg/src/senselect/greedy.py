"""Greedy A-optimal sensor selection under white or correlated noise.

Sensors are added one at a time, each step picking the candidate that
minimizes the trace of the inverse Fisher information of the augmented
set.  The correlated mode keeps a growing Cholesky factor of the selected
covariance block and whitens every remaining candidate incrementally, so a
step costs O(n (k + q + r1)) instead of refactorizing per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import InfeasibleBudgetError, SingularFIMError
from .rom import NoiseModel, ReducedOrderModel

NOISE_MODES = ("white", "correlated")

# Candidates whose conditional noise variance falls below this relative
# level would make the selected covariance block numerically singular.
SCHUR_TOL = 1e-12


@dataclass(frozen=True)
class GreedyConfig:
    """Budget and noise handling for one greedy run.

    ``noise_mode="white"`` scores candidates against an identity noise
    covariance even when a noise model is supplied.
    """

    p: int
    noise_mode: str = "correlated"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")


def _pinv_trace(fim: np.ndarray) -> tuple[int, float]:
    """(rank, trace of pseudo-inverse) of a symmetric PSD matrix."""
    eig = np.linalg.eigvalsh(0.5 * (fim + fim.T))
    tol = max(eig[-1], 0.0) * fim.shape[0] * np.finfo(np.float64).eps
    pos = eig > tol
    if not np.any(pos):
        return 0, 0.0
    return int(np.count_nonzero(pos)), float(np.sum(1.0 / eig[pos]))


def greedy_select(
    rom: ReducedOrderModel,
    noise: NoiseModel | None,
    config: GreedyConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Select ``config.p`` sensors by stepwise A-criterion minimization.

    While fewer sensors than modes are placed the Fisher information is
    singular; such steps maximize its rank first and break ties by the
    trace of its pseudo-inverse.  Ties always resolve to the lowest
    candidate index.

    Returns
    -------
    (ndarray, ndarray)
        Selected indices in selection order, and the per-step objective
        (pseudo-inverse trace while the information matrix is singular,
        the A-optimality value afterwards).
    """
    n, r1 = rom.n, rom.r1
    p = config.p
    if p < r1 or p > n:
        raise InfeasibleBudgetError(f"p={p} must satisfy r1={r1} <= p <= n={n}")
    white = config.noise_mode == "white" or noise is None
    u = rom.basis
    if white:
        rd = np.ones(n)
    else:
        rd = noise.rd
        sq2 = noise.sq**2
    avail = np.ones(n, dtype=bool)
    # Whitened residual numerators and conditional variances per candidate;
    # dividing gives the row each candidate would contribute after whitening
    # against the already-selected block.
    resid = u.copy()
    schur = rd.copy()
    lc = np.empty((p, n))
    fim = np.zeros((r1, r1))
    selected = np.empty(p, dtype=np.int64)
    trace = np.empty(p)
    eye = np.eye(r1)
    for k in range(p):
        eligible = avail & (schur > SCHUR_TOL * rd)
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            raise SingularFIMError(
                f"no candidate keeps the selected covariance invertible at step {k}"
            )
        wcand = resid[cand] / np.sqrt(schur[cand])[:, None]
        finv = None
        if k >= r1:
            try:
                cho = scipy.linalg.cho_factor(0.5 * (fim + fim.T), lower=True)
                finv = scipy.linalg.cho_solve(cho, eye)
            except scipy.linalg.LinAlgError:
                finv = None
        if finv is not None:
            fw = wcand @ finv
            gain = np.einsum("ij,ij->i", fw, fw)
            lift = 1.0 + np.einsum("ij,ij->i", fw, wcand)
            best_pos = int(np.argmin(np.trace(finv) - gain / lift))
        else:
            best_pos = 0
            best_key = (n + 1, np.inf)
            for pos in range(cand.size):
                w = wcand[pos]
                rank, tr_pinv = _pinv_trace(fim + np.outer(w, w))
                key = (-rank, tr_pinv)
                if key < best_key:
                    best_key = key
                    best_pos = pos
        best = int(cand[best_pos])
        w_best = wcand[best_pos]
        fim += np.outer(w_best, w_best)
        selected[k] = best
        avail[best] = False
        trace[k] = _pinv_trace(fim)[1]
        if k + 1 < p and not white:
            cross = (noise.uq[best] * sq2) @ noise.uq.T
            cross[best] = rd[best]
            lc[k] = (cross - lc[:k, best] @ lc[:k]) / np.sqrt(schur[best])
            schur = schur - lc[k] ** 2
            resid = resid - np.outer(lc[k], w_best)
    return selected, trace
