"""ADMM solver for gain-based sensor selection with a row-cardinality cap.

The selection problem is written over a gain matrix ``X`` (n x r1):

    minimize tr(X^T Q X)  subject to  A X = I  and  #nonzero rows of X <= p

where ``A`` is the transposed (optionally noise-weighted) candidate basis and
``Q`` the (optionally noise-weighted) low-rank noise covariance.  The solver
splits the problem with ``Z = G X``, ``G = [I; A]``; the X-step is a
regularized least-squares solve accelerated by a two-level matrix-inversion
lemma (diagonal + rank-r1, then rank-q correction) so each iteration costs
O(n q^2) rather than O(n^3); the Z-step projects the first block onto the
row-cardinality ball (hard thresholding) or applies the group soft threshold,
and pins the second block to the identity to enforce ``A X = I``.  A slowly
decreasing step size stabilizes the nonconvex iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .estimation import Estimator, wls_estimator
from .exceptions import (
    ConvergenceWarning,
    InfeasibleBudgetError,
    NumericalFailureError,
)
from .rom import NoiseModel, ReducedOrderModel

TRACE_COLUMNS = ("iteration", "gamma", "objective", "residual", "active_rows")


@dataclass(frozen=True)
class AdmmProblem:
    """Normalized problem data for the ADMM solver.

    ``a`` is r1 x n; the noise covariance of the transformed system is
    ``Q = uq diag(sq^2) uq^T + diag(delta)`` (identity for white noise).
    ``rd`` keeps the weighting diagonal used in the transform, so the
    physical gain is recovered as ``X^T diag(rd^{-1/2})``; it is all ones
    when no weighting was applied.  Exactly one of ``budget`` (row-
    cardinality cap, exact sensor count) and ``lam`` (group-l1 weight,
    emergent sensor count) is set.
    """

    a: np.ndarray
    uq: np.ndarray
    sq: np.ndarray
    delta: np.ndarray
    rd: np.ndarray
    budget: int | None = None
    lam: float | None = None

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def r1(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class SolverConfig:
    """ADMM run parameters.

    ``eps_conv=None`` resolves to ``1e-6 * sqrt(n * r1)`` at solve time.
    The step size starts at ``gamma_init`` and is multiplied by ``eta``
    every ``gamma_decay_period`` iterations.
    """

    gamma_init: float = 1.0
    eta: float = 0.99
    gamma_decay_period: int = 5000
    eps_conv: float | None = None
    max_iters: int = 200_000
    polish_threshold: float = 1e-4

    def __post_init__(self):
        if self.gamma_init <= 0.0:
            raise ValueError("gamma_init must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.gamma_decay_period < 1:
            raise ValueError("gamma_decay_period must be >= 1")
        if self.eps_conv is not None and self.eps_conv <= 0.0:
            raise ValueError("eps_conv must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.polish_threshold <= 0.0:
            raise ValueError("polish_threshold must be positive")


@dataclass
class SolverState:
    """Iterates and per-iteration trace of one ADMM run.

    ``z`` and ``y`` stack the two blocks: rows ``0..n`` mirror ``x``, the
    last r1 rows carry the ``A X`` constraint block.  ``trace`` has one row
    per iteration with columns :data:`TRACE_COLUMNS`.
    """

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    gamma: float
    iters: int
    trace: np.ndarray
    converged: bool = True


def _check_budget(budget, lam, r1, n):
    if (budget is None) == (lam is None):
        raise ValueError("exactly one of budget and lam must be given")
    if budget is not None:
        budget = int(budget)
        if budget < r1 or budget > n:
            raise InfeasibleBudgetError(
                f"budget p={budget} must satisfy r1={r1} <= p <= n={n}"
            )
    if lam is not None and lam <= 0.0:
        raise ValueError("lam must be positive")
    return budget, lam


def normalize(
    rom: ReducedOrderModel,
    noise: NoiseModel,
    budget: int | None = None,
    lam: float | None = None,
    weighting: bool = True,
) -> AdmmProblem:
    """Build the solver problem from a model and its noise covariance.

    With ``weighting=True`` (the default) the candidate basis and noise
    factors are scaled by the inverse square root of the covariance
    diagonal, so rows of the transformed system have unit noise variance
    and the thresholding step sees noise intensity.  ``weighting=False``
    keeps the raw system (the "without normalization" variant).  Noise
    modes with zero singular value are dropped.
    """
    budget, lam = _check_budget(budget, lam, rom.r1, rom.n)
    keep = noise.sq > 0.0
    uq, sq = noise.uq[:, keep], noise.sq[keep]
    if weighting:
        w = 1.0 / np.sqrt(noise.rd)
        a = (rom.basis * w[:, None]).T
        uq = uq * w[:, None]
        delta = noise.delta / noise.rd
        rd = noise.rd
    else:
        a = rom.basis.T
        delta = noise.delta
        rd = np.ones(rom.n)
    return AdmmProblem(
        a=np.ascontiguousarray(a), uq=uq, sq=sq, delta=delta, rd=rd,
        budget=budget, lam=lam,
    )


def white_noise_problem(
    rom: ReducedOrderModel,
    budget: int | None = None,
    lam: float | None = None,
) -> AdmmProblem:
    """Problem with identity noise covariance; no noise model required."""
    budget, lam = _check_budget(budget, lam, rom.r1, rom.n)
    n = rom.n
    return AdmmProblem(
        a=np.ascontiguousarray(rom.basis.T),
        uq=np.zeros((n, 0)),
        sq=np.zeros(0),
        delta=np.ones(n),
        rd=np.ones(n),
        budget=budget,
        lam=lam,
    )


def l0_bht(v: np.ndarray, p: int) -> np.ndarray:
    """Project onto matrices with at most ``p`` nonzero rows.

    Keeps the ``p`` rows of largest l2 norm and zeros the rest, which is the
    metric projection onto the row-cardinality ball.  Ties at the cutoff are
    broken in favor of the lower row index.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if p >= v.shape[0]:
        return v.copy()
    norms = np.linalg.norm(v, axis=1)
    keep = np.argsort(-norms, kind="stable")[:p]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def block_soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    """Row-wise group soft threshold: shrink each row's norm by ``threshold``."""
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    norms = np.linalg.norm(v, axis=1)
    scale = np.zeros_like(norms)
    np.divide(threshold, norms, out=scale, where=norms > threshold)
    scale = np.where(norms > threshold, 1.0 - scale, 0.0)
    return v * scale[:, None]


class _GammaFactors:
    """Cached factorization of (2Q + (1/gamma)(I + A^T A)) for one gamma.

    Applies the inverse in O(n q^2 + n r1^2) per right-hand side via two
    nested low-rank corrections of a diagonal system; never forms an
    n x n matrix.
    """

    def __init__(self, problem: AdmmProblem, gamma: float):
        self.gamma = gamma
        a = problem.a
        r1 = problem.r1
        self.a = a
        self.d = 2.0 * problem.delta + 1.0 / gamma
        self.gd = (gamma * self.d)[:, None]
        try:
            ma = np.eye(r1) + ((a / self.d) @ a.T) / gamma
            self.ma_cho = scipy.linalg.cho_factor(0.5 * (ma + ma.T), lower=True)
            self.uq = problem.uq
            if problem.uq.shape[1]:
                self.ju = self._j_solve(problem.uq)
                core = np.diag(0.5 / problem.sq**2) + problem.uq.T @ self.ju
                self.core_cho = scipy.linalg.cho_factor(
                    0.5 * (core + core.T), lower=True
                )
                self.ujju = problem.uq.T @ self.ju
            else:
                self.ju = None
        except scipy.linalg.LinAlgError as exc:
            raise NumericalFailureError(
                f"inner factorization failed at gamma={gamma:g}: {exc}"
            ) from exc

    def _j_solve(self, v):
        t = v / self.d[:, None]
        s = scipy.linalg.cho_solve(self.ma_cho, self.a @ t)
        return t - (self.a.T @ s) / self.gd

    def apply(self, v):
        return self.apply_with_projection(v)[0]

    def apply_with_projection(self, v):
        """Inverse applied to ``v`` plus UQ^T times the result.

        The projection falls out of the cached factors, sparing the solver
        loop a full n x q product per iteration; it is None when q = 0.
        """
        w = self._j_solve(v)
        if self.ju is None:
            return w, None
        t = self.uq.T @ w
        c = scipy.linalg.cho_solve(self.core_cho, t)
        return w - self.ju @ c, t - self.ujju @ c


def x_update(
    problem: AdmmProblem, state: SolverState, factors: _GammaFactors | None = None
) -> np.ndarray:
    """One X-step: minimizer of tr(X^T Q X) + (1/2 gamma) ||Z - GX - Y||_F^2.

    The right-hand side combines both blocks of ``Z - Y``; the solve reuses
    ``factors`` when they match the current step size.
    """
    n, r1 = problem.n, problem.r1
    if factors is None or factors.gamma != state.gamma:
        factors = _GammaFactors(problem, state.gamma)
    dz = state.z - state.y
    b = (dz[:n] + problem.a.T @ dz[n:]) / state.gamma
    return factors.apply(b)


def _objective(problem: AdmmProblem, x: np.ndarray) -> float:
    """tr(X^T Q X) evaluated through the low-rank factors."""
    row_sq = np.einsum("ij,ij->i", x, x)
    uqx = problem.uq.T @ x if problem.uq.shape[1] else None
    return _objective_terms(problem, row_sq, uqx)


def _objective_terms(problem: AdmmProblem, row_sq, uqx) -> float:
    val = float(problem.delta @ row_sq)
    if uqx is not None:
        val += float(np.sum((problem.sq[:, None] * uqx) ** 2))
    return val


def _support(x: np.ndarray, budget: int | None, threshold: float) -> np.ndarray:
    """Sensor indices from the row norms of the final gain iterate."""
    norms = np.linalg.norm(x, axis=1)
    if budget is None:
        return np.flatnonzero(norms > threshold)
    # Exactly p sensors: take the top-p rows by norm, lower index on ties.
    keep = np.argsort(-norms, kind="stable")[:budget]
    return np.sort(keep)


def solve(
    problem: AdmmProblem,
    config: SolverConfig | None = None,
    initial: np.ndarray | None = None,
) -> tuple[SolverState, np.ndarray]:
    """Run the ADMM iteration and extract the selected sensors.

    Starts from the minimum-norm gain satisfying the linear constraint
    (right pseudo-inverse of ``a``) unless ``initial`` is given, with zero
    splitting and dual variables.  Stops when the Frobenius change of the
    gain iterate drops below the tolerance, or flags non-convergence after
    ``max_iters`` (a warning, not an error: the last iterate is returned).

    Returns
    -------
    (SolverState, ndarray)
        Final state with per-iteration trace, and the selected sensor
        indices in ascending order (exactly ``budget`` of them in
        cardinality mode).
    """
    if config is None:
        config = SolverConfig()
    n, r1 = problem.n, problem.r1
    eps = config.eps_conv
    if eps is None:
        eps = 1e-6 * np.sqrt(n * r1)
    a = problem.a
    if initial is not None:
        x_prev = np.asarray(initial, dtype=np.float64)
        if x_prev.shape != (n, r1):
            raise ValueError(f"initial X must have shape {(n, r1)}")
    else:
        x_prev = a.T @ np.linalg.solve(a @ a.T, np.eye(r1))
    z1 = np.zeros((n, r1))
    z2 = np.zeros((r1, r1))
    y1 = np.zeros((n, r1))
    y2 = np.zeros((r1, r1))
    eye = np.eye(r1)
    gamma = config.gamma_init
    factors = _GammaFactors(problem, gamma)
    trace = np.empty((config.max_iters, 5))
    converged = False
    k = 0
    x = x_prev
    thr_sq = config.polish_threshold**2
    for k in range(1, config.max_iters + 1):
        b = ((z1 - y1) + a.T @ (z2 - y2)) / gamma
        x, uqx = factors.apply_with_projection(b)
        ax = a @ x
        v1 = x + y1
        v2 = ax + y2
        if problem.budget is not None:
            z1 = l0_bht(v1, problem.budget)
        else:
            z1 = block_soft_threshold(v1, problem.lam * gamma)
        z2 = eye
        y1 = v1 - z1
        y2 = v2 - eye
        row_sq = np.einsum("ij,ij->i", x, x)
        step = np.linalg.norm(x - x_prev)
        trace[k - 1] = (
            k,
            gamma,
            _objective_terms(problem, row_sq, uqx),
            step,
            np.count_nonzero(row_sq > thr_sq),
        )
        if step <= eps:
            converged = True
            break
        x_prev = x
        if k % config.gamma_decay_period == 0:
            gamma *= config.eta
            factors = _GammaFactors(problem, gamma)
    if not converged:
        warnings.warn(
            f"ADMM did not meet tolerance {eps:g} within {config.max_iters} "
            "iterations; returning the last iterate",
            ConvergenceWarning,
            stacklevel=2,
        )
    state = SolverState(
        x=x,
        z=np.vstack([z1, z2]),
        y=np.vstack([y1, y2]),
        gamma=gamma,
        iters=k,
        trace=trace[:k].copy(),
        converged=converged,
    )
    sensors = _support(x, problem.budget, config.polish_threshold)
    return state, sensors


def polish(rom: ReducedOrderModel, noise: NoiseModel | None, sensors) -> Estimator:
    """Recompute the estimation gain by weighted least squares.

    The solver's gain iterate only identifies the sensor set; estimation
    quality comes from refitting on that set.
    """
    return wls_estimator(rom, noise, sensors)
