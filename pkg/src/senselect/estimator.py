"""Scikit-learn style front end for sensor selection and reconstruction."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import admm
from .estimation import aopt_objective, reconstruct, reconstruction_error, wls_estimator
from .greedy import GreedyConfig, greedy_select
from .oracle import exhaustive_best
from .rom import build_noise_model, fit_rom

METHODS = ("admm", "greedy", "oracle")
NOISE_KINDS = ("correlated", "white")


class SensorSelector(BaseEstimator):
    """Select sensor locations from training snapshots and rebuild full fields.

    Follows the scikit-learn sample convention: ``X`` is (n_samples,
    n_features) with one snapshot per row and one candidate location per
    column, so the snapshot matrix used internally is ``X.T``.

    Parameters
    ----------
    n_sensors : int or None
        Number of locations to select; ``None`` means one per mode.
    method : {"admm", "greedy", "oracle"}
        Selection algorithm; "oracle" enumerates and only suits tiny inputs.
    noise : {"correlated", "white"}
        Whether selection and gain fitting use the estimated noise
        covariance or an identity covariance.
    rank : int or None
        Signal modes r1; ``None`` picks min(10, max usable).
    noise_rank : int or None
        Total modes r2 kept for the noise model; ``None`` picks
        min(4 * rank, available).
    weighting : bool
        For correlated-noise ADMM, solve in noise-weighted variables
        (recommended); ``False`` reproduces the unweighted variant.
    gamma_init, eta, gamma_decay_period, eps_conv, max_iters, polish_threshold :
        ADMM run parameters, see :class:`senselect.admm.SolverConfig`.

    Attributes
    ----------
    sensors_ : ndarray
        Selected column indices.
    rom_, noise_model_ : fitted model pieces.
    gain_ : ndarray
        Polished estimation gain (rank x n_sensors).
    objective_ : float
        A-optimality value of the selected set.
    converged_ : bool
        False only when the ADMM iteration hit its iteration cap.
    """

    def __init__(
        self,
        n_sensors: int | None = None,
        method: str = "admm",
        noise: str = "correlated",
        rank: int | None = None,
        noise_rank: int | None = None,
        weighting: bool = True,
        gamma_init: float = 1.0,
        eta: float = 0.99,
        gamma_decay_period: int = 5000,
        eps_conv: float | None = None,
        max_iters: int = 200_000,
        polish_threshold: float = 1e-4,
    ):
        self.n_sensors = n_sensors
        self.method = method
        self.noise = noise
        self.rank = rank
        self.noise_rank = noise_rank
        self.weighting = weighting
        self.gamma_init = gamma_init
        self.eta = eta
        self.gamma_decay_period = gamma_decay_period
        self.eps_conv = eps_conv
        self.max_iters = max_iters
        self.polish_threshold = polish_threshold

    def _resolve_ranks(self, n: int, m: int) -> tuple[int, int]:
        available = min(n, m)
        r1 = self.rank if self.rank is not None else min(10, available - 1)
        if r1 < 1:
            raise ValueError(f"rank must be >= 1, got {r1}")
        r2 = self.noise_rank if self.noise_rank is not None else min(4 * r1, available)
        return r1, r2

    def fit(self, X, y=None) -> "SensorSelector":
        """Fit the model and select sensors from training snapshots."""
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}")
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        snapshots = X.T
        n = snapshots.shape[0]
        r1, r2 = self._resolve_ranks(n, snapshots.shape[1])
        self.rom_ = fit_rom(snapshots, r1, r2)
        white = self.noise == "white"
        # Noiseless (exactly low-rank) data has no usable noise model, so
        # only build one when the correlated path needs it.
        self.noise_model_ = None if white else build_noise_model(self.rom_)
        noise_for_gain = self.noise_model_
        p = self.n_sensors if self.n_sensors is not None else r1
        self.converged_ = True
        self.solver_state_ = None
        self.selection_trace_ = None
        if self.method == "admm":
            if white:
                problem = admm.white_noise_problem(self.rom_, budget=p)
            else:
                problem = admm.normalize(
                    self.rom_, self.noise_model_, budget=p, weighting=self.weighting
                )
            config = admm.SolverConfig(
                gamma_init=self.gamma_init,
                eta=self.eta,
                gamma_decay_period=self.gamma_decay_period,
                eps_conv=self.eps_conv,
                max_iters=self.max_iters,
                polish_threshold=self.polish_threshold,
            )
            state, sensors = admm.solve(problem, config)
            self.solver_state_ = state
            self.converged_ = state.converged
        elif self.method == "greedy":
            sensors, trace = greedy_select(
                self.rom_, self.noise_model_, GreedyConfig(p=p, noise_mode=self.noise)
            )
            self.selection_trace_ = trace
        else:
            sensors, _ = exhaustive_best(self.rom_, noise_for_gain, p)
        self.sensors_ = np.asarray(sensors, dtype=np.int64)
        self.estimator_ = wls_estimator(self.rom_, noise_for_gain, self.sensors_)
        self.gain_ = self.estimator_.gain
        self.objective_ = aopt_objective(self.rom_, noise_for_gain, self.sensors_)
        self.n_features_in_ = n
        return self

    def _check_input(self, X) -> np.ndarray:
        check_is_fitted(self, "sensors_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X

    def transform(self, X) -> np.ndarray:
        """Measurements at the selected sensors (columns of ``X``)."""
        return self._check_input(X)[:, self.sensors_]

    def inverse_transform(self, Xt) -> np.ndarray:
        """Full fields rebuilt from sensor measurements."""
        check_is_fitted(self, "sensors_")
        Xt = check_array(Xt, dtype=np.float64)
        if Xt.shape[1] != self.sensors_.shape[0]:
            raise ValueError(
                f"Xt has {Xt.shape[1]} columns, expected {self.sensors_.shape[0]}"
            )
        coeffs = self.estimator_.gain @ Xt.T
        return (self.rom_.basis @ coeffs).T

    def predict(self, X) -> np.ndarray:
        """Reconstruct each snapshot from its own sensor readings."""
        X = self._check_input(X)
        _, field = reconstruct(self.estimator_, self.rom_, X.T)
        return field.T

    def score(self, X, y=None) -> float:
        """Negative relative reconstruction error (higher is better)."""
        X = self._check_input(X)
        _, field = reconstruct(self.estimator_, self.rom_, X.T)
        return -reconstruction_error(X.T, field)

    def get_support(self, indices: bool = False) -> np.ndarray:
        """Boolean mask (or index array) of the selected columns."""
        check_is_fitted(self, "sensors_")
        if indices:
            return self.sensors_.copy()
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.sensors_] = True
        return mask
