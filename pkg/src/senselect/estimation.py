"""Measurement model, (whitened) least-squares estimation and error metrics.

Given a sensor set, measurements are ``y = C z + noise`` with ``C`` the
selected rows of the candidate basis.  Latent variables are recovered by
weighted least squares using the selected-sensor covariance; passing
``noise=None`` anywhere means white noise and reduces everything to ordinary
least squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionMismatchError,
    SingularFIMError,
    UnderSampledError,
    ZeroDataError,
)
from .rom import NoiseModel, ReducedOrderModel, covariance_submatrix
from .validation import as_matrix, as_sensor_indices

# Conditioning guard on the Fisher information matrix: fail deterministically
# instead of returning garbage from a numerically singular system.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class Estimator:
    """Polished linear estimator for a fixed sensor set.

    ``gain`` maps the p-vector of sensor readings to the r1 latent
    variables; ``rp`` is the selected-sensor noise covariance used to build
    it (identity for white noise).
    """

    sensors: np.ndarray
    gain: np.ndarray
    rp: np.ndarray


def measurement_matrix(rom: ReducedOrderModel, sensors) -> np.ndarray:
    """Rows of the candidate basis at the selected sensors (p x r1)."""
    idx = as_sensor_indices(sensors, rom.n)
    return rom.basis[idx]


def _fim_factors(rom, noise, sensors):
    """Common core: returns (C, R_p, R_p^-1 C, cho_factor of FIM)."""
    idx = as_sensor_indices(sensors, rom.n)
    p = idx.size
    if p < rom.r1:
        raise UnderSampledError(
            f"p={p} sensors cannot estimate r1={rom.r1} latent variables"
        )
    c = rom.basis[idx]
    if noise is None:
        rp = np.eye(p)
        rinv_c = c
    else:
        rp = covariance_submatrix(noise, idx)
        try:
            rp_cho = scipy.linalg.cho_factor(rp, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise SingularFIMError(
                "selected-sensor covariance is not positive definite"
            ) from exc
        rinv_c = scipy.linalg.cho_solve(rp_cho, c)
    fim = c.T @ rinv_c
    fim = 0.5 * (fim + fim.T)
    eig = np.linalg.eigvalsh(fim)
    if eig[0] <= 0.0 or eig[-1] / eig[0] > COND_LIMIT:
        raise SingularFIMError(
            f"Fisher information matrix is singular or ill-conditioned "
            f"(cond > {COND_LIMIT:g}) for sensors {idx.tolist()}"
        )
    fim_cho = scipy.linalg.cho_factor(fim, lower=True)
    return idx, c, rp, rinv_c, fim_cho


def wls_estimator(
    rom: ReducedOrderModel, noise: NoiseModel | None, sensors
) -> Estimator:
    """Whitened least-squares estimator for the selected sensors.

    The gain is ``(C^T R_p^-1 C)^-1 C^T R_p^-1``; with ``noise=None`` this is
    the ordinary least-squares pseudo-inverse.
    """
    idx, c, rp, rinv_c, fim_cho = _fim_factors(rom, noise, sensors)
    gain = scipy.linalg.cho_solve(fim_cho, rinv_c.T)
    return Estimator(sensors=idx, gain=gain, rp=rp)


def aopt_objective(rom: ReducedOrderModel, noise: NoiseModel | None, sensors) -> float:
    """A-optimality criterion: trace of the inverse Fisher information."""
    _, _, _, _, fim_cho = _fim_factors(rom, noise, sensors)
    inv = scipy.linalg.cho_solve(fim_cho, np.eye(rom.r1))
    return float(np.trace(inv))


def reconstruct(
    estimator: Estimator, rom: ReducedOrderModel, snapshots
) -> tuple[np.ndarray, np.ndarray]:
    """Estimate latent coefficients from sensor rows and rebuild the field.

    Returns ``(zhat, field)`` where ``zhat`` is r1 x m and
    ``field = U_{1:r1} zhat`` is the n x m reconstruction.
    """
    x = as_matrix(snapshots, "snapshots")
    if x.shape[0] != rom.n:
        raise DimensionMismatchError(
            f"snapshots have {x.shape[0]} rows, model expects {rom.n}"
        )
    if estimator.gain.shape[0] != rom.r1:
        raise DimensionMismatchError(
            "estimator was built for a different number of latent variables"
        )
    y = x[estimator.sensors]
    zhat = estimator.gain @ y
    field = rom.basis @ zhat
    return zhat, field


def reconstruction_error(original, field) -> float:
    """Relative Frobenius error between original snapshots and a field."""
    a = as_matrix(original, "original")
    b = as_matrix(field, "field")
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"shape mismatch: original {a.shape} vs field {b.shape}"
        )
    denom = np.linalg.norm(a)
    if denom == 0.0:
        raise ZeroDataError("original data has zero Frobenius norm")
    return float(np.linalg.norm(a - b) / denom)
