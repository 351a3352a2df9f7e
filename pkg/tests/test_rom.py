import numpy as np
import pytest

from senselect.exceptions import (
    DegenerateNoiseError,
    RankOutOfRangeError,
)
from senselect.rom import build_noise_model, covariance_submatrix, fit_rom


def make_rom(n: int = 40, m: int = 15, r1: int = 3, r2: int = 9, seed: int = 7):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, m))
    return data, fit_rom(data, r1, r2)


def test_fit_rom_shapes_and_reconstruction() -> None:
    data, rom = make_rom()
    assert rom.u.shape == (40, 15)
    assert rom.s.shape == (15,)
    assert rom.v.shape == (15, 15)
    assert rom.basis.shape == (40, 3)
    assert np.allclose((rom.u * rom.s) @ rom.v.T, data, atol=1e-10)


def test_fit_rom_orthonormal_factors_and_sorted_spectrum() -> None:
    _, rom = make_rom()
    assert np.allclose(rom.u.T @ rom.u, np.eye(15), atol=1e-10)
    assert np.allclose(rom.v.T @ rom.v, np.eye(15), atol=1e-10)
    assert np.all(np.diff(rom.s) <= 0.0)
    assert np.all(rom.s >= 0.0)


def test_fit_rom_rejects_bad_ranks() -> None:
    rng = np.random.default_rng(7)
    data = rng.standard_normal((10, 6))
    for r1, r2 in [(0, 3), (3, 3), (2, 7)]:
        with pytest.raises(RankOutOfRangeError):
            fit_rom(data, r1, r2)


def test_noise_model_matches_dense_residual_covariance() -> None:
    # The residual covariance of the truncated modes is E = U2 S2^2 U2^T
    # with U2 the modes beyond r1; the model keeps modes r1..r2 plus a
    # diagonal correction for everything past r2.
    _, rom = make_rom(n=30, m=12, r1=2, r2=6)
    noise = build_noise_model(rom)
    u2, s2 = rom.u[:, 2:], rom.s[2:]
    dense = (u2 * s2**2) @ u2.T
    model = (noise.uq * noise.sq**2) @ noise.uq.T + np.diag(noise.delta)
    assert np.allclose(np.diag(model), np.diag(dense), atol=1e-12)
    assert noise.uq.shape == (30, 4)
    assert np.all(noise.delta >= 0.0)
    assert np.all(noise.rd > 0.0)


def test_diagonal_correction_reduces_frobenius_gap() -> None:
    for seed in range(5):
        _, rom = make_rom(n=25, m=10, r1=2, r2=5, seed=seed)
        noise = build_noise_model(rom)
        u2, s2 = rom.u[:, 2:], rom.s[2:]
        dense = (u2 * s2**2) @ u2.T
        lowrank = (noise.uq * noise.sq**2) @ noise.uq.T
        with_corr = np.linalg.norm(dense - lowrank - np.diag(noise.delta))
        without = np.linalg.norm(dense - lowrank)
        assert with_corr <= without + 1e-15


def test_rd_is_delta_plus_kept_mode_energy() -> None:
    _, rom = make_rom()
    noise = build_noise_model(rom)
    expected = noise.delta + (noise.uq**2) @ noise.sq**2
    assert np.allclose(noise.rd, expected, atol=1e-15)


def test_noise_model_rejects_noiseless_data() -> None:
    # Exactly rank-r1 data leaves nothing beyond the signal modes.
    rng = np.random.default_rng(7)
    data = np.outer(rng.standard_normal(12), rng.standard_normal(6))
    rom = fit_rom(data, 1, 3)
    with pytest.raises(DegenerateNoiseError):
        build_noise_model(rom)


def test_covariance_submatrix_matches_dense() -> None:
    _, rom = make_rom(n=30, m=12, r1=2, r2=6)
    noise = build_noise_model(rom)
    u2, s2 = rom.u[:, 2:6], rom.s[2:6]
    dense = (u2 * s2**2) @ u2.T + np.diag(noise.delta)
    idx = np.array([5, 0, 17, 22])
    sub = covariance_submatrix(noise, idx)
    assert sub.shape == (4, 4)
    assert np.allclose(sub, dense[np.ix_(idx, idx)], atol=1e-12)
    assert np.allclose(sub, sub.T, atol=0.0)


def test_covariance_submatrix_singleton_diagonal_is_exact() -> None:
    _, rom = make_rom()
    noise = build_noise_model(rom)
    for i in [0, 7, 39]:
        sub = covariance_submatrix(noise, [i])
        assert sub[0, 0] == noise.rd[i]
