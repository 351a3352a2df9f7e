import numpy as np
import pytest

from senselect.estimation import aopt_objective
from senselect.exceptions import InfeasibleBudgetError, SingularFIMError
from senselect.greedy import GreedyConfig, greedy_select
from senselect.oracle import exhaustive_best
from senselect.rom import NoiseModel, ReducedOrderModel, build_noise_model, fit_rom


def make_instance(n=30, m=12, r1=3, r2=8, seed=0):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, m))
    rom = fit_rom(data, r1, r2)
    return rom, build_noise_model(rom)


def manual_rom(u: np.ndarray) -> ReducedOrderModel:
    # Hand-built model: only the leading block matters for white selection.
    n, r = u.shape
    return ReducedOrderModel(
        u=u, s=np.ones(r), v=np.eye(r), r1=r, r2=r
    )


def test_white_single_sensor_picks_largest_row() -> None:
    u = np.array([[0.5], [2.0], [-3.0], [1.0]])
    rom = manual_rom(u)
    sensors, trace = greedy_select(rom, None, GreedyConfig(p=1, noise_mode="white"))
    assert sensors.tolist() == [2]
    assert trace[0] == pytest.approx(1.0 / 9.0)


def test_duplicate_candidates_prefer_lower_index() -> None:
    u = np.array([[1.0, 0.0], [2.0, 1.0], [2.0, 1.0], [0.0, 1.0]])
    rom = manual_rom(u)
    sensors, _ = greedy_select(rom, None, GreedyConfig(p=3, noise_mode="white"))
    # Rows 1 and 2 tie for the best first pick; the lower index wins.  The
    # twin row adds no new direction, so the remaining picks diversify.
    assert sensors.tolist() == [1, 3, 0]


def test_selection_is_duplicate_free_and_ordered_by_pick() -> None:
    rom, noise = make_instance()
    sensors, trace = greedy_select(rom, noise, GreedyConfig(p=7))
    assert sensors.shape == (7,)
    assert np.unique(sensors).size == 7
    assert trace.shape == (7,)
    assert np.all(np.isfinite(trace))


def test_objective_monotone_after_rank_reached() -> None:
    for seed in range(4):
        rom, noise = make_instance(seed=seed)
        _, trace = greedy_select(rom, noise, GreedyConfig(p=10))
        # r1 = 3, so entries 2.. are the A-criterion values.
        assert np.all(np.diff(trace[2:]) <= 1e-10)


def test_final_trace_matches_aopt_objective() -> None:
    rom, noise = make_instance()
    for config, nm in [
        (GreedyConfig(p=8), noise),
        (GreedyConfig(p=8, noise_mode="white"), None),
    ]:
        sensors, trace = greedy_select(rom, noise, config)
        assert trace[-1] == pytest.approx(aopt_objective(rom, nm, sensors), rel=1e-10)


def test_greedy_never_beats_exhaustive_oracle() -> None:
    rng = np.random.default_rng(11)
    data = rng.standard_normal((12, 8))
    rom = fit_rom(data, 3, 6)
    noise = build_noise_model(rom)
    _, trace = greedy_select(rom, noise, GreedyConfig(p=4))
    _, best = exhaustive_best(rom, noise, 4)
    assert trace[-1] >= best - 1e-12


def test_correlated_equals_white_for_scaled_identity_noise() -> None:
    rom, _ = make_instance()
    n = rom.n
    iso = NoiseModel(
        uq=np.zeros((n, 0)),
        sq=np.zeros(0),
        delta=np.full(n, 2.5),
        rd=np.full(n, 2.5),
    )
    white, _ = greedy_select(rom, None, GreedyConfig(p=6, noise_mode="white"))
    corr, _ = greedy_select(rom, iso, GreedyConfig(p=6))
    assert np.array_equal(white, corr)


def test_white_mode_ignores_noise_model() -> None:
    rom, noise = make_instance()
    with_model, _ = greedy_select(rom, noise, GreedyConfig(p=5, noise_mode="white"))
    without, _ = greedy_select(rom, None, GreedyConfig(p=5, noise_mode="white"))
    assert np.array_equal(with_model, without)


def test_budget_bounds_enforced() -> None:
    rom, noise = make_instance()
    with pytest.raises(InfeasibleBudgetError):
        greedy_select(rom, noise, GreedyConfig(p=2))
    with pytest.raises(InfeasibleBudgetError):
        greedy_select(rom, noise, GreedyConfig(p=31))


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        GreedyConfig(p=0)
    with pytest.raises(ValueError):
        GreedyConfig(p=3, noise_mode="pink")


def test_rank_one_noise_exhausts_usable_candidates() -> None:
    # A rank-1 covariance with no diagonal part admits only one sensor
    # before the selected block becomes singular.
    rng = np.random.default_rng(5)
    direction = rng.standard_normal(6)
    rom = manual_rom(rng.standard_normal((6, 1)))
    noise = NoiseModel(
        uq=direction[:, None] / np.linalg.norm(direction),
        sq=np.ones(1),
        delta=np.zeros(6),
        rd=(direction / np.linalg.norm(direction)) ** 2,
    )
    with pytest.raises(SingularFIMError):
        greedy_select(rom, noise, GreedyConfig(p=2))
