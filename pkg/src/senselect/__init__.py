"""Sparse sensor selection for field reconstruction under correlated noise.

The toolkit picks ``p`` sensor locations out of ``n`` candidates so that a
rank-r1 field model can be reconstructed from the selected measurements
with minimal average estimation variance (A-optimality).  The measurement
noise covariance is estimated from the same training snapshots via the
modes truncated from the model, so no separate noise data is needed.

Typical flow::

    rom = fit_rom(snapshots, r1=10, r2=40)
    noise = build_noise_model(rom)
    problem = normalize(rom, noise, budget=30)
    state, sensors = solve(problem)
    estimator = polish(rom, noise, sensors)

or, scikit-learn style, ``SensorSelector(n_sensors=30).fit(X)`` with one
snapshot per row of ``X``.
"""

from . import exceptions
from .admm import (
    AdmmProblem,
    SolverConfig,
    SolverState,
    block_soft_threshold,
    l0_bht,
    normalize,
    polish,
    solve,
    white_noise_problem,
    x_update,
)
from .estimation import (
    Estimator,
    aopt_objective,
    measurement_matrix,
    reconstruct,
    reconstruction_error,
    wls_estimator,
)
from .estimator import SensorSelector
from .greedy import GreedyConfig, greedy_select
from .ingest import (
    CvSplit,
    GriddedDataset,
    IndexMap,
    dataset_from_matrix,
    load_grid,
    make_folds,
    save_grid,
    to_snapshots,
)
from .oracle import exhaustive_best
from .rom import (
    NoiseModel,
    ReducedOrderModel,
    build_noise_model,
    covariance_submatrix,
    fit_rom,
)
from .synthetic import SyntheticSpec, generate
from .validation import as_sensor_indices, selection_matrix

__version__ = "0.1.0"

__all__ = [
    "AdmmProblem",
    "CvSplit",
    "Estimator",
    "GreedyConfig",
    "GriddedDataset",
    "IndexMap",
    "NoiseModel",
    "ReducedOrderModel",
    "SensorSelector",
    "SolverConfig",
    "SolverState",
    "SyntheticSpec",
    "aopt_objective",
    "as_sensor_indices",
    "block_soft_threshold",
    "build_noise_model",
    "covariance_submatrix",
    "dataset_from_matrix",
    "exceptions",
    "exhaustive_best",
    "fit_rom",
    "generate",
    "greedy_select",
    "l0_bht",
    "load_grid",
    "make_folds",
    "measurement_matrix",
    "normalize",
    "polish",
    "reconstruct",
    "reconstruction_error",
    "save_grid",
    "selection_matrix",
    "solve",
    "to_snapshots",
    "white_noise_problem",
    "wls_estimator",
    "x_update",
]
