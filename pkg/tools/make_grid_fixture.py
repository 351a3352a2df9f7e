"""Build the committed 30x40 gridded test fixture.

The fixture mimics a masked geophysical field: a handful of smooth global
modes carry the signal, while measurement noise comes from many localized
bumps (spatially correlated within each bump) plus a small white floor.
An elliptical land mass and a small island are masked out, leaving about
900 water cells.  Deterministic for a given seed; rerunning overwrites
tests/fixtures/grid30x40.ssel1 with identical bytes.

Usage: python3 tools/make_grid_fixture.py [out_path]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from senselect.ingest import GriddedDataset, save_grid  # noqa: E402

NLAT, NLON, NFRAMES = 30, 40, 120
SEED = 2026

SIGNAL_WAVENUMBERS = [
    (0, 1), (1, 0), (1, 1), (0, 2), (2, 0),
    (1, 2), (2, 1), (2, 2), (0, 3), (3, 0),
]
SIGNAL_SCALE = 6.0
SIGNAL_DECAY = 0.55

NOISE_BUMPS = 35
BUMP_WIDTH = 2.2
NOISE_SCALE = 0.9
WHITE_SCALE = 0.05


def land_mask() -> np.ndarray:
    """True over water.  One continent plus an island, ~300 masked cells."""
    rows, cols = np.mgrid[0:NLAT, 0:NLON].astype(float)
    continent = ((rows - 9.0) / 8.5) ** 2 + ((cols - 10.0) / 11.0) ** 2 < 1.0
    island = ((rows - 22.0) / 3.0) ** 2 + ((cols - 30.0) / 4.0) ** 2 < 1.0
    return ~(continent | island)


def signal_modes(rng: np.random.Generator) -> np.ndarray:
    """Smooth large-scale patterns, one flattened mode per row."""
    rows, cols = np.mgrid[0:NLAT, 0:NLON].astype(float)
    u = (rows + 0.5) / NLAT
    v = (cols + 0.5) / NLON
    modes = []
    for k, (kr, kc) in enumerate(SIGNAL_WAVENUMBERS):
        pr, pc = rng.uniform(0.0, 2.0 * np.pi, size=2)
        pattern = np.cos(np.pi * kr * u + pr) * np.cos(np.pi * kc * v + pc)
        amplitude = SIGNAL_SCALE / (k + 1.0) ** SIGNAL_DECAY
        modes.append(amplitude * pattern.ravel())
    return np.array(modes)


def bump_modes(rng: np.random.Generator, water: np.ndarray) -> np.ndarray:
    """Localized unit-norm Gaussian bumps centered on water cells."""
    rows, cols = np.mgrid[0:NLAT, 0:NLON].astype(float)
    water_rows, water_cols = np.nonzero(water.reshape(NLAT, NLON))
    centers = rng.choice(water_rows.size, size=NOISE_BUMPS, replace=False)
    modes = []
    for j in centers:
        d2 = (rows - water_rows[j]) ** 2 + (cols - water_cols[j]) ** 2
        bump = np.exp(-d2 / (2.0 * BUMP_WIDTH**2)).ravel()
        bump *= water  # no energy over land
        amplitude = NOISE_SCALE * rng.uniform(0.7, 1.3)
        modes.append(amplitude * bump / np.linalg.norm(bump))
    return np.array(modes)


def build() -> GriddedDataset:
    rng = np.random.default_rng(SEED)
    water = land_mask().ravel()
    spatial = np.vstack([signal_modes(rng), bump_modes(rng, water)])
    coeffs = rng.standard_normal((spatial.shape[0], NFRAMES))
    field = spatial.T @ coeffs
    field += WHITE_SCALE * rng.standard_normal(field.shape)
    field[~water] = np.nan
    frames = field.T.reshape(NFRAMES, NLAT, NLON)
    return GriddedDataset(
        lat=np.linspace(-14.5, 14.5, NLAT),
        lon=np.linspace(0.5, 39.5, NLON),
        mask=water.reshape(NLAT, NLON),
        frames=frames,
        times=np.arange(NFRAMES, dtype=float),
    )


def main() -> None:
    out = Path(
        sys.argv[1]
        if len(sys.argv) > 1
        else Path(__file__).resolve().parent.parent
        / "tests" / "fixtures" / "grid30x40.ssel1"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    dataset = build()
    save_grid(dataset, out)
    print(f"wrote {out} (n={dataset.n}, m={dataset.m})")


if __name__ == "__main__":
    main()
