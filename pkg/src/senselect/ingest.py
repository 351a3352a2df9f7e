"""Gridded dataset I/O, snapshot-matrix extraction, and CV splits.

The native file format is a self-describing flat binary ("SSEL1"): magic
bytes, three little-endian u32 dimensions (nlat, nlon, nframes), then
little-endian float64 blocks for latitudes, longitudes, time labels, and
the frames in row-major order.  Masked-out grid cells carry NaN.  A CSV
fallback covers flat (ungridded) matrices: one row per location, one
column per frame.  Byte-exact layouts are documented in FORMATS.md.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    BadFoldCountError,
    EmptyMaskError,
    InconsistentGridError,
    ParseError,
)

MAGIC = b"SSEL1"
FORMATS = ("ssel1", "csv")


@dataclass(frozen=True)
class GriddedDataset:
    """Time-ordered frames on a fixed lat/lon grid with a validity mask.

    ``mask`` is True at usable cells; every frame is NaN exactly where the
    mask is False, which construction and loading both enforce.
    """

    lat: np.ndarray
    lon: np.ndarray
    mask: np.ndarray
    frames: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        shape = (self.lat.shape[0], self.lon.shape[0])
        if self.mask.shape != shape:
            raise InconsistentGridError(
                f"mask shape {self.mask.shape} does not match grid {shape}"
            )
        if self.frames.ndim != 3 or self.frames.shape[1:] != shape:
            raise InconsistentGridError(
                f"frames shape {self.frames.shape} does not match grid {shape}"
            )
        if self.times.shape[0] != self.frames.shape[0]:
            raise InconsistentGridError(
                f"{self.times.shape[0]} time labels for {self.frames.shape[0]} frames"
            )
        finite = np.isfinite(self.frames)
        if not np.array_equal(finite, np.broadcast_to(self.mask, finite.shape)):
            raise InconsistentGridError(
                "frames must be NaN exactly at masked-out cells, in every frame"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.lat.shape[0], self.lon.shape[0])

    @property
    def n(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def m(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class IndexMap:
    """Bijection between snapshot rows and mask-true grid cells.

    ``cells`` holds the flat (row-major) grid index of each snapshot row,
    in ascending order, so row ``i`` lives at grid cell ``cells[i]``.
    """

    shape: tuple[int, int]
    cells: np.ndarray

    def row_of_cell(self, cell: int) -> int:
        pos = int(np.searchsorted(self.cells, cell))
        if pos == self.cells.shape[0] or self.cells[pos] != cell:
            raise KeyError(f"grid cell {cell} is masked out")
        return pos

    def grid_coords(self, rows=None) -> tuple[np.ndarray, np.ndarray]:
        cells = self.cells if rows is None else self.cells[np.asarray(rows)]
        return np.unravel_index(cells, self.shape)

    def to_grid(self, values: np.ndarray, fill: float = np.nan) -> np.ndarray:
        grid = np.full(self.shape, fill)
        grid.flat[self.cells] = values
        return grid


@dataclass(frozen=True)
class CvSplit:
    """Contiguous-block cross-validation folds over snapshot columns."""

    fold_count: int
    folds: tuple


def dataset_from_matrix(matrix: np.ndarray, times=None) -> GriddedDataset:
    """Wrap a flat n x m matrix as an n x 1 grid (rows become latitudes)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise InconsistentGridError(f"matrix must be 2-D, got shape {matrix.shape}")
    n, m = matrix.shape
    if times is None:
        times = np.arange(m, dtype=np.float64)
    frames = np.ascontiguousarray(matrix.T).reshape(m, n, 1)
    return GriddedDataset(
        lat=np.arange(n, dtype=np.float64),
        lon=np.zeros(1),
        mask=np.isfinite(frames).all(axis=0),
        frames=frames,
        times=np.asarray(times, dtype=np.float64),
    )


def _infer_mask(frames: np.ndarray) -> np.ndarray:
    finite = np.isfinite(frames)
    mask = finite.all(axis=0)
    if not np.array_equal(finite, np.broadcast_to(mask, finite.shape)):
        raise InconsistentGridError(
            "cells must be NaN in every frame or in none; partial masking found"
        )
    return mask


def load_grid(path, format: str | None = None) -> GriddedDataset:
    """Read a dataset, sniffing the format from the magic bytes by default."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if format is None:
        format = "ssel1" if raw[: len(MAGIC)] == MAGIC else "csv"
    if format == "ssel1":
        return _parse_ssel1(raw, path)
    if format == "csv":
        return _parse_csv(raw, path)
    raise ValueError(f"format must be one of {FORMATS}")


def _parse_ssel1(raw: bytes, path: Path) -> GriddedDataset:
    header = len(MAGIC) + 12
    if len(raw) < header or raw[: len(MAGIC)] != MAGIC:
        raise ParseError(f"{path} is not an SSEL1 file")
    nlat, nlon, nframes = struct.unpack_from("<3I", raw, len(MAGIC))
    counts = (nlat, nlon, nframes, nframes * nlat * nlon)
    expected = header + 8 * sum(counts)
    if len(raw) != expected:
        raise ParseError(
            f"{path}: expected {expected} bytes for dims "
            f"({nlat}, {nlon}, {nframes}), found {len(raw)}"
        )
    blocks = []
    offset = header
    for count in counts:
        blocks.append(np.frombuffer(raw, dtype="<f8", count=count, offset=offset))
        offset += 8 * count
    lat, lon, times, flat = (np.ascontiguousarray(b, dtype=np.float64) for b in blocks)
    frames = flat.reshape(nframes, nlat, nlon)
    return GriddedDataset(
        lat=lat, lon=lon, mask=_infer_mask(frames), frames=frames, times=times
    )


def _parse_csv(raw: bytes, path: Path) -> GriddedDataset:
    try:
        text = raw.decode("utf-8")
        rows = [
            [float(cell) for cell in line.split(",")]
            for line in text.splitlines()
            if line.strip()
        ]
        matrix = np.array(rows, dtype=np.float64, ndmin=2)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: not a numeric CSV matrix: {exc}") from exc
    if matrix.size == 0:
        raise ParseError(f"{path}: empty CSV matrix")
    try:
        return dataset_from_matrix(matrix)
    except InconsistentGridError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_grid(ds: GriddedDataset, path, format: str = "ssel1") -> None:
    """Write a dataset; CSV is only available for flat (nlon = 1) grids."""
    path = Path(path)
    if format == "ssel1":
        nlat, nlon = ds.shape
        parts = [
            MAGIC,
            struct.pack("<3I", nlat, nlon, ds.m),
            np.ascontiguousarray(ds.lat, dtype="<f8").tobytes(),
            np.ascontiguousarray(ds.lon, dtype="<f8").tobytes(),
            np.ascontiguousarray(ds.times, dtype="<f8").tobytes(),
            np.ascontiguousarray(ds.frames, dtype="<f8").tobytes(),
        ]
        path.write_bytes(b"".join(parts))
    elif format == "csv":
        if ds.shape[1] != 1:
            raise ValueError("CSV output requires a flat (nlon = 1) grid")
        matrix = ds.frames[:, :, 0].T
        lines = [",".join(format_float(v) for v in row) for row in matrix]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"format must be one of {FORMATS}")


def format_float(value: float) -> str:
    """Shortest round-trippable decimal form of a float."""
    return repr(float(value)) if np.isfinite(value) else "nan"


def to_snapshots(ds: GriddedDataset, center: bool = False) -> tuple[np.ndarray, IndexMap]:
    """Snapshot matrix (one row per valid cell, one column per frame).

    Rows follow row-major order over mask-true cells.  ``center=True``
    subtracts each row's temporal mean.
    """
    cells = np.flatnonzero(ds.mask.ravel())
    if cells.size == 0:
        raise EmptyMaskError("no valid grid cells")
    flat = ds.frames.reshape(ds.m, -1)
    snapshots = np.ascontiguousarray(flat[:, cells].T)
    if center:
        snapshots = snapshots - snapshots.mean(axis=1, keepdims=True)
    return snapshots, IndexMap(shape=ds.shape, cells=cells)


def make_folds(m: int, k: int) -> CvSplit:
    """Split ``m`` columns into ``k`` contiguous test blocks (sizes differ by <= 1)."""
    if k < 2:
        raise BadFoldCountError(f"fold count must be >= 2, got {k}")
    if m < k:
        raise BadFoldCountError(f"cannot split {m} columns into {k} folds")
    columns = np.arange(m)
    folds = []
    for block in np.array_split(columns, k):
        train = np.setdiff1d(columns, block)
        folds.append((train, block.copy()))
    return CvSplit(fold_count=k, folds=tuple(folds))
