"""Physical model of the pressure-sensing walkway.

A walkway is a chain of identical sensor tiles laid end-to-end along the
walking direction (+x). Each tile carries a 33 x 48 grid of force nodes at
0.5 inch (0.0127 m) pitch, so one tile spans 0.6096 m along the lane and
0.4191 m across it. Nodes report 12-bit raw counts that map linearly onto
0..10000 g; anything under the 50 g contact threshold is treated as
no-contact when masking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Single-tile sensor geometry and calibration.
PITCH_M = 0.0127
TILE_ROWS = 33
TILE_COLS = 48
RAW_MAX = 4095
FORCE_MAX_G = 10000.0
CONTACT_THRESHOLD_G = 50.0

TILE_LENGTH_M = TILE_COLS * PITCH_M   # 0.6096 m along the walking axis
TILE_WIDTH_M = TILE_ROWS * PITCH_M    # 0.4191 m across the lane

# Lengths the lane is meant to be used at; outside we warn but proceed.
RECOMMENDED_MIN_LENGTH_M = 5.0
RECOMMENDED_MAX_LENGTH_M = 15.0


@dataclass(frozen=True)
class TileSpec:
    """Geometry and calibration constants of one sensor tile."""

    rows: int = TILE_ROWS
    cols: int = TILE_COLS
    pitch: float = PITCH_M
    raw_max: int = RAW_MAX
    force_max: float = FORCE_MAX_G
    contact_threshold: float = CONTACT_THRESHOLD_G

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("tile must have at least one row and column")
        if self.raw_max < 1 or self.force_max <= 0:
            raise ConfigError("raw_max and force_max must be positive")

    @property
    def length(self) -> float:
        return self.cols * self.pitch

    @property
    def width(self) -> float:
        return self.rows * self.pitch


@dataclass(frozen=True)
class WalkwayConfig:
    """A lane of `tile_count` tiles chained along +x starting at `origin`."""

    tile_count: int
    origin: float = 0.0
    tile: TileSpec = field(default_factory=TileSpec)

    def __post_init__(self):
        if self.tile_count < 1:
            raise ConfigError("walkway needs at least one tile")
        if not (RECOMMENDED_MIN_LENGTH_M <= self.length <= RECOMMENDED_MAX_LENGTH_M):
            warnings.warn(
                f"walkway length {self.length:.3f} m is outside the "
                f"recommended {RECOMMENDED_MIN_LENGTH_M:.0f}-"
                f"{RECOMMENDED_MAX_LENGTH_M:.0f} m range",
                stacklevel=2,
            )

    @property
    def length(self) -> float:
        return self.tile_count * self.tile.length

    @property
    def width(self) -> float:
        return self.tile.width

    @property
    def node_count(self) -> int:
        return self.tile_count * self.tile.rows * self.tile.cols

    def node_center(self, tile: int, row: int, col: int) -> tuple[float, float]:
        return node_center(tile, row, col, tile_count=self.tile_count)


@dataclass(eq=False)
class PressureFrame:
    """One timestamped snapshot of raw node counts for the whole walkway.

    `values` has shape (tile_count, rows, cols), dtype uint16, row-major
    per tile, which is also the wire payload layout.
    """

    seq: int
    timestamp_us: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[1:] != (TILE_ROWS, TILE_COLS):
            raise ConfigError(
                f"frame values must have shape (tiles, {TILE_ROWS}, {TILE_COLS}), "
                f"got {v.shape}"
            )
        if v.size and int(v.max()) > RAW_MAX:
            raise ConfigError(f"raw value {int(v.max())} exceeds {RAW_MAX}")
        if v.size and int(v.min()) < 0:
            raise ConfigError("raw values must be nonnegative")
        self.values = v.astype(np.uint16, copy=False)

    @property
    def tile_count(self) -> int:
        return self.values.shape[0]

    @property
    def time_s(self) -> float:
        return self.timestamp_us / 1e6

    def lane_grid(self) -> np.ndarray:
        """The walkway as one (rows, tile_count*cols) grid, tiles chained in x."""
        return np.concatenate(list(self.values), axis=1)


def raw_to_force(raw):
    """Map 12-bit raw counts to grams: 0 -> 0 g, 4095 -> 10000 g, linear.

    Accepts scalars or arrays. Raises on values outside 0..4095.
    """
    arr = np.asarray(raw)
    if arr.size and (int(arr.max()) > RAW_MAX or int(arr.min()) < 0):
        raise ValueError(f"raw count out of range 0..{RAW_MAX}")
    force = arr.astype(np.float64) * (FORCE_MAX_G / RAW_MAX)
    if np.isscalar(raw) or arr.ndim == 0:
        return float(force)
    return force


def force_to_raw(force_g):
    """Inverse calibration with clipping at the sensor's saturation point."""
    arr = np.asarray(force_g, dtype=np.float64)
    raw = np.rint(arr * (RAW_MAX / FORCE_MAX_G))
    return np.clip(raw, 0, RAW_MAX).astype(np.uint16)


def node_center(tile: int, row: int, col: int, tile_count: int | None = None) -> tuple[float, float]:
    """World position (x, y) in meters of a node's center.

    x runs along the walking direction, y across the lane. Raises IndexError
    for indices outside the tile grid (and outside the walkway when
    `tile_count` is given).
    """
    if not (0 <= row < TILE_ROWS and 0 <= col < TILE_COLS):
        raise IndexError(f"node ({row}, {col}) outside the {TILE_ROWS}x{TILE_COLS} tile")
    if tile < 0 or (tile_count is not None and tile >= tile_count):
        raise IndexError(f"tile {tile} outside walkway of {tile_count} tiles")
    x = tile * TILE_LENGTH_M + (col + 0.5) * PITCH_M
    y = (row + 0.5) * PITCH_M
    return (x, y)


def lane_node_coords(tile_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized node centers for the chained lane grid.

    Returns (xs, ys): xs has length tile_count*cols, ys has length rows.
    xs[tile*48 + col], ys[row] match node_center(tile, row, col).
    """
    gcols = np.arange(tile_count * TILE_COLS)
    xs = (gcols + 0.5) * PITCH_M
    ys = (np.arange(TILE_ROWS) + 0.5) * PITCH_M
    return xs, ys


def contact_mask(frame: PressureFrame, threshold_g: float = CONTACT_THRESHOLD_G) -> np.ndarray:
    """Boolean lane grid: True where the calibrated force reaches the contact threshold."""
    grid = frame.lane_grid()
    return raw_to_force(grid) >= threshold_g
