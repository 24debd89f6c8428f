"""2D occupancy grids sliced from signed distance grids."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .sdf import SdfGrid


class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


_CELL_CHARS = {CellState.FREE: ".", CellState.OCCUPIED: "#", CellState.UNKNOWN: "?"}
_CHAR_CELLS = {c: s for s, c in _CELL_CHARS.items()}


class OutsideGrid(IndexError):
    pass


class SliceOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class SliceConfig:
    z_height: float
    occupied_band: float

    def __post_init__(self) -> None:
        if self.occupied_band < 0:
            raise ValueError("occupied_band must be >= 0")


@dataclass
class OccupancyGrid:
    origin_xy: np.ndarray  # world position of cell (0, 0) center
    resolution: float
    cells: np.ndarray  # (width, height) uint8, indexed [ix, iy]

    def __post_init__(self) -> None:
        self.origin_xy = np.asarray(self.origin_xy, dtype=float).reshape(2)
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2:
            raise ValueError("cells must be 2d")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def width(self) -> int:
        return self.cells.shape[0]

    @property
    def height(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def state(self, ix: int, iy: int) -> CellState:
        if not self.in_bounds(ix, iy):
            raise OutsideGrid((ix, iy))
        return CellState(self.cells[ix, iy])

    def is_free(self, ix: int, iy: int) -> bool:
        return self.state(ix, iy) == CellState.FREE

    def world_to_cell(self, point_xy) -> tuple[int, int]:
        p = np.asarray(point_xy, dtype=float)
        ij = np.rint((p - self.origin_xy) / self.resolution).astype(int)
        ix, iy = int(ij[0]), int(ij[1])
        if not self.in_bounds(ix, iy):
            raise OutsideGrid((ix, iy))
        return ix, iy

    def cell_to_world(self, ix: int, iy: int) -> np.ndarray:
        return self.origin_xy + self.resolution * np.array([ix, iy], dtype=float)


def extract_slice(sdf: SdfGrid, cfg: SliceConfig) -> OccupancyGrid:
    """Occupancy at a horizontal plane, interpolating between voxel layers.

    A cell is occupied when the sampled signed distance is at or below the
    occupied band; the XY origin of the source grid is preserved so 2D
    coordinates in both representations mean the same world position.
    """
    nz = sdf.dims[2]
    zf = (cfg.z_height - sdf.origin[2]) / sdf.resolution
    if zf < -1e-9 or zf > nz - 1 + 1e-9:
        raise SliceOutOfRange(f"z={cfg.z_height} outside grid extent")
    k0 = int(np.clip(np.floor(zf), 0, nz - 1))
    k1 = min(k0 + 1, nz - 1)
    frac = float(np.clip(zf - k0, 0.0, 1.0))
    plane = (1.0 - frac) * sdf.values[:, :, k0] + frac * sdf.values[:, :, k1]
    cells = np.where(plane <= cfg.occupied_band, CellState.OCCUPIED, CellState.FREE)
    return OccupancyGrid(
        origin_xy=sdf.origin[:2].copy(),
        resolution=sdf.resolution,
        cells=cells.astype(np.uint8),
    )


def grid_to_json(grid: OccupancyGrid) -> str:
    """Header plus row-major cell characters ('.', '#', '?')."""
    chars = np.empty(grid.cells.shape, dtype="<U1")
    for state, ch in _CELL_CHARS.items():
        chars[grid.cells == state] = ch
    rows = ["".join(chars[:, iy]) for iy in range(grid.height)]
    doc = {
        "origin": [float(grid.origin_xy[0]), float(grid.origin_xy[1])],
        "resolution": grid.resolution,
        "width": grid.width,
        "height": grid.height,
        "cells": "".join(rows),
    }
    return json.dumps(doc, separators=(",", ":"))


def grid_from_json(text: str | bytes) -> OccupancyGrid:
    doc = json.loads(text)
    width, height = int(doc["width"]), int(doc["height"])
    flat = doc["cells"]
    if len(flat) != width * height:
        raise ValueError("cell text length does not match width*height")
    cells = np.empty((width, height), dtype=np.uint8)
    for iy in range(height):
        row = flat[iy * width : (iy + 1) * width]
        for ix, ch in enumerate(row):
            try:
                cells[ix, iy] = _CHAR_CELLS[ch]
            except KeyError:
                raise ValueError(f"unknown cell character {ch!r}") from None
    return OccupancyGrid(
        origin_xy=np.array(doc["origin"], dtype=float),
        resolution=float(doc["resolution"]),
        cells=cells,
    )


def save_grid(grid: OccupancyGrid, path: str | os.PathLike) -> None:
    Path(path).write_text(grid_to_json(grid), encoding="utf-8")


def load_grid(path: str | os.PathLike) -> OccupancyGrid:
    return grid_from_json(Path(path).read_text(encoding="utf-8"))


def empty_grid(origin_xy, resolution: float, width: int, height: int) -> OccupancyGrid:
    return OccupancyGrid(
        origin_xy=np.asarray(origin_xy, dtype=float),
        resolution=resolution,
        cells=np.zeros((width, height), dtype=np.uint8),
    )
