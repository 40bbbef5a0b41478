"""Piecewise-constant densities on a uniform grid over the circle (-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridDensity:
    """Cell-averaged density on n_cells equal cells of (-1, 1].

    Cell j covers [-1 + j*h, -1 + (j+1)*h) with h = 2/n_cells; n_cells is a
    power of two so every edge (including 0) is an exact dyadic and the mass
    of a normalized density is sum(values) * h = 1.
    """

    n_cells: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if not is_power_of_two(self.n_cells):
            raise ValueError(f"n_cells must be a power of two, got {self.n_cells}")
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.n_cells,):
            raise ValueError(f"values must have shape ({self.n_cells},), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def cell_width(self) -> float:
        return 2.0 / self.n_cells

    def edges(self) -> np.ndarray:
        return -1.0 + self.cell_width * np.arange(self.n_cells + 1)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.cell_width)

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.cell_width)

    def normalized(self) -> "GridDensity":
        m = self.mass()
        if m <= 0.0:
            raise ValueError("cannot normalize density with non-positive mass")
        return GridDensity(self.n_cells, self.values / m)


def uniform_density(n_cells: int) -> GridDensity:
    return GridDensity(n_cells, np.full(n_cells, 0.5))


def l1_distance(f: GridDensity, g: GridDensity) -> float:
    if f.n_cells != g.n_cells:
        raise ValueError("grid sizes differ")
    return float(np.sum(np.abs(f.values - g.values)) * f.cell_width)
