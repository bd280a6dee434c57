"""Equidistant grids and piece-wise constant point-mass densities.

The grid nodes are the centers of adjacent equal cells; a point-mass
density (PMD) stores a density value per node and integrates to one
over the grid support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPACING_RTOL = 1e-12
NORMALIZATION_TOL = 1e-10
MIN_NODES = 4


@dataclass(frozen=True)
class Grid:
    """Ordered equidistant nodes with cell size `spacing`.

    Node i is the center of the half-open cell
    [points[i] - spacing/2, points[i] + spacing/2).
    """

    points: np.ndarray
    spacing: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(pts) < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        diffs = np.diff(pts)
        if np.any(diffs <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.any(np.abs(diffs - self.spacing) > SPACING_RTOL * self.spacing):
            raise ValueError("grid nodes must be equidistant with the stated spacing")

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def lower(self) -> float:
        return float(self.points[0] - 0.5 * self.spacing)

    @property
    def upper(self) -> float:
        return float(self.points[-1] + 0.5 * self.spacing)

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * self.count * self.spacing

    def cell_index(self, x: float) -> int:
        """Index of the half-open cell containing x, or -1 outside the support."""
        idx = int(np.floor((x - self.lower) / self.spacing))
        if idx < 0 or idx >= self.count:
            return -1
        return idx

    def to_dict(self) -> dict:
        return {"lower": self.lower, "spacing": self.spacing, "count": self.count}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        lower = float(data["lower"])
        spacing = float(data["spacing"])
        count = int(data["count"])
        points = lower + (np.arange(count) + 0.5) * spacing
        return cls(points=points, spacing=spacing)


def build_grid(mean: float, std: float, sigma: float, count: int) -> Grid:
    """Grid of `count` cell centers partitioning [mean - sigma*std, mean + sigma*std]."""
    if std <= 0:
        raise ValueError("std must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if count < MIN_NODES:
        raise ValueError(f"count must be at least {MIN_NODES}")
    half = sigma * std
    spacing = 2.0 * half / count
    points = (mean - half) + (np.arange(count) + 0.5) * spacing
    return Grid(points=points, spacing=spacing)


@dataclass(frozen=True)
class PointMassDensity:
    """Per-node density values on a grid.

    Constructed via `pmd_from_pdf` the weights satisfy sum(w) * spacing = 1;
    intermediates produced while coarsening for extrapolated quadrature keep
    the original node values and are not renormalized.
    """

    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if len(w) != self.grid.count:
            raise ValueError("weights length must match grid node count")
        if np.any(w < 0):
            raise ValueError("PMD weights must be nonnegative")

    def density_at(self, x: float) -> float:
        """Weight of the cell containing x; zero outside the grid support."""
        idx = self.grid.cell_index(x)
        return 0.0 if idx < 0 else float(self.weights[idx])

    def mass(self) -> float:
        """Integral of the piece-wise constant density over the support."""
        return float(self.weights.sum() * self.grid.spacing)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.mass() - 1.0) <= tol

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PointMassDensity":
        return cls(
            grid=Grid.from_dict(data["grid"]),
            weights=np.asarray(data["weights"], dtype=np.float64),
        )


def pmd_from_pdf(pdf, grid: Grid) -> PointMassDensity:
    """Evaluate `pdf` at the grid nodes and renormalize to integrate to one.

    Renormalization compensates the probability mass lost by truncating
    the density to the grid support.
    """
    values = np.asarray(pdf(grid.points), dtype=np.float64)
    if values.shape != grid.points.shape:
        values = np.array([pdf(x) for x in grid.points], dtype=np.float64)
    if np.any(values < 0):
        raise ValueError("pdf must be nonnegative on the grid")
    total = float(values.sum()) * grid.spacing
    if total <= 0.0:
        raise ValueError("pdf vanishes on the whole grid; cannot normalize")
    return PointMassDensity(grid=grid, weights=values / total)
