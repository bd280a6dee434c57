"""Feature extraction describing a point-mass density and a target point.

The analytical feature set concatenates the raw node weights with their
first and second central differences and the target position relative to
the grid, giving 3N - 3 entries (87 for the default 30-node grid). The
statistical set (node count plus moments) is kept for comparison but is
not used by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PointMassDensity


def analytical_feature_count(grid_count: int) -> int:
    """Length of the analytical feature vector for a given grid size."""
    return 3 * grid_count - 3


def central_differences(pmd: PointMassDensity, order: int) -> np.ndarray:
    """First- or second-order central differences of the weights at interior nodes."""
    if pmd.grid.count < 4:
        raise ValueError("central differences need at least 4 nodes")
    w = pmd.weights
    spacing = pmd.grid.spacing
    if order == 1:
        return (w[2:] - w[:-2]) / (2.0 * spacing)
    if order == 2:
        return (w[2:] - 2.0 * w[1:-1] + w[:-2]) / spacing**2
    raise ValueError("order must be 1 or 2")


def extract_features(pmd: PointMassDensity, target: float) -> np.ndarray:
    """Analytical feature vector for (pmd, target).

    Layout: N weights, N-2 first differences, N-2 second differences, then
    the target position expressed relative to the grid center in units of
    the grid half-width. The vector is translation invariant by
    construction.
    """
    relative_target = (target - pmd.grid.center) / pmd.grid.half_width
    return np.concatenate([
        pmd.weights,
        central_differences(pmd, 1),
        central_differences(pmd, 2),
        [relative_target],
    ])


def statistical_features(pmd: PointMassDensity, target: float,
                         max_order: int = 4) -> np.ndarray:
    """Moment-based feature vector: node count, raw and central moments, target.

    Raw moments run from order 1 to max_order, central moments from 2 to
    max_order, all computed from the piece-wise constant density.
    """
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    x = pmd.grid.points
    mass = pmd.weights * pmd.grid.spacing
    raw = [float(mass @ x**p) for p in range(1, max_order + 1)]
    centered = x - raw[0]
    central = [float(mass @ centered**p) for p in range(2, max_order + 1)]
    relative_target = (target - pmd.grid.center) / pmd.grid.half_width
    return np.array([pmd.grid.count] + raw + central + [relative_target])


@dataclass(frozen=True)
class FeatureStats:
    """Per-entry standardization statistics estimated on a training split."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64)
        std = np.array(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-d arrays of equal length")
        if np.any(std <= 0):
            raise ValueError("std entries must be positive")
        mean.flags.writeable = False
        std.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def from_samples(cls, features: np.ndarray) -> "FeatureStats":
        """Estimate stats column-wise; zero-variance entries get std 1."""
        features = np.asarray(features, dtype=np.float64)
        std = features.std(axis=0)
        std[std == 0.0] = 1.0
        return cls(mean=features.mean(axis=0), std=std)

    @classmethod
    def identity(cls, length: int) -> "FeatureStats":
        return cls(mean=np.zeros(length), std=np.ones(length))


def standardize(values: np.ndarray, stats: FeatureStats) -> np.ndarray:
    """Entry-wise (values - mean) / std; accepts a vector or a sample matrix."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != len(stats.mean):
        raise ValueError(
            f"feature length {values.shape[-1]} does not match stats length {len(stats.mean)}"
        )
    return (values - stats.mean) / stats.std


def destandardize(values: np.ndarray, stats: FeatureStats) -> np.ndarray:
    """Inverse of `standardize`."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != len(stats.mean):
        raise ValueError(
            f"feature length {values.shape[-1]} does not match stats length {len(stats.mean)}"
        )
    return values * stats.std + stats.mean
