"""Univariate Gaussian-sum densities.

A Gaussian sum is the prior family used throughout the prediction
experiments: it is closed under linear dynamics with additive Gaussian
noise, which gives an exact predictive density to benchmark the
quadrature rules against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

WEIGHT_SUM_TOL = 1e-12


def normal_pdf(x, mean, variance):
    """Gaussian density N(x; mean, variance); broadcasts over array inputs."""
    return np.exp(-0.5 * (x - mean) ** 2 / variance) / (SQRT_2PI * np.sqrt(variance))


@dataclass(frozen=True)
class GaussianSum:
    """Weighted mixture of univariate Gaussians.

    weights must be nonnegative and sum to one; variances must be
    strictly positive. Arrays are copied and frozen on construction.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = len(self.weights)
        if n < 1:
            raise ValueError("mixture needs at least one component")
        if len(self.means) != n or len(self.variances) != n:
            raise ValueError("weights, means and variances must have equal length")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("mixture weights must sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def pdf(self, x):
        """Mixture density at x (scalar or array)."""
        x = np.asarray(x, dtype=np.float64)
        comp = normal_pdf(x[..., None], self.means, self.variances)
        out = comp @ self.weights
        return float(out) if out.ndim == 0 else out

    def moments(self) -> tuple[float, float]:
        """Overall (mean, variance) of the mixture."""
        mean = float(self.weights @ self.means)
        second = float(self.weights @ (self.variances + self.means**2))
        return mean, second - mean**2

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianSum":
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            means=np.asarray(data["means"], dtype=np.float64),
            variances=np.asarray(data["variances"], dtype=np.float64),
        )


def predict_exact(gs: GaussianSum, gain: float, noise_variance: float) -> GaussianSum:
    """Exact one-step predictive density for x' = gain * x + w, w ~ N(0, Q).

    Each component maps to mean gain*m and variance gain^2*v + Q; the
    weights are unchanged.
    """
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    return GaussianSum(
        weights=gs.weights,
        means=gain * gs.means,
        variances=gain * gain * gs.variances + noise_variance,
    )


@dataclass(frozen=True)
class GsRandomConfig:
    """Ranges for drawing random mixtures in Monte-Carlo studies."""

    max_components: int = 10
    mean_range: tuple[float, float] = (-5.0, 5.0)
    variance_range: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self):
        if self.max_components < 1:
            raise ValueError("max_components must be at least 1")
        if self.variance_range[0] <= 0:
            raise ValueError("variance_range lower bound must be positive")

    def to_dict(self) -> dict:
        return {
            "max_components": self.max_components,
            "mean_range": list(self.mean_range),
            "variance_range": list(self.variance_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GsRandomConfig":
        return cls(
            max_components=int(data.get("max_components", 10)),
            mean_range=tuple(data.get("mean_range", (-5.0, 5.0))),
            variance_range=tuple(data.get("variance_range", (0.1, 1.0))),
        )


def sample_random(rng: np.random.Generator, config: GsRandomConfig) -> GaussianSum:
    """Draw a random mixture.

    The component count is uniform on {1, ..., max_components}, means and
    variances are i.i.d. uniform on their ranges, and the weights are
    i.i.d. uniform(0, 1) normalized to sum to one.
    """
    n = int(rng.integers(1, config.max_components + 1))
    means = rng.uniform(*config.mean_range, size=n)
    variances = rng.uniform(*config.variance_range, size=n)
    raw = rng.uniform(0.0, 1.0, size=n)
    return GaussianSum(weights=raw / raw.sum(), means=means, variances=variances)
