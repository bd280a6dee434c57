"""Scalar stochastic dynamics x' = f(x) + u + w with additive noise.

The experiments use the linear map f(x) = gain * x with Gaussian noise;
the noise density is pluggable so the quadrature rules stay agnostic of
the noise family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .gsum import normal_pdf


@dataclass(frozen=True)
class DynamicsModel:
    """State-transition model.

    `transition` overrides the linear map when given; `noise_pdf` overrides
    the Gaussian N(0, noise_variance) noise density when given. `known_input`
    is the deterministic input term, zero in all experiments here.
    """

    gain: float = 1.0
    noise_variance: float = 2.0
    known_input: float = 0.0
    transition: Optional[Callable] = None
    noise_pdf: Optional[Callable] = None

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")

    @property
    def is_linear(self) -> bool:
        return self.transition is None

    def propagate(self, x):
        """Deterministic part of the transition applied to x."""
        if self.transition is not None:
            return self.transition(x) + self.known_input
        return self.gain * np.asarray(x, dtype=np.float64) + self.known_input

    def to_dict(self) -> dict:
        return {"F": self.gain, "Q": self.noise_variance}

    @classmethod
    def from_dict(cls, data: dict) -> "DynamicsModel":
        return cls(gain=float(data["F"]), noise_variance=float(data["Q"]))


def transition_density(model: DynamicsModel, x_next, x):
    """Transition density p(x_next | x) = p_w(x_next - f(x)).

    Broadcasts over array-valued x or x_next.
    """
    residual = np.asarray(x_next, dtype=np.float64) - model.propagate(x)
    if model.noise_pdf is not None:
        return model.noise_pdf(residual)
    out = normal_pdf(residual, 0.0, model.noise_variance)
    return float(out) if np.ndim(out) == 0 else out
