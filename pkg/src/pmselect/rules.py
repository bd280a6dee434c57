"""Deterministic quadrature rules for the prediction convolution.

Both rules approximate the predictive density at a target point,
integrating the transition kernel against a point-mass density: the
plain midpoint rule, and its extrapolated variant that combines the
full sum with an every-second-node sum to cancel the leading error
term.
"""

from __future__ import annotations

import enum

import numpy as np

from .dynamics import DynamicsModel, transition_density
from .grid import Grid, PointMassDensity, build_grid
from .gsum import GaussianSum, predict_exact


class RuleId(enum.IntEnum):
    """The two candidate quadrature rules, ordered by cost."""

    MIDPOINT = 1
    RICHARDSON = 2


def midpoint_rule(pmd: PointMassDensity, model: DynamicsModel, target: float) -> float:
    """Midpoint-rule value of the predictive density at `target`."""
    kernel = transition_density(model, target, pmd.grid.points)
    return float(kernel @ pmd.weights) * pmd.grid.spacing


def coarsen(pmd: PointMassDensity) -> PointMassDensity:
    """Keep every second node (starting at the first) with doubled spacing.

    The kept weights are the original node values; they are not
    renormalized because the result only enters the quadrature sum.
    """
    n = pmd.grid.count
    if n % 2 != 0:
        raise ValueError("coarsening requires an even node count")
    coarse = Grid(points=pmd.grid.points[::2], spacing=2.0 * pmd.grid.spacing)
    return PointMassDensity(grid=coarse, weights=pmd.weights[::2])


def richardson_rule(pmd: PointMassDensity, model: DynamicsModel, target: float) -> float:
    """Extrapolated midpoint value: fine + (fine - coarse) / 3.

    The correction cancels the second-order error term of the midpoint
    rule; the output may dip slightly below zero in density tails.
    """
    fine = midpoint_rule(pmd, model, target)
    coarse = midpoint_rule(coarsen(pmd), model, target)
    return fine + (fine - coarse) / 3.0


def grid_next_support(gs_prior: GaussianSum, model: DynamicsModel,
                      sigma: float, count: int) -> Grid:
    """Predictive grid covering mean +- sigma*std of the exact predicted density."""
    if not model.is_linear:
        raise ValueError("predictive support via moment propagation needs a linear model")
    predicted = predict_exact(gs_prior, model.gain, model.noise_variance)
    mean, variance = predicted.moments()
    return build_grid(mean, np.sqrt(variance), sigma, count)


def predict_pmd(pmd: PointMassDensity, model: DynamicsModel, grid_next: Grid,
                evaluator=midpoint_rule) -> PointMassDensity:
    """Predictive PMD on `grid_next`.

    `evaluator(pmd, model, target)` supplies the per-node rule; values are
    clamped at zero from below and renormalized so the result integrates
    to one. Node evaluations are independent of each other.
    """
    values = np.array([evaluator(pmd, model, t) for t in grid_next.points],
                      dtype=np.float64)
    values = np.maximum(values, 0.0)
    total = float(values.sum()) * grid_next.spacing
    if total <= 0.0:
        raise ValueError("every evaluated node is nonpositive; cannot normalize")
    return PointMassDensity(grid=grid_next, weights=values / total)
