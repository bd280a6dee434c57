"""Per-point rule selection driven by the trained error estimator.

For every evaluation point both candidate rules are computed, the
network estimates each rule's error, and the rule with the smaller
estimated absolute error wins. Ties go to the midpoint rule, the
cheaper one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsModel
from .features import extract_features
from .grid import PointMassDensity
from .nn import Mlp, estimate_errors
from .rules import RuleId, midpoint_rule, richardson_rule


@dataclass(frozen=True)
class Selection:
    """Outcome of one selective evaluation."""

    chosen: RuleId
    estimates: tuple
    value: float


def select_rule(estimates) -> RuleId:
    """Rule with the smallest estimated absolute error; ties pick midpoint."""
    est = np.asarray(estimates, dtype=np.float64)
    if not np.all(np.isfinite(est)):
        raise ValueError("error estimates must be finite")
    return RuleId.MIDPOINT if abs(est[0]) <= abs(est[1]) else RuleId.RICHARDSON


def selective_integrate(pmd: PointMassDensity, model: DynamicsModel,
                        target: float, mlp: Mlp) -> Selection:
    """Evaluate both rules at `target` and return the estimator's pick."""
    mid = midpoint_rule(pmd, model, target)
    rich = richardson_rule(pmd, model, target)
    feats = extract_features(pmd, target)
    estimates = estimate_errors(mlp, feats)
    chosen = select_rule(estimates)
    value = mid if chosen is RuleId.MIDPOINT else rich
    return Selection(chosen=chosen,
                     estimates=(float(estimates[0]), float(estimates[1])),
                     value=value)


def make_selective_evaluator(mlp: Mlp):
    """Per-point evaluator for `predict_pmd` backed by the given estimator."""

    def evaluator(pmd, model, target):
        return selective_integrate(pmd, model, target, mlp).value

    return evaluator


def compensate(rule_value: float, estimate: float) -> float:
    """Add the estimated error back onto the rule output, floored at zero."""
    return max(rule_value + estimate, 0.0)
