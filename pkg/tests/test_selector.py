import math

import numpy as np
import pytest

from pmselect.dynamics import DynamicsModel
from pmselect.features import FeatureStats
from pmselect.grid import PointMassDensity, build_grid, pmd_from_pdf
from pmselect.gsum import normal_pdf
from pmselect.nn import init_mlp
from pmselect.rules import RuleId, midpoint_rule, predict_pmd, richardson_rule
from pmselect.selector import (Selection, compensate, make_selective_evaluator,
                               select_rule, selective_integrate)

MODEL = DynamicsModel(gain=1.0, noise_variance=2.0)


def estimator(seed=0):
    mlp = init_mlp((87, 8, 2), seed=seed)
    mlp.feature_stats = FeatureStats.identity(87)
    mlp.target_scale = np.array([0.05, 0.05])
    return mlp


def gaussian_pmd():
    g = build_grid(0.0, 1.0, 6.0, 30)
    return pmd_from_pdf(lambda x: normal_pdf(x, 0.0, 1.0), g)


def test_select_rule_prefers_smaller_magnitude():
    assert select_rule((0.01, -0.02)) is RuleId.MIDPOINT
    assert select_rule((-0.05, 0.001)) is RuleId.RICHARDSON


def test_select_rule_tie_goes_to_midpoint():
    assert select_rule((0.01, -0.01)) is RuleId.MIDPOINT
    assert select_rule((0.0, 0.0)) is RuleId.MIDPOINT


def test_select_rule_scale_invariant():
    rng = np.random.default_rng(2)
    for _ in range(50):
        est = rng.normal(size=2)
        scale = float(rng.uniform(0.1, 100.0))
        assert select_rule(est) is select_rule(est * scale)


def test_select_rule_rejects_nonfinite():
    with pytest.raises(ValueError):
        select_rule((np.nan, 0.0))
    with pytest.raises(ValueError):
        select_rule((np.inf, 0.0))


def test_selective_integrate_returns_one_of_the_rules():
    pmd = gaussian_pmd()
    mlp = estimator()
    for target in np.linspace(-8.0, 8.0, 9):
        sel = selective_integrate(pmd, MODEL, float(target), mlp)
        mid = midpoint_rule(pmd, MODEL, float(target))
        rich = richardson_rule(pmd, MODEL, float(target))
        assert sel.value in (mid, rich)
        assert sel.chosen is select_rule(sel.estimates)
        expected = mid if sel.chosen is RuleId.MIDPOINT else rich
        assert sel.value == expected


def test_selective_integrate_degenerate_agreement():
    # constant kernel makes both rules coincide, so either pick is the same value
    model = DynamicsModel(gain=1.0, noise_variance=2.0,
                          noise_pdf=lambda w: np.full_like(np.asarray(w, dtype=float), 0.3))
    pmd = gaussian_pmd()
    sel = selective_integrate(pmd, model, 0.0, estimator())
    assert math.isclose(sel.value, 0.3, rel_tol=1e-12)


def test_selective_integrate_error_bounded_by_worst_rule():
    pmd = gaussian_pmd()
    mlp = estimator()
    for target in np.linspace(-4.0, 4.0, 7):
        sel = selective_integrate(pmd, MODEL, float(target), mlp)
        mid = midpoint_rule(pmd, MODEL, float(target))
        rich = richardson_rule(pmd, MODEL, float(target))
        truth = normal_pdf(float(target), 0.0, 3.0)
        worst = max(abs(truth - mid), abs(truth - rich))
        assert abs(truth - sel.value) <= worst


def test_selective_integrate_dimension_mismatch():
    g = build_grid(0.0, 1.0, 6.0, 20)
    pmd = pmd_from_pdf(lambda x: normal_pdf(x, 0.0, 1.0), g)
    with pytest.raises(ValueError):
        selective_integrate(pmd, MODEL, 0.0, estimator())


def test_selective_evaluator_plugs_into_predict_pmd():
    pmd = gaussian_pmd()
    grid_next = build_grid(0.0, math.sqrt(3.0), 6.0, 30)
    evaluator = make_selective_evaluator(estimator())
    predictive = predict_pmd(pmd, MODEL, grid_next, evaluator=evaluator)
    assert predictive.is_normalized()
    mid_pred = predict_pmd(pmd, MODEL, grid_next, evaluator=midpoint_rule)
    rich_pred = predict_pmd(pmd, MODEL, grid_next, evaluator=richardson_rule)
    # every selective node comes from one of the two fixed-rule predictions
    raw_sel = np.array([evaluator(pmd, MODEL, float(t)) for t in grid_next.points])
    raw_mid = np.array([midpoint_rule(pmd, MODEL, float(t)) for t in grid_next.points])
    raw_rich = np.array([richardson_rule(pmd, MODEL, float(t)) for t in grid_next.points])
    for s, m, r in zip(raw_sel, raw_mid, raw_rich):
        assert s == m or s == r
    assert mid_pred.is_normalized() and rich_pred.is_normalized()


def test_compensate():
    assert compensate(0.2, 0.0) == 0.2
    assert math.isclose(compensate(0.19, 0.013), 0.203, rel_tol=1e-15)
    assert compensate(0.01, -0.02) == 0.0


def test_compensate_recovers_truth_with_perfect_estimate():
    pmd = gaussian_pmd()
    target = 0.4
    truth = normal_pdf(target, 0.0, 3.0)
    mid = midpoint_rule(pmd, MODEL, target)
    assert math.isclose(compensate(mid, truth - mid), truth, rel_tol=1e-15)
