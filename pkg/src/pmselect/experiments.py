"""Benchmark experiments behind the `repro` CLI command.

Three studies: the fixed-target rule comparison (table1), the trained
selector on the fixed target (table2), and the whole-grid relative-error
comparison (grid-mare). Each returns its metrics plus pass/fail checks
against the reference accuracy figures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import Dataset, ScenarioConfig, generate_dataset, preselect, split
from .metrics import EvalReport, build_report, mare
from .nn import (CLASSIFICATION, REGRESSION, Mlp, TrainConfig, classify_rule_probs,
                 estimate_errors, train_error_estimator)

PRESELECT_BETA = 1e-2

TABLE1_REFERENCE = {
    "rmse_midpoint": 6.61e-3,
    "rmse_richardson": 13.7e-3,
    "rmse_best": 4.85e-3,
    "mare_midpoint": 0.061,
    "mare_richardson": 0.193,
    "mare_best": 0.049,
    "superiority_share": 0.768,
}

TABLE2_LIMITS = {
    "selection_accuracy_min": 0.93,
    "rmse_selective_max": 5.5e-3,
    "mare_selective_max": 0.056,
}

GRID_MARE_REFERENCE = {
    "mare_midpoint": 0.162,
    "mare_midpoint_tol": 0.03,
    "mare_selective_max": 0.09,
}


@dataclass(frozen=True)
class Check:
    """One pass/fail comparison of a measured value against its bounds."""

    name: str
    value: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        return self.lower <= self.value <= self.upper

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.value:.6g} "
                f"(required [{self.lower:.6g}, {self.upper:.6g}])")


def _rel_band(center: float, rel: float) -> tuple[float, float]:
    return center * (1.0 - rel), center * (1.0 + rel)


def run_table1(seed: int, n_scenarios: int = 60000,
               cfg: ScenarioConfig | None = None,
               workers: int | None = None) -> EvalReport:
    """Fixed-target Monte-Carlo comparison of the two rules and the oracle."""
    cfg = cfg or ScenarioConfig()
    if cfg.target_index is None:
        raise ValueError("table1 needs a fixed target index")
    data = generate_dataset(seed, cfg, n_scenarios=n_scenarios, workers=workers)
    return build_report(data.errors, data.truths)


def check_table1(report: EvalReport) -> list[Check]:
    ref = TABLE1_REFERENCE
    share = report.superiority_midpoint / report.n_samples
    return [
        Check("rmse midpoint", report.rmse_midpoint, *_rel_band(ref["rmse_midpoint"], 0.15)),
        Check("rmse richardson", report.rmse_richardson, *_rel_band(ref["rmse_richardson"], 0.20)),
        Check("rmse best-selective", report.rmse_best, *_rel_band(ref["rmse_best"], 0.15)),
        Check("mare midpoint", report.mare_midpoint,
              ref["mare_midpoint"] - 0.015, ref["mare_midpoint"] + 0.015),
        Check("mare richardson", report.mare_richardson,
              ref["mare_richardson"] - 0.015, ref["mare_richardson"] + 0.015),
        Check("mare best-selective", report.mare_best,
              ref["mare_best"] - 0.015, ref["mare_best"] + 0.015),
        Check("superiority share midpoint", share,
              ref["superiority_share"] - 0.03, ref["superiority_share"] + 0.03),
    ]


def selective_evaluation(dataset: Dataset, mlp: Mlp):
    """Chosen rule index and selected-rule error for every dataset row.

    Regression heads pick the rule with the smaller estimated absolute
    error; classification heads pick the more probable class. Ties go to
    the midpoint rule either way.
    """
    if mlp.head == REGRESSION:
        estimates = estimate_errors(mlp, dataset.features)
        chosen = np.where(np.abs(estimates[:, 0]) <= np.abs(estimates[:, 1]), 0, 1)
    else:
        probs = classify_rule_probs(mlp, dataset.features)
        chosen = np.where(probs[:, 0] >= probs[:, 1], 0, 1)
    selective_errors = dataset.errors[np.arange(len(dataset)), chosen]
    return chosen, selective_errors


def train_on_dataset(dataset: Dataset, cfg: TrainConfig,
                     train_fraction: float = 0.8, head: str = REGRESSION,
                     split_seed: int | None = None):
    """Split a (pre-selected) dataset and train the error estimator.

    The held-out fraction doubles as the early-stopping validation set,
    matching the cross-validation arrangement of the training recipe.
    Returns (model, report, train split, test split).
    """
    train_ds, test_ds = split(dataset, train_fraction,
                              cfg.seed if split_seed is None else split_seed)
    mlp, report = train_error_estimator(
        train_ds.features, train_ds.errors,
        test_ds.features, test_ds.errors, cfg, head=head,
    )
    return mlp, report, train_ds, test_ds


def run_table2(seed: int, n_raw_scenarios: int = 100000,
               train_cfg: TrainConfig | None = None,
               cfg: ScenarioConfig | None = None,
               beta: float = PRESELECT_BETA,
               workers: int | None = None):
    """Full selector pipeline on the fixed target.

    Generates raw scenarios, pre-selects the informative ones, trains the
    regression head, and reports the selection quality on the held-out
    test split. Returns (EvalReport, model, train report).
    """
    cfg = cfg or ScenarioConfig()
    if cfg.target_index is None:
        raise ValueError("table2 needs a fixed target index")
    train_cfg = train_cfg or TrainConfig(seed=seed)
    raw = generate_dataset(seed, cfg, n_scenarios=n_raw_scenarios, workers=workers)
    kept = preselect(raw, beta)
    if len(kept) < 2:
        raise ValueError("pre-selection kept too few samples to train")
    mlp, train_report, _, test_ds = train_on_dataset(kept, train_cfg, split_seed=seed)
    chosen, selective_errors = selective_evaluation(test_ds, mlp)
    report = build_report(test_ds.errors, test_ds.truths,
                          selective_errors=selective_errors, chosen=chosen)
    return report, mlp, train_report


def check_table2(report: EvalReport) -> list[Check]:
    lim = TABLE2_LIMITS
    return [
        Check("selection accuracy", report.selection_accuracy,
              lim["selection_accuracy_min"], 1.0),
        Check("rmse selective", report.rmse_selective, 0.0, lim["rmse_selective_max"]),
        Check("rmse selective above oracle best", report.rmse_selective,
              np.nextafter(report.rmse_best, np.inf), np.inf),
        Check("rmse selective below midpoint", report.rmse_selective,
              0.0, np.nextafter(report.rmse_midpoint, -np.inf)),
        Check("mare selective", report.mare_selective, 0.0, lim["mare_selective_max"]),
    ]


def run_grid_mare(seed: int, n_train_scenarios: int = 40000,
                  n_eval_scenarios: int = 4000,
                  train_cfg: TrainConfig | None = None,
                  cfg: ScenarioConfig | None = None,
                  workers: int | None = None,
                  mlp: Mlp | None = None):
    """Whole-grid relative-error comparison: fixed midpoint vs selection.

    A rule classifier is trained on rows spanning every predictive-grid
    node, then evaluated without pre-selection on fresh scenarios across
    the full grid. The classifier head is used here because class labels
    stay meaningful at the grid edges, where both absolute errors are far
    below any error-magnitude threshold but their relative sizes still
    differ systematically. Returns a dict of MARE values plus the model.
    """
    cfg = cfg or ScenarioConfig()
    grid_cfg = ScenarioConfig(gs=cfg.gs, model=cfg.model, grid_count=cfg.grid_count,
                              sigma=cfg.sigma, target_index=None,
                              n_scenarios=cfg.n_scenarios)
    if mlp is None:
        raw = generate_dataset(seed, grid_cfg, n_scenarios=n_train_scenarios,
                               workers=workers)
        train_cfg = train_cfg or TrainConfig(seed=seed)
        mlp, _, _, _ = train_on_dataset(raw, train_cfg, head=CLASSIFICATION,
                                        split_seed=seed)

    eval_ds = generate_dataset(seed + 1, grid_cfg, n_scenarios=n_eval_scenarios,
                               workers=workers)
    chosen, selective_errors = selective_evaluation(eval_ds, mlp)
    best_idx = np.argmin(np.abs(eval_ds.errors), axis=1)
    best_errors = eval_ds.errors[np.arange(len(eval_ds)), best_idx]
    result = {
        "n_rows": len(eval_ds),
        "mare_midpoint": mare(eval_ds.errors[:, 0], eval_ds.truths)[0],
        "mare_richardson": mare(eval_ds.errors[:, 1], eval_ds.truths)[0],
        "mare_selective": mare(selective_errors, eval_ds.truths)[0],
        "mare_best": mare(best_errors, eval_ds.truths)[0],
        "selection_accuracy": float(np.mean(chosen == best_idx)),
    }
    return result, mlp


def check_grid_mare(result: dict) -> list[Check]:
    ref = GRID_MARE_REFERENCE
    return [
        Check("whole-grid mare midpoint", result["mare_midpoint"],
              ref["mare_midpoint"] - ref["mare_midpoint_tol"],
              ref["mare_midpoint"] + ref["mare_midpoint_tol"]),
        Check("whole-grid mare selective", result["mare_selective"],
              0.0, ref["mare_selective_max"]),
        Check("selective below midpoint", result["mare_selective"],
              0.0, np.nextafter(result["mare_midpoint"], -np.inf)),
    ]
