"""Evaluation criteria for the Monte-Carlo rule-comparison studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MARE_TRUTH_FLOOR = 1e-300


def rmse(errors) -> float:
    """Root of the mean squared error."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("rmse needs at least one error")
    return float(np.sqrt(np.mean(errors**2)))


def mare(errors, truths) -> tuple[float, int]:
    """Mean absolute relative error and the count of excluded samples.

    Samples whose reference value is smaller than MARE_TRUTH_FLOOR in
    magnitude are excluded from the mean and reported in the count.
    """
    errors = np.asarray(errors, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if errors.shape != truths.shape:
        raise ValueError("errors and truths must have the same length")
    keep = np.abs(truths) >= MARE_TRUTH_FLOOR
    excluded = int((~keep).sum())
    if not np.any(keep):
        raise ValueError("every sample was excluded by the near-zero-truth guard")
    value = float(np.mean(np.abs(errors[keep] / truths[keep])))
    return value, excluded


def superiority(errors_a, errors_b) -> tuple[int, int]:
    """Counts of samples where each rule has the smaller absolute error.

    Ties are credited to the first rule, mirroring the selector's
    tie-break toward the cheaper rule.
    """
    a = np.abs(np.asarray(errors_a, dtype=np.float64))
    b = np.abs(np.asarray(errors_b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError("error lists must have the same length")
    wins_a = int(np.sum(a <= b))
    return wins_a, a.size - wins_a


def accuracy(chosen, oracle_best) -> float:
    """Fraction of positions where the chosen rule equals the oracle's."""
    chosen = np.asarray(chosen)
    oracle_best = np.asarray(oracle_best)
    if chosen.shape != oracle_best.shape:
        raise ValueError("rule lists must have the same length")
    return float(np.mean(chosen == oracle_best))


@dataclass
class EvalReport:
    """Summary of one rule-comparison experiment."""

    n_samples: int
    rmse_midpoint: float
    rmse_richardson: float
    rmse_best: float
    mare_midpoint: float
    mare_richardson: float
    mare_best: float
    superiority_midpoint: int
    superiority_richardson: int
    mare_excluded: int = 0
    rmse_selective: float | None = None
    mare_selective: float | None = None
    selection_accuracy: float | None = None

    def to_dict(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "rmse": {
                "midpoint": self.rmse_midpoint,
                "richardson": self.rmse_richardson,
                "best_selective": self.rmse_best,
            },
            "mare": {
                "midpoint": self.mare_midpoint,
                "richardson": self.mare_richardson,
                "best_selective": self.mare_best,
                "excluded": self.mare_excluded,
            },
            "superiority": {
                "midpoint": self.superiority_midpoint,
                "richardson": self.superiority_richardson,
            },
        }
        if self.rmse_selective is not None:
            out["rmse"]["selective"] = self.rmse_selective
        if self.mare_selective is not None:
            out["mare"]["selective"] = self.mare_selective
        if self.selection_accuracy is not None:
            out["selection_accuracy"] = self.selection_accuracy
        return out

    def to_text(self) -> str:
        """Aligned table, one column per rule."""
        cols = ["Midpoint", "Richardson", "Best sel."]
        rmse_row = [self.rmse_midpoint, self.rmse_richardson, self.rmse_best]
        mare_row = [self.mare_midpoint, self.mare_richardson, self.mare_best]
        sup_row = [str(self.superiority_midpoint), str(self.superiority_richardson), "--"]
        if self.rmse_selective is not None:
            cols.append("Selective")
            rmse_row.append(self.rmse_selective)
            mare_row.append(self.mare_selective)
            sup_row.append("--")
        lines = [
            f"{'':18s}" + "".join(f"{c:>12s}" for c in cols),
            f"{'RMSE x1e-3':18s}" + "".join(f"{v * 1e3:12.3f}" for v in rmse_row),
            f"{'MARE [%]':18s}" + "".join(f"{v * 100:12.2f}" for v in mare_row),
            f"{'Superiority':18s}" + "".join(f"{s:>12s}" for s in sup_row),
        ]
        if self.selection_accuracy is not None:
            lines.append(f"{'Accuracy [%]':18s}{self.selection_accuracy * 100:12.2f}")
        lines.append(f"{'Samples':18s}{self.n_samples:12d}")
        if self.mare_excluded:
            lines.append(f"{'MARE excluded':18s}{self.mare_excluded:12d}")
        return "\n".join(lines)


def build_report(errors: np.ndarray, truths: np.ndarray,
                 selective_errors: np.ndarray | None = None,
                 chosen: np.ndarray | None = None) -> EvalReport:
    """Assemble an EvalReport from per-sample rule errors.

    `errors` has one row per sample and one column per rule (midpoint,
    richardson). Optional selective-rule errors and chosen-rule indices
    extend the report with the learned-selection criteria.
    """
    errors = np.asarray(errors, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    best_idx = np.argmin(np.abs(errors), axis=1)
    best_errors = errors[np.arange(len(errors)), best_idx]
    wins_mid, wins_rich = superiority(errors[:, 0], errors[:, 1])
    mare_mid, excluded = mare(errors[:, 0], truths)
    report = EvalReport(
        n_samples=len(errors),
        rmse_midpoint=rmse(errors[:, 0]),
        rmse_richardson=rmse(errors[:, 1]),
        rmse_best=rmse(best_errors),
        mare_midpoint=mare_mid,
        mare_richardson=mare(errors[:, 1], truths)[0],
        mare_best=mare(best_errors, truths)[0],
        superiority_midpoint=wins_mid,
        superiority_richardson=wins_rich,
        mare_excluded=excluded,
    )
    if selective_errors is not None:
        report.rmse_selective = rmse(selective_errors)
        report.mare_selective = mare(selective_errors, truths)[0]
    if chosen is not None:
        report.selection_accuracy = accuracy(chosen, best_idx)
    return report
