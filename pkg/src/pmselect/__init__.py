"""Point-mass state prediction with learned quadrature-rule selection."""

from .dynamics import DynamicsModel, transition_density
from .features import (FeatureStats, central_differences, extract_features,
                       standardize, statistical_features)
from .grid import Grid, PointMassDensity, build_grid, pmd_from_pdf
from .gsum import GaussianSum, GsRandomConfig, normal_pdf, predict_exact, sample_random
from .metrics import EvalReport, accuracy, build_report, mare, rmse, superiority
from .nn import (CLASSIFICATION, REGRESSION, Mlp, TrainConfig, TrainReport,
                 estimate_errors, init_mlp, load_model, save_model, train,
                 train_error_estimator)
from .rules import (RuleId, coarsen, grid_next_support, midpoint_rule,
                    predict_pmd, richardson_rule)
from .selector import Selection, compensate, make_selective_evaluator, select_rule, selective_integrate

__all__ = [
    "DynamicsModel", "transition_density",
    "FeatureStats", "central_differences", "extract_features", "standardize",
    "statistical_features",
    "Grid", "PointMassDensity", "build_grid", "pmd_from_pdf",
    "GaussianSum", "GsRandomConfig", "normal_pdf", "predict_exact", "sample_random",
    "EvalReport", "accuracy", "build_report", "mare", "rmse", "superiority",
    "CLASSIFICATION", "REGRESSION", "Mlp", "TrainConfig", "TrainReport",
    "estimate_errors", "init_mlp", "load_model", "save_model", "train",
    "train_error_estimator",
    "RuleId", "coarsen", "grid_next_support", "midpoint_rule", "predict_pmd",
    "richardson_rule",
    "Selection", "compensate", "make_selective_evaluator", "select_rule",
    "selective_integrate",
]

__version__ = "0.1.0"
