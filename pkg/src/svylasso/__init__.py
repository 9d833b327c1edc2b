"""Survey-weighted logistic Lasso with post-selection inference.

The top-level namespace re-exports the most used entry points; the
submodules hold the full API.
"""
from .dataset import (
    DesignMatrix,
    ModelSpec,
    SimulationConfig,
    StratumConfig,
    SurveyDataset,
    encode_design,
    expand_interactions,
    load_spec,
    load_table,
    simulate_survey,
)
from .inference import c_alpha_ame, c_alpha_coef, debias, selective_onestep, significance_marks
from .logitcore import ame, ame_gradient, likelihood_parts, loglik
from .mca import export_coordinates, mca, run_mca
from .report import regression_table
from .solver import cv_select, fit, fit_adaptive, fit_cv, order_selection

__version__ = "0.1.0"

__all__ = [
    "DesignMatrix", "ModelSpec", "SimulationConfig", "StratumConfig", "SurveyDataset", "encode_design",
    "expand_interactions", "load_spec", "load_table", "simulate_survey",
    "c_alpha_ame", "c_alpha_coef", "debias", "selective_onestep", "significance_marks",
    "ame", "ame_gradient", "likelihood_parts", "loglik",
    "export_coordinates", "mca", "run_mca", "regression_table",
    "cv_select", "fit", "fit_adaptive", "fit_cv", "order_selection",
]
