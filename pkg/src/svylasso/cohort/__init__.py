"""Companion analyses: literacy scores, clustering, correlation, IIA and decomposition."""
from .clustering import ClusterResult, elbow, kmeans, silhouette
from .iia import (
    ChoiceFit,
    IIAResult,
    fit_conditional_logit,
    hausman_mcfadden,
    iia_test,
    mnl_from_design,
    simulate_nested_logit,
)
from .literacy import (
    LiteracyScore,
    WeightedDescriptives,
    literacy_score,
    weighted_descriptives,
    weighted_quantile,
)
from .oaxaca import DecompositionResult, LogitFit, fit_logit, oaxaca_blinder
from .stats import PearsonResult, pearson_p_value, pearson_test

__all__ = [
    "ClusterResult", "elbow", "kmeans", "silhouette",
    "ChoiceFit", "IIAResult", "fit_conditional_logit", "hausman_mcfadden", "iia_test",
    "mnl_from_design", "simulate_nested_logit",
    "LiteracyScore", "WeightedDescriptives", "literacy_score", "weighted_descriptives",
    "weighted_quantile",
    "DecompositionResult", "LogitFit", "fit_logit", "oaxaca_blinder",
    "PearsonResult", "pearson_p_value", "pearson_test",
]
