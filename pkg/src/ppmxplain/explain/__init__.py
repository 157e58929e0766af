from .permutation import PFIReport, permutation_importance
from .shap import (
    Attribution,
    GlobalShapReport,
    brute_force_shapley,
    interventional_value_function,
    sample_background,
    shap_global,
    shap_linear,
    shap_tree,
)

__all__ = [
    "Attribution",
    "GlobalShapReport",
    "PFIReport",
    "brute_force_shapley",
    "interventional_value_function",
    "permutation_importance",
    "sample_background",
    "shap_global",
    "shap_linear",
    "shap_tree",
]
