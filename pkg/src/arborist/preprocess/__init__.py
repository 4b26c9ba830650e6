"""Removal, imputation and feature selection."""

from .config import IMPUTE_KINDS, SELECT_KINDS, Action, ImputeMethod, PreprocessConfig, PreprocessLog, SelectMethod
from .impute import ImputationError, gower_distances, impute, impute_knn, impute_mice, impute_simple
from .pipeline import (
    NoFeaturesError,
    basic_preprocessing,
    custom_preprocessing,
    normalize_labels,
    remove_correlated,
)
from .select import (
    apply_selection,
    boruta_history,
    mcfs_scores,
    select_boruta,
    select_mcfs,
    select_mutual_info,
    select_permutation_vi,
)

__all__ = [
    "IMPUTE_KINDS",
    "SELECT_KINDS",
    "Action",
    "ImputationError",
    "ImputeMethod",
    "NoFeaturesError",
    "PreprocessConfig",
    "PreprocessLog",
    "SelectMethod",
    "apply_selection",
    "basic_preprocessing",
    "boruta_history",
    "custom_preprocessing",
    "gower_distances",
    "impute",
    "impute_knn",
    "impute_mice",
    "impute_simple",
    "mcfs_scores",
    "normalize_labels",
    "remove_correlated",
    "select_boruta",
    "select_mcfs",
    "select_mutual_info",
    "select_permutation_vi",
]
