"""In-repo tree learners and the model container."""

from .core import Tree, split_gain
from .encoding import MAX_NATIVE_LEVELS, Recipe, SchemaError, fit_recipe
from .model import (
    DEFAULT_PARAMS,
    EngineKind,
    ParamError,
    TrainedModel,
    default_mtry,
    fit_gbdt,
    fit_model,
    fit_random_forest,
    fit_tree,
    oob_permutation_importance,
    predict,
    resolve_params,
)

__all__ = [
    "DEFAULT_PARAMS",
    "EngineKind",
    "MAX_NATIVE_LEVELS",
    "ParamError",
    "Recipe",
    "SchemaError",
    "TrainedModel",
    "Tree",
    "default_mtry",
    "fit_gbdt",
    "fit_model",
    "fit_random_forest",
    "fit_recipe",
    "fit_tree",
    "oob_permutation_importance",
    "predict",
    "resolve_params",
    "split_gain",
]
