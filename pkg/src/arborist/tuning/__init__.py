"""Defaults, random search and Bayesian optimization over engine parameters."""

from .gp import GaussianProcess, expected_improvement, fit_gp, se_ard
from .search import BayesState, bayes_opt, default_candidates, random_search
from .space import DEFAULT_SPACES, Candidate, Dimension, ParamSpace, SpaceError, load_spaces
from .training import TuningConfig, run_training

__all__ = [
    "BayesState",
    "Candidate",
    "DEFAULT_SPACES",
    "Dimension",
    "GaussianProcess",
    "ParamSpace",
    "SpaceError",
    "TuningConfig",
    "bayes_opt",
    "default_candidates",
    "expected_improvement",
    "fit_gp",
    "load_spaces",
    "random_search",
    "run_training",
    "se_ard",
]
