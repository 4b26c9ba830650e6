import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import blobs, linear_regression, multiclass  # noqa: E402

from arborist.engines import EngineKind  # noqa: E402
from arborist.tuning import TuningConfig  # noqa: E402
from arborist.workflow import train  # noqa: E402

SMALL = TuningConfig(random_n=1, bayes_budget=0)
FAST_ENGINES = [EngineKind.TREE, EngineKind.GBDT_LEAFWISE]


@pytest.fixture(scope="session")
def binary_output():
    return train(blobs(n=160, p=3, margin=2.0, seed=11), "y", tuning=SMALL, seed=5, record_timing=False)


@pytest.fixture(scope="session")
def multiclass_output():
    return train(multiclass(n=150, seed=12), "y", FAST_ENGINES, SMALL, seed=6, record_timing=False)


@pytest.fixture(scope="session")
def regression_output():
    return train(linear_regression(n=150, seed=13), "y", FAST_ENGINES, SMALL, seed=7, record_timing=False)
