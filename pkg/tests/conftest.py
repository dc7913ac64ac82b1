import math
import os
import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", category=DeprecationWarning)

from tropreg.maxplus import NEG_INF
from tropreg.utils.seeding import get_rng

script_directory = os.path.dirname(os.path.abspath(__file__))
PROJECT_DIR = os.path.dirname(script_directory)

REGRESSION_KEY = "TROPREG_TEST_RUN_REGRESSION"

# Three rows, two columns: the running example of the docs
EXAMPLE_A = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
EXAMPLE_Y = np.array([1.0, 1.0, 1.0])

# Four-node system used by the identification experiment
SYSTEM_M = np.array(
    [
        [7.0, 15.0, 10.0, NEG_INF],
        [14.0, NEG_INF, 11.0, 11.0],
        [14.0, NEG_INF, NEG_INF, NEG_INF],
        [15.0, 8.0, 7.0, 9.0],
    ]
)


def run_regression() -> bool:
    return os.environ.get(REGRESSION_KEY, "false").lower() == "true"


def skip_unless_regression(test_case):
    if not run_regression():
        pytest.skip(f"Skipping long-running test in {type(test_case)}.")


def random_instance(rng: np.random.Generator, n: int, d: int, low=-5.0, high=5.0):
    """Finite instance with entries uniform in ``[low, high]``."""
    return rng.uniform(low, high, size=(n, d)), rng.uniform(low, high, size=n)


def random_instances(count: int, max_n: int, max_d: int, seed: int = 0):
    rng = get_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        d = int(rng.integers(1, max_d + 1))
        yield random_instance(rng, n, d)


def grid_minimum(A, y, step: float, bound: float = 10.0) -> float:
    """Smallest 2-norm residual over a grid on ``[-bound, bound]^2``, -inf included per coordinate."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    count = int(round(2 * bound / step)) + 1
    values = np.concatenate([np.linspace(-bound, bound, count), [NEG_INF]])
    X0, X1 = np.meshgrid(values, values, indexing="ij")
    total = np.zeros_like(X0)
    for i in range(A.shape[0]):
        image = np.maximum(A[i, 0] + X0, A[i, 1] + X1)
        total += (image - y[i]) ** 2
    return math.sqrt(float(total.min()))


@pytest.fixture
def example_problem():
    from tropreg.solvers import RegressionProblem

    return RegressionProblem(EXAMPLE_A, EXAMPLE_Y)


@pytest.fixture
def rng():
    return get_rng(12345)
