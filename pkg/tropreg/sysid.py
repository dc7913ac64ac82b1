"""Simulation and identification of stochastic max-plus linear systems.

The model is ``x(n+1) = M (x) x(n) + noise(n)`` with i.i.d. Gaussian noise of
standard deviation ``sigma``. Maximising the likelihood of an observed orbit
separates into one max-plus regression per row of M: row k must predict
``x_k(n+1)`` from ``x(n)`` for every transition n.
"""

import functools
import math
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np

from tropreg.errors import AllMinusInfRowError, DimensionMismatchError
from tropreg.maxplus import TOL, as_matrix, as_vector, mat_vec, pnorm_distance
from tropreg.regularize import IrslsConfig, brute_force_inner, irsls, newton_inner
from tropreg.solvers import RegressionProblem, SolveReport, infnorm_solve, multistart_newton
from tropreg.utils.helpers import get_solver
from tropreg.utils.logging_utils import get_logger
from tropreg.utils.seeding import get_rng, spawn_seeds
from tropreg.utils.threads import parallel_map


class OrbitSource(str, Enum):
    SIMULATED = "simulated"
    INGESTED = "ingested"


class Orbit(NamedTuple):
    """States ``x(0), ..., x(N)`` stored as the columns of a d x (N+1) array."""

    states: np.ndarray
    sigma: float
    seed: Optional[int]
    source: str

    @property
    def d(self) -> int:
        return self.states.shape[0]

    @property
    def N(self) -> int:
        return self.states.shape[1] - 1


class Identification(NamedTuple):
    matrix: np.ndarray
    row_reports: Tuple[SolveReport, ...]
    frobenius: float
    evidence: np.ndarray
    seed: int


def ingest(states, sigma: float = 0.0, seed: Optional[int] = None) -> Orbit:
    """Wrap observed states (one column per time step) as an orbit."""
    states = as_matrix(states)
    if states.shape[1] < 2:
        raise DimensionMismatchError("An orbit needs at least one transition")
    return Orbit(states, float(sigma), seed, OrbitSource.INGESTED.value)


def simulate(M, x0, N: int, sigma: float, seed: int = 0) -> Orbit:
    """Simulate ``N`` transitions from ``x0``.

    Raises
    ------
    AllMinusInfRowError
        If a row of ``M`` has no finite entry; the state would leave R^d.
    """
    M = as_matrix(M)
    x0 = as_vector(x0)
    d = M.shape[0]
    if M.shape != (d, d) or x0.shape != (d,):
        raise DimensionMismatchError(f"System matrix {M.shape} with initial state {x0.shape}")
    empty_rows = np.flatnonzero(~np.isfinite(M).any(axis=1))
    if empty_rows.size:
        raise AllMinusInfRowError(int(empty_rows[0]))
    if not np.isfinite(x0).all():
        raise ValueError("Initial state must be finite")
    if N < 1:
        raise ValueError(f"Need at least one transition, got N={N}")
    if sigma < 0:
        raise ValueError(f"Noise level must be nonnegative, got {sigma}")

    noise = sigma * get_rng(seed).standard_normal((N, d))
    states = np.empty((d, N + 1))
    states[:, 0] = x0
    for n in range(N):
        states[:, n + 1] = mat_vec(M, states[:, n]) + noise[n]
    states.setflags(write=False)
    return Orbit(states, float(sigma), seed, OrbitSource.SIMULATED.value)


def row_problem(orbit: Orbit, k: int) -> RegressionProblem:
    """Regression for row k: predict ``x_k(n+1)`` from ``x(n)``, n = 0..N-1."""
    X = orbit.states
    return RegressionProblem(X[:, :-1].T, X[k, 1:])


def _fit_row(orbit, k, lam, solver, n_starts, row_seed, irsls_config) -> SolveReport:
    logger = get_logger()
    prob = row_problem(orbit, k)
    if solver == "newton":
        warm = infnorm_solve(prob).solution
        report = multistart_newton(prob, seed=row_seed, n_starts=n_starts, extra_starts=[warm])
    else:
        report = get_solver(solver)(prob)
    if lam > 0:
        if solver == "brute":
            inner = brute_force_inner
        else:
            inner = functools.partial(newton_inner, seed=row_seed)
        report = irsls(prob.A, prob.y, lam, report.solution, inner_solver=inner, config=irsls_config)
    logger.debug(f"Row {k}: residual {report.residual_2norm!r}")
    return report


def identify(
    orbit: Orbit,
    lam: float = 0.0,
    solver: str = "newton",
    seed: int = 0,
    n_starts: int = 10,
    threads: int = 1,
    irsls_config: Optional[IrslsConfig] = None,
) -> Identification:
    """Estimate the system matrix row by row.

    Each row is fitted with ``solver`` (Newton also starts from the
    infinity-norm solution) and, when ``lam > 0``, refined by IRSLS. Rows run in
    parallel with independent seeds spawned from ``seed``.
    """
    if orbit.N < 1:
        raise DimensionMismatchError("An orbit needs at least one transition")
    row_seeds = [int(s.generate_state(1)[0]) for s in spawn_seeds(seed, orbit.d)]
    reports = parallel_map(
        lambda k: _fit_row(orbit, k, lam, solver, n_starts, row_seeds[k], irsls_config),
        range(orbit.d),
        threads,
    )
    matrix = np.vstack([report.solution for report in reports])
    frobenius = float(sum(report.residual_2norm ** 2 for report in reports))
    return Identification(matrix, tuple(reports), frobenius, evidence_matrix(matrix, orbit), seed)


def frobenius_residual(A_hat, orbit: Orbit) -> float:
    """Squared Frobenius norm of the one-step prediction error, summed row by row."""
    A_hat = np.asarray(A_hat, dtype=np.float64)
    if A_hat.shape != (orbit.d, orbit.d):
        raise DimensionMismatchError(f"Matrix {A_hat.shape} for an orbit of dimension {orbit.d}")
    total = 0.0
    for k in range(orbit.d):
        prob = row_problem(orbit, k)
        dist = pnorm_distance(mat_vec(prob.A, A_hat[k]), prob.y, 2)
        if math.isinf(dist):
            return math.inf
        total += dist * dist
    return total


def neg_log_likelihood(A_hat, orbit: Orbit, sigma: float) -> float:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    frobenius = frobenius_residual(A_hat, orbit)
    if math.isinf(frobenius):
        return math.inf
    scale = orbit.N * orbit.d / 2.0
    return scale * math.log(2.0 * math.pi * sigma ** 2) + frobenius / (2.0 * sigma ** 2)


def evidence_matrix(A_hat, orbit: Orbit, tol: float = TOL) -> np.ndarray:
    """Count, for every entry, the transitions in which it attains its row maximum.

    All N transitions are counted; ties count for every attaining entry and
    -inf entries never count.
    """
    A_hat = np.asarray(A_hat, dtype=np.float64)
    X = orbit.states[:, :-1]
    terms = A_hat[:, :, np.newaxis] + X[np.newaxis, :, :]
    values = terms.max(axis=1, keepdims=True)
    attains = np.isfinite(terms) & (terms >= values - tol)
    return attains.sum(axis=2)


def growth_rate(orbit: Orbit) -> np.ndarray:
    """Average increment per step of every coordinate over the orbit."""
    X = orbit.states
    return (X[:, -1] - X[:, 0]) / orbit.N
