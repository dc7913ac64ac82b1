"""Regularized max-plus regression and iteratively reshifted least squares.

The regularized objective ``||A (x) x - y||^2 + lam * sum_j x_j`` rewards small
coordinates and, in the limit, coordinates equal to -inf. IRSLS minimises it
locally by repeatedly solving the augmented regression

    min_x || [A; I] (x) x - [y; x_prev - lam/2] ||^2

whose identity rows pull every coordinate down by about ``lam/2`` per pass
unless the data hold it up. Coordinates that keep falling far below the rest
are set to -inf.
"""

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from tropreg.maxplus import NEG_INF, identity, mat_vec, pnorm_distance
from tropreg.patterns import pattern_of
from tropreg.reduction import Verdict, lift
from tropreg.solvers import (
    RegressionProblem,
    SolveReport,
    TraceRecord,
    brute_force_solve,
    finish_report,
    infeasible_report,
    multistart_newton,
)
from tropreg.utils.logging_utils import get_logger

InnerSolver = Callable[[RegressionProblem, np.ndarray], SolveReport]


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class RegularizedObjective:
    """Value of the regularized objective with its ordering convention.

    Totals with infinite residual are +inf. Otherwise, for ``lam > 0``, more
    -inf coordinates is better and ties are broken by the total over the
    finite coordinates. For ``lam == 0`` only the squared residual counts.
    """

    lam: float
    neg_inf_count: int
    finite_total: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.finite_total)

    @property
    def value(self) -> float:
        if self.is_infinite:
            return math.inf
        if self.lam > 0 and self.neg_inf_count:
            return -math.inf
        return self.finite_total

    def _key(self):
        if self.is_infinite:
            return (1, 0, math.inf)
        count = self.neg_inf_count if self.lam > 0 else 0
        return (0, -count, self.finite_total)

    def __eq__(self, other):
        if not isinstance(other, RegularizedObjective):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other):
        if not isinstance(other, RegularizedObjective):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())


def regularized_objective(A, y, lam: float, x) -> RegularizedObjective:
    if lam < 0:
        raise ValueError(f"Penalty weight must be nonnegative, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    dist = pnorm_distance(mat_vec(A, x), y, 2)
    finite = np.isfinite(x)
    count = int((~finite).sum())
    if math.isinf(dist):
        return RegularizedObjective(lam, count, math.inf)
    return RegularizedObjective(lam, count, dist * dist + lam * float(x[finite].sum()))


def augmented_objective(A, y, lam: float, x, x_prev) -> float:
    """Objective of one IRSLS pass, ``||A (x) x - y||^2 + sum (x - x_prev + lam/2)^2``.

    The identity block is summed over coordinates finite in both points.
    """
    x = np.asarray(x, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    dist = pnorm_distance(mat_vec(A, x), y, 2)
    both = np.isfinite(x) & np.isfinite(x_prev)
    shift = x[both] - x_prev[both] + lam / 2.0
    return dist * dist + float(np.dot(shift, shift))


@dataclass(frozen=True)
class IrslsConfig:
    tol: float = 1e-6
    max_outer: int = 100
    snap_patience: int = 5
    snap_gap: float = 50.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be at least 1, got {self.max_outer}")
        if self.snap_patience < 1:
            raise ValueError(f"snap_patience must be at least 1, got {self.snap_patience}")


def newton_inner(problem: RegressionProblem, x_start, seed: int = 0) -> SolveReport:
    """Default inner solver: the two-phase Newton protocol from the previous iterate."""
    return multistart_newton(problem, seed=seed, starts=[x_start])


def brute_force_inner(problem: RegressionProblem, x_start) -> SolveReport:
    return brute_force_solve(problem)


def irsls(
    A,
    y,
    lam: float,
    x0,
    inner_solver: Optional[InnerSolver] = None,
    tol: Optional[float] = None,
    max_outer: Optional[int] = None,
    config: Optional[IrslsConfig] = None,
) -> SolveReport:
    """Iteratively reshifted least squares for the regularized problem.

    Parameters
    ----------
    A, y : array_like
        The regression instance.
    lam : float
        Penalty weight, ``lam >= 0``.
    x0 : array_like
        Starting point, typically the unregularized solution. Its -inf
        coordinates start out snapped; every row of the finite-form problem
        needs a finite entry in one of the remaining columns.
    inner_solver : callable, optional
        ``(problem, x_start) -> SolveReport`` solving one augmented regression.
        Defaults to ``newton_inner``.
    tol, max_outer : optional
        Override the corresponding fields of ``config``.

    Returns
    -------
    SolveReport
        ``solver`` is ``"irsls"``; residuals refer to the unregularized
        instance. Counters record outer iterations, the number of coordinates
        at -inf and whether the iterates converged.
    """
    logger = get_logger()
    if lam < 0:
        raise ValueError(f"Penalty weight must be nonnegative, got {lam}")
    cfg = config or IrslsConfig()
    overrides = {k: v for k, v in (("tol", tol), ("max_outer", max_outer)) if v is not None}
    cfg = dataclasses.replace(cfg, **overrides)
    inner_solver = inner_solver or newton_inner

    prob = RegressionProblem(A, y)
    red = prob.reduction
    if red.verdict is Verdict.INFEASIBLE:
        return infeasible_report(prob, "irsls")
    if red.is_empty:
        return finish_report(prob, lift(red, np.full(len(red.kept_cols), NEG_INF)), "irsls")

    A_sub, y_sub = red.A_sub, red.y_sub
    d = A_sub.shape[1]
    x = np.array(np.asarray(x0, dtype=np.float64)[red.kept_cols])
    # -inf coordinates of the start count as already snapped
    active = np.isfinite(x)
    if not active.any() or not np.isfinite(A_sub[:, active]).any(axis=1).all():
        raise ValueError("x0 must leave every data row a finite coordinate to work with")

    falls = np.zeros(d, dtype=int)
    trace = []
    converged, outer = False, 0
    for outer in range(1, cfg.max_outer + 1):
        cols = np.flatnonzero(active)
        augmented = RegressionProblem(
            np.vstack([A_sub[:, cols], identity(len(cols))]),
            np.concatenate([y_sub, x[cols] - lam / 2.0]),
        )
        inner = inner_solver(augmented, x[cols])

        x_new = np.full(d, NEG_INF)
        x_new[cols] = inner.solution
        change = float(np.abs(x_new[cols] - x[cols]).max())
        falls = np.where(active & (x_new < x), falls + 1, 0)

        top = x_new[cols].max()
        snapped = []
        for j in np.flatnonzero(active & (falls >= cfg.snap_patience) & (x_new < top - cfg.snap_gap)):
            trial = active.copy()
            trial[j] = False
            # every data row must keep a finite active column
            if trial.any() and np.isfinite(A_sub[:, trial]).any(axis=1).all():
                active = trial
                x_new[j] = NEG_INF
                snapped.append(int(j))
        if snapped:
            logger.debug(f"IRSLS pass {outer}: coordinates {snapped} set to -inf")
        x = x_new

        r = pnorm_distance(mat_vec(A_sub, x), y_sub, 2)
        r_min = min(trace[-1].r_min, r) if trace else r
        trace.append(TraceRecord(outer, "irsls", str(pattern_of(A_sub, x)), r, r_min))
        if not snapped and change < cfg.tol:
            converged = True
            break

    if not converged:
        logger.warning(f"IRSLS did not converge within {cfg.max_outer} outer iterations")
    counters = {
        "outer_iterations": outer,
        "snapped": int(d - active.sum()),
        "converged": int(converged),
    }
    return finish_report(prob, lift(red, x), "irsls", trace, counters)
