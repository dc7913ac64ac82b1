"""Solvers for max-plus 2-norm regression, ``min_x ||A (x) x - y||_2``.

``brute_force_solve`` searches every feasible pattern and is exact.
``multistart_newton`` iterates the pattern-local minimiser from several random
starts, first plainly and then with undershooting. ``infnorm_solve`` is the
closed-form minimiser of the infinity-norm residual, used as a baseline and as
a warm start.

All solvers work on the finite-form sub-problem of a ``RegressionProblem`` and
lift their answer back to the full set of columns.
"""

import functools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from tropreg.errors import DimensionMismatchError, InfeasibleReductionError
from tropreg.maxplus import NEG_INF, as_matrix, as_vector, mat_vec, pnorm_distance, residual
from tropreg.patterns import Pattern, PatternTree, classes_of, closest_preimage, pattern_of, project_pattern
from tropreg.reduction import FiniteFormReduction, Verdict, lift, reduce
from tropreg.utils.logging_utils import get_logger
from tropreg.utils.seeding import get_rng
from tropreg.utils.threads import parallel_map

DEFAULT_MAX_ITERS = 200
DEFAULT_N_STARTS = 10
DEFAULT_PATIENCE = 5
UNDERSHOOT_MU = 0.05


class RegressionProblem:
    """An instance ``(A, y)`` with its finite-form reduction cached."""

    def __init__(self, A, y):
        self.A = as_matrix(A)
        self.y = as_vector(y)
        if self.y.shape[0] != self.A.shape[0]:
            raise DimensionMismatchError(
                f"Matrix with {self.A.shape[0]} rows and target of length {self.y.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @functools.cached_property
    def reduction(self) -> FiniteFormReduction:
        return reduce(self.A, self.y)

    @functools.cached_property
    def sub_problem(self) -> "RegressionProblem":
        return RegressionProblem(self.reduction.A_sub, self.reduction.y_sub)

    def residual(self, x) -> float:
        return residual(self.A, self.y, x)

    def distance(self, x, p=2) -> float:
        return pnorm_distance(mat_vec(self.A, x), self.y, p)

    def __repr__(self):
        return f"RegressionProblem(n={self.n}, d={self.d})"


class TraceRecord(NamedTuple):
    step: int
    kind: str
    pattern: str
    residual: float
    r_min: float
    admissible: Optional[bool] = None
    start: Optional[int] = None
    mu: Optional[float] = None


class SolveReport(NamedTuple):
    solution: np.ndarray
    residual_2norm: float
    residual_infnorm: float
    verdict: str
    solver: str
    trace: Tuple[TraceRecord, ...]
    counters: Dict[str, int]
    seed: Optional[int] = None


@dataclass(frozen=True)
class NewtonConfig:
    mu: float = 1.0
    patience: int = DEFAULT_PATIENCE
    max_iters: int = DEFAULT_MAX_ITERS
    n_starts: int = DEFAULT_N_STARTS
    starts: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise ValueError(f"Undershooting parameter must lie in (0, 1], got {self.mu}")
        if self.patience < 1:
            raise ValueError(f"Patience must be at least 1, got {self.patience}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.n_starts < 1:
            raise ValueError(f"n_starts must be at least 1, got {self.n_starts}")


def finish_report(prob, solution, solver, trace=(), counters=None, seed=None) -> SolveReport:
    logger = get_logger()
    report = SolveReport(
        solution=solution,
        residual_2norm=prob.distance(solution, 2),
        residual_infnorm=prob.distance(solution, np.inf),
        verdict=Verdict.REDUCED.value,
        solver=solver,
        trace=tuple(trace),
        counters=dict(counters or {}),
        seed=seed,
    )
    logger.info(f"{solver}: residual {report.residual_2norm!r} on {prob}")
    return report


def infeasible_report(prob, solver, seed=None) -> SolveReport:
    get_logger().info(f"{solver}: {prob} has no solution with finite residual")
    return SolveReport(
        solution=np.full(prob.d, NEG_INF),
        residual_2norm=math.inf,
        residual_infnorm=math.inf,
        verdict=Verdict.INFEASIBLE.value,
        solver=solver,
        trace=(),
        counters={},
        seed=seed,
    )


def _solve_reduced(prob: RegressionProblem, solver: str, solve_sub: Callable, seed=None) -> SolveReport:
    red = prob.reduction
    if red.verdict is Verdict.INFEASIBLE:
        return infeasible_report(prob, solver, seed)
    if red.is_empty:
        return finish_report(prob, lift(red, np.full(len(red.kept_cols), NEG_INF)), solver, seed=seed)
    x_sub, trace, counters = solve_sub(red.A_sub, red.y_sub)
    return finish_report(prob, lift(red, x_sub), solver, trace, counters, seed)


class _BranchResult(NamedTuple):
    best: Optional[np.ndarray]
    distance: float
    leaves: List[Tuple[str, float, bool]]
    vertices_checked: int


def _search_branch(A, y, branch) -> _BranchResult:
    tree = PatternTree(A)
    best, best_distance, leaves = None, math.inf, []
    for P, F in tree.leaves(branch):
        proj = project_pattern(A, P, y, F=F)
        leaves.append((str(P), proj.distance, proj.admissible))
        if proj.admissible and proj.distance < best_distance:
            best, best_distance = proj.psi, proj.distance
    return _BranchResult(best, best_distance, leaves, tree.vertices_checked)


def brute_force_solve(prob: RegressionProblem, threads: int = 1) -> SolveReport:
    """Exact solution by exhaustive search over feasible patterns.

    Every feasible leaf is projected; the closest admissible projection wins,
    ties going to the first leaf visited. Subtrees below the first row are
    searched independently and merged in search order, so the report does not
    depend on ``threads``.
    """
    logger = get_logger()

    def solve_sub(A, y):
        n_branches = PatternTree(A).root_branches()
        results = parallel_map(lambda b: _search_branch(A, y, b), range(n_branches), threads)

        best, best_distance, fallback, fallback_distance = None, math.inf, None, math.inf
        trace = []
        for result in results:
            if result.best is not None and result.distance < best_distance:
                best, best_distance = result.best, result.distance
            for pattern, distance, admissible in result.leaves:
                previous = trace[-1].r_min if trace else math.inf
                r_min = min(previous, distance) if admissible else previous
                trace.append(
                    TraceRecord(len(trace) + 1, "leaf", pattern, distance, r_min, admissible)
                )
        counters = {
            "vertices_checked": sum(r.vertices_checked for r in results),
            "leaves_projected": len(trace),
        }
        if best is None:
            # only reachable through rounding in the admissibility test
            logger.warning("No admissible leaf found; using the closest projection instead")
            for result in results:
                for pattern, distance, _ in result.leaves:
                    if distance < fallback_distance:
                        fallback, fallback_distance = pattern, distance
            best = project_pattern(A, Pattern.parse(fallback), y).psi
        logger.debug(
            f"Tree search: {counters['vertices_checked']} vertices, "
            f"{counters['leaves_projected']} feasible leaves"
        )
        return best, trace, counters

    return _solve_reduced(prob, "brute", solve_sub)


def _newton_update(A, y, x, mu):
    """One damped Newton step on a finite-form problem."""
    pattern = pattern_of(A, x).subpattern(A)
    # singleton classes: each picked column gets the mean of y_i - a_ij over its
    # rows whatever the anchor holds there, so -inf picks can take any finite anchor
    anchor = np.where(np.isfinite(x), x, 0.0)
    target = closest_preimage(A, pattern, classes_of(pattern, anchor), y, x, check=False)
    if mu == 1.0:
        return target, pattern
    step = np.array(target)
    finite = np.isfinite(x)
    both = finite & np.isfinite(target)
    step[both] = (1.0 - mu) * x[both] + mu * target[both]
    # a finite coordinate is never sent to -inf by a partial step
    step[finite & ~both] = x[finite & ~both]
    step[~finite] = NEG_INF
    return step, pattern


def _distance(A, y, x):
    return pnorm_distance(mat_vec(A, x), y, 2)


def _newton_run(A, y, x0, mu, patience, max_iters, start=None):
    """Iterate Newton steps, returning the best point seen (the start included)."""
    logger = get_logger()
    x = np.asarray(x0, dtype=np.float64)
    best, r_min = x, _distance(A, y, x)
    if math.isinf(r_min):
        raise ValueError("Newton's method needs a start with finite residual")
    trace, stalled, iterations = [], 0, 0
    for iterations in range(1, max_iters + 1):
        x, pattern = _newton_update(A, y, x, mu)
        r = _distance(A, y, x)
        if r < r_min:
            best, r_min, stalled = x, r, 0
        else:
            stalled += 1
        trace.append(TraceRecord(iterations, "newton", str(pattern), r, r_min, None, start, mu))
        if stalled >= patience:
            break
    else:
        logger.warning(f"Newton (mu={mu}) stopped at max_iters={max_iters}")
    return best, r_min, trace, iterations


def _rebase(trace: Sequence[TraceRecord]) -> List[TraceRecord]:
    rebased = []
    for record in trace:
        r_min = min(rebased[-1].r_min, record.r_min) if rebased else record.r_min
        rebased.append(record._replace(step=len(rebased) + 1, r_min=r_min))
    return rebased


def newton_step(prob: RegressionProblem, x, mu: float = 1.0) -> np.ndarray:
    """Move ``x`` towards the minimiser of the quadratic piece of its subpattern.

    ``x`` is given over all columns of ``prob``; columns dropped by the
    finite-form reduction come back as -inf.
    """
    red = prob.reduction
    if red.verdict is Verdict.INFEASIBLE:
        raise InfeasibleReductionError("Every point has infinite residual")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (prob.d,):
        raise DimensionMismatchError(f"Point of shape {x.shape} for {prob}")
    if red.is_empty:
        return lift(red, x[red.kept_cols])
    step, _ = _newton_update(red.A_sub, red.y_sub, x[red.kept_cols], mu)
    return lift(red, step)


def random_starts(A, y, n_starts: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Uniform starts on ``[min y - max A, max y - min A]^d`` (finite entries only)."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    entries = A[np.isfinite(A)]
    targets = y[np.isfinite(y)]
    low = targets.min() - entries.max()
    high = targets.max() - entries.min()
    return [rng.uniform(low, high, size=A.shape[1]) for _ in range(n_starts)]


def newton_solve(
    prob: RegressionProblem, cfg: NewtonConfig = NewtonConfig(), x0=None, seed: int = 0
) -> SolveReport:
    """Single run of Newton's method with undershooting ``cfg.mu``.

    Starts at ``x0``, else at ``cfg.starts[0]``, else at one random start drawn
    with ``seed``.
    """

    def solve_sub(A, y):
        if x0 is not None:
            start = np.asarray(x0, dtype=np.float64)[prob.reduction.kept_cols]
        elif cfg.starts:
            start = np.asarray(cfg.starts[0], dtype=np.float64)[prob.reduction.kept_cols]
        else:
            start = random_starts(A, y, 1, get_rng(seed))[0]
        best, _, trace, iterations = _newton_run(A, y, start, cfg.mu, cfg.patience, cfg.max_iters)
        return best, trace, {"iterations": iterations}

    return _solve_reduced(prob, "newton", solve_sub, seed)


def multistart_newton(
    prob: RegressionProblem,
    seed: int = 0,
    n_starts: int = DEFAULT_N_STARTS,
    starts: Optional[Sequence] = None,
    extra_starts: Sequence = (),
    threads: int = 1,
    patience: int = DEFAULT_PATIENCE,
    mu_schedule: Sequence[float] = (1.0, UNDERSHOOT_MU),
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SolveReport:
    """Newton's method from several starts, keeping the best result.

    From each start the phases of ``mu_schedule`` run one after another, each
    continuing from the best point of the previous one. Random starts are
    drawn up front from ``seed``; explicit ``starts`` replace them and
    ``extra_starts`` are tried as well. Runs are independent and merged in
    start order, so the report does not depend on ``threads``.
    """
    phases = [NewtonConfig(mu=mu, patience=patience, max_iters=max_iters) for mu in mu_schedule]
    logger = get_logger()
    cols = prob.reduction.kept_cols

    def solve_sub(A, y):
        if starts is None:
            start_list = random_starts(A, y, n_starts, get_rng(seed))
        else:
            start_list = [np.asarray(x, dtype=np.float64)[cols] for x in starts]
        start_list += [np.asarray(x, dtype=np.float64)[cols] for x in extra_starts]
        if not start_list:
            raise ValueError("Multistart Newton needs at least one start")

        def run_start(item):
            index, x = item
            trace, iterations, r_min = [], 0, math.inf
            for cfg in phases:
                x, r_min, phase, used = _newton_run(
                    A, y, x, cfg.mu, cfg.patience, cfg.max_iters, index
                )
                trace.extend(phase)
                iterations += used
            return x, r_min, trace, iterations

        runs = parallel_map(run_start, list(enumerate(start_list)), threads)
        best, best_distance = None, math.inf
        for x, r_min, _, _ in runs:
            if best is None or r_min < best_distance:
                best, best_distance = x, r_min
        trace = _rebase([record for run in runs for record in run[2]])
        logger.debug(f"Multistart Newton: {len(runs)} starts, best residual {best_distance!r}")
        return best, trace, {"starts": len(runs), "iterations": sum(run[3] for run in runs)}

    return _solve_reduced(prob, "newton", solve_sub, seed)


def infnorm_solve(prob: RegressionProblem) -> SolveReport:
    """Minimiser of ``||A (x) x - y||_inf``: the principal solution raised by half the gap."""

    def solve_sub(A, y):
        gaps = np.where(np.isfinite(A), y[:, np.newaxis] - A, np.inf)
        principal = gaps.min(axis=0)
        principal[np.isposinf(principal)] = NEG_INF
        gap = pnorm_distance(mat_vec(A, principal), y, np.inf)
        return principal + gap / 2.0, [], {}

    return _solve_reduced(prob, "infnorm", solve_sub)
