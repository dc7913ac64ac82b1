"""Reduction of a regression instance to finite form.

A column j can carry a finite solution value only if it never feeds a row
whose target is -inf; a target row with no finite entry among those columns
can never be matched. Dropping everything else leaves a problem whose targets
are finite and whose rows all have a finite entry, with the same residuals.
"""

from enum import Enum
from typing import NamedTuple

import numpy as np

from tropreg.errors import DimensionMismatchError, InfeasibleReductionError
from tropreg.maxplus import NEG_INF


class Verdict(str, Enum):
    REDUCED = "reduced"
    INFEASIBLE = "infeasible"


class FiniteFormReduction(NamedTuple):
    kept_rows: np.ndarray
    kept_cols: np.ndarray
    A_sub: np.ndarray
    y_sub: np.ndarray
    verdict: Verdict
    shape: tuple

    @property
    def is_empty(self) -> bool:
        return self.A_sub.shape[0] == 0 or self.A_sub.shape[1] == 0


def reduce(A, y) -> FiniteFormReduction:
    """Split ``(A, y)`` into col-admissible columns and row-admissible rows.

    The verdict is ``INFEASIBLE`` exactly when some finite target row has no
    finite entry in an admissible column; every x then has infinite residual.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise DimensionMismatchError(f"Matrix of shape {A.shape} with target of shape {y.shape}")

    target_rows = np.isfinite(y)
    kept_cols = np.flatnonzero(np.isneginf(A[~target_rows]).all(axis=0))
    reachable = np.isfinite(A[:, kept_cols]).any(axis=1)
    kept_rows = np.flatnonzero(target_rows & reachable)

    if len(kept_rows) != int(target_rows.sum()):
        verdict = Verdict.INFEASIBLE
    else:
        verdict = Verdict.REDUCED
    return FiniteFormReduction(
        kept_rows=kept_rows,
        kept_cols=kept_cols,
        A_sub=A[np.ix_(kept_rows, kept_cols)],
        y_sub=y[kept_rows],
        verdict=verdict,
        shape=A.shape,
    )


def lift(red: FiniteFormReduction, x_sub) -> np.ndarray:
    """Embed a sub-problem solution; columns outside the kept set are -inf."""
    if red.verdict is not Verdict.REDUCED:
        raise InfeasibleReductionError("Cannot lift a solution of an infeasible instance")
    x_sub = np.asarray(x_sub, dtype=np.float64)
    if x_sub.shape != (len(red.kept_cols),):
        raise DimensionMismatchError(
            f"Sub-problem solution of shape {x_sub.shape}, expected ({len(red.kept_cols)},)"
        )
    x = np.full(red.shape[1], NEG_INF)
    x[red.kept_cols] = x_sub
    return x
