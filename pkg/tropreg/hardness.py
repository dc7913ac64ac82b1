"""Set-cover instances encoded as max-plus regression problems.

Deciding whether the zero vector admits a descent direction for the residual
is as hard as set cover. ``build_reduction`` produces the regression instance
for a set-cover instance; ``descent_exists_binary`` answers the descent
question exhaustively over binary directions, which suffice for these
instances. Both are used as correctness checks and as benchmark stressors.
"""

import itertools
from typing import FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from tropreg.errors import SetCoverError
from tropreg.maxplus import NEG_INF, TOL, identity, mat_vec
from tropreg.solvers import RegressionProblem
from tropreg.utils.seeding import get_rng

MAX_BRUTE_FORCE_SETS = 20


class SetCoverInstance(NamedTuple):
    """Universe ``{0, ..., n-1}``, a covering family of subsets and a budget k."""

    n: int
    family: Tuple[FrozenSet[int], ...]
    k: int

    @classmethod
    def from_sets(cls, n: int, sets: Iterable[Iterable[int]], k: int) -> "SetCoverInstance":
        return cls(n, tuple(frozenset(int(e) for e in s) for s in sets), k)

    @property
    def m(self) -> int:
        return len(self.family)

    def validate(self):
        universe = frozenset(range(self.n))
        covered = frozenset().union(*self.family) if self.family else frozenset()
        if not covered <= universe:
            raise SetCoverError(f"Family uses elements outside 0..{self.n - 1}")
        if covered != universe:
            raise SetCoverError("Family does not cover the universe")
        if not 1 < self.k < self.m:
            raise SetCoverError(f"Budget must satisfy 1 < k < m, got k={self.k}, m={self.m}")

    def family_str(self) -> str:
        return ";".join(",".join(str(e + 1) for e in sorted(s)) for s in self.family)


def reduction_constants(m: int, k: int) -> Tuple[float, float, float]:
    """Target values ``(a, b, c)`` of the element, set and pair blocks."""
    return float(m * (k + 1)), m - k - 1.5, -2.0


def build_reduction(sc: SetCoverInstance) -> RegressionProblem:
    """Regression instance whose zero vector has a descent direction iff a cover exists.

    Rows, top to bottom: one per element (0 where the set contains it), the
    m x m identity, one per pair of sets in lexicographic order (0 at both
    sets), and a single row of zeros. The last target makes the targets sum
    to zero.
    """
    sc.validate()
    n, m = sc.n, sc.m
    a, b, c = reduction_constants(m, sc.k)

    elements = np.full((n, m), NEG_INF)
    for j, members in enumerate(sc.family):
        elements[sorted(members), j] = 0.0
    pairs = list(itertools.combinations(range(m), 2))
    pair_rows = np.full((len(pairs), m), NEG_INF)
    for r, (i, j) in enumerate(pairs):
        pair_rows[r, [i, j]] = 0.0

    A = np.vstack([elements, identity(m), pair_rows, np.zeros((1, m))])
    last = -n * a - m * b - len(pairs) * c
    y = np.concatenate([np.full(n, a), np.full(m, b), np.full(len(pairs), c), [last]])
    return RegressionProblem(A, y)


def inner_product_descent(A, y, z) -> float:
    """``<A (x) z, y>``; positive means z is a descent direction at the origin."""
    return float(np.dot(mat_vec(A, z), np.asarray(y, dtype=np.float64)))


def _check_binary_instance(A, y):
    if not np.all((A == 0.0) | np.isneginf(A)):
        raise ValueError("Matrix entries must be 0 or -inf")
    if not np.isfinite(y).all():
        raise ValueError("Targets must be finite")
    if not np.isfinite(A).any(axis=1).all():
        raise ValueError("Every row needs a finite entry")
    if abs(float(y.sum())) > TOL * max(1.0, float(np.abs(y).sum())):
        raise ValueError("Targets must sum to zero")


def find_binary_descent(A, y, chunk_size: int = 1024) -> Optional[np.ndarray]:
    """First binary direction, in ascending bitmask order, with ``<A (x) z, y> > 0``."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_binary_instance(A, y)
    d = A.shape[1]
    bits = np.arange(d)
    for start in range(1, 1 << d, chunk_size):
        masks = np.arange(start, min(start + chunk_size, 1 << d))
        candidates = ((masks[:, np.newaxis] >> bits) & 1).astype(np.float64)
        images = (A[np.newaxis, :, :] + candidates[:, np.newaxis, :]).max(axis=2)
        hits = np.flatnonzero(images @ y > TOL)
        if hits.size:
            return candidates[hits[0]]
    return None


def descent_exists_binary(A, y) -> bool:
    return find_binary_descent(A, y) is not None


def setcover_bruteforce(sc: SetCoverInstance) -> bool:
    """True iff at most k sets of the family cover the universe."""
    if sc.m > MAX_BRUTE_FORCE_SETS:
        raise SetCoverError(f"Refusing to enumerate subsets of {sc.m} > {MAX_BRUTE_FORCE_SETS} sets")
    universe = frozenset(range(sc.n))
    for size in range(1, sc.k + 1):
        for chosen in itertools.combinations(sc.family, size):
            if frozenset().union(*chosen) == universe:
                return True
    return False


def random_setcover(n: int, m: int, k: int, rng: np.random.Generator) -> SetCoverInstance:
    """Random covering family; uncovered elements are added to random sets."""
    sets = []
    for _ in range(m):
        size = int(rng.integers(1, n + 1))
        sets.append(set(rng.choice(n, size=size, replace=False).tolist()))
    for element in range(n):
        if not any(element in s for s in sets):
            sets[int(rng.integers(m))].add(element)
    return SetCoverInstance.from_sets(n, sets, k)


def setcover_catalog(seed: int = 0, max_n: int = 5, max_m: int = 5, per_shape: int = 4) -> List[SetCoverInstance]:
    """Deterministic catalog: random families for every shape and budget, plus edge cases."""
    rng = get_rng(seed)
    catalog = [
        SetCoverInstance.from_sets(2, [{0}, {1}, {0, 1}], 2),
        SetCoverInstance.from_sets(3, [{0}, {1}, {2}], 2),
        SetCoverInstance.from_sets(4, [{0, 1}, {2, 3}, {0, 2}, {1, 3}], 2),
        SetCoverInstance.from_sets(4, [{0}, {1}, {2}, {3}], 3),
        SetCoverInstance.from_sets(5, [{0, 1, 2, 3, 4}, {0}, {1}], 2),
    ]
    for n in range(1, max_n + 1):
        for m in range(3, max_m + 1):
            for _ in range(per_shape):
                family = random_setcover(n, m, 2, rng).family
                catalog.extend(SetCoverInstance(n, family, k) for k in range(2, m))
    return catalog
