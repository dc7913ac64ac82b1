"""Patterns of support and the local geometry of the residual surface.

A pattern ``P = (P_0, ..., P_{n-1})`` records, for every row of ``A (x) x``,
which columns attain the maximum. The set of points realizing a pattern is a
polyhedral cell; on it the max-plus map is affine, and the residual is a
quadratic whose minimiser is obtained by class-wise averaging.

Indices are 0-based here. The text form used in traces and files is 1-based:
``str(Pattern.parse("1,2;1;2"))`` gives back ``"1,2;1;2"``.
"""

import math
from typing import FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from tropreg.errors import DimensionMismatchError, InfeasiblePatternError, ParseError
from tropreg.maxplus import (
    NEG_INF,
    TOL,
    kleene_star,
    mat_vec,
    max_cycle_mean,
    pnorm_distance,
    star_column_mean,
)


class Pattern(NamedTuple):
    rows: Tuple[FrozenSet[int], ...]

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]]) -> "Pattern":
        return cls(tuple(frozenset(int(j) for j in row) for row in sets))

    @classmethod
    def parse(cls, text: str, line: Optional[int] = None) -> "Pattern":
        """Parse the trace format, e.g. ``1,2;1;2``."""
        text = text.strip()
        if not text:
            return cls(())
        rows = []
        column = 1
        for chunk in text.split(";"):
            members = set()
            for token in chunk.split(","):
                token = token.strip()
                if not token.isdigit() or int(token) < 1:
                    raise ParseError(f"invalid pattern index {token!r}", line, column)
                members.add(int(token) - 1)
            rows.append(frozenset(members))
            column += len(chunk) + 1
        return cls(tuple(rows))

    def __str__(self):
        return ";".join(",".join(str(j + 1) for j in sorted(row)) for row in self.rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def support(self) -> np.ndarray:
        members = set().union(*self.rows) if self.rows else set()
        return np.array(sorted(members), dtype=int)

    def precedes(self, other: "Pattern") -> bool:
        """Entrywise inclusion ``P_i <= P'_i``; the closure order on domains."""
        return len(self.rows) == len(other.rows) and all(
            mine <= theirs for mine, theirs in zip(self.rows, other.rows)
        )

    def picks(self) -> np.ndarray:
        if any(not row for row in self.rows):
            raise ValueError("Every row of a pattern must be nonempty to pick from it")
        return np.array([min(row) for row in self.rows], dtype=int)

    def subpattern(self, A=None) -> "Pattern":
        """Singleton rows ``{min(P_i)}``.

        With ``A`` given, each row picks its smallest column holding a finite
        entry of ``A``. Rows of value -inf attain every column, and only such a
        column can carry them back to a finite value.
        """
        if A is None:
            picks = self.picks()
        else:
            finite = np.isfinite(np.asarray(A, dtype=np.float64))
            picks = []
            for i, row in enumerate(self.rows):
                usable = [j for j in row if finite[i, j]]
                if not usable:
                    raise ValueError(f"Row {i} of the pattern has no column with a finite entry")
                picks.append(min(usable))
        return Pattern(tuple(frozenset((int(j),)) for j in picks))


class LocalMap(NamedTuple):
    """The affine map ``x -> L x + y_P`` that agrees with ``A (x) x`` on Cl(X(P))."""

    picks: np.ndarray
    y_P: np.ndarray
    d: int

    @property
    def L(self) -> np.ndarray:
        L = np.zeros((len(self.picks), self.d))
        L[np.arange(len(self.picks)), self.picks] = 1.0
        return L

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x[self.picks] + self.y_P


class PatternClasses(NamedTuple):
    class_of: np.ndarray
    class_sizes: np.ndarray
    anchor: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.class_sizes)

    @property
    def C(self) -> np.ndarray:
        """Column-normalised class indicator matrix, ``c_{j,c(j)} = 1/sqrt(#c(j))``."""
        d = len(self.class_of)
        C = np.zeros((d, self.n_classes))
        C[np.arange(d), self.class_of] = 1.0 / np.sqrt(self.class_sizes[self.class_of])
        return C


class PatternProjection(NamedTuple):
    phi: np.ndarray
    psi: np.ndarray
    admissible: bool
    distance: float
    classes: PatternClasses


def pattern_of(A, x, tol: float = TOL) -> Pattern:
    """Argmax sets of every row of ``A (x) x``.

    Rows whose value is -inf get every column, since every term attains it.
    """
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    values = mat_vec(A, x)
    terms = A + x[np.newaxis, :]
    attains = terms >= values[:, np.newaxis] - tol
    return Pattern(tuple(frozenset(np.flatnonzero(row).tolist()) for row in attains))


def _check_rows(A, P: Pattern):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != P.n:
        raise DimensionMismatchError(
            f"Pattern has {P.n} rows but the matrix has shape {A.shape}"
        )
    d = A.shape[1]
    for i, row in enumerate(P.rows):
        if row and (min(row) < 0 or max(row) >= d):
            raise IndexError(f"Pattern row {i} refers to columns outside 0..{d - 1}")
    return A


def _row_contribution(a_row: np.ndarray, cols) -> Tuple[np.ndarray, np.ndarray]:
    """Rows ``j`` of F_P constrained by one row of A, and their entries ``a_ik - a_ij``."""
    cols = np.asarray(sorted(cols), dtype=int)
    witnesses = cols[np.isfinite(a_row[cols])] if cols.size else cols
    return witnesses, a_row[np.newaxis, :] - a_row[witnesses, np.newaxis]


def feasibility_matrix(A, P: Pattern) -> np.ndarray:
    """Feasibility matrix F_P.

    ``f_jj = 0`` and ``f_jk = max{a_ik - a_ij : j in P_i}``, -inf without a
    witness. Its closure describes Cl(X(P)) as ``{x : F_P (x) x = x}``.
    """
    A = _check_rows(A, P)
    d = A.shape[1]
    F = np.full((d, d), NEG_INF)
    for i, row in enumerate(P.rows):
        if not row:
            continue
        witnesses, block = _row_contribution(A[i], row)
        if witnesses.size:
            F[witnesses] = np.maximum(F[witnesses], block)
    np.fill_diagonal(F, 0.0)
    return F


def _rows_realizable(A, P: Pattern) -> bool:
    # A finite x cannot put a -inf entry in the argmax of a row with a finite entry
    d = A.shape[1]
    for i, row in enumerate(P.rows):
        if not row:
            return False
        finite = np.isfinite(A[i])
        if not finite.any():
            if len(row) != d:
                return False
        elif not all(finite[j] for j in row):
            return False
    return True


def _feasible(A, P: Pattern, F: np.ndarray) -> bool:
    return _rows_realizable(A, P) and max_cycle_mean(F) <= TOL


def is_feasible(A, P: Pattern) -> bool:
    """True iff some finite x realizes P, i.e. the cycle mean of F_P is 0."""
    A = _check_rows(A, P)
    return _feasible(A, P, feasibility_matrix(A, P))


def _finite_completion(F: np.ndarray) -> np.ndarray:
    # Replaced edges only close strictly negative cycles, so the closure keeps
    # the same zero cycles and its column mean is finite.
    d = F.shape[0]
    finite = F[np.isfinite(F)]
    bound = float(np.abs(finite).max()) if finite.size else 0.0
    depth = 1.0 + 2.0 * d * (1.0 + bound)
    return np.where(np.isfinite(F), F, -depth)


def _interior_point(F: np.ndarray) -> np.ndarray:
    return star_column_mean(kleene_star(_finite_completion(F)))


def domain_interior_point(A, P: Pattern) -> np.ndarray:
    """A finite point in the relative interior of X(P).

    When the Kleene star of F_P is finite this is the mean of its columns.
    Otherwise the missing edges of F_P are first replaced by a weight low
    enough that no new zero cycle appears.

    Raises
    ------
    InfeasiblePatternError
        If P is not feasible.
    """
    A = _check_rows(A, P)
    F = feasibility_matrix(A, P)
    if not _feasible(A, P, F):
        raise InfeasiblePatternError(f"Pattern {P} is not feasible")
    return _interior_point(F)


def classes_of(P: Pattern, x_P) -> PatternClasses:
    """Equivalence classes of columns sharing some row set, with anchor ``x_P``.

    Labels are dense and follow the smallest member of each class.
    """
    anchor = np.asarray(x_P, dtype=np.float64)
    d = anchor.shape[0]
    members = P.support()
    if members.size and (members.max() >= d or not np.isfinite(anchor[members]).all()):
        raise ValueError("Anchor must be finite on the support of the pattern")

    parent = list(range(d))

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for row in P.rows:
        ordered = sorted(row)
        for j in ordered[1:]:
            root_a, root_b = find(ordered[0]), find(j)
            if root_a != root_b:
                parent[max(root_a, root_b)] = min(root_a, root_b)

    labels = {}
    class_of = np.empty(d, dtype=int)
    for j in range(d):
        class_of[j] = labels.setdefault(find(j), len(labels))
    class_sizes = np.bincount(class_of, minlength=len(labels))
    return PatternClasses(class_of, class_sizes, anchor)


def pattern_dimension(P: Pattern, d: int) -> int:
    """Number of classes over all d columns; the dimension of X(P)."""
    return classes_of(P, np.zeros(d)).n_classes


def local_map_of(A, P: Pattern) -> LocalMap:
    A = _check_rows(A, P)
    picks = P.picks()
    return LocalMap(picks, A[np.arange(P.n), picks], A.shape[1])


def local_map(A, P: Pattern, x) -> np.ndarray:
    """``A_P(x) = L x + y_P`` with ``(y_P)_i = a_{i,min(P_i)}``."""
    return local_map_of(A, P)(x)


def _class_shifts(A, P: Pattern, classes: PatternClasses, y):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (P.n,):
        raise DimensionMismatchError(f"Target of shape {y.shape} for a pattern with {P.n} rows")
    if not np.isfinite(y).all():
        raise ValueError("Projections need a finite target; reduce the problem first")
    picks = P.picks()
    base = classes.anchor[picks] + A[np.arange(P.n), picks]
    row_class = classes.class_of[picks]
    m = classes.n_classes
    counts = np.bincount(row_class, minlength=m)
    sums = np.bincount(row_class, weights=y - base, minlength=m)
    # classes hit by no row keep a zero shift
    shifts = np.zeros(m)
    hit = counts > 0
    shifts[hit] = sums[hit] / counts[hit]
    return base, row_class, shifts


def _phi(A, P, classes, y) -> np.ndarray:
    base, row_class, shifts = _class_shifts(A, P, classes, y)
    return base + shifts[row_class]


def _psi(A, P, classes, y, x) -> np.ndarray:
    _, _, shifts = _class_shifts(A, P, classes, y)
    psi = np.array(x, dtype=np.float64)
    members = P.support()
    psi[members] = classes.anchor[members] + shifts[classes.class_of[members]]
    return psi


def _is_fixed_point(F: np.ndarray, x: np.ndarray, tol: float = TOL) -> bool:
    image = mat_vec(F, x)
    bottom = np.isneginf(x)
    if not np.array_equal(bottom, np.isneginf(image)):
        return False
    return bool(np.all(np.abs(image[~bottom] - x[~bottom]) <= tol))


def _require_feasible(A, P: Pattern) -> np.ndarray:
    A = _check_rows(A, P)
    F = feasibility_matrix(A, P)
    if not _feasible(A, P, F):
        raise InfeasiblePatternError(f"Pattern {P} is not feasible")
    return F


def normal_projection(A, P: Pattern, classes: PatternClasses, y) -> np.ndarray:
    """Euclidean projection of ``y`` onto the extended image of P.

    Every row is shifted by the mean residual of the rows whose picked column
    lies in the same class.

    Examples
    --------
    >>> A = [[0, 0], [1, 0], [0, 1]]
    >>> P = Pattern.parse("1;1;2")
    >>> classes = classes_of(P, domain_interior_point(A, P))
    >>> normal_projection(A, P, classes, [0, 0.5, 0]).tolist()
    [-0.25, 0.75, 0.0]
    """
    A = np.asarray(A, dtype=np.float64)
    _require_feasible(A, P)
    return _phi(A, P, classes, y)


def closest_preimage(A, P: Pattern, classes: PatternClasses, y, x, check: bool = True) -> np.ndarray:
    """Point of the preimage of Phi(P, y) closest to ``x``.

    Coordinates in the support of P are set to the class-shifted anchor;
    all others keep their value in ``x``. With ``check=False`` the caller vouches
    for feasibility of P.
    """
    A = np.asarray(A, dtype=np.float64)
    if check:
        _require_feasible(A, P)
    return _psi(A, P, classes, y, x)


def project_pattern(A, P: Pattern, y, anchor=None, F: Optional[np.ndarray] = None) -> PatternProjection:
    """Normal projection, closest preimage and admissibility of one pattern.

    Passing ``F`` skips the feasibility check; the caller guarantees that it is
    the feasibility matrix of a feasible pattern.
    """
    A = np.asarray(A, dtype=np.float64)
    if F is None:
        F = _require_feasible(A, P)
    if anchor is None:
        anchor = _interior_point(F)
    classes = classes_of(P, anchor)
    base, row_class, shifts = _class_shifts(A, P, classes, y)
    phi = base + shifts[row_class]
    psi = np.full(A.shape[1], NEG_INF)
    members = P.support()
    psi[members] = classes.anchor[members] + shifts[classes.class_of[members]]
    return PatternProjection(
        phi=phi,
        psi=psi,
        admissible=_is_fixed_point(F, psi),
        distance=pnorm_distance(phi, y, 2),
        classes=classes,
    )


def is_admissible(A, P: Pattern, y) -> bool:
    """True iff the normal projection of ``y`` lands in the closed image of P."""
    return project_pattern(A, P, y).admissible


def local_residual(A, P: Pattern, y, x) -> float:
    dist = pnorm_distance(local_map(A, P, x), y, 2)
    return 0.5 * dist * dist


class PatternTree:
    """Depth-first search over row-by-row patterns with feasibility pruning.

    A vertex at depth k fixes the argmax sets of the first k rows. Its
    feasibility matrix is the entrywise max of its parent's and one row
    contribution; a vertex with positive cycle mean is skipped together with
    its whole subtree. Row sets are visited in ascending bitmask order.
    """

    def __init__(self, A):
        self.A = np.asarray(A, dtype=np.float64)
        self.n, self.d = self.A.shape
        self._choices = [self._row_choices(self.A[i]) for i in range(self.n)]
        self.vertices_checked = 0

    def _row_choices(self, a_row) -> List[Tuple[FrozenSet[int], np.ndarray, np.ndarray]]:
        finite = np.isfinite(a_row)
        if not finite.any():
            full = frozenset(range(self.d))
            return [(full,) + _row_contribution(a_row, full)]
        choices = []
        for mask in range(1, 1 << self.d):
            cols = frozenset(j for j in range(self.d) if mask >> j & 1)
            if all(finite[j] for j in cols):
                choices.append((cols,) + _row_contribution(a_row, cols))
        return choices

    def root_branches(self) -> int:
        return len(self._choices[0]) if self.n else 0

    def _root(self) -> np.ndarray:
        F = np.full((self.d, self.d), NEG_INF)
        np.fill_diagonal(F, 0.0)
        return F

    def leaves(self, branch: Optional[int] = None) -> Iterator[Tuple[Pattern, np.ndarray]]:
        """Feasible leaves ``(P, F_P)`` in search order.

        ``branch`` restricts the search to one choice for the first row, so
        disjoint subtrees can be explored by separate workers.
        """
        if self.n == 0:
            yield Pattern(()), self._root()
            return
        first = self._choices[0]
        if branch is not None:
            first = first[branch:branch + 1]
        yield from self._descend(0, first, self._root(), ())

    def _descend(self, depth, choices, F, prefix):
        for cols, witnesses, block in choices:
            child = F.copy()
            if witnesses.size:
                child[witnesses] = np.maximum(child[witnesses], block)
                np.fill_diagonal(child, 0.0)
            self.vertices_checked += 1
            if max_cycle_mean(child) > TOL:
                continue
            rows = prefix + (cols,)
            if depth + 1 == self.n:
                yield Pattern(rows), child
            else:
                yield from self._descend(depth + 1, self._choices[depth + 1], child, rows)


def iter_feasible_patterns(A) -> Iterator[Tuple[Pattern, np.ndarray]]:
    """All feasible patterns of ``A`` with their feasibility matrices."""
    return PatternTree(A).leaves()


def pattern_count_bound(n: int, d: int, k: int) -> int:
    """Upper bound on the number of feasible patterns of dimension k.

    Attained for matrices in general position. Only a sanity figure: it is
    reported by the ``patterns`` command, never enforced.
    """
    if k < 1 or k > min(n, d):
        return 0
    return math.factorial(n + d - k - 1) // (
        math.factorial(n - k) * math.factorial(d - k) * math.factorial(k - 1)
    )
