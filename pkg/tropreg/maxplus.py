"""Max-plus (tropical) linear algebra on numpy arrays.

Elements of R_max = R u {-inf} are stored as float64 with ``-numpy.inf`` as the
bottom element. ``max`` plays the role of addition and ``+`` the role of
multiplication. ``+inf`` and NaN are rejected by the validating constructors, so
``a + (-inf)`` is always ``-inf`` and never NaN.
"""

import math

import numpy as np

from tropreg.errors import (
    DimensionMismatchError,
    NotExtendedRealError,
    PositiveCycleMeanError,
)

NEG_INF = -np.inf
# Absolute tolerance for argmax ties, cycle means and fixed-point checks
TOL = 1e-9

MaxPlusMatrix = np.ndarray
MaxPlusVector = np.ndarray

SUPPORTED_NORMS = (1, 2, np.inf)


def _check_entries(values, what):
    if np.isnan(values).any():
        raise NotExtendedRealError(f"{what} contains NaN")
    if np.isposinf(values).any():
        raise NotExtendedRealError(f"{what} contains +inf")


def as_matrix(values) -> MaxPlusMatrix:
    """Validate ``values`` and return it as a read-only 2-d float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-d matrix, got {arr.ndim} dimensions")
    _check_entries(arr, "matrix")
    arr.setflags(write=False)
    return arr


def as_vector(values) -> MaxPlusVector:
    """Validate ``values`` and return it as a read-only 1-d float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"Expected a vector, got {arr.ndim} dimensions")
    _check_entries(arr, "vector")
    arr.setflags(write=False)
    return arr


def identity(d: int) -> MaxPlusMatrix:
    """The d x d max-plus identity: 0 on the diagonal, -inf elsewhere."""
    eye = np.full((d, d), NEG_INF)
    np.fill_diagonal(eye, 0.0)
    eye.setflags(write=False)
    return eye


def oplus(a, b):
    return np.maximum(a, b)


def otimes(a, b):
    return np.add(a, b)


def _square(B, name="matrix"):
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {B.shape}")
    return B


def mat_vec(A, x) -> MaxPlusVector:
    """Max-plus product ``(A (x) x)_i = max_j (a_ij + x_j)``.

    Parameters
    ----------
    A : array_like, shape (n, d)
    x : array_like, shape (d,)

    Returns
    -------
    numpy.ndarray, shape (n,)
        Rows without any finite term evaluate to -inf.
    """
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionMismatchError(
            f"Cannot multiply matrix of shape {A.shape} with vector of shape {x.shape}"
        )
    if A.shape[1] == 0:
        return np.full(A.shape[0], NEG_INF)
    return (A + x[np.newaxis, :]).max(axis=1)


def mat_mat(A, B) -> MaxPlusMatrix:
    """Max-plus matrix product ``(A (x) B)_ij = max_k (a_ik + b_kj)``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(
            f"Cannot multiply matrices of shapes {A.shape} and {B.shape}"
        )
    if A.shape[1] == 0:
        return np.full((A.shape[0], B.shape[1]), NEG_INF)
    return (A[:, :, np.newaxis] + B[np.newaxis, :, :]).max(axis=1)


def support(x) -> np.ndarray:
    """Indices of the finite entries of ``x``, ascending."""
    return np.flatnonzero(np.isfinite(np.asarray(x, dtype=np.float64)))


def pnorm_distance(x, y, p=2) -> float:
    """Extended p-norm distance between two max-plus vectors.

    The classical p-norm of the difference of the finite entries when both
    vectors have the same support, ``inf`` otherwise. Two all -inf vectors are at
    distance 0.
    """
    if p not in SUPPORTED_NORMS:
        raise ValueError(f"Unsupported norm {p!r}; expected one of {SUPPORTED_NORMS}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatchError(f"Vectors of shapes {x.shape} and {y.shape}")
    finite = np.isfinite(x)
    if not np.array_equal(finite, np.isfinite(y)):
        return math.inf
    if not finite.any():
        return 0.0
    return float(np.linalg.norm(x[finite] - y[finite], ord=p))


def residual(A, y, x) -> float:
    """Half the squared extended 2-norm distance between ``A (x) x`` and ``y``."""
    dist = pnorm_distance(mat_vec(A, x), y, 2)
    return 0.5 * dist * dist


def max_cycle_mean(B) -> float:
    """Maximum cycle mean of the weighted digraph of ``B``.

    Uses Karp's algorithm from a virtual source joined to every node, so
    graphs that are not strongly connected are handled in one pass. Edges of
    weight -inf are absent. Returns -inf when the digraph is acyclic.
    """
    B = _square(B)
    d = B.shape[0]
    if d == 0:
        return NEG_INF

    # walks[k, v]: heaviest walk with exactly k edges ending at v
    walks = np.full((d + 1, d), NEG_INF)
    walks[0] = 0.0
    for k in range(1, d + 1):
        walks[k] = (walks[k - 1][:, np.newaxis] + B).max(axis=0)

    final = walks[d]
    reached = np.isfinite(final)
    if not reached.any():
        return NEG_INF

    lengths = (d - np.arange(d))[:, np.newaxis]
    with np.errstate(invalid="ignore"):
        ratios = (final[np.newaxis, :] - walks[:d]) / lengths
    ratios[~np.isfinite(walks[:d])] = np.inf
    return float(ratios[:, reached].min(axis=0).max())


def kleene_star(B) -> MaxPlusMatrix:
    """Kleene star ``I (+) B (+) B^2 (+) ...`` as a longest-path closure.

    Raises
    ------
    PositiveCycleMeanError
        If a diagonal entry of the closure exceeds 0 by more than ``TOL``, i.e.
        the maximum cycle mean of ``B`` is positive.
    """
    closure = np.array(_square(B), dtype=np.float64)
    d = closure.shape[0]
    for k in range(d):
        closure = np.maximum(closure, closure[:, k, np.newaxis] + closure[np.newaxis, k, :])
        diag = np.diagonal(closure)
        worst = int(np.argmax(diag))
        if diag[worst] > TOL:
            raise PositiveCycleMeanError(worst, float(diag[worst]))
    np.fill_diagonal(closure, 0.0)
    return closure


def star_column_mean(Bstar) -> MaxPlusVector:
    """Arithmetic mean of the columns of a Kleene star.

    Each row is averaged over its finite entries only; a row with no finite
    entry yields -inf.
    """
    Bstar = np.asarray(Bstar, dtype=np.float64)
    finite = np.isfinite(Bstar)
    counts = finite.sum(axis=1)
    sums = np.where(finite, Bstar, 0.0).sum(axis=1)
    means = np.full(Bstar.shape[0], NEG_INF)
    hit = counts > 0
    means[hit] = sums[hit] / counts[hit]
    return means
