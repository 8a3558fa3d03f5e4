"""Kernel functions, kernel-matrix assembly, and the structural matrix tests
(shadedness, block shadedness) used by the observability machinery.

A kernel matrix built from sampling locations X (rows) and centers C (columns)
acts as the measurement operator of the weight-space model: row i holds
k(x_i, c_1), ..., k(x_i, c_M).  The matrix is *shaded* when the rows jointly
have a nonzero entry in every column, and *l-shaded* when its rows can be
split into l shaded blocks whose columns are l-wise linearly independent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

FAMILIES = ("gaussian", "laplacian", "periodic", "locally_periodic")
_PERIODIC_FAMILIES = ("periodic", "locally_periodic")

# Entries with |K_ij| <= 1e-12 * max|K| count as zero in shadedness tests.
# Gaussian entries are never exactly zero, only extremely small.
SHADED_RTOL = 1e-12

# Column-independence rank cutoff: singular values below
# n_columns * eps * sigma_max are treated as zero.
_EPS = float(np.finfo(float).eps)

# Above this many column subsets the independence check switches to a seeded
# random sample of this size (probabilistic; reported in the docstring).
_SUBSET_LIMIT = 10000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters, defining k(x, y) on R^input_dim.

    Families (r = ||x - y||):
        gaussian          exp(-r^2 / 2 sigma^2)
        laplacian         exp(-r / sigma)
        periodic          exp(-2 sin^2(pi r / p) / sigma^2)
        locally_periodic  periodic * gaussian

    All families are normalized so k(x, x) = 1.
    """

    family: str
    bandwidth: float
    period: float | None = None
    input_dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(
                f"unknown kernel family {self.family!r}; choose from {FAMILIES}"
            )
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.family in _PERIODIC_FAMILIES:
            if self.period is None or not np.isfinite(self.period) or self.period <= 0:
                raise InputError(
                    f"family {self.family!r} requires a positive period"
                )
        if int(self.input_dim) < 1:
            raise InputError(f"input_dim must be >= 1, got {self.input_dim}")


def as_points(points, input_dim, name="points"):
    """Coerce to a finite (N, input_dim) float array.

    Accepts scalars (1-D inputs), flat arrays of coordinates, or an array of
    points; raises InputError on dimension mismatch or non-finite entries.
    """
    arr = np.atleast_1d(np.asarray(points, dtype=float))
    if arr.ndim == 1:
        if input_dim == 1:
            arr = arr[:, None]
        elif arr.shape[0] == input_dim:
            arr = arr[None, :]
        else:
            raise InputError(
                f"{name}: expected coordinates of length {input_dim}, got shape {arr.shape}"
            )
    if arr.ndim != 2 or arr.shape[1] != int(input_dim):
        raise InputError(
            f"{name}: expected shape (n, {input_dim}), got {np.asarray(points).shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: entries must be finite")
    return arr


def _profile(spec: KernelSpec, r):
    """Evaluate the kernel as a function of inter-point distance r >= 0."""
    s2 = spec.bandwidth * spec.bandwidth
    if spec.family == "gaussian":
        return np.exp(-0.5 * r * r / s2)
    if spec.family == "laplacian":
        return np.exp(-r / spec.bandwidth)
    if spec.family == "periodic":
        s = np.sin(np.pi * r / spec.period)
        return np.exp(-2.0 * s * s / s2)
    # locally_periodic: periodic oscillation under a gaussian envelope
    s = np.sin(np.pi * r / spec.period)
    return np.exp(-2.0 * s * s / s2 - 0.5 * r * r / s2)


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of points."""
    xa = as_points(x, spec.input_dim, "x")
    ya = as_points(y, spec.input_dim, "y")
    if xa.shape[0] != 1 or ya.shape[0] != 1:
        raise InputError("eval_kernel expects single points; use kernel_matrix for batches")
    r = float(np.linalg.norm(xa[0] - ya[0]))
    return float(_profile(spec, r))


def kernel_matrix(spec: KernelSpec, X, C) -> np.ndarray:
    """Assemble the (N, M) matrix with entries k(x_i, c_j).

    Rows correspond to the sampling/actuation locations X, columns to the
    centers C.  Both inputs must be nonempty.
    """
    Xa = as_points(X, spec.input_dim, "X")
    Ca = as_points(C, spec.input_dim, "C")
    if Xa.shape[0] == 0 or Ca.shape[0] == 0:
        raise InputError("kernel_matrix requires nonempty point sets")
    diff = Xa[:, None, :] - Ca[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=2))
    return _profile(spec, r)


@dataclass(frozen=True)
class ShadedReport:
    """Result of the shadedness test on a kernel matrix.

    covered_columns holds the indices that have at least one entry above the
    tolerance; row_sum_nonzero is True when every entry of the column-wise sum
    of all rows exceeds the tolerance in absolute value.
    """

    shaded: bool
    covered_columns: frozenset
    row_sum_nonzero: bool


def _shaded_tol(K: np.ndarray, tol) -> float:
    if tol is not None:
        if not np.isfinite(tol) or tol <= 0:
            raise InputError(f"tol must be positive, got {tol}")
        return float(tol)
    peak = float(np.max(np.abs(K))) if K.size else 0.0
    return SHADED_RTOL * peak if peak > 0 else SHADED_RTOL


def is_shaded(K, tol=None) -> ShadedReport:
    """Test whether the rows of K jointly cover every column with a nonzero entry.

    An entry counts as nonzero when its magnitude exceeds tol; the default
    tolerance is 1e-12 relative to the largest magnitude in K.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise InputError(f"K must be a 2-D matrix, got ndim={K.ndim}")
    tol = _shaded_tol(K, tol)
    if K.shape[0] == 0 or K.shape[1] == 0:
        return ShadedReport(False, frozenset(), False)
    nonzero = np.abs(K) > tol
    covered = frozenset(int(j) for j in np.flatnonzero(nonzero.any(axis=0)))
    row_sum = K.sum(axis=0)
    row_sum_nonzero = bool(np.all(np.abs(row_sum) > tol))
    shaded = len(covered) == K.shape[1]
    return ShadedReport(shaded, covered, row_sum_nonzero)


def _row_supports(K: np.ndarray, tol: float):
    return [frozenset(int(j) for j in np.flatnonzero(np.abs(K[i]) > tol))
            for i in range(K.shape[0])]


def _partition_into_shaded_blocks(supports, n_cols, n_blocks) -> bool:
    """Decide whether the rows can be split into n_blocks groups that each
    cover every column.  Exact backtracking; rows only ever help a block, so
    assigning large-support rows first keeps the search shallow."""
    full = set(range(n_cols))
    union_all = set().union(*supports) if supports else set()
    if union_all != full:
        return False
    if n_blocks == 1:
        return True
    order = sorted(range(len(supports)), key=lambda i: -len(supports[i]))
    rows = [supports[i] for i in order]
    n = len(rows)
    # union of supports from position i onward, for pruning
    suffix = [set() for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] | rows[i]
    missing = [set(full) for _ in range(n_blocks)]

    def rec(i):
        open_blocks = sum(1 for m in missing if m)
        if i == n:
            return open_blocks == 0
        if open_blocks > n - i:
            return False
        if any(not m <= suffix[i] for m in missing):
            return False
        tried = set()
        for b in range(n_blocks):
            key = frozenset(missing[b])
            if key in tried:
                continue
            tried.add(key)
            newly = missing[b] & rows[i]
            missing[b] -= newly
            if rec(i + 1):
                missing[b] |= newly
                return True
            missing[b] |= newly
        return False

    return rec(0)


def _column_subsets_independent(K: np.ndarray, l: int) -> bool:
    """Check that every choice of l columns has rank l.

    Exhaustive when C(M, l) <= 10000; otherwise a seeded random sample of
    10000 subsets is tested, which makes the result probabilistic for very
    wide matrices.  Rank uses singular values above M * eps * sigma_max.
    """
    n_rows, n_cols = K.shape

    def full_rank(cols) -> bool:
        s = np.linalg.svd(K[:, list(cols)], compute_uv=False)
        if s.size == 0 or s[0] <= 0:
            return False
        return int(np.sum(s > n_cols * _EPS * s[0])) == l

    if math.comb(n_cols, l) <= _SUBSET_LIMIT:
        return all(full_rank(c) for c in itertools.combinations(range(n_cols), l))
    rng = np.random.default_rng(0)
    for _ in range(_SUBSET_LIMIT):
        cols = rng.choice(n_cols, size=l, replace=False)
        if not full_rank(cols):
            return False
    return True


def is_l_shaded(K, l, tol=None) -> bool:
    """Test the block-shadedness condition at level l.

    True iff the rows of K can be partitioned into l blocks that are each
    shaded at the tolerance, and every subset of l columns is linearly
    independent.  l = 1 collapses to is_shaded with no zero column.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise InputError(f"K must be a 2-D matrix, got ndim={K.ndim}")
    l = int(l)
    if l < 1:
        raise InputError(f"l must be a positive integer, got {l}")
    if l > K.shape[0]:
        raise InputError(f"l={l} exceeds the row count {K.shape[0]}")
    if l > K.shape[1]:
        raise InputError(f"l={l} exceeds the column count {K.shape[1]}")
    tol = _shaded_tol(K, tol)
    supports = _row_supports(K, tol)
    if not _partition_into_shaded_blocks(supports, K.shape[1], l):
        return False
    return _column_subsets_independent(K, l)
