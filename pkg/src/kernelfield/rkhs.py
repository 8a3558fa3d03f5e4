"""Finite-dimensional kernel expansion space: dictionary construction, weight
inference from point samples, and field evaluation.

A field is represented as f(x) = sum_i w_i k(c_i, x) over a fixed set of
centers C; all dynamics, estimation, and control act on the weight vector w.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .kernels import KernelSpec, as_points, eval_kernel, kernel_matrix

# Admissions between full refactorizations of the inverse Gram kept by the
# sparsifier; rank-1 updates in between.
_REFACTOR_EVERY = 64


@dataclass(frozen=True)
class Dictionary:
    """Set of M pairwise-distinct centers generating the model space.

    centers has shape (M, input_dim); spec is the kernel that defines the
    span.  Immutable after construction.
    """

    centers: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        pts = as_points(self.centers, self.spec.input_dim, "centers")
        if pts.shape[0] < 1:
            raise InputError("a dictionary needs at least one center")
        if pts.shape[0] > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=2))
            np.fill_diagonal(dist, np.inf)
            if float(dist.min()) <= 0.0:
                raise InputError("dictionary centers must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "centers", pts)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    def gram(self) -> np.ndarray:
        """Gram matrix K_CC of the centers."""
        return kernel_matrix(self.spec, self.centers, self.centers)


@dataclass(frozen=True)
class SampleSet:
    """Point samples (location, value) of a field, optionally time-indexed."""

    locations: np.ndarray
    values: np.ndarray
    time: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        locs = np.asarray(self.locations, dtype=float)
        if locs.ndim == 1:
            locs = locs[:, None]
        if locs.shape[0] != vals.shape[0]:
            raise InputError(
                f"sample count mismatch: {locs.shape[0]} locations, {vals.shape[0]} values"
            )
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(vals))):
            raise InputError("sample locations and values must be finite")
        locs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_weights(dictionary: Dictionary, w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != dictionary.size:
        raise InputError(
            f"weight length {w.shape[0]} does not match dictionary size {dictionary.size}"
        )
    if not np.all(np.isfinite(w)):
        raise InputError("weights must be finite")
    return w


def evaluate_field(dictionary: Dictionary, w, x):
    """Evaluate f(x) = sum_i w_i k(c_i, x).

    x may be a single point (returns a float) or an (n, d) batch of points
    (returns an (n,) array).
    """
    w = _check_weights(dictionary, w)
    pts = as_points(x, dictionary.spec.input_dim, "x")
    K = kernel_matrix(dictionary.spec, pts, dictionary.centers)
    out = K @ w
    xa = np.asarray(x, dtype=float)
    if xa.ndim == 0 or (xa.ndim == 1 and pts.shape[0] == 1):
        return float(out[0])
    return out


def default_ridge(K: np.ndarray) -> float:
    """Scale-relative ridge: 1e-8 * trace(K^T K) / n_columns."""
    return 1e-8 * float(np.sum(K * K)) / K.shape[1]


def infer_weights(dictionary: Dictionary, samples: SampleSet, ridge=None) -> np.ndarray:
    """Fit weights to point samples by (ridge-regularized) least squares.

    Solves argmin_w ||K_XC w - y||^2 + ridge * ||w||^2 through the normal
    equations; ridge = 0 falls back to the minimum-norm least-squares
    solution.  ridge = None applies the scale-relative default.
    """
    if len(samples) == 0:
        raise InputError("infer_weights requires a nonempty sample set")
    K = kernel_matrix(dictionary.spec, samples.locations, dictionary.centers)
    y = samples.values
    if ridge is None:
        ridge = default_ridge(K)
    ridge = float(ridge)
    if ridge < 0 or not np.isfinite(ridge):
        raise InputError(f"ridge must be nonnegative, got {ridge}")
    if ridge == 0.0:
        w, *_ = np.linalg.lstsq(K, y, rcond=None)
        return w
    M = dictionary.size
    return np.linalg.solve(K.T @ K + ridge * np.eye(M), K.T @ y)


def sparsify_dictionary(candidates, spec: KernelSpec, budget: int, nu: float) -> Dictionary:
    """Build a dictionary by a streaming linear-independence test.

    A candidate x is admitted iff its squared distance to the span of the
    current dictionary, delta = k(x,x) - k_Cx^T K_CC^{-1} k_Cx, exceeds nu and
    the size is below budget.  Candidates are scanned in input order; the
    inverse Gram is maintained by rank-1 updates with a full refactorization
    every 64 admissions.
    """
    pts = as_points(candidates, spec.input_dim, "candidates")
    if pts.shape[0] == 0:
        raise InputError("sparsify_dictionary requires candidates")
    budget = int(budget)
    if budget < 1:
        raise InputError(f"budget must be a positive integer, got {budget}")
    if not np.isfinite(nu) or nu <= 0:
        raise InputError(f"nu must be positive, got {nu}")

    admitted: list[np.ndarray] = []
    inv_gram = None
    since_refactor = 0
    for x in pts:
        if len(admitted) >= budget:
            break
        kxx = eval_kernel(spec, x, x)
        if not admitted:
            delta = kxx
            if delta > nu:
                admitted.append(x)
                inv_gram = np.array([[1.0 / kxx]])
            continue
        C = np.asarray(admitted)
        b = kernel_matrix(spec, C, x[None, :]).ravel()
        c = inv_gram @ b
        delta = kxx - float(b @ c)
        if delta > nu:
            admitted.append(x)
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                gram = kernel_matrix(spec, np.asarray(admitted), np.asarray(admitted))
                inv_gram = np.linalg.inv(gram)
                since_refactor = 0
            else:
                m = inv_gram.shape[0]
                top = inv_gram + np.outer(c, c) / delta
                new = np.empty((m + 1, m + 1))
                new[:m, :m] = top
                new[:m, m] = -c / delta
                new[m, :m] = -c / delta
                new[m, m] = 1.0 / delta
                inv_gram = new
    if not admitted:
        raise InputError(
            f"no candidate passed the independence test at nu={nu}; dictionary would be empty"
        )
    return Dictionary(np.asarray(admitted), spec)


def bandwidth_grid_search(spec: KernelSpec, bandwidths, centers, sample_sets, ridge=None):
    """Pick the bandwidth minimizing the worst-case reconstruction error.

    Each candidate bandwidth is scored by fitting weights to every sample set
    and measuring the largest absolute reconstruction error at the sample
    locations.  Returns (best_bandwidth, errors) with errors aligned to the
    candidate list.
    """
    bandwidths = [float(s) for s in bandwidths]
    if not bandwidths:
        raise InputError("bandwidth_grid_search requires candidate bandwidths")
    sample_sets = list(sample_sets)
    if not sample_sets:
        raise InputError("bandwidth_grid_search requires sample sets")
    errors = []
    for s in bandwidths:
        d = Dictionary(centers, replace(spec, bandwidth=s))
        worst = 0.0
        for ss in sample_sets:
            w = infer_weights(d, ss, ridge)
            pred = evaluate_field(d, w, ss.locations)
            worst = max(worst, float(np.max(np.abs(pred - ss.values))))
        errors.append(worst)
    best = int(np.argmin(errors))
    return bandwidths[best], errors
