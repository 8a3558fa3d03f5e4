"""Weight-transition learning, spectral analysis, and observability /
controllability rank tests, including the randomized placement search.

The generalized observability matrix stacks K_t A^t over a set of time
indices; full column rank M makes the weight state recoverable.  The
controllability matrix stacks (A^t)^T K_D blocks horizontally; full row rank
makes the weight state steerable through the actuation kernel matrix K_D.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, PlacementError
from .kernels import kernel_matrix, is_l_shaded
from .rkhs import Dictionary

_EPS = float(np.finfo(float).eps)


def default_rank_tol(n: int) -> float:
    """Relative singular-value cutoff used by all rank tests: n * eps * 64."""
    return n * _EPS * 64.0


def numerical_rank(mat: np.ndarray, rank_tol: float) -> int:
    """Count singular values at or above rank_tol times the largest."""
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s >= rank_tol * s[0]))


def check_times(times) -> np.ndarray:
    """Validate a strictly increasing sequence of nonnegative step indices."""
    t = np.asarray(list(times), dtype=int)
    if t.size == 0:
        raise InputError("the time index set must be nonempty")
    if np.any(t < 0):
        raise InputError("time indices must be nonnegative")
    if np.any(np.diff(t) <= 0):
        raise InputError("time indices must be strictly increasing")
    return t


@dataclass(frozen=True)
class LinearModel:
    """Weight transition matrix A and process-noise covariance Q (both M x M)."""

    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got shape {A.shape}")
        if Q.shape != A.shape:
            raise InputError(f"Q shape {Q.shape} does not match A shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InputError("A must be finite")
        if not np.allclose(Q, Q.T, atol=1e-9, rtol=1e-9):
            raise InputError("Q must be symmetric")
        if Q.size and float(np.min(np.linalg.eigvalsh((Q + Q.T) / 2.0))) < -1e-10:
            raise InputError("Q must be positive semidefinite")
        A.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def learn_transition(trajectory) -> LinearModel:
    """Fit w_{k+1} = A w_k to a weight trajectory (M x T matrix of columns).

    A is the minimum-Frobenius-norm least-squares solution
    W[:,1:] pinv(W[:,:-1]); Q is the unbiased sample covariance of the
    one-step residuals (divisor T-2), or the zero matrix when T = 2.
    """
    W = np.asarray(trajectory, dtype=float)
    if W.ndim != 2:
        raise InputError(f"trajectory must be an (M, T) matrix, got shape {W.shape}")
    M, T = W.shape
    if T < 2:
        raise InputError(f"need at least 2 snapshots to fit a transition, got T={T}")
    if not np.all(np.isfinite(W)):
        raise InputError("trajectory must be finite")
    W_past = W[:, :-1]
    W_next = W[:, 1:]
    A = W_next @ np.linalg.pinv(W_past)
    if T > 2:
        resid = W_next - A @ W_past
        resid = resid - resid.mean(axis=1, keepdims=True)
        Q = (resid @ resid.T) / (T - 2)
        Q = (Q + Q.T) / 2.0
    else:
        Q = np.zeros((M, M))
    return LinearModel(A, Q)


@dataclass(frozen=True)
class SpectralSummary:
    """Clustered eigenstructure of a transition matrix.

    Eigenvalues are grouped by absolute distance (single linkage at
    cluster_tol); each cluster reports its centroid, algebraic multiplicity
    (member count), and geometric multiplicity M - rank(A - centroid I).  The
    cyclic index is the largest geometric multiplicity; full_rank_distinct is
    True when every cluster is a singleton and no centroid sits at zero.
    """

    eigenvalues: np.ndarray
    clusters: tuple
    centroids: np.ndarray
    algebraic_multiplicities: tuple
    geometric_multiplicities: tuple
    cyclic_index: int
    full_rank_distinct: bool


def _cluster_eigenvalues(eigs: np.ndarray, tol: float):
    """Single-linkage clustering of complex values at absolute distance tol."""
    n = eigs.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = sorted((tuple(sorted(g)) for g in groups.values()), key=lambda g: g[0])
    return clusters


def spectral_summary(A, cluster_tol=None) -> SpectralSummary:
    """Cluster the spectrum of A and compute its cyclic index.

    cluster_tol defaults to 1e-6 times the spectral norm of A.  Geometric
    multiplicities use a rank cutoff floored at cluster_tol so that nearly
    repeated eigenvalues of a learned transition count as repeated.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}")
    M = A.shape[0]
    norm2 = float(np.linalg.norm(A, 2)) if A.size else 0.0
    if cluster_tol is None:
        cluster_tol = 1e-6 * norm2
    cluster_tol = float(cluster_tol)
    if cluster_tol < 0 or not np.isfinite(cluster_tol):
        raise InputError(f"cluster_tol must be nonnegative, got {cluster_tol}")
    eigs = np.linalg.eigvals(A)
    clusters = _cluster_eigenvalues(eigs, cluster_tol)
    centroids = np.array([eigs[list(c)].mean() for c in clusters])
    alg = tuple(len(c) for c in clusters)
    geo = []
    for c, lam in zip(clusters, centroids):
        shifted = A - lam * np.eye(M)
        s = np.linalg.svd(shifted, compute_uv=False)
        cutoff = max(default_rank_tol(M) * (s[0] if s.size else 0.0), cluster_tol)
        rank = int(np.sum(s > cutoff))
        g = max(1, min(M - rank, len(c)))
        geo.append(g)
    cyclic = max(geo)
    full_rank_distinct = all(m == 1 for m in alg) and bool(
        np.all(np.abs(centroids) > cluster_tol)
    )
    return SpectralSummary(
        eigenvalues=eigs,
        clusters=tuple(clusters),
        centroids=centroids,
        algebraic_multiplicities=alg,
        geometric_multiplicities=tuple(geo),
        cyclic_index=int(cyclic),
        full_rank_distinct=full_rank_distinct,
    )


def _measurement_at(K, i):
    """K may be one matrix used at every time or a sequence of per-time matrices."""
    if isinstance(K, (list, tuple)):
        return np.asarray(K[i], dtype=float)
    return np.asarray(K, dtype=float)


def observability_matrix(A, K, times) -> np.ndarray:
    """Stack K_{t_i} A^{t_i} vertically over the time index set (A^0 = I)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}")
    t = check_times(times)
    M = A.shape[0]
    blocks = []
    power = np.eye(M)
    prev = 0
    for i, ti in enumerate(t):
        power = power @ np.linalg.matrix_power(A, int(ti - prev))
        prev = int(ti)
        Ki = _measurement_at(K, i)
        if Ki.ndim != 2 or Ki.shape[1] != M:
            raise InputError(
                f"measurement matrix at t={ti} has shape {Ki.shape}, expected (*, {M})"
            )
        blocks.append(Ki @ power)
    return np.vstack(blocks)


@dataclass(frozen=True)
class ObservabilityReport:
    observable: bool
    rank: int


def is_observable(A, K, times, rank_tol=None) -> ObservabilityReport:
    """Full-column-rank test of the generalized observability matrix."""
    A = np.asarray(A, dtype=float)
    M = A.shape[0]
    if rank_tol is None:
        rank_tol = default_rank_tol(M)
    O = observability_matrix(A, K, times)
    r = numerical_rank(O, rank_tol)
    return ObservabilityReport(observable=r == M, rank=r)


def controllability_matrix(A, K_D, times) -> np.ndarray:
    """Stack (A^{t_i})^T K_D blocks horizontally over the time index set."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}")
    t = check_times(times)
    M = A.shape[0]
    blocks = []
    power = np.eye(M)
    prev = 0
    for i, ti in enumerate(t):
        power = power @ np.linalg.matrix_power(A, int(ti - prev))
        prev = int(ti)
        Bi = _measurement_at(K_D, i)
        if Bi.ndim != 2 or Bi.shape[0] != M:
            raise InputError(
                f"actuation matrix at t={ti} has shape {Bi.shape}, expected ({M}, *)"
            )
        blocks.append(power.T @ Bi)
    return np.hstack(blocks)


@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    rank: int


def is_controllable(A, K_D, times, rank_tol=None) -> ControllabilityReport:
    """Full-row-rank test of the generalized controllability matrix."""
    A = np.asarray(A, dtype=float)
    M = A.shape[0]
    if rank_tol is None:
        rank_tol = default_rank_tol(M)
    C = controllability_matrix(A, K_D, times)
    r = numerical_rank(C, rank_tol)
    return ControllabilityReport(controllable=r == M, rank=r)


@dataclass(frozen=True)
class PlacementCertificate:
    """Rank evidence attached to a proposed sensor or actuator placement."""

    mode: str
    cyclic_index: int
    rank: int
    required_rank: int
    full_rank: bool
    l_shaded: bool
    draws: int


@dataclass(frozen=True)
class PlacementResult:
    locations: np.ndarray
    count: int
    certificate: PlacementCertificate


def propose_placement(
    dictionary: Dictionary,
    A,
    candidates,
    mode: str,
    max_tries: int = 100,
    seed: int = 0,
) -> PlacementResult:
    """Search for a sensor (or actuator) placement that passes the rank test.

    The cyclic index l of A lower-bounds the number of locations.  Seeded
    draws of l candidates are screened for l-shadedness and then the full
    observability (sensing) or controllability (actuation) rank test with
    times {0, ..., M-1}; if max_tries draws of one size all fail, the draw
    size grows by one, up to min(M, number of candidates).  Raises
    PlacementError carrying the best rank achieved when the search exhausts.
    """
    if mode not in ("sensing", "actuation"):
        raise InputError(f"mode must be 'sensing' or 'actuation', got {mode!r}")
    A = np.asarray(A, dtype=float)
    M = dictionary.size
    if A.shape != (M, M):
        raise InputError(f"A shape {A.shape} does not match dictionary size {M}")
    pts = np.asarray(candidates, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise InputError("propose_placement requires candidate locations")
    max_tries = int(max_tries)
    if max_tries < 1:
        raise InputError("max_tries must be positive")

    l = spectral_summary(A).cyclic_index
    times = np.arange(M)
    rng = np.random.default_rng(seed)
    n_cand = pts.shape[0]

    def rank_test(locations):
        K_rows = kernel_matrix(dictionary.spec, locations, dictionary.centers)
        shaded_ok = K_rows.shape[0] >= l and is_l_shaded(K_rows, l)
        if mode == "sensing":
            rep = is_observable(A, K_rows, times)
            return shaded_ok, rep.observable, rep.rank
        rep = is_controllable(A, K_rows.T, times)
        return shaded_ok, rep.controllable, rep.rank

    best_rank = -1
    draws = 0
    for size in range(l, min(M, n_cand) + 1):
        for _ in range(max_tries):
            draws += 1
            idx = rng.choice(n_cand, size=size, replace=False)
            locs = pts[np.sort(idx)]
            shaded_ok, full_rank, rank = rank_test(locs)
            best_rank = max(best_rank, rank)
            if shaded_ok and full_rank:
                cert = PlacementCertificate(
                    mode=mode,
                    cyclic_index=l,
                    rank=rank,
                    required_rank=M,
                    full_rank=True,
                    l_shaded=True,
                    draws=draws,
                )
                return PlacementResult(locations=locs, count=size, certificate=cert)
    if best_rank < 0:
        # fewer candidates than the cyclic index: report the rank of using all
        _, _, best_rank = rank_test(pts)
    raise PlacementError(
        f"no {mode} placement of up to {min(M, n_cand)} locations reached rank {M} "
        f"(best rank {best_rank})",
        best_rank=best_rank,
    )
