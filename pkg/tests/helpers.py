"""Shared instance generators for the observability property suites and the
acceptance criteria."""

import numpy as np

from kernelfield import Dictionary, KernelSpec, kernel_matrix


def wide_gaussian_spec(bandwidth=1.0):
    # bandwidth of the order of the domain keeps every kernel entry far from
    # zero, so single rows are shaded with nonzero sums
    return KernelSpec("gaussian", bandwidth)


def distinct_eigenvalues(rng, m, low=0.2, high=0.95):
    """Draw m distinct nonzero magnitudes with a guaranteed separation:
    evenly spaced levels jittered by less than half a slot, random signs."""
    base = np.linspace(low, high, m)
    slot = (high - low) / max(m - 1, 1)
    vals = base + rng.uniform(-0.4, 0.4, size=m) * slot
    signs = rng.choice([-1.0, 1.0], size=m)
    return vals * signs


def random_similarity(rng, m, spread=3.0):
    """Random similarity transform with condition number at most `spread`."""
    q1, _ = np.linalg.qr(rng.standard_normal((m, m)))
    q2, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return q1 @ np.diag(rng.uniform(1.0, spread, size=m)) @ q2


def full_rank_distinct_system(rng, m):
    """A = S diag(lambda) S^-1 with distinct nonzero eigenvalues."""
    lam = distinct_eigenvalues(rng, m)
    S = random_similarity(rng, m)
    A = S @ np.diag(lam) @ np.linalg.inv(S)
    return A, lam


def repeated_diagonal_system(rng, m, cyclic_index):
    """Diagonal A whose largest eigenvalue multiplicity equals cyclic_index."""
    n_unique = m - cyclic_index + 1
    lam_unique = distinct_eigenvalues(rng, n_unique)
    lam = np.concatenate([np.full(cyclic_index, lam_unique[0]), lam_unique[1:]])
    return np.diag(lam), lam


def random_centers(rng, m, lo=0.0, hi=1.0):
    """m distinct center locations in [lo, hi]."""
    while True:
        c = np.sort(rng.uniform(lo, hi, size=m))
        if m == 1 or np.min(np.diff(c)) > 1e-3 * (hi - lo):
            return c


def shaded_single_row(rng, dictionary):
    """One sensing location whose kernel row is shaded with nonzero sum."""
    spec = dictionary.spec
    while True:
        x = rng.uniform(0.0, 1.0, size=1)
        row = kernel_matrix(spec, x, dictionary.centers)
        if np.all(np.abs(row) > 1e-6):
            return x, row


def gaussian_dictionary(rng, m, bandwidth=1.0):
    return Dictionary(random_centers(rng, m), wide_gaussian_spec(bandwidth))
