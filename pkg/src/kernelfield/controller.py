"""Kernel controller: actuation operator, discrete LQR synthesis by Riccati
iteration, and the reference-tracking command law.

Actuation happens through control functions spanned by kernel sections at the
actuator locations D; their effect on the weight state is the cross kernel
matrix B with B[i, j] = k(d_j, c_i).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, SynthesisError, UncontrollableError
from .kernels import as_points, kernel_matrix
from .rkhs import Dictionary, evaluate_field
from .sysid import is_controllable


@dataclass(frozen=True)
class ActuatorSet:
    """Pairwise-distinct actuator locations, one control channel each."""

    locations: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.locations, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InputError("need at least one actuator location")
        if not np.all(np.isfinite(pts)):
            raise InputError("actuator locations must be finite")
        if pts.shape[0] > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=2))
            np.fill_diagonal(dist, np.inf)
            if float(dist.min()) <= 0.0:
                raise InputError("actuator locations must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "locations", pts)

    @property
    def size(self) -> int:
        return self.locations.shape[0]


def control_operator(dictionary: Dictionary, actuators: ActuatorSet) -> np.ndarray:
    """Cross kernel matrix B (M x l) with B[i, j] = k(d_j, c_i)."""
    locs = as_points(actuators.locations, dictionary.spec.input_dim, "actuators")
    return kernel_matrix(dictionary.spec, dictionary.centers, locs)


@dataclass(frozen=True)
class ControllerGains:
    """LQR feedback gain with optional reference feedforward.

    gain is (l, M); feedforward u_ss and reference w_ref define the tracking
    law u = -gain (w - w_ref) + u_ss.  feedforward_residual reports
    ||(I - A) w_ref - B u_ss||, the steady-state mismatch the actuation
    cannot cancel.
    """

    gain: np.ndarray
    feedforward: np.ndarray
    riccati_solution: np.ndarray
    reference: np.ndarray
    feedforward_residual: float
    closed_loop_radius: float
    iterations: int


def solve_lqr(A, B, Q_cost, R_cost, max_iter: int = 10000, tol: float = 1e-12) -> ControllerGains:
    """Synthesize the discrete LQR gain by Riccati fixed-point iteration.

    Iterates P <- Q + A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A from
    P = Q_cost until the relative Frobenius change drops below tol, then
    G = (R + B^T P B)^{-1} B^T P A.  Requires (A, B) to pass the
    controllability rank test at times {0, ..., M-1}; raises
    UncontrollableError naming the rank deficit otherwise, SynthesisError on
    non-convergence or an unstable closed loop.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got shape {A.shape}")
    M = A.shape[0]
    if B.ndim != 2 or B.shape[0] != M:
        raise InputError(f"B shape {B.shape} does not match state dim {M}")
    Q = np.asarray(Q_cost, dtype=float)
    R = np.asarray(R_cost, dtype=float)
    if Q.shape != (M, M) or not np.allclose(Q, Q.T, atol=1e-9):
        raise InputError("Q_cost must be symmetric with the state dimension")
    if float(np.min(np.linalg.eigvalsh((Q + Q.T) / 2.0))) < -1e-10:
        raise InputError("Q_cost must be positive semidefinite")
    n_u = B.shape[1]
    if R.shape != (n_u, n_u) or not np.allclose(R, R.T, atol=1e-9):
        raise InputError("R_cost must be symmetric with the input dimension")
    if float(np.min(np.linalg.eigvalsh((R + R.T) / 2.0))) <= 0.0:
        raise InputError("R_cost must be positive definite")

    rep = is_controllable(A, B, np.arange(M))
    if not rep.controllable:
        raise UncontrollableError(
            f"(A, B) fails the controllability rank test: rank {rep.rank} < {M}",
            rank=rep.rank,
            required=M,
        )

    P = Q.copy()
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        BtP = B.T @ P
        gain_core = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ gain_core
        P_next = (P_next + P_next.T) / 2.0
        delta = float(np.linalg.norm(P_next - P, "fro"))
        scale = float(np.linalg.norm(P, "fro"))
        P = P_next
        if delta <= tol * max(scale, 1e-300):
            break
    else:
        raise SynthesisError(
            f"Riccati iteration did not converge in {max_iter} iterations"
        )
    G = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    radius = float(np.max(np.abs(np.linalg.eigvals(A - B @ G))))
    if radius >= 1.0:
        raise SynthesisError(
            f"closed loop not contractive: spectral radius {radius:.6f} >= 1"
        )
    return ControllerGains(
        gain=G,
        feedforward=np.zeros(n_u),
        riccati_solution=P,
        reference=np.zeros(M),
        feedforward_residual=0.0,
        closed_loop_radius=radius,
        iterations=iterations,
    )


def with_reference(gains: ControllerGains, A, B, w_ref, use_feedforward: bool = True) -> ControllerGains:
    """Attach a weight-space reference to synthesized gains.

    With feedforward enabled, u_ss = pinv(B) (I - A) w_ref makes w_ref a
    closed-loop fixed point whenever (I - A) w_ref lies in the range of B;
    the residual of that equation is recorded either way.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float).ravel()
    M = A.shape[0]
    if w_ref.shape[0] != M:
        raise InputError(f"reference length {w_ref.shape[0]} does not match state dim {M}")
    target = (np.eye(M) - A) @ w_ref
    if use_feedforward:
        u_ss = np.linalg.pinv(B) @ target
    else:
        u_ss = np.zeros(B.shape[1])
    residual = float(np.linalg.norm(target - B @ u_ss))
    return replace(
        gains, feedforward=u_ss, reference=w_ref, feedforward_residual=residual
    )


def tracking_command(gains: ControllerGains, estimate) -> np.ndarray:
    """Control weights u = -G (w_hat - w_ref) + u_ss for the current estimate."""
    w = np.asarray(estimate, dtype=float).ravel()
    if w.shape[0] != gains.gain.shape[1]:
        raise InputError(
            f"estimate length {w.shape[0]} does not match gain width {gains.gain.shape[1]}"
        )
    return -gains.gain @ (w - gains.reference) + gains.feedforward


def apply_control_field(dictionary: Dictionary, actuators: ActuatorSet, u):
    """Return the control function delta(x) = sum_j u_j k(d_j, x).

    The returned callable accepts a single point or an (n, d) batch, like
    evaluate_field.  Adding delta to the plant moves the weight state by
    B u with B the control operator.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != actuators.size:
        raise InputError(
            f"command length {u.shape[0]} does not match actuator count {actuators.size}"
        )
    basis = Dictionary(actuators.locations, dictionary.spec)

    def delta(x):
        return evaluate_field(basis, u, x)

    return delta
