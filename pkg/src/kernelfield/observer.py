"""Kalman-filter observer on weight space: estimate the weight state from
sparse point measurements of the field and propagate it forward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FilterError, InputError
from .rkhs import Dictionary
from .sysid import LinearModel

# Innovation covariances with a condition number beyond this are treated as
# numerically singular.
_MAX_CONDITION = 1.0 / np.finfo(float).eps


def _check_psd(mat, name, tol=-1e-9):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-9, rtol=1e-9):
        raise InputError(f"{name} must be symmetric")
    if mat.size and float(np.min(np.linalg.eigvalsh((mat + mat.T) / 2.0))) < tol:
        raise InputError(f"{name} must be positive semidefinite")
    return mat


@dataclass(frozen=True)
class ObserverConfig:
    """Everything a weight-space Kalman filter needs.

    model holds the transition A and process noise Q; measurement_matrix is
    the (N, M) kernel matrix of the sensing locations against the centers;
    measurement_noise R must be symmetric positive definite.
    """

    model: LinearModel
    measurement_matrix: np.ndarray
    measurement_noise: np.ndarray
    initial_estimate: np.ndarray
    initial_covariance: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.measurement_matrix, dtype=float)
        M = self.model.dim
        if K.ndim != 2 or K.shape[1] != M:
            raise InputError(
                f"measurement matrix shape {K.shape} does not match state dim {M}"
            )
        N = K.shape[0]
        R = _check_psd(self.measurement_noise, "measurement_noise")
        if R.shape != (N, N):
            raise InputError(
                f"measurement_noise shape {R.shape} does not match sensor count {N}"
            )
        if float(np.min(np.linalg.eigvalsh((R + R.T) / 2.0))) <= 0.0:
            raise InputError("measurement_noise must be positive definite")
        w0 = np.asarray(self.initial_estimate, dtype=float).ravel()
        if w0.shape[0] != M or not np.all(np.isfinite(w0)):
            raise InputError(f"initial estimate must be a finite vector of length {M}")
        P0 = _check_psd(self.initial_covariance, "initial_covariance")
        if P0.shape != (M, M):
            raise InputError(f"initial covariance must be {M} x {M}, got {P0.shape}")
        for arr in (K, R, w0, P0):
            arr.setflags(write=False)
        object.__setattr__(self, "measurement_matrix", K)
        object.__setattr__(self, "measurement_noise", R)
        object.__setattr__(self, "initial_estimate", w0)
        object.__setattr__(self, "initial_covariance", P0)

    @property
    def n_sensors(self) -> int:
        return self.measurement_matrix.shape[0]


@dataclass(frozen=True)
class ObserverState:
    """Filter state: weight estimate, covariance, step counter, and the
    config it was created from.  States are values; stepping returns a new one."""

    estimate: np.ndarray
    covariance: np.ndarray
    step: int
    config: ObserverConfig


def observer_init(config: ObserverConfig) -> ObserverState:
    """Start a filter at step 0 with the configured estimate and covariance."""
    return ObserverState(
        estimate=config.initial_estimate.copy(),
        covariance=config.initial_covariance.copy(),
        step=0,
        config=config,
    )


def _predict(state: ObserverState, control_increment=None):
    cfg = state.config
    A, Q = cfg.model.A, cfg.model.Q
    w = A @ state.estimate
    if control_increment is not None:
        u_eff = np.asarray(control_increment, dtype=float).ravel()
        if u_eff.shape[0] != cfg.model.dim:
            raise InputError(
                f"control increment length {u_eff.shape[0]} does not match state dim"
            )
        w = w + u_eff
    P = A @ state.covariance @ A.T + Q
    return w, P


def observer_predict(state: ObserverState, control_increment=None) -> ObserverState:
    """Advance the filter one step without a measurement (skip-update)."""
    w, P = _predict(state, control_increment)
    P = (P + P.T) / 2.0
    return ObserverState(w, P, state.step + 1, state.config)


def observer_step(state: ObserverState, y, control_increment=None) -> ObserverState:
    """One predict/update cycle with the measurement vector y.

    Predict with the transition model (optionally adding a known weight-space
    control increment B u), then correct with the Kalman gain; the posterior
    covariance is symmetrized.  Raises FilterError when the innovation
    covariance is numerically singular.
    """
    cfg = state.config
    K, R = cfg.measurement_matrix, cfg.measurement_noise
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != cfg.n_sensors:
        raise InputError(f"measurement length {y.shape[0]} != sensor count {cfg.n_sensors}")
    if not np.all(np.isfinite(y)):
        raise InputError("measurement must be finite")

    w_prior, P_prior = _predict(state, control_increment)
    S = K @ P_prior @ K.T + R
    S = (S + S.T) / 2.0
    cond = float(np.linalg.cond(S))
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise FilterError(
            f"innovation covariance numerically singular (cond ~ {cond:.3e})",
            condition=cond,
        )
    gain = np.linalg.solve(S, K @ P_prior).T
    innovation = y - K @ w_prior
    w = w_prior + gain @ innovation
    P = (np.eye(cfg.model.dim) - gain @ K) @ P_prior
    P = (P + P.T) / 2.0
    return ObserverState(w, P, state.step + 1, cfg)


@dataclass(frozen=True)
class FieldPrediction:
    weights: np.ndarray
    covariance: np.ndarray


def predict_field(
    dictionary: Dictionary, state: ObserverState, model: LinearModel, horizon: int
) -> FieldPrediction:
    """Propagate the current estimate h steps ahead.

    Returns A^h w and the propagated covariance
    A^h P (A^h)^T + sum_{j<h} A^j Q (A^j)^T.  horizon = 0 returns the current
    estimate and covariance unchanged.
    """
    horizon = int(horizon)
    if horizon < 0:
        raise InputError(f"horizon must be nonnegative, got {horizon}")
    if dictionary.size != model.dim:
        raise InputError(
            f"dictionary size {dictionary.size} does not match model dim {model.dim}"
        )
    w = state.estimate.copy()
    P = state.covariance.copy()
    A, Q = model.A, model.Q
    for _ in range(horizon):
        w = A @ w
        P = A @ P @ A.T + Q
    return FieldPrediction(weights=w, covariance=(P + P.T) / 2.0)
