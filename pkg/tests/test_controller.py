import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from kernelfield import (
    ActuatorSet,
    InputError,
    KernelSpec,
    SynthesisError,
    UncontrollableError,
    apply_control_field,
    control_operator,
    is_controllable,
    kernel_matrix,
    solve_lqr,
    tracking_command,
    with_reference,
)

from helpers import gaussian_dictionary, random_centers


def scalar_dare_oracle(a, b, q, r, tol=1e-12, iters=100000):
    """Independent scalar fixed-point iteration of the Riccati map."""
    p = q
    for _ in range(iters):
        p_next = q + a * a * p - (a * b * p) ** 2 / (r + b * b * p)
        if abs(p_next - p) <= tol * max(abs(p), 1.0):
            return p_next
        p = p_next
    raise AssertionError("oracle iteration did not converge")


def random_controllable(rng, m, n_u):
    A = rng.standard_normal((m, m))
    A *= 1.05 / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
    B = rng.standard_normal((m, n_u))
    assert is_controllable(A, B, np.arange(m)).controllable
    return A, B


# ---------------------------------------------------------------------------
# control_operator / apply_control_field
# ---------------------------------------------------------------------------

def test_operator_equals_gram_when_actuators_match_centers():
    rng = np.random.default_rng(0)
    d = gaussian_dictionary(rng, 5)
    B = control_operator(d, ActuatorSet(d.centers))
    assert np.allclose(B, d.gram())


def test_operator_single_actuator_is_gram_column():
    rng = np.random.default_rng(1)
    d = gaussian_dictionary(rng, 5)
    B = control_operator(d, ActuatorSet(d.centers[[3]]))
    assert np.allclose(B.ravel(), d.gram()[:, 3])


def test_operator_matches_transposed_kernel_matrix():
    rng = np.random.default_rng(2)
    d = gaussian_dictionary(rng, 6)
    locs = random_centers(rng, 3)
    B = control_operator(d, ActuatorSet(locs))
    K_rows = kernel_matrix(d.spec, locs, d.centers)
    assert np.allclose(B, K_rows.T)


def test_actuators_must_be_distinct():
    with pytest.raises(InputError):
        ActuatorSet(np.array([0.1, 0.1]))


def test_apply_control_zero_command_is_zero_function():
    rng = np.random.default_rng(3)
    d = gaussian_dictionary(rng, 4)
    delta = apply_control_field(d, ActuatorSet(np.array([0.2, 0.8])), [0.0, 0.0])
    assert delta(0.37) == 0.0


def test_apply_control_unit_command_at_actuator():
    rng = np.random.default_rng(4)
    d = gaussian_dictionary(rng, 4)
    delta = apply_control_field(d, ActuatorSet(np.array([0.3])), [1.0])
    assert delta(0.3) == pytest.approx(1.0, abs=1e-15)


def test_apply_control_weight_increment_is_Bu():
    # evaluating the control function at the centers reproduces B u
    rng = np.random.default_rng(5)
    d = gaussian_dictionary(rng, 6)
    act = ActuatorSet(random_centers(rng, 3))
    u = rng.standard_normal(3)
    B = control_operator(d, act)
    delta = apply_control_field(d, act, u)
    at_centers = delta(d.centers)
    assert np.allclose(at_centers, B @ u, rtol=1e-12)


def test_apply_control_length_mismatch():
    rng = np.random.default_rng(6)
    d = gaussian_dictionary(rng, 4)
    with pytest.raises(InputError):
        apply_control_field(d, ActuatorSet(np.array([0.3, 0.6])), [1.0])


# ---------------------------------------------------------------------------
# solve_lqr
# ---------------------------------------------------------------------------

def test_lqr_scalar_matches_fixed_point_oracle():
    p_star = scalar_dare_oracle(0.5, 1.0, 1.0, 1.0)
    g_star = 0.5 * p_star / (1.0 + p_star)
    gains = solve_lqr(np.array([[0.5]]), np.array([[1.0]]),
                      np.array([[1.0]]), np.array([[1.0]]), tol=1e-14)
    assert gains.riccati_solution[0, 0] == pytest.approx(p_star, abs=1e-10)
    assert gains.gain[0, 0] == pytest.approx(g_star, abs=1e-10)


def test_lqr_dead_beat_plant():
    Q = np.diag([1.0, 2.0])
    gains = solve_lqr(np.zeros((2, 2)), np.eye(2), Q, 0.5 * np.eye(2))
    assert np.allclose(gains.gain, 0.0)
    assert np.allclose(gains.riccati_solution, Q)


def test_lqr_random_instances_contract_and_match_dare():
    rng = np.random.default_rng(7)
    for _ in range(30):
        m = int(rng.integers(2, 11))
        n_u = int(rng.integers(1, m + 1))
        A, B = random_controllable(rng, m, n_u)
        Q = np.eye(m)
        R = 0.1 * np.eye(n_u)
        gains = solve_lqr(A, B, Q, R, tol=1e-13)
        assert gains.closed_loop_radius < 1.0
        assert np.max(np.abs(np.linalg.eigvals(A - B @ gains.gain))) < 1.0
        P_ref = solve_discrete_are(A, B, Q, R)
        assert np.allclose(gains.riccati_solution, P_ref, rtol=1e-6, atol=1e-8)


def test_lqr_riccati_fixed_point_residual():
    rng = np.random.default_rng(8)
    A, B = random_controllable(rng, 5, 2)
    Q, R = np.eye(5), np.eye(2)
    tol = 1e-12
    gains = solve_lqr(A, B, Q, R, tol=tol)
    P = gains.riccati_solution
    BtP = B.T @ P
    P_next = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BtP @ B, BtP @ A)
    assert np.linalg.norm(P_next - P, "fro") <= 10 * tol * np.linalg.norm(P, "fro")


def test_lqr_uncontrollable_pair_names_rank():
    A = np.diag([0.5, 0.5])
    B = np.array([[1.0], [1.0]])
    with pytest.raises(UncontrollableError) as err:
        solve_lqr(A, B, np.eye(2), np.eye(1))
    assert err.value.rank == 1
    assert err.value.required == 2


def test_lqr_non_convergence_raises():
    rng = np.random.default_rng(9)
    A, B = random_controllable(rng, 4, 2)
    with pytest.raises(SynthesisError):
        solve_lqr(A, B, np.eye(4), np.eye(2), max_iter=1, tol=1e-16)


def test_lqr_validates_costs():
    rng = np.random.default_rng(10)
    A, B = random_controllable(rng, 3, 1)
    with pytest.raises(InputError):
        solve_lqr(A, B, -np.eye(3), np.eye(1))
    with pytest.raises(InputError):
        solve_lqr(A, B, np.eye(3), np.zeros((1, 1)))


# ---------------------------------------------------------------------------
# tracking_command / with_reference
# ---------------------------------------------------------------------------

def test_tracking_fixed_point_at_reference():
    rng = np.random.default_rng(11)
    A, B = random_controllable(rng, 4, 4)
    gains = solve_lqr(A, B, np.eye(4), 0.1 * np.eye(4))
    # square B: any reference is exactly holdable
    w_ref = rng.standard_normal(4)
    gains = with_reference(gains, A, B, w_ref)
    assert gains.feedforward_residual < 1e-10
    u = tracking_command(gains, w_ref)
    assert np.allclose(u, gains.feedforward)
    w_next = A @ w_ref + B @ u
    assert np.linalg.norm(w_next - w_ref) < 1e-8


def test_tracking_regulator_mode():
    rng = np.random.default_rng(12)
    A, B = random_controllable(rng, 3, 2)
    gains = solve_lqr(A, B, np.eye(3), np.eye(2))
    w = rng.standard_normal(3)
    assert np.allclose(tracking_command(gains, w), -gains.gain @ w)


def test_tracking_closed_loop_decay():
    # forward closed-loop simulation oracle with exact state feedback
    rng = np.random.default_rng(13)
    A, B = random_controllable(rng, 5, 2)
    gains = solve_lqr(A, B, np.eye(5), 0.1 * np.eye(2))
    w_ref = np.zeros(5)
    gains = with_reference(gains, A, B, w_ref)
    w = rng.standard_normal(5)
    err0 = np.linalg.norm(w - w_ref)
    for _ in range(50):
        w = A @ w + B @ tracking_command(gains, w)
    assert np.linalg.norm(w - w_ref) < 0.05 * err0


def test_with_reference_no_feedforward():
    rng = np.random.default_rng(14)
    A, B = random_controllable(rng, 3, 1)
    gains = solve_lqr(A, B, np.eye(3), np.eye(1))
    w_ref = rng.standard_normal(3)
    gains = with_reference(gains, A, B, w_ref, use_feedforward=False)
    assert np.allclose(gains.feedforward, 0.0)
    assert gains.feedforward_residual == pytest.approx(
        np.linalg.norm((np.eye(3) - A) @ w_ref)
    )


def test_proposed_actuation_always_synthesizable():
    # any actuator set the placement search accepts admits LQR synthesis
    from kernelfield import propose_placement

    rng = np.random.default_rng(16)
    for seed in range(5):
        M = 5
        lam = np.linspace(0.2, 0.9, M) * rng.choice([-1.0, 1.0], size=M)
        A = np.diag(lam)
        d = gaussian_dictionary(rng, M)
        cands = np.linspace(0.0, 1.0, 15)
        res = propose_placement(d, A, cands, "actuation", max_tries=60, seed=seed)
        B = control_operator(d, ActuatorSet(res.locations))
        gains = solve_lqr(A, B, np.eye(M), 0.1 * np.eye(res.count))
        assert gains.closed_loop_radius < 1.0


def test_reference_fixed_point_with_small_residual():
    # when the feedforward residual vanishes the reference is a closed-loop
    # fixed point
    rng = np.random.default_rng(15)
    for _ in range(10):
        A, B = random_controllable(rng, 4, 2)
        gains = solve_lqr(A, B, np.eye(4), 0.1 * np.eye(2))
        u_hold = rng.standard_normal(2)
        w_ref = np.linalg.solve(np.eye(4) - A, B @ u_hold)  # reachable by design
        gains = with_reference(gains, A, B, w_ref)
        assert gains.feedforward_residual < 1e-10
        w = A @ w_ref + B @ tracking_command(gains, w_ref)
        assert np.linalg.norm(w - w_ref) < 1e-8
