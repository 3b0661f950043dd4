import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regmdp import (
    ProjectionBox,
    Regularizer,
    SoftmaxPolicy,
    actor_step,
    discounted_occupancy,
    exact_actor_field,
    gamma_hat,
    generate_random_instance,
    projected_field_residual,
    psi_literal,
    psi_sample,
    solve_q_pi,
)

ENT = Regularizer.entropy()


@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.1))
def test_policy_floor_and_rows(seed, eps):
    rng = np.random.default_rng(seed)
    pol = SoftmaxPolicy(rng.normal(size=12) * 20, 4, 3, epsilon=eps)
    assert pol.probs.min() >= eps * (1 - 1e-12)
    np.testing.assert_allclose(pol.probs.sum(axis=1), 1.0, atol=1e-12)


def test_policy_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        SoftmaxPolicy(np.zeros(4), 2, 2, epsilon=0.5)


def test_jacobian_finite_differences():
    rng = np.random.default_rng(0)
    feats = rng.normal(size=(6, 4))
    pol = SoftmaxPolicy(rng.normal(size=4), 3, 2, epsilon=0.01, policy_features=feats)
    h = 1e-6
    fd = np.stack([(pol.with_theta(pol.theta + h * e).probs - pol.with_theta(pol.theta - h * e).probs).reshape(-1)
                   / (2 * h) for e in np.eye(4)], axis=1)
    np.testing.assert_allclose(pol.jacobian(), fd, atol=1e-8)
    for s in range(3):
        for a in range(2):
            np.testing.assert_allclose(pol.grad_prob(s, a), pol.jacobian()[s * 2 + a], atol=1e-15)


def _policy_with_prob(target, eps=1e-3):
    mix = 1 - 2 * eps
    sigma = (target - eps) / mix
    return SoftmaxPolicy(np.array([np.log(sigma) - np.log1p(-sigma), 0.0]), 1, 2, epsilon=eps)


def test_psi_vanishes_at_inverse_e():
    pol = _policy_with_prob(np.exp(-1.0))
    assert pol.probs[0, 0] == pytest.approx(np.exp(-1.0), abs=1e-15)
    psi = psi_sample(pol, np.zeros(2), np.eye(2), 0, 0, ENT)
    assert np.max(np.abs(psi)) <= 1e-12


def test_psi_hand_expanded_bandit():
    eps = 1e-3
    pol = SoftmaxPolicy(np.zeros(2), 1, 2, epsilon=eps)
    psi = psi_sample(pol, np.array([1.0, 0.0]), np.eye(2), 0, 1, ENT)
    mix = 1 - 2 * eps
    grad_log = mix * 0.5 * (np.array([0.0, 1.0]) - 0.5) / 0.5
    expected = (0.0 - (1.0 + np.log(0.5))) * grad_log
    np.testing.assert_allclose(psi, expected, atol=1e-15)


def test_psi_expectation_matches_field():
    mdp, _ = generate_random_instance(3, 3, 2, gamma=0.8)
    rng = np.random.default_rng(1)
    pol = SoftmaxPolicy(rng.normal(size=6), 3, 2)
    table = pol.tabular()
    start = np.full(3, 1 / 3)
    q = solve_q_pi(mdp, table, ENT).q_pi
    d = discounted_occupancy(mdp, table, start)
    w = (d[:, None] * table.probs).reshape(-1)
    psis = np.array([psi_sample(pol, q, np.eye(6), i // 2, i % 2, ENT) for i in range(6)])
    draws = rng.choice(6, size=200_000, p=w / w.sum())
    samples = psis[draws] / (1 - 0.8)
    field = exact_actor_field(mdp, pol, ENT, start=start)
    se = samples.std(axis=0) / np.sqrt(draws.size)
    assert np.all(np.abs(samples.mean(axis=0) - field) <= 4 * se + 1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_literal_and_simplified_agree(seed, strength):
    rng = np.random.default_rng(seed)
    pol = SoftmaxPolicy(rng.normal(size=6) * 3, 2, 3, epsilon=1e-3)
    omega = rng.normal(size=6) * 5
    s, a = rng.integers(2), rng.integers(3)
    lit = psi_literal(pol, omega, np.eye(6), s, a, strength)
    simp = psi_sample(pol, omega, np.eye(6), s, a, Regularizer.entropy(strength))
    np.testing.assert_allclose(lit, simp, atol=1e-12, rtol=0)


def test_actor_step_cases():
    box = ProjectionBox(10.0)
    theta, psi = np.array([0.5, -1.0]), np.array([2.0, 3.0])
    np.testing.assert_array_equal(actor_step(theta, psi, 0.1, box), theta + 0.1 * psi)
    pinned = actor_step(np.array([10.0, 0.0]), np.array([1.0, 0.0]), 0.5, box)
    assert pinned[0] == 10.0
    np.testing.assert_array_equal(ProjectionBox(1.0).project(np.array([2.0, -3.0])), [1.0, -1.0])


def test_gamma_hat_cases():
    box = ProjectionBox(2.0)
    field = np.array([1.0, -1.0, 0.5])
    np.testing.assert_array_equal(gamma_hat(np.zeros(3), field, box), field)
    np.testing.assert_array_equal(gamma_hat(np.array([2.0, -2.0, 2.0]), field, box), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(gamma_hat(np.array([-2.0, 2.0, 0.0]), field, box), field)
    assert projected_field_residual(np.array([2.0, 0.0, 0.0]), field, box) == 1.0
    assert ProjectionBox(1.0).contains(np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        ProjectionBox(0.0)
