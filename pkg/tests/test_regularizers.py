from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regmdp import Regularizer, TabularPolicy, omega_grad, omega_sample_estimate, omega_value, omega_vectors
from regmdp.errors import DomainError

from conftest import random_policy

ENT = Regularizer.entropy()


def test_aliases_and_codes():
    assert Regularizer("negative_entropy").kind == "entropy"
    assert Regularizer("half_squared_l2", 2.0).convexity_modulus == 2.0
    with pytest.raises(ValueError):
        Regularizer("tsallis")
    with pytest.raises(ValueError):
        Regularizer("entropy", -1.0)


def test_uniform_entropy_value():
    assert omega_value(ENT, [0.5, 0.5]) == pytest.approx(-np.log(2), abs=1e-15)


def test_near_deterministic_approaches_zero_from_below():
    values = [omega_value(ENT, [1 - e, e]) for e in (1e-2, 1e-4, 1e-8)]
    assert all(v < 0 for v in values)
    assert values[0] < values[1] < values[2]
    assert abs(values[-1]) < 1e-6


def test_entropy_high_precision():
    getcontext().prec = 50
    exact = sum(Decimal(x) * Decimal(x).ln() for x in ("0.2", "0.3", "0.5"))
    assert omega_value(ENT, [0.2, 0.3, 0.5]) == pytest.approx(float(exact), abs=1e-12)


def test_domain_error():
    with pytest.raises(DomainError):
        omega_value(ENT, [1.0, 0.0])
    assert omega_value(Regularizer.l2(), [1.0, 0.0]) == 0.5


def test_gradients():
    np.testing.assert_allclose(omega_grad(ENT, [0.5, 0.5]), [1 - np.log(2)] * 2)
    np.testing.assert_allclose(omega_grad(Regularizer.l2(), [0.25, 0.75]), [0.25, 0.75])


@pytest.mark.parametrize("reg", [Regularizer.entropy(), Regularizer.l2(), Regularizer.entropy(0.3)])
def test_gradient_finite_differences(reg):
    p = np.array([0.2, 0.8])
    h = 1e-6
    fd = [(omega_value(reg, p + h * e) - omega_value(reg, p - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(omega_grad(reg, p), fd, atol=1e-6)


def test_omega_vectors_kron(rng):
    per_state, pairs = omega_vectors(ENT, TabularPolicy.uniform(2, 2))
    np.testing.assert_allclose(pairs, [-np.log(2)] * 4, atol=1e-15)
    pol = random_policy(rng, 4, 3)
    per_state, pairs = omega_vectors(ENT, pol)
    for s in range(4):
        for a in range(3):
            assert pairs[s * 3 + a] == per_state[s]


def test_omega_vectors_deterministic_rows():
    pol = TabularPolicy(np.array([[1 - 1e-9, 1e-9], [1e-9, 1 - 1e-9]]))
    per_state, _ = omega_vectors(ENT, pol)
    assert np.all(np.abs(per_state) < 1e-7)


def test_sample_estimate_special_cases():
    pol = TabularPolicy(np.array([[1 - 1e-9, 1e-9]]))
    assert abs(omega_sample_estimate(ENT, pol, 0, 0)) < 1e-8
    uni = TabularPolicy.uniform(1, 2)
    for a in range(2):
        assert omega_sample_estimate(ENT, uni, 0, a) == -np.log(2)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5), st.floats(0.0, 3.0),
       st.sampled_from(["entropy", "l2"]))
def test_sample_estimate_is_unbiased_in_expectation(weights, strength, kind):
    p = np.asarray(weights) / np.sum(weights)
    reg = Regularizer(kind, strength)
    pol = TabularPolicy(p[None, :])
    expected = sum(p[a] * omega_sample_estimate(reg, pol, 0, a) for a in range(p.size))
    assert expected == pytest.approx(omega_value(reg, p), abs=1e-12)


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5), st.floats(0.0, 3.0))
def test_literal_estimate_sums_to_value(weights, strength):
    p = np.asarray(weights) / np.sum(weights)
    pol = TabularPolicy(p[None, :])
    total = sum(omega_sample_estimate(Regularizer.entropy(strength), pol, 0, a, literal=True) for a in range(p.size))
    assert total == pytest.approx(omega_value(Regularizer.entropy(strength), p), abs=1e-12)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6), st.floats(0.1, 5.0))
def test_entropy_strongly_convex_on_simplex(weights, strength):
    p = np.asarray(weights) / np.sum(weights)
    q = np.roll(p, 1)
    reg = Regularizer.entropy(strength)
    gap = omega_value(reg, q) - omega_value(reg, p) - omega_grad(reg, p) @ (q - p)
    # strength-strongly convex in the l1 norm
    assert gap >= 0.5 * strength * np.abs(q - p).sum() ** 2 - 1e-12
