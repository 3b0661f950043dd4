import numpy as np
import pytest

from regmdp import (
    FiniteMdp,
    TabularPolicy,
    discounted_occupancy,
    induced_chain,
    restart_chain,
    stationary_distribution,
    validate_assumptions,
)
from regmdp.errors import DimensionError, DistributionError, ErgodicityError
from regmdp.mdp import StateActionChain

from conftest import random_mdp, random_policy


def test_mdp_rejects_bad_rows():
    p = np.array([[[0.5, 0.6]], [[1.0, 0.0]]])
    with pytest.raises(DistributionError):
        FiniteMdp(p, np.zeros((2, 1)), 0.9)


def test_mdp_rejects_discount_and_shape():
    p = np.ones((1, 1, 1))
    with pytest.raises(ValueError):
        FiniteMdp(p, np.zeros((1, 1)), 1.0)
    with pytest.raises(DimensionError):
        FiniteMdp(p, np.zeros((2, 1)), 0.5)


def test_single_pair_chain():
    mdp = FiniteMdp(np.ones((1, 1, 1)), np.ones((1, 1)), 0.9)
    np.testing.assert_array_equal(induced_chain(mdp, TabularPolicy(np.ones((1, 1)))).p_pi, [[1.0]])


def test_deterministic_cycle_is_permutation():
    p = np.zeros((2, 1, 2))
    p[0, 0, 1] = p[1, 0, 0] = 1.0
    mdp = FiniteMdp(p, np.zeros((2, 1)), 0.9)
    np.testing.assert_array_equal(induced_chain(mdp, TabularPolicy(np.ones((2, 1)))).p_pi, [[0, 1], [1, 0]])


def test_induced_chain_entries_brute_force(rng):
    mdp = random_mdp(rng, 3, 2)
    pol = TabularPolicy.uniform(3, 2)
    p = induced_chain(mdp, pol).p_pi
    for s in range(3):
        for a in range(2):
            for s2 in range(3):
                for a2 in range(2):
                    assert p[s * 2 + a, s2 * 2 + a2] == pytest.approx(mdp.transition[s, a, s2] / 2, abs=1e-15)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_restart_chain_limits(rng):
    mdp = random_mdp(rng, 3, 2)
    pol = random_policy(rng, 3, 2)
    xi = np.array([0.2, 0.3, 0.5])
    p0 = restart_chain(mdp, pol, xi, gamma=0.0).p_pi
    for row in p0:
        np.testing.assert_allclose(row, np.kron(xi, np.ones(2)) * pol.probs.reshape(-1), atol=1e-15)
    near = restart_chain(mdp, pol, xi, gamma=1 - 1e-15).p_pi
    np.testing.assert_allclose(near, induced_chain(mdp, pol).p_pi, atol=1e-12, rtol=0)


def test_restart_chain_mixture_entries(rng):
    mdp = random_mdp(rng, 2, 2, gamma=0.5)
    pol = random_policy(rng, 2, 2)
    xi = np.array([0.5, 0.5])
    p = restart_chain(mdp, pol, xi).p_pi
    for s in range(2):
        for a in range(2):
            for s2 in range(2):
                for a2 in range(2):
                    model = mdp.transition[s, a, s2] * pol.probs[s2, a2]
                    reset = xi[s2] * pol.probs[s2, a2]
                    assert p[s * 2 + a, s2 * 2 + a2] == pytest.approx(0.5 * model + 0.5 * reset, abs=1e-15)


def test_restart_chain_rejects_bad_xi(rng):
    mdp = random_mdp(rng, 2, 2)
    with pytest.raises(DistributionError):
        restart_chain(mdp, TabularPolicy.uniform(2, 2), np.array([0.7, 0.7]))


def test_stationary_symmetric():
    np.testing.assert_allclose(stationary_distribution(np.full((2, 2), 0.5)), [0.5, 0.5])


def test_stationary_periodic_raises():
    with pytest.raises(ErgodicityError, match="periodic"):
        stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_stationary_reducible_raises():
    with pytest.raises(ErgodicityError, match="reducible"):
        stationary_distribution(np.eye(2))


def test_stationary_matches_dense_eigensolver(rng):
    p = rng.dirichlet(np.ones(6), size=6)
    nu = stationary_distribution(StateActionChain(p))
    vals, vecs = np.linalg.eig(p.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    np.testing.assert_allclose(nu, v / v.sum(), atol=1e-8)


def test_occupancy_closed_forms(rng):
    one = FiniteMdp(np.ones((1, 1, 1)), np.ones((1, 1)), 0.7)
    np.testing.assert_allclose(discounted_occupancy(one, TabularPolicy(np.ones((1, 1))), [1.0]), [1 / 0.3])
    mdp = random_mdp(rng, 4, 2, gamma=0.0)
    start = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(discounted_occupancy(mdp, random_policy(rng, 4, 2), start), start)


def test_occupancy_truncated_series(rng):
    mdp = random_mdp(rng, 4, 2, gamma=0.9)
    pol = random_policy(rng, 4, 2)
    start = np.full(4, 0.25)
    kernel = np.einsum("sa,sat->st", pol.probs, mdp.transition)
    total, law = np.zeros(4), start.copy()
    for t in range(201):
        total += 0.9**t * law
        law = law @ kernel
    np.testing.assert_allclose(discounted_occupancy(mdp, pol, start), total, atol=1e-6 + 0.9**201 * 10)
    assert discounted_occupancy(mdp, pol, start).sum() == pytest.approx(10.0)


def test_validate_assumptions_cases(rng):
    mdp = random_mdp(rng, 3, 2)
    assert validate_assumptions(mdp, TabularPolicy.uniform(3, 2)).ok
    zero = TabularPolicy(np.array([[1.0, 0.0], [0.5, 0.5], [0.5, 0.5]]))
    report = validate_assumptions(mdp, zero, epsilon=1e-3)
    assert not report.floor_ok and not report.ok

    p = np.zeros((4, 1, 4))
    p[0, 0, :2] = p[1, 0, :2] = 0.5
    p[2, 0, 2:] = p[3, 0, 2:] = 0.5
    split = FiniteMdp(p, np.zeros((4, 1)), 0.9)
    report = validate_assumptions(split, TabularPolicy(np.ones((4, 1))))
    assert not report.irreducible and report.n_components == 2


def test_validate_assumptions_reports_period():
    p = np.zeros((2, 1, 2))
    p[0, 0, 1] = p[1, 0, 0] = 1.0
    report = validate_assumptions(FiniteMdp(p, np.zeros((2, 1)), 0.9), TabularPolicy(np.ones((2, 1))))
    assert report.irreducible and report.period == 2 and not report.ok


def test_policy_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        induced_chain(random_mdp(rng, 3, 2), TabularPolicy.uniform(2, 2))
