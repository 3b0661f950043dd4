import numpy as np
from scipy.stats import chisquare

from regmdp import FiniteMdp, Regularizer, SoftmaxPolicy, TabularPolicy, generate_random_instance, restart_chain
from regmdp.critic import DEFAULT_CRITIC_SCHEDULE
from regmdp.engine import Engine
from regmdp.harness import bandit_instance
from regmdp.sampler import RESTART, Sampler, UniformStream

from conftest import random_policy


def test_stream_is_chunk_invariant():
    a = UniformStream(5)
    b = UniformStream(5)
    np.testing.assert_array_equal(np.vstack([a.take(2), a.take(3)]), b.take(5))


def test_zero_discount_restart_draws_from_xi():
    mdp, _ = generate_random_instance(0, 4, 2, gamma=0.0)
    xi = np.array([0.1, 0.2, 0.3, 0.4])
    sampler = Sampler(mdp, 3, xi=xi, mode=RESTART)
    pol = TabularPolicy.uniform(4, 2)
    landed = np.array([sampler.sample_step(pol).s_next for _ in range(50_000)])
    freq = np.bincount(landed, minlength=4) / landed.size
    assert 0.5 * np.abs(freq - xi).sum() <= 0.01


def test_raw_sampler_follows_deterministic_graph():
    p = np.zeros((3, 2, 3))
    p[0, 0, 1] = p[0, 1, 2] = p[1, 0, 2] = p[1, 1, 0] = p[2, 0, 0] = p[2, 1, 1] = 1.0
    mdp = FiniteMdp(p, np.zeros((3, 2)), 0.9)
    sampler = Sampler(mdp, 0)
    pol = TabularPolicy.uniform(3, 2)
    for _ in range(2000):
        tr = sampler.sample_step(pol)
        assert p[tr.s, tr.a, tr.s_next] == 1.0 and not tr.restarted


def _chi_square_rows(mdp, probs, mode, seed, n_steps):
    sampler = Sampler(mdp, seed, mode=mode)
    n = mdp.n_pairs
    counts = np.zeros((n, n))
    for _ in range(n_steps):
        tr = sampler.sample_step(probs)
        counts[tr.s * mdp.n_actions + tr.a, tr.s_next * mdp.n_actions + tr.a_next] += 1
    chain = restart_chain(mdp, TabularPolicy(probs), sampler.xi, gamma=sampler.gamma if mode == RESTART else 1.0)
    pvalues = []
    for i in range(n):
        row = chain.p_pi[i]
        support = row > 0
        total = counts[i].sum()
        if total < 50:
            continue
        pvalues.append(chisquare(counts[i, support], total * row[support]).pvalue)
    return np.array(pvalues)


def test_chi_square_on_bundled_instances():
    standard, _ = generate_random_instance(2, 5, 3, gamma=0.8)
    bandit = bandit_instance((1.0, 0.0), 0.5)
    for mdp in (standard, bandit):
        probs = SoftmaxPolicy.zeros(mdp.n_states, mdp.n_actions).probs
        for mode in ("raw", RESTART):
            pvalues = _chi_square_rows(mdp, probs, mode, 1, 60_000)
            # Bonferroni over rows
            assert pvalues.min() > 1e-3 / pvalues.size


def test_engine_visits_same_pairs_as_sampler():
    mdp, _ = generate_random_instance(4, 4, 3)
    pol = random_policy(np.random.default_rng(0), 4, 3, floor=0.05)
    sampler = Sampler(mdp, 9)
    engine = Engine(mdp, pol, Regularizer.entropy(), np.eye(12), DEFAULT_CRITIC_SCHEDULE, 9)
    first = sampler.sample_step(pol)
    assert (first.s, first.a) == (engine.s, engine.a)
    for _ in range(500):
        tr = sampler.sample_step(pol)
        engine.advance(1)
        assert (tr.s, tr.a) == (engine.s, engine.a)


def test_batch_path_matches_single_steps():
    mdp, _ = generate_random_instance(5, 4, 2, gamma=0.6)
    pol = TabularPolicy.uniform(4, 2)
    for mode in ("raw", RESTART):
        one, batch = Sampler(mdp, 2, mode=mode), Sampler(mdp, 2, mode=mode)
        steps = [one.sample_step(pol) for _ in range(300)]
        pairs, restarted = batch.sample_path(pol, 300)
        assert [(t.s, t.a) for t in steps] == [tuple(p) for p in pairs[:-1].tolist()]
        assert [t.restarted for t in steps] == restarted.tolist()
        assert one.sample_step(pol) == batch.sample_step(pol)
