"""Finite MDPs, tabular policies and the Markov chains they induce on S x A.

State-action pairs are enumerated state-major: (s_1, a_1), (s_1, a_2), ...,
(s_n, a_m), i.e. pair index ``s * n_actions + a``. Feature matrices, chain
matrices and pair distributions all use this ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import DimensionError, DistributionError, ErgodicityError, NumericError

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10


def _check_distribution(x, name, tol=ROW_SUM_TOL):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DistributionError(f"{name} has non-finite entries")
    if np.any(x < 0):
        raise DistributionError(f"{name} has negative entries")
    sums = x.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise DistributionError(f"{name} does not sum to one (max deviation {worst:.3g})")
    return x


@dataclass(frozen=True)
class FiniteMdp:
    """Tabular discounted MDP.

    ``transition[s, a, s']`` is p(s'|s, a), ``reward[s, a]`` is r(s, a).
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: float

    def __post_init__(self):
        p = np.array(self.transition, dtype=float)
        r = np.array(self.reward, dtype=float)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise DimensionError(f"transition must have shape (S, A, S), got {p.shape}")
        if r.shape != p.shape[:2]:
            raise DimensionError(f"reward shape {r.shape} does not match transition {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError("need at least one state and one action")
        _check_distribution(p, "transition")
        if not np.all(np.isfinite(r)):
            raise NumericError("rewards must be finite")
        gamma = float(self.discount)
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {gamma}")
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "discount", gamma)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.n_states * self.n_actions

    @property
    def reward_vector(self) -> np.ndarray:
        """Rewards flattened in pair order."""
        return self.reward.reshape(-1)

    def with_discount(self, gamma: float) -> "FiniteMdp":
        return FiniteMdp(self.transition, self.reward, gamma)


@dataclass(frozen=True)
class TabularPolicy:
    """Row-stochastic ``probs[s, a] = pi(a|s)``.

    ``floor`` is the exploration floor the policy promises; a positive floor
    is enforced at construction.
    """

    probs: np.ndarray
    floor: float = 0.0

    def __post_init__(self):
        pi = _check_distribution(np.array(self.probs, dtype=float), "policy")
        if pi.ndim != 2:
            raise DimensionError(f"policy must be a matrix, got shape {pi.shape}")
        if self.floor < 0:
            raise ValueError("floor must be non-negative")
        if self.floor > 0 and pi.min() < self.floor * (1 - 1e-12):
            raise DistributionError(
                f"policy entry {pi.min():.3g} below the floor {self.floor:.3g}"
            )
        pi.setflags(write=False)
        object.__setattr__(self, "probs", pi)

    @classmethod
    def uniform(cls, n_states, n_actions):
        return cls(np.full((n_states, n_actions), 1.0 / n_actions), floor=1.0 / n_actions)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class StateActionChain:
    """Transition matrix on pairs. ``restart_dist`` is None for the raw chain."""

    p_pi: np.ndarray
    restart_dist: np.ndarray | None = None
    effective_discount: float | None = None

    @property
    def size(self) -> int:
        return self.p_pi.shape[0]


@dataclass(frozen=True)
class AssumptionReport:
    floor_ok: bool
    min_prob: float
    epsilon: float
    irreducible: bool
    n_components: int
    aperiodic: bool
    period: int
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.floor_ok and self.irreducible and self.aperiodic

    def to_dict(self):
        return {
            "ok": self.ok,
            "floor_ok": self.floor_ok,
            "min_prob": self.min_prob,
            "epsilon": self.epsilon,
            "irreducible": self.irreducible,
            "n_components": self.n_components,
            "aperiodic": self.aperiodic,
            "period": self.period,
            "messages": list(self.messages),
        }


def _check_shapes(mdp: FiniteMdp, policy: TabularPolicy):
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise DimensionError(
            f"policy shape {policy.probs.shape} does not match MDP "
            f"({mdp.n_states}, {mdp.n_actions})"
        )


def _compose(next_state: np.ndarray, pi: np.ndarray) -> np.ndarray:
    # next_state[s, a, s'] * pi[s', a'] -> matrix on pairs
    n_s, n_a = pi.shape
    return np.einsum("ijk,kl->ijkl", next_state, pi).reshape(n_s * n_a, n_s * n_a)


def induced_chain(mdp: FiniteMdp, policy: TabularPolicy) -> StateActionChain:
    """P_pi[(s,a), (s',a')] = p(s'|s,a) * pi(a'|s').

    The policy is conditioned on the landing state s' so that rows sum to one.
    """
    _check_shapes(mdp, policy)
    return StateActionChain(_compose(mdp.transition, policy.probs))


def restart_chain(mdp: FiniteMdp, policy: TabularPolicy, xi, gamma=None) -> StateActionChain:
    """Chain whose next state is drawn from ``gamma * p(.|s,a) + (1 - gamma) * xi``.

    ``gamma`` defaults to the MDP discount.
    """
    _check_shapes(mdp, policy)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (mdp.n_states,):
        raise DimensionError(f"restart distribution must have length {mdp.n_states}")
    _check_distribution(xi, "restart distribution")
    g = mdp.discount if gamma is None else float(gamma)
    mixed = g * mdp.transition + (1.0 - g) * xi[None, None, :]
    return StateActionChain(_compose(mixed, policy.probs), restart_dist=xi, effective_discount=g)


def state_kernel(mdp: FiniteMdp, policy: TabularPolicy) -> np.ndarray:
    """State-to-state kernel sum_a pi(a|s) p(s'|s,a)."""
    _check_shapes(mdp, policy)
    return np.einsum("sa,sat->st", policy.probs, mdp.transition)


def _support_graph(matrix, tol=0.0):
    return csr_matrix(np.asarray(matrix) > tol)


def chain_period(matrix) -> int:
    """Period of an irreducible chain from BFS levels: gcd of level[u] + 1 - level[v]."""
    graph = _support_graph(matrix)
    order, _ = breadth_first_order(graph, 0, directed=True, return_predecessors=True)
    level = np.full(graph.shape[0], -1)
    level[0] = 0
    for u in order:
        for v in graph.indices[graph.indptr[u]:graph.indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
    rows, cols = graph.nonzero()
    reached = (level[rows] >= 0) & (level[cols] >= 0)
    diffs = np.abs(level[rows[reached]] + 1 - level[cols[reached]])
    return int(reduce(math.gcd, diffs.tolist(), 0)) or 0


def chain_structure(matrix):
    """Return (n_strong_components, period) of the support graph."""
    n_comp, _ = connected_components(_support_graph(matrix), directed=True, connection="strong")
    period = chain_period(matrix) if n_comp == 1 else 0
    return int(n_comp), period


def stationary_distribution(
    chain: StateActionChain | np.ndarray,
    max_iter: int = 1_000_000,
    tol: float = 1e-12,
) -> np.ndarray:
    """Stationary law nu with nu^T P = nu^T.

    Power iteration from the uniform vector, falling back to a dense solve of
    (P^T - I) nu = 0, sum(nu) = 1 when the cap is hit. Reducible or periodic
    chains raise :class:`ErgodicityError`.
    """
    p = chain.p_pi if isinstance(chain, StateActionChain) else np.asarray(chain, dtype=float)
    n = p.shape[0]
    n_comp, period = chain_structure(p)
    if n_comp != 1:
        raise ErgodicityError(f"chain is reducible ({n_comp} strongly connected components)")
    if period != 1:
        raise ErgodicityError(f"chain is periodic with period {period}")

    nu = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        nxt = nu @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - nu)) <= tol:
            nu = nxt
            converged = True
            break
        nu = nxt
    if not converged:
        system = p.T - np.eye(n)
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        nu = np.linalg.solve(system, rhs)
    residual = np.max(np.abs(nu @ p - nu))
    if residual > STATIONARY_TOL or np.any(nu < -STATIONARY_TOL):
        raise ErgodicityError(f"stationary solve failed (residual {residual:.3g})")
    nu = np.clip(nu, 0.0, None)
    return nu / nu.sum()


def discounted_occupancy(mdp: FiniteMdp, policy: TabularPolicy, start) -> np.ndarray:
    """d(s) = sum_t gamma^t P(s_t = s | s_0 ~ start); sums to 1 / (1 - gamma)."""
    start = _check_distribution(np.asarray(start, dtype=float), "start distribution")
    if start.shape != (mdp.n_states,):
        raise DimensionError(f"start distribution must have length {mdp.n_states}")
    kernel = state_kernel(mdp, policy)
    system = np.eye(mdp.n_states) - mdp.discount * kernel.T
    try:
        return np.linalg.solve(system, start)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"occupancy solve failed: {exc}") from exc


def validate_assumptions(mdp: FiniteMdp, policy: TabularPolicy, epsilon: float | None = None):
    """Check the exploration floor and ergodicity of the induced pair chain."""
    _check_shapes(mdp, policy)
    eps = policy.floor if epsilon is None else float(epsilon)
    min_prob = float(policy.probs.min())
    messages = []
    floor_ok = min_prob > 0 and min_prob >= eps * (1 - 1e-12)
    if not floor_ok:
        messages.append(f"exploration floor violated: min pi = {min_prob:.3g} < eps = {eps:.3g}")
    p = induced_chain(mdp, policy).p_pi
    n_comp, period = chain_structure(p)
    irreducible = n_comp == 1
    if not irreducible:
        messages.append(f"induced chain is reducible ({n_comp} strongly connected components)")
    aperiodic = period == 1
    if irreducible and not aperiodic:
        messages.append(f"induced chain is periodic (period {period})")
    return AssumptionReport(
        floor_ok=floor_ok,
        min_prob=min_prob,
        epsilon=eps,
        irreducible=irreducible,
        n_components=n_comp,
        aperiodic=aperiodic,
        period=period,
        messages=messages,
    )
