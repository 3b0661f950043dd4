"""Trajectory sampling on S x A with optional gamma-restarts."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionError
from .mdp import FiniteMdp, _check_distribution

RESTART = "restart"
RAW = "raw"
MODES = (RESTART, RAW)


class Transition(NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    a_next: int
    restarted: bool = False


class UniformStream:
    """Counter-based (Philox) stream of uniform triples.

    Draws are chunk-invariant: ``take(2)`` followed by ``take(3)`` yields the
    same rows as ``take(5)``.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(self.seed))

    def take(self, n: int) -> np.ndarray:
        return self._rng.random((n, 3))


def cdf_tables(mdp: FiniteMdp, xi):
    trans_cdf = np.cumsum(mdp.transition, axis=2)
    xi_cdf = np.cumsum(xi)
    return np.ascontiguousarray(trans_cdf), np.ascontiguousarray(xi_cdf)


def resolve_restart(xi, n_states):
    if xi is None or (isinstance(xi, str) and xi == "uniform"):
        return np.full(n_states, 1.0 / n_states)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (n_states,):
        raise DimensionError(f"restart distribution must have length {n_states}")
    return _check_distribution(xi, "restart distribution")


class Sampler:
    """Single trajectory over state-action pairs.

    In ``restart`` mode the next state follows p(.|s,a) with probability gamma
    and is redrawn from ``xi`` otherwise; ``raw`` mode always follows p. The
    next action is always drawn fresh from the current policy. The first
    uniform triple places the chain: s_0 ~ xi, a_0 ~ pi(.|s_0).
    """

    def __init__(self, mdp: FiniteMdp, seed: int, xi=None, mode: str = RAW, gamma=None):
        if mode not in MODES:
            raise ValueError(f"sampler mode must be one of {MODES}")
        self.mdp = mdp
        self.xi = resolve_restart(xi, mdp.n_states)
        self.mode = mode
        self.gamma = mdp.discount if gamma is None else float(gamma)
        self.stream = UniformStream(seed)
        self.trans_cdf, self.xi_cdf = cdf_tables(mdp, self.xi)
        self.state = None

    @property
    def restart(self) -> bool:
        return self.mode == RESTART

    def reset(self, probs):
        u = self.stream.take(1)[0]
        s = _kernels.draw(self.xi_cdf, u[1])
        a = _kernels.draw_from_probs(np.ascontiguousarray(probs[s]), u[2])
        self.state = (int(s), int(a))
        return self.state

    def sample_step(self, policy) -> Transition:
        probs = np.ascontiguousarray(getattr(policy, "probs", policy), dtype=float)
        if self.state is None:
            self.reset(probs)
        s, a = self.state
        u = self.stream.take(1)[0]
        s2, a2, restarted = _kernels.next_pair(
            s, a, u[0], u[1], u[2], self.trans_cdf, self.xi_cdf, self.gamma, self.restart, probs
        )
        self.state = (int(s2), int(a2))
        return Transition(s, a, float(self.mdp.reward[s, a]), int(s2), int(a2), bool(restarted))

    def sample_path(self, policy, n_steps: int):
        """``n_steps`` transitions under a fixed policy, drawn in one pass.

        Returns ``(pairs, restarted)`` where ``pairs`` has ``n_steps + 1`` rows
        of (state, action); consumes the stream exactly like repeated
        :meth:`sample_step` calls.
        """
        probs = np.ascontiguousarray(getattr(policy, "probs", policy), dtype=float)
        if self.state is None:
            self.reset(probs)
        pairs = np.empty((n_steps + 1, 2), dtype=np.int64)
        restarted = np.empty(n_steps, dtype=np.bool_)
        _kernels.sample_path(self.state[0], self.state[1], self.stream.take(n_steps), self.trans_cdf,
                             self.xi_cdf, self.gamma, self.restart, probs, pairs, restarted)
        self.state = (int(pairs[-1, 0]), int(pairs[-1, 1]))
        return pairs, restarted
