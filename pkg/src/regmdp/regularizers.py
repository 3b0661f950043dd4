"""Strongly convex regularizers on the action simplex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ENTROPY = "entropy"
L2 = "l2"
KINDS = (ENTROPY, L2)

_ALIASES = {
    "entropy": ENTROPY,
    "negative_entropy": ENTROPY,
    "negentropy": ENTROPY,
    "l2": L2,
    "half_squared_l2": L2,
}


@dataclass(frozen=True)
class Regularizer:
    """Omega(p) = strength * sum p log p  (entropy)  or  strength/2 * ||p||^2  (l2).

    Both are ``strength``-strongly convex in the Euclidean norm on the simplex.
    """

    kind: str = ENTROPY
    strength: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown regularizer {self.kind!r}; expected one of {KINDS}")
        if not np.isfinite(self.strength) or self.strength < 0:
            raise ValueError("regularizer strength must be finite and non-negative")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "strength", float(self.strength))

    @property
    def convexity_modulus(self) -> float:
        return self.strength

    @property
    def code(self) -> int:
        return KINDS.index(self.kind)

    @classmethod
    def entropy(cls, strength=1.0):
        return cls(ENTROPY, strength)

    @classmethod
    def l2(cls, strength=1.0):
        return cls(L2, strength)


def _as_probs(reg, p):
    p = np.asarray(p, dtype=float)
    if reg.kind == ENTROPY and np.any(p <= 0):
        raise DomainError("negative entropy requires strictly positive probabilities")
    return p


def omega_value(reg: Regularizer, p) -> np.ndarray | float:
    """Regularizer value; ``p`` may be a single distribution or a stack of rows."""
    p = _as_probs(reg, p)
    if reg.kind == ENTROPY:
        out = reg.strength * np.sum(p * np.log(p), axis=-1)
    else:
        out = 0.5 * reg.strength * np.sum(p * p, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def omega_grad(reg: Regularizer, p) -> np.ndarray:
    p = _as_probs(reg, p)
    if reg.kind == ENTROPY:
        return reg.strength * (1.0 + np.log(p))
    return reg.strength * p


def omega_vectors(reg: Regularizer, policy):
    """Per-state values Omega(pi(.|s)) and their Kronecker lift to pairs."""
    per_state = np.atleast_1d(omega_value(reg, policy.probs))
    pairs = np.kron(per_state, np.ones(policy.n_actions))
    return per_state, pairs


def omega_sample_estimate(reg: Regularizer, policy, s: int, a: int, literal: bool = False) -> float:
    """Single-sample estimate of Omega(pi(.|s)) from an action a ~ pi(.|s).

    Unbiased: strength * log pi(a|s) for entropy, strength/2 * pi(a|s) for l2.
    With ``literal=True`` returns strength * pi(a|s) log pi(a|s), which is the
    summand rather than an unbiased estimate (kept for reproduction runs).
    """
    prob = float(policy.probs[s, a])
    if reg.kind == ENTROPY:
        if prob <= 0:
            raise DomainError("negative entropy requires strictly positive probabilities")
        log_p = np.log(prob)
        return reg.strength * (prob * log_p if literal else log_p)
    return 0.5 * reg.strength * (prob * prob if literal else prob)
