"""Floored softmax policies, the sampled regularized policy gradient and the
projected actor update on a box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mdp import TabularPolicy
from .regularizers import Regularizer, omega_grad


class SoftmaxPolicy:
    """pi(a|s) = (1 - eps |A|) softmax(logits(s))_a + eps.

    ``logits = policy_features @ theta`` with one logit per pair when
    ``policy_features`` is None (identity). The mixture with the uniform
    distribution makes every probability at least ``eps``.
    """

    def __init__(self, theta, n_states, n_actions, epsilon=1e-3, policy_features=None):
        n_pairs = n_states * n_actions
        if policy_features is None:
            policy_features = np.eye(n_pairs)
        policy_features = np.ascontiguousarray(policy_features, dtype=float)
        if policy_features.shape[0] != n_pairs:
            raise ValueError(f"policy features need {n_pairs} rows, got {policy_features.shape[0]}")
        theta = np.array(theta, dtype=float).reshape(-1)
        if theta.shape[0] != policy_features.shape[1]:
            raise ValueError(f"theta has length {theta.shape[0]}, expected {policy_features.shape[1]}")
        if not 0 < epsilon * n_actions < 1:
            raise ValueError("epsilon must satisfy 0 < epsilon * n_actions < 1")
        self.theta = theta
        self.n_states = n_states
        self.n_actions = n_actions
        self.epsilon = float(epsilon)
        self.policy_features = policy_features
        self._sigma = np.empty((n_states, n_actions))
        self._probs = np.empty((n_states, n_actions))
        _kernels.policy_table(theta, policy_features, self.epsilon, self._sigma, self._probs)

    @classmethod
    def zeros(cls, n_states, n_actions, epsilon=1e-3, policy_features=None):
        dim = n_states * n_actions if policy_features is None else np.shape(policy_features)[1]
        return cls(np.zeros(dim), n_states, n_actions, epsilon, policy_features)

    def with_theta(self, theta) -> "SoftmaxPolicy":
        return SoftmaxPolicy(theta, self.n_states, self.n_actions, self.epsilon, self.policy_features)

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]

    @property
    def mix(self) -> float:
        return 1.0 - self.epsilon * self.n_actions

    @property
    def probs(self) -> np.ndarray:
        return self._probs.copy()

    @property
    def softmax_probs(self) -> np.ndarray:
        return self._sigma.copy()

    def tabular(self) -> TabularPolicy:
        return TabularPolicy(self._probs, floor=self.epsilon)

    def grad_prob(self, s: int, a: int) -> np.ndarray:
        """d pi(a|s) / d theta."""
        rows = self.policy_features[s * self.n_actions:(s + 1) * self.n_actions]
        sigma = self._sigma[s]
        return self.mix * sigma[a] * (rows[a] - sigma @ rows)

    def grad_log_prob(self, s: int, a: int) -> np.ndarray:
        return self.grad_prob(s, a) / self._probs[s, a]

    def jacobian(self) -> np.ndarray:
        """Rows d pi(a|s) / d theta in pair order, shape (S*A, l)."""
        feats = self.policy_features.reshape(self.n_states, self.n_actions, -1)
        mean = np.einsum("sa,sal->sl", self._sigma, feats)
        jac = self.mix * self._sigma[:, :, None] * (feats - mean[:, None, :])
        return jac.reshape(self.n_states * self.n_actions, -1)


@dataclass(frozen=True)
class ProjectionBox:
    """U_theta = [-bound, bound]^l with Euclidean projection (clamp)."""

    bound: float = 10.0

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("box bound must be positive")

    def project(self, theta) -> np.ndarray:
        return np.clip(theta, -self.bound, self.bound)

    def contains(self, theta) -> bool:
        return bool(np.all(np.abs(theta) <= self.bound))

    def active(self, theta) -> np.ndarray:
        return np.abs(np.asarray(theta)) >= self.bound


def _q_value(omega, features, s, a, n_actions):
    phi = features.phi if hasattr(features, "phi") else np.asarray(features)
    return float(phi[s * n_actions + a] @ omega)


def psi_sample(policy: SoftmaxPolicy, omega, features, s: int, a: int, reg: Regularizer | None = None):
    """Sampled gradient (q_omega(s,a) - dOmega/dp_a) * grad log pi(a|s).

    For negative entropy dOmega/dp_a = strength * (1 + log pi(a|s)).
    """
    reg = Regularizer() if reg is None else reg
    q = _q_value(omega, features, s, a, policy.n_actions)
    g = omega_grad(reg, policy._probs[s])[a]
    return (q - g) * policy.grad_log_prob(s, a)


def psi_literal(policy: SoftmaxPolicy, omega, features, s: int, a: int, strength: float = 1.0):
    """Two-term entropy form q grad log pi - (1/pi) grad[pi log pi], evaluated term by term."""
    q = _q_value(omega, features, s, a, policy.n_actions)
    prob = policy._probs[s, a]
    grad_p = policy.grad_prob(s, a)
    grad_plogp = strength * (np.log(prob) + 1.0) * grad_p
    return q * (grad_p / prob) - grad_plogp / prob


def actor_step(theta, psi, beta: float, box: ProjectionBox) -> np.ndarray:
    return box.project(np.asarray(theta, dtype=float) + beta * np.asarray(psi, dtype=float))


def gamma_hat(theta, field, box: ProjectionBox) -> np.ndarray:
    """Directional derivative of the box projection along ``field`` at ``theta``.

    Components pushing outward through an active face are zeroed.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.array(field, dtype=float)
    out[(theta >= box.bound) & (out > 0)] = 0.0
    out[(theta <= -box.bound) & (out < 0)] = 0.0
    return out


def projected_field_residual(theta, field, box: ProjectionBox) -> float:
    return float(np.max(np.abs(gamma_hat(theta, field, box)), initial=0.0))
