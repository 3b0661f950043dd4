"""Matrix-form ground truth for regularized policy evaluation and improvement.

All vectors over pairs use the state-major ordering of :mod:`regmdp.mdp`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import logsumexp

from .errors import DimensionError, IllConditionedError, NumericError
from .mdp import (
    FiniteMdp,
    StateActionChain,
    TabularPolicy,
    discounted_occupancy,
    induced_chain,
    restart_chain,
    stationary_distribution,
)
from .regularizers import Regularizer, omega_grad, omega_vectors

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class FeatureMap:
    """Rows phi(s, a) of a (S*A, K) feature matrix with independent columns."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2:
            raise DimensionError("feature matrix must be two-dimensional")
        if phi.shape[1] > phi.shape[0]:
            raise DimensionError("more features than state-action pairs")
        smallest = np.linalg.svd(phi, compute_uv=False).min()
        if smallest <= 1e-10:
            raise DimensionError(f"feature columns are linearly dependent (sigma_min={smallest:.3g})")
        phi = np.ascontiguousarray(phi)
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def tabular(cls, n_pairs: int) -> "FeatureMap":
        return cls(np.eye(n_pairs))

    @property
    def n_features(self) -> int:
        return self.phi.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.phi.shape[0]

    def is_identity(self) -> bool:
        return self.phi.shape[0] == self.phi.shape[1] and np.array_equal(self.phi, np.eye(self.n_pairs))


@dataclass(frozen=True)
class ExactSolution:
    q_pi: np.ndarray
    v_pi: np.ndarray
    omega_star: np.ndarray | None = None
    A_matrix: np.ndarray | None = None
    b_vector: np.ndarray | None = None
    weights: np.ndarray | None = None
    condition_number: float | None = None

    def to_dict(self):
        def arr(x):
            return None if x is None else np.asarray(x).tolist()

        return {
            "q_pi": arr(self.q_pi),
            "v_pi": arr(self.v_pi),
            "omega_star": arr(self.omega_star),
            "A_matrix": arr(self.A_matrix),
            "b_vector": arr(self.b_vector),
            "weights": arr(self.weights),
            "condition_number": self.condition_number,
        }

    @classmethod
    def from_dict(cls, data):
        def arr(key):
            value = data.get(key)
            return None if value is None else np.asarray(value, dtype=float)

        return cls(
            q_pi=arr("q_pi"),
            v_pi=arr("v_pi"),
            omega_star=arr("omega_star"),
            A_matrix=arr("A_matrix"),
            b_vector=arr("b_vector"),
            weights=arr("weights"),
            condition_number=data.get("condition_number"),
        )


@dataclass(frozen=True)
class StabilityReport:
    matrix: np.ndarray
    max_real_eig: float
    stable: bool


def _table(policy) -> TabularPolicy:
    return policy if isinstance(policy, TabularPolicy) else policy.tabular()


def _phi(features):
    return features.phi if isinstance(features, FeatureMap) else np.asarray(features, dtype=float)


def _chain(mdp, policy, chain):
    if chain is None:
        return induced_chain(mdp, policy)
    if isinstance(chain, StateActionChain):
        return chain
    if chain == "raw":
        return induced_chain(mdp, policy)
    if chain == "restart":
        return restart_chain(mdp, policy, np.full(mdp.n_states, 1.0 / mdp.n_states))
    raise ValueError(f"unknown chain {chain!r}")


def bellman_q(mdp: FiniteMdp, policy, reg: Regularizer, q, chain=None) -> np.ndarray:
    """T q = r + gamma P_pi (q - Omega_pi)."""
    policy = _table(policy)
    q = np.asarray(q, dtype=float)
    if q.shape != (mdp.n_pairs,):
        raise DimensionError(f"q must have length {mdp.n_pairs}, got {q.shape}")
    p = _chain(mdp, policy, chain).p_pi
    _, omega_pairs = omega_vectors(reg, policy)
    return mdp.reward_vector + mdp.discount * (p @ (q - omega_pairs))


def solve_q_pi(mdp: FiniteMdp, policy, reg: Regularizer) -> ExactSolution:
    """q = (I - gamma P)^-1 (r - gamma P Omega_pi); v(s) = sum_a pi q - Omega(pi(.|s))."""
    policy = _table(policy)
    p = induced_chain(mdp, policy).p_pi
    omega_state, omega_pairs = omega_vectors(reg, policy)
    system = np.eye(mdp.n_pairs) - mdp.discount * p
    rhs = mdp.reward_vector - mdp.discount * (p @ omega_pairs)
    try:
        q = lu_solve(lu_factor(system), rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"policy evaluation solve failed: {exc}") from exc
    v = np.sum(policy.probs * q.reshape(mdp.n_states, mdp.n_actions), axis=1) - omega_state
    return ExactSolution(q_pi=q, v_pi=v)


def _weighted_system(mdp, policy, reg, phi, chain):
    p = chain.p_pi
    nu = stationary_distribution(chain)
    _, omega_pairs = omega_vectors(reg, policy)
    weighted = phi.T * nu
    a_mat = weighted @ (phi - mdp.discount * (p @ phi))
    b_vec = weighted @ (mdp.reward_vector - mdp.discount * (p @ omega_pairs))
    return a_mat, b_vec, nu


def projected_fixed_point(mdp: FiniteMdp, policy, reg: Regularizer, features, chain=None) -> ExactSolution:
    """omega* solving Phi^T N (I - gamma P) Phi omega = Phi^T N (r - gamma P Omega_pi).

    ``N`` is the stationary law of ``chain`` (the induced chain by default),
    and the same chain supplies ``P``.
    """
    policy = _table(policy)
    phi = _phi(features)
    if phi.shape[0] != mdp.n_pairs:
        raise DimensionError(f"features have {phi.shape[0]} rows, expected {mdp.n_pairs}")
    chain = _chain(mdp, policy, chain)
    a_mat, b_vec, nu = _weighted_system(mdp, policy, reg, phi, chain)
    cond = float(np.linalg.cond(a_mat))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(f"projected system is ill-conditioned (cond={cond:.3g})", cond)
    omega_star = lu_solve(lu_factor(a_mat), b_vec)
    exact = solve_q_pi(mdp, policy, reg)
    return ExactSolution(
        q_pi=exact.q_pi,
        v_pi=exact.v_pi,
        omega_star=omega_star,
        A_matrix=a_mat,
        b_vector=b_vec,
        weights=nu,
        condition_number=cond,
    )


def mean_field(mdp: FiniteMdp, policy, reg: Regularizer, features, omega, chain=None) -> np.ndarray:
    """Expected critic increment Phi^T N (r + gamma P (Phi omega - Omega_pi) - Phi omega)."""
    policy = _table(policy)
    phi = _phi(features)
    chain = _chain(mdp, policy, chain)
    nu = stationary_distribution(chain)
    q = phi @ np.asarray(omega, dtype=float)
    residual = bellman_q(mdp, policy, reg, q, chain=chain) - q
    return phi.T @ (nu * residual)


def h_infinity_stability(mdp: FiniteMdp, policy, features, chain=None) -> StabilityReport:
    """Linear field Phi^T N (gamma P - I) Phi and whether it is Hurwitz."""
    policy = _table(policy)
    phi = _phi(features)
    chain = _chain(mdp, policy, chain)
    nu = stationary_distribution(chain)
    m = (phi.T * nu) @ (mdp.discount * (chain.p_pi @ phi) - phi)
    try:
        eigs = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue solve failed: {exc}") from exc
    top = float(np.max(eigs.real))
    return StabilityReport(matrix=m, max_real_eig=top, stable=top < 0)


def _per_state_reward(mdp, policy, reg):
    omega_state, _ = omega_vectors(reg, policy)
    return np.sum(policy.probs * mdp.reward, axis=1) - omega_state


def objective_J(mdp: FiniteMdp, policy, reg: Regularizer | None = None, start=None) -> float:
    """Regularized discounted return from ``start``:

        J = sum_s d(s) [sum_a pi(a|s) r(s,a) - Omega(pi(.|s))] = start^T v_pi.

    Its gradient is the actor field of :func:`exact_actor_field` with exact q.
    """
    reg = Regularizer() if reg is None else reg
    policy = _table(policy)
    start = _start(mdp, start)
    d = discounted_occupancy(mdp, policy, start)
    return float(d @ _per_state_reward(mdp, policy, reg))


def start_state_value(mdp: FiniteMdp, policy, reg: Regularizer | None = None, start=None) -> float:
    reg = Regularizer() if reg is None else reg
    return float(_start(mdp, start) @ solve_q_pi(mdp, _table(policy), reg).v_pi)


def restart_average_value(mdp: FiniteMdp, policy, reg: Regularizer | None = None, start=None) -> float:
    """(1 - gamma)^-1 times the regularized reward averaged over the restart chain's stationary law."""
    reg = Regularizer() if reg is None else reg
    policy = _table(policy)
    start = _start(mdp, start)
    nu = stationary_distribution(restart_chain(mdp, policy, start))
    state_marginal = nu.reshape(mdp.n_states, mdp.n_actions).sum(axis=1)
    return float(state_marginal @ _per_state_reward(mdp, policy, reg)) / (1.0 - mdp.discount)


def occupancy_weighted_value(mdp: FiniteMdp, policy, reg: Regularizer | None = None, start=None) -> float:
    """sum_s d(s) sum_a pi(a|s) [q(s,a) - log pi(a|s)] for entropy, i.e. d^T v.

    Not the quantity whose gradient the actor follows; see :func:`objective_J`.
    """
    reg = Regularizer() if reg is None else reg
    policy = _table(policy)
    d = discounted_occupancy(mdp, policy, _start(mdp, start))
    return float(d @ solve_q_pi(mdp, policy, reg).v_pi)


def _start(mdp, start):
    if start is None:
        return np.full(mdp.n_states, 1.0 / mdp.n_states)
    return np.asarray(start, dtype=float)


def critic_values(mdp, policy, reg, features=None, chain=None) -> np.ndarray:
    """q used by the actor at its critic equilibrium: Phi omega* (exact q for tabular/None)."""
    if features is None:
        return solve_q_pi(mdp, policy, reg).q_pi
    sol = projected_fixed_point(mdp, policy, reg, features, chain=chain)
    return _phi(features) @ sol.omega_star


def expected_psi(policy, reg: Regularizer, q, pair_weights) -> np.ndarray:
    """sum_{s,a} w(s,a) (q(s,a) - dOmega_a) grad log pi(a|s) for a softmax policy."""
    probs = policy.probs
    g = omega_grad(reg, probs).reshape(-1)
    coef = np.asarray(pair_weights) * (np.asarray(q) - g) / probs.reshape(-1)
    return policy.jacobian().T @ coef


def exact_actor_field(mdp: FiniteMdp, policy, reg: Regularizer | None = None, features=None,
                      start=None, chain=None) -> np.ndarray:
    """h(theta) = sum_s d(s) sum_a pi(a|s) psi(s, a) with q at the critic's equilibrium.

    With ``features=None`` (or identity features) this equals grad J exactly.
    """
    reg = Regularizer() if reg is None else reg
    table = policy.tabular()
    d = discounted_occupancy(mdp, table, _start(mdp, start))
    weights = (d[:, None] * table.probs).reshape(-1)
    q = critic_values(mdp, table, reg, features, chain=chain)
    return expected_psi(policy, reg, q, weights)


def finite_difference_gradient(fn, theta, step=None) -> np.ndarray:
    """Central differences with h = 1e-5 (1 + ||theta||) unless ``step`` is given."""
    theta = np.asarray(theta, dtype=float)
    h = 1e-5 * (1.0 + np.linalg.norm(theta)) if step is None else step
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (fn(theta + e) - fn(theta - e)) / (2 * h)
    return grad


def soft_optimality_backup(mdp: FiniteMdp, v, strength: float = 1.0) -> np.ndarray:
    """[T v](s) = strength * log sum_a exp((r(s,a) + gamma E v(s')) / strength)."""
    v = np.asarray(v, dtype=float)
    pre = mdp.reward + mdp.discount * (mdp.transition @ v)
    return strength * logsumexp(pre / strength, axis=1)


def soft_value_iteration(mdp: FiniteMdp, strength: float = 1.0, tol: float = 1e-12, max_iter: int = 100_000):
    """Fixed point of the entropy-regularized optimality operator.

    Returns (v*, q*, pi*) with pi*(a|s) proportional to exp(q*(s,a) / strength).
    """
    v = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        nxt = soft_optimality_backup(mdp, v, strength)
        if np.max(np.abs(nxt - v)) <= tol:
            v = nxt
            break
        v = nxt
    else:
        raise NumericError("soft value iteration did not converge")
    q = mdp.reward + mdp.discount * (mdp.transition @ v)
    logits = q / strength
    pi = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    return v, q, pi
