"""Linear TD(0) policy evaluation with a regularization term."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .regularizers import Regularizer, omega_sample_estimate, omega_value

EXACT = "exact"
SAMPLED = "sampled"
LITERAL = "literal"
OMEGA_MODES = (EXACT, SAMPLED, LITERAL)


@dataclass(frozen=True)
class StepSchedule:
    """beta_t = scale / (offset + t) ** exponent, t = 0, 1, ..."""

    scale: float
    exponent: float
    offset: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("step-size scale must be non-negative")
        if self.offset <= 0:
            raise ValueError("step-size offset must be positive")

    def value(self, t):
        return self.scale / (self.offset + t) ** self.exponent

    @property
    def frozen(self) -> bool:
        return self.scale == 0

    @property
    def diverges(self) -> bool:
        """sum beta_t = inf."""
        return self.scale > 0 and self.exponent <= 1.0

    @property
    def square_summable(self) -> bool:
        return self.scale == 0 or self.exponent > 0.5

    def robbins_monro(self) -> bool:
        return self.diverges and self.square_summable

    def to_dict(self):
        return {"scale": self.scale, "exponent": self.exponent, "offset": self.offset}


DEFAULT_CRITIC_SCHEDULE = StepSchedule(0.5, 0.6, 1.0)
DEFAULT_ACTOR_SCHEDULE = StepSchedule(0.05, 0.9, 1.0)


def check_step_sizes(critic: StepSchedule, actor: StepSchedule | None = None) -> list[str]:
    """Symbolic check of the two-timescale step-size conditions; returns violations."""
    problems = []
    for name, sched in (("critic", critic), ("actor", actor)):
        if sched is None or sched.frozen:
            continue
        if not sched.diverges:
            problems.append(f"{name} steps are summable (exponent {sched.exponent} > 1)")
        if not sched.square_summable:
            problems.append(f"{name} steps are not square-summable (exponent {sched.exponent} <= 0.5)")
    if critic.frozen:
        problems.append("critic schedule is frozen")
    if actor is not None and not actor.frozen and not actor.exponent > critic.exponent:
        problems.append(
            f"actor/critic step ratio does not vanish (exponents {actor.exponent} <= {critic.exponent})"
        )
    return problems


@dataclass
class CriticState:
    omega: np.ndarray
    t: int = 0
    trace: list = field(default_factory=list)


def _phi(features):
    return features.phi if hasattr(features, "phi") else np.asarray(features, dtype=float)


def td_error(transition, omega, policy, reg: Regularizer, features, gamma: float, mode: str = EXACT) -> float:
    """delta = r - gamma Omega_next + gamma q(s',a') - q(s,a).

    ``exact`` uses Omega(pi(.|s')), ``sampled`` its unbiased one-sample
    estimate at (s', a'), ``literal`` the summand pi(a|s) log pi(a|s) at the
    current pair.
    """
    s, a, r, s2, a2 = transition[:5]
    n_a = policy.probs.shape[1]
    phi = _phi(features)
    q_cur = _dot(phi[s * n_a + a], omega)
    q_next = _dot(phi[s2 * n_a + a2], omega)
    if mode == EXACT:
        om = omega_value(reg, policy.probs[s2])
    elif mode == SAMPLED:
        om = omega_sample_estimate(reg, policy, s2, a2)
    elif mode == LITERAL:
        om = omega_sample_estimate(reg, policy, s, a, literal=True)
    else:
        raise ValueError(f"unknown omega mode {mode!r}")
    return r - gamma * om + gamma * q_next - q_cur


def _dot(x, y):
    # sequential sum, same order as the compiled kernel
    acc = 0.0
    for xi, yi in zip(x.tolist(), np.asarray(y).tolist()):
        acc += xi * yi
    return acc


def critic_step(state: CriticState, transition, schedule: StepSchedule, policy, reg: Regularizer,
                features, gamma: float, mode: str = EXACT) -> CriticState:
    """omega <- omega + beta_t * delta * phi(s, a)."""
    delta = td_error(transition, state.omega, policy, reg, features, gamma, mode)
    s, a = transition[0], transition[1]
    n_a = policy.probs.shape[1]
    beta = schedule.value(state.t)
    omega = state.omega + beta * delta * _phi(features)[s * n_a + a]
    if not np.all(np.isfinite(omega)):
        raise DivergenceError("critic parameters became non-finite", step=state.t)
    return CriticState(omega=omega, t=state.t + 1, trace=state.trace)


def log_checkpoints(n_steps: int, n_points: int = 30) -> np.ndarray:
    """Logarithmically spaced integer steps in [1, n_steps], always ending at n_steps."""
    if n_steps <= 0:
        return np.array([], dtype=int)
    grid = np.unique(np.round(np.logspace(0, np.log10(n_steps), n_points)).astype(int))
    return grid[(grid >= 1) & (grid <= n_steps)]


@dataclass
class CriticTrace:
    step: np.ndarray
    omega_error: np.ndarray
    omega_norm: np.ndarray
    td_error_ma: np.ndarray
    omega_star: np.ndarray

    COLUMNS = ("step", "omega_error", "omega_norm", "td_error_ma")

    @property
    def relative_error(self) -> np.ndarray:
        return self.omega_error / np.linalg.norm(self.omega_star)

    def rows(self):
        return [
            {"step": int(t), "omega_error": float(e), "omega_norm": float(n), "td_error_ma": float(m)}
            for t, e, n, m in zip(self.step, self.omega_error, self.omega_norm, self.td_error_ma)
        ]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.COLUMNS)
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def run_policy_evaluation(mdp, policy, reg: Regularizer, features, schedule: StepSchedule = DEFAULT_CRITIC_SCHEDULE,
                          n_steps: int = 200_000, seed: int = 0, *, sampler_mode: str = "raw", xi=None,
                          omega_mode: str = EXACT, checkpoints=None, omega0=None):
    """Run the critic along one sampled trajectory under a fixed policy.

    The reference omega* is the projected fixed point for the chain actually
    sampled (the induced chain in ``raw`` mode, the restart chain otherwise).
    Returns ``(CriticState, CriticTrace)``.
    """
    from .engine import Engine
    from .mdp import induced_chain, restart_chain
    from .oracle import projected_fixed_point

    table = policy if not hasattr(policy, "tabular") else policy.tabular()
    phi = _phi(features)
    engine = Engine(mdp, policy, reg, phi, schedule, seed, sampler_mode=sampler_mode, xi=xi,
                    omega_mode=omega_mode, omega0=omega0)
    chain = (restart_chain(mdp, table, engine.xi) if sampler_mode == "restart"
             else induced_chain(mdp, table))
    omega_star = projected_fixed_point(mdp, table, reg, phi, chain=chain).omega_star

    grid = log_checkpoints(n_steps) if checkpoints is None else np.asarray(sorted(set(checkpoints)), dtype=int)
    steps, errors, norms, tds = [], [], [], []
    for target in grid:
        engine.advance(int(target) - engine.t)
        stats = engine.window_stats()
        engine.reset_window()
        steps.append(engine.t)
        errors.append(np.linalg.norm(engine.omega - omega_star))
        norms.append(np.linalg.norm(engine.omega))
        tds.append(stats["td_error_ma"])
    if engine.t < n_steps:
        engine.advance(n_steps - engine.t)
    trace = CriticTrace(np.array(steps, dtype=int), np.array(errors), np.array(norms), np.array(tds), omega_star)
    return CriticState(omega=engine.omega.copy(), t=engine.t), trace
