"""Coupled two-timescale actor-critic runs, instance generation and run diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .actor import ProjectionBox, SoftmaxPolicy, actor_step, projected_field_residual, psi_sample
from .critic import (
    DEFAULT_ACTOR_SCHEDULE,
    DEFAULT_CRITIC_SCHEDULE,
    EXACT,
    CriticState,
    StepSchedule,
    check_step_sizes,
    critic_step,
    log_checkpoints,
)
from .engine import Engine
from .errors import ConfigError, ErgodicityError
from .mdp import FiniteMdp, discounted_occupancy, induced_chain, restart_chain, stationary_distribution, validate_assumptions
from .oracle import FeatureMap, expected_psi, objective_J, projected_fixed_point
from .regularizers import Regularizer
from .sampler import RAW, RESTART, Sampler

SIMULTANEOUS = "simultaneous"
NESTED = "nested"


def generate_random_instance(seed: int, n_states: int, n_actions: int, K: int | None = None,
                             sparsity: float = 0.0, gamma: float = 0.9):
    """Random MDP with Dirichlet(1) transition rows, U[0, 1] rewards and Gaussian features.

    ``sparsity`` is the fraction of transition entries zeroed per row (at
    least one entry is kept). ``K=None`` gives tabular features. Features are
    redrawn until their smallest singular value exceeds 1e-6.
    """
    n_pairs = n_states * n_actions
    if K is not None and K > n_pairs:
        raise ValueError(f"K={K} exceeds the number of state-action pairs {n_pairs}")
    rng = np.random.Generator(np.random.Philox(seed))
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    if sparsity > 0:
        n_zero = min(int(round(sparsity * n_states)), n_states - 1)
        for s in range(n_states):
            for a in range(n_actions):
                drop = rng.choice(n_states, size=n_zero, replace=False)
                transition[s, a, drop] = 0.0
                transition[s, a] /= transition[s, a].sum()
    reward = rng.random((n_states, n_actions))
    mdp = FiniteMdp(transition, reward, gamma)
    if K is None:
        return mdp, FeatureMap.tabular(n_pairs)
    while True:
        phi = rng.standard_normal((n_pairs, K))
        if np.linalg.svd(phi, compute_uv=False).min() > 1e-6:
            return mdp, FeatureMap(phi)


def bandit_instance(rewards=(1.0, 0.0), gamma: float = 0.9) -> FiniteMdp:
    """Single state, one action per reward entry."""
    r = np.asarray(rewards, dtype=float)[None, :]
    return FiniteMdp(np.ones((1, r.shape[1], 1)), r, gamma)


@dataclass
class RunConfig:
    mdp: FiniteMdp
    features: FeatureMap
    reg: Regularizer = field(default_factory=Regularizer)
    critic_schedule: StepSchedule = DEFAULT_CRITIC_SCHEDULE
    actor_schedule: StepSchedule = DEFAULT_ACTOR_SCHEDULE
    theta_max: float = 10.0
    epsilon: float = 1e-3
    n_steps: int = 100_000
    n_checkpoints: int = 30
    checkpoints: tuple | None = None
    seeds: tuple = (0,)
    omega_mode: str = EXACT
    sampler_mode: str = RAW
    xi: object = None
    loop: str = SIMULTANEOUS
    inner_steps: int = 10
    unsafe: bool = False
    theta0: tuple | None = None

    def __post_init__(self):
        if self.sampler_mode not in (RAW, RESTART):
            raise ConfigError(f"sampler mode must be {RAW!r} or {RESTART!r}")
        if self.loop not in (SIMULTANEOUS, NESTED):
            raise ConfigError(f"loop must be {SIMULTANEOUS!r} or {NESTED!r}")
        if self.features.n_pairs != self.mdp.n_pairs:
            raise ConfigError("feature rows do not match the number of state-action pairs")
        if self.theta0 is not None and len(self.theta0) != self.mdp.n_pairs:
            raise ConfigError(f"theta0 needs {self.mdp.n_pairs} entries, got {len(self.theta0)}")
        problems = self.step_size_problems()
        if problems and not self.unsafe:
            raise ConfigError("step-size conditions violated: " + "; ".join(problems))

    def step_size_problems(self):
        return check_step_sizes(self.critic_schedule, self.actor_schedule)

    @property
    def box(self) -> ProjectionBox:
        return ProjectionBox(self.theta_max)

    @property
    def inner(self) -> int:
        return self.inner_steps if self.loop == NESTED else 1

    def initial_policy(self) -> SoftmaxPolicy:
        n_s, n_a = self.mdp.n_states, self.mdp.n_actions
        if self.theta0 is None:
            return SoftmaxPolicy.zeros(n_s, n_a, self.epsilon)
        return SoftmaxPolicy(self.box.project(np.asarray(self.theta0, dtype=float)), n_s, n_a, self.epsilon)

    def checkpoint_grid(self) -> np.ndarray:
        if self.checkpoints is not None:
            grid = np.asarray(sorted(set(int(c) for c in self.checkpoints)), dtype=int)
            grid = grid[(grid >= 1) & (grid <= self.n_steps)]
        else:
            grid = log_checkpoints(self.n_steps, self.n_checkpoints)
        return np.concatenate([[0], grid])


@dataclass
class RunReport:
    seed: int
    n_steps: int
    omega: np.ndarray
    theta: np.ndarray
    checkpoints: dict
    initial_assumptions: dict
    step_size_problems: list

    CRITIC_COLUMNS = ("step", "omega_error", "omega_norm", "td_error_ma")
    ACTOR_COLUMNS = ("step", "J_theta", "grad_residual", "min_policy_prob", "n_active_constraints")

    def column(self, name) -> np.ndarray:
        return np.asarray(self.checkpoints[name])

    def critic_rows(self):
        return _rows(self.checkpoints, self.CRITIC_COLUMNS)

    def actor_rows(self):
        return _rows(self.checkpoints, self.ACTOR_COLUMNS)

    def summary(self):
        cp = self.checkpoints
        return {
            "seed": self.seed,
            "n_steps": self.n_steps,
            "final_omega": self.omega.tolist(),
            "final_theta": self.theta.tolist(),
            "final_J": cp["J_theta"][-1],
            "initial_J": cp["J_theta"][0],
            "final_grad_residual": cp["grad_residual"][-1],
            "final_omega_error": cp["omega_error"][-1],
            "final_min_policy_prob": cp["min_policy_prob"][-1],
            "initial_assumptions": self.initial_assumptions,
            "step_size_problems": list(self.step_size_problems),
            "diagnostics": {
                "step": cp["step"],
                "omega_star_norm": cp["omega_star_norm"],
                "zeta2_proxy": cp["zeta2_proxy"],
                "zeta1_tail": cp["zeta1_tail"],
                "timescale_ratio": cp["timescale_ratio"],
            },
        }


def _rows(cp, columns):
    return [{c: cp[c][i] for c in columns} for i in range(len(cp["step"]))]


def _sampled_chain(config, table, xi):
    if config.sampler_mode == RESTART:
        return restart_chain(config.mdp, table, xi)
    return induced_chain(config.mdp, table)


def run_actor_critic(config: RunConfig, seed: int | None = None) -> RunReport:
    """Simultaneous (or nested) critic/actor recursion with oracle checkpoints.

    At each checkpoint the critic target omega*_theta and the actor field are
    recomputed exactly for the current theta; the reported ``grad_residual``
    is the sup-norm of the projected field at theta.
    """
    seed = config.seeds[0] if seed is None else int(seed)
    mdp, reg, box = config.mdp, config.reg, config.box
    phi = config.features.phi
    policy = config.initial_policy()
    report = validate_assumptions(mdp, policy.tabular(), config.epsilon)
    if not report.ok:
        raise ErgodicityError("initial policy violates the assumptions: " + "; ".join(report.messages))

    engine = Engine(mdp, policy, reg, phi, config.critic_schedule, seed,
                    actor_schedule=config.actor_schedule, bound=box.bound,
                    sampler_mode=config.sampler_mode, xi=config.xi,
                    omega_mode=config.omega_mode, inner=config.inner)
    start = engine.xi
    names = ("step", "J_theta", "grad_residual", "omega_error", "omega_norm", "omega_star_norm",
             "td_error_ma", "min_policy_prob", "n_active_constraints", "zeta2_proxy",
             "zeta1_tail", "timescale_ratio")
    cp = {n: [] for n in names}
    for target in config.checkpoint_grid():
        engine.advance(int(target) - engine.t)
        stats = engine.window_stats()
        engine.reset_window()
        current = policy.with_theta(engine.theta)
        table = current.tabular()
        chain = _sampled_chain(config, table, start)
        omega_star = projected_fixed_point(mdp, table, reg, phi, chain=chain).omega_star
        q_star = phi @ omega_star
        d = discounted_occupancy(mdp, table, start)
        field_ = expected_psi(current, reg, q_star, (d[:, None] * table.probs).reshape(-1))
        sampling = stationary_distribution(chain)
        psi_now = expected_psi(current, reg, phi @ engine.omega, sampling)
        psi_star = expected_psi(current, reg, q_star, sampling)

        cp["step"].append(int(engine.t))
        cp["J_theta"].append(objective_J(mdp, table, reg, start))
        cp["grad_residual"].append(projected_field_residual(engine.theta, field_, box))
        cp["omega_error"].append(float(np.linalg.norm(engine.omega - omega_star)))
        cp["omega_norm"].append(float(np.linalg.norm(engine.omega)))
        cp["omega_star_norm"].append(float(np.linalg.norm(omega_star)))
        cp["td_error_ma"].append(float(stats["td_error_ma"]))
        cp["min_policy_prob"].append(float(table.probs.min()))
        cp["n_active_constraints"].append(int(np.count_nonzero(box.active(engine.theta))))
        cp["zeta2_proxy"].append(float(np.linalg.norm(psi_now - psi_star)))
        cp["zeta1_tail"].append(
            float(np.linalg.norm(stats["beta_psi_sum"] - stats["beta_theta_sum"] * psi_now))
        )
        cp["timescale_ratio"].append(
            float(stats["theta_path"] / stats["omega_path"]) if stats["omega_path"] > 0 else float("nan")
        )
    return RunReport(
        seed=seed,
        n_steps=engine.t,
        omega=engine.omega.copy(),
        theta=engine.theta.copy(),
        checkpoints=cp,
        initial_assumptions=report.to_dict(),
        step_size_problems=config.step_size_problems(),
    )


def freeze_actor(config: RunConfig) -> RunConfig:
    return replace(config, actor_schedule=StepSchedule(0.0, config.actor_schedule.exponent,
                                                       config.actor_schedule.offset))


def validate_kushner_clark(config: RunConfig, report: RunReport) -> dict:
    """Step-size conditions plus the noise and critic-bias traces of a finished run."""
    problems = config.step_size_problems()
    zeta2 = report.column("zeta2_proxy")
    tail = report.column("zeta1_tail")
    # checkpoint 0 precedes any actor step
    zeta2_run = zeta2[1:] if zeta2.size > 1 else zeta2
    return {
        "step_sizes_ok": not problems,
        "step_size_problems": problems,
        "zeta1_tail": tail.tolist(),
        "zeta2_proxy": zeta2.tolist(),
        "zeta2_decreasing": bool(zeta2_run.size >= 2 and zeta2_run[-1] < zeta2_run[0]),
    }


def reference_run(config: RunConfig, seed: int, n_steps: int):
    """Plain-Python composition of the public step functions (no compiled kernel).

    Consumes the random stream exactly as :class:`~regmdp.engine.Engine` does;
    used to cross-check the kernel. Returns (omega, theta, transitions).
    """
    mdp, reg = config.mdp, config.reg
    phi = config.features.phi
    policy = config.initial_policy()
    sampler = Sampler(mdp, seed, xi=config.xi, mode=config.sampler_mode)
    state = CriticState(omega=np.zeros(phi.shape[1]))
    actor_on = not config.actor_schedule.frozen
    transitions = []
    for t in range(n_steps):
        tr = sampler.sample_step(policy)
        transitions.append(tr)
        do_actor = actor_on and (t + 1) % config.inner == 0
        if do_actor:
            psi = psi_sample(policy, state.omega, phi, tr.s, tr.a, reg)
        state = critic_step(state, tr, config.critic_schedule, policy, reg, phi, mdp.discount,
                            config.omega_mode)
        if do_actor:
            beta = config.actor_schedule.value(t // config.inner)
            policy = policy.with_theta(actor_step(policy.theta, psi, beta, config.box))
    return state.omega, policy.theta, transitions
