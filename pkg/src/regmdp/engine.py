"""Drives the compiled kernel between checkpoints and keeps the run state."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import DivergenceError
from .sampler import RESTART, UniformStream, cdf_tables, resolve_restart

CHUNK = 1 << 16
_MODE_CODES = {"exact": _kernels.EXACT, "sampled": _kernels.SAMPLED, "literal": _kernels.LITERAL}


class Engine:
    """State of one sampled trajectory of the critic (and optionally actor) recursion.

    ``policy`` is either a fixed probability table (policy evaluation) or a
    :class:`~regmdp.actor.SoftmaxPolicy` whose parameters the actor moves when
    ``actor_schedule`` is given and not frozen.
    """

    def __init__(self, mdp, policy, reg, phi, critic_schedule, seed, *, actor_schedule=None,
                 bound=np.inf, sampler_mode="raw", xi=None, omega_mode="exact", inner=1,
                 omega0=None, restart_gamma=None):
        self.mdp = mdp
        self.reg = reg
        n_s, n_a = mdp.n_states, mdp.n_actions
        self.phi = np.ascontiguousarray(phi, dtype=float)
        self.omega = np.zeros(self.phi.shape[1]) if omega0 is None else np.array(omega0, dtype=float)
        self.xi = resolve_restart(xi, n_s)
        self.trans_cdf, self.xi_cdf = cdf_tables(mdp, self.xi)
        self.restart = sampler_mode == RESTART
        self.restart_gamma = mdp.discount if restart_gamma is None else float(restart_gamma)
        self.omega_mode = _MODE_CODES[omega_mode]
        self.critic_schedule = critic_schedule
        self.actor_schedule = actor_schedule
        self.inner = int(inner)
        self.bound = float(bound)

        if hasattr(policy, "theta"):
            self.theta = policy.theta.copy()
            self.pfeat = policy.policy_features
            self.eps = policy.epsilon
        else:
            self.theta = np.zeros(1)
            self.pfeat = np.zeros((n_s * n_a, 1))
            self.eps = 0.0
        self.probs = np.ascontiguousarray(getattr(policy, "probs", policy), dtype=float).copy()
        self.sigma = np.ascontiguousarray(getattr(policy, "softmax_probs", self.probs), dtype=float).copy()
        self.actor_on = (
            hasattr(policy, "theta") and actor_schedule is not None and not actor_schedule.frozen
        )
        self.omega_state = np.empty(n_s)
        _kernels.omega_rows(self.probs, reg.code, reg.strength, self.omega_state)

        self.stream = UniformStream(seed)
        u = self.stream.take(1)[0]
        self.s = int(_kernels.draw(self.xi_cdf, u[1]))
        self.a = int(_kernels.draw_from_probs(self.probs[self.s], u[2]))
        self.t = 0
        self.reset_window()

    def reset_window(self):
        self.acc = np.zeros(6)
        self.acc_psi = np.zeros(self.theta.shape[0])

    def advance(self, n_steps: int):
        remaining = int(n_steps)
        actor = self.actor_schedule
        a_scale, a_offset, a_exp = (
            (actor.scale, actor.offset, actor.exponent) if actor is not None else (0.0, 1.0, 1.0)
        )
        crit = self.critic_schedule
        while remaining > 0:
            n = min(remaining, CHUNK)
            uniforms = self.stream.take(n)
            status, done, self.s, self.a = _kernels.run_segment(
                self.t, n, self.s, self.a, self.omega, self.theta, self.probs, self.sigma,
                self.omega_state, self.trans_cdf, self.xi_cdf, self.mdp.reward, self.mdp.discount,
                self.restart, self.restart_gamma, self.phi, self.pfeat, self.eps,
                self.reg.code, self.reg.strength, self.omega_mode,
                float(crit.scale), float(crit.offset), float(crit.exponent),
                float(a_scale), float(a_offset), float(a_exp), self.inner, self.bound,
                self.actor_on, uniforms, self.acc, self.acc_psi,
            )
            self.t += done
            if status != _kernels.OK:
                raise DivergenceError("critic iterate became non-finite", step=self.t)
            remaining -= n

    def window_stats(self):
        n = max(self.acc[5], 1.0)
        return {
            "td_error_ma": self.acc[0] / n,
            "td_abs_ma": self.acc[1] / n,
            "theta_path": self.acc[2],
            "omega_path": self.acc[3],
            "beta_theta_sum": self.acc[4],
            "beta_psi_sum": self.acc_psi.copy(),
            "n": int(self.acc[5]),
        }
