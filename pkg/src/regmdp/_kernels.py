"""Compiled inner loops for the sampled recursions.

The public step functions in :mod:`regmdp.critic`, :mod:`regmdp.actor` and
:mod:`regmdp.sampler` are the readable definitions; these kernels run the same
arithmetic over long trajectories and are checked against them in the tests.
Every step consumes exactly three uniforms: restart coin, next state, next
action.
"""

import math

import numpy as np
from numba import njit

# omega_mode codes
EXACT, SAMPLED, LITERAL = 0, 1, 2
# reg_kind codes, matching regularizers.KINDS
ENTROPY, L2 = 0, 1

OK, DIVERGED = 0, 1


@njit(cache=True, nogil=True)
def policy_table(theta, feats, eps, sigma, probs):
    n_s, n_a = probs.shape
    n_par = theta.shape[0]
    mix = 1.0 - eps * n_a
    logits = np.empty(n_a)
    for s in range(n_s):
        top = -np.inf
        for a in range(n_a):
            z = 0.0
            row = s * n_a + a
            for k in range(n_par):
                z += feats[row, k] * theta[k]
            logits[a] = z
            if z > top:
                top = z
        total = 0.0
        for a in range(n_a):
            e = math.exp(logits[a] - top)
            sigma[s, a] = e
            total += e
        for a in range(n_a):
            sigma[s, a] = sigma[s, a] / total
            probs[s, a] = mix * sigma[s, a] + eps


@njit(cache=True, nogil=True)
def omega_rows(probs, reg_kind, strength, out):
    n_s, n_a = probs.shape
    for s in range(n_s):
        acc = 0.0
        for a in range(n_a):
            p = probs[s, a]
            if reg_kind == ENTROPY:
                acc += p * math.log(p)
            else:
                acc += p * p
        if reg_kind == ENTROPY:
            out[s] = strength * acc
        else:
            out[s] = 0.5 * strength * acc


@njit(cache=True, nogil=True)
def draw(cdf, u):
    n = cdf.shape[0]
    for j in range(n - 1):
        if u < cdf[j]:
            return j
    return n - 1


@njit(cache=True, nogil=True)
def draw_from_probs(p, u):
    n = p.shape[0]
    acc = 0.0
    for j in range(n - 1):
        acc += p[j]
        if u < acc:
            return j
    return n - 1


@njit(cache=True, nogil=True)
def next_pair(s, a, u0, u1, u2, trans_cdf, xi_cdf, gamma, restart, probs):
    """Returns (s', a', restarted)."""
    restarted = restart and u0 >= gamma
    if restarted:
        s2 = draw(xi_cdf, u1)
    else:
        s2 = draw(trans_cdf[s, a], u1)
    a2 = draw_from_probs(probs[s2], u2)
    return s2, a2, restarted


@njit(cache=True, nogil=True)
def sample_path(s, a, uniforms, trans_cdf, xi_cdf, gamma, restart, probs, pairs, restarted):
    """Fill ``pairs[i] = (s_i, a_i)`` for i = 1..n under a fixed policy; row 0 holds the start."""
    pairs[0, 0] = s
    pairs[0, 1] = a
    for i in range(uniforms.shape[0]):
        s, a, r = next_pair(s, a, uniforms[i, 0], uniforms[i, 1], uniforms[i, 2],
                            trans_cdf, xi_cdf, gamma, restart, probs)
        pairs[i + 1, 0] = s
        pairs[i + 1, 1] = a
        restarted[i] = r


@njit(cache=True, nogil=True)
def run_segment(
    t_start, n_steps, s, a, omega, theta, probs, sigma, omega_state,
    trans_cdf, xi_cdf, reward, gamma, restart, restart_gamma, phi, pfeat, eps,
    reg_kind, strength, omega_mode,
    c_scale, c_offset, c_exp, a_scale, a_offset, a_exp, inner, bound, actor_on,
    uniforms, acc, acc_psi,
):
    """Advance the coupled recursion ``n_steps`` times from global step ``t_start``.

    ``omega``, ``theta``, ``probs``, ``sigma`` and ``omega_state`` are updated
    in place. ``acc`` collects [sum delta, sum |delta|, sum ||dtheta||,
    sum ||domega||, sum beta_theta, n]; ``acc_psi`` collects sum beta_theta * psi.
    Returns (status, steps_done, s, a).
    """
    n_s, n_a = probs.shape
    n_k = omega.shape[0]
    n_par = theta.shape[0]
    mix = 1.0 - eps * n_a
    psi = np.empty(n_par)
    for i in range(n_steps):
        t = t_start + i
        s2, a2, _ = next_pair(s, a, uniforms[i, 0], uniforms[i, 1], uniforms[i, 2],
                              trans_cdf, xi_cdf, restart_gamma, restart, probs)
        row = s * n_a + a
        row2 = s2 * n_a + a2
        r = reward[s, a]
        q_cur = 0.0
        q_next = 0.0
        for k in range(n_k):
            q_cur += phi[row, k] * omega[k]
        for k in range(n_k):
            q_next += phi[row2, k] * omega[k]
        if omega_mode == EXACT:
            om = omega_state[s2]
        elif omega_mode == SAMPLED:
            p2 = probs[s2, a2]
            if reg_kind == ENTROPY:
                om = strength * math.log(p2)
            else:
                om = 0.5 * strength * p2
        else:
            p1 = probs[s, a]
            if reg_kind == ENTROPY:
                om = strength * (p1 * math.log(p1))
            else:
                om = 0.5 * strength * (p1 * p1)
        delta = r - gamma * om + gamma * q_next - q_cur

        do_actor = actor_on and (t + 1) % inner == 0
        if do_actor:
            p1 = probs[s, a]
            if reg_kind == ENTROPY:
                g = strength * (1.0 + math.log(p1))
            else:
                g = strength * p1
            coef = (q_cur - g) * (mix * sigma[s, a]) / p1
            for k in range(n_par):
                mean = 0.0
                for b in range(n_a):
                    mean += sigma[s, b] * pfeat[s * n_a + b, k]
                psi[k] = coef * (pfeat[row, k] - mean)

        beta_w = c_scale / (c_offset + t) ** c_exp
        step_w = 0.0
        for k in range(n_k):
            d = beta_w * delta * phi[row, k]
            omega[k] += d
            step_w += d * d
        if not math.isfinite(delta) or not math.isfinite(step_w):
            return DIVERGED, i, s, a

        step_th = 0.0
        if do_actor:
            beta_th = a_scale / (a_offset + t // inner) ** a_exp
            for k in range(n_par):
                new = theta[k] + beta_th * psi[k]
                if new > bound:
                    new = bound
                elif new < -bound:
                    new = -bound
                step_th += (new - theta[k]) ** 2
                theta[k] = new
                acc_psi[k] += beta_th * psi[k]
            acc[4] += beta_th
            policy_table(theta, pfeat, eps, sigma, probs)
            omega_rows(probs, reg_kind, strength, omega_state)

        acc[0] += delta
        acc[1] += abs(delta)
        acc[2] += math.sqrt(step_th)
        acc[3] += math.sqrt(step_w)
        acc[5] += 1.0
        s = s2
        a = a2
    return OK, n_steps, s, a
