"""Coupled actor-critic on the entropy bandit and the standard 5x3 instance.

Reports the projected-gradient residual and J at the final checkpoint, and
compares J(theta_final) with the best J over two one-parameter policy
families scanned on a grid: theta = c * q_soft (the soft-optimal logits at
inverse temperature c) and theta = c * theta_final.
"""

import argparse
from pathlib import Path

import numpy as np

from regmdp import (
    FeatureMap,
    Regularizer,
    RunConfig,
    StepSchedule,
    bandit_instance,
    generate_random_instance,
    objective_J,
    run_actor_critic,
    soft_value_iteration,
)
from regmdp.io import write_json


def grid_best(mdp, policy0, direction, bound, n=401):
    scale = bound / max(np.max(np.abs(direction)), 1e-12)
    best = -np.inf
    for c in np.linspace(0.0, scale, n):
        best = max(best, objective_J(mdp, policy0.with_theta(c * direction).tabular(), Regularizer.entropy()))
    return best


def run(name, mdp, args):
    cfg = RunConfig(mdp, FeatureMap.tabular(mdp.n_pairs),
                    critic_schedule=StepSchedule(args.critic_scale, 0.6, args.critic_offset),
                    actor_schedule=StepSchedule(args.actor_scale, 0.9, args.actor_offset),
                    n_steps=args.steps)
    reports = [run_actor_critic(cfg, seed) for seed in range(args.seeds)]
    policy0 = cfg.initial_policy()
    _, q_soft, _ = soft_value_iteration(mdp)
    finals = []
    for r in reports:
        j = r.column("J_theta")[-1]
        best = max(grid_best(mdp, policy0, q_soft.reshape(-1), cfg.theta_max),
                   grid_best(mdp, policy0, r.theta, cfg.theta_max))
        finals.append({"seed": r.seed, "J_initial": r.column("J_theta")[0], "J_final": j, "J_grid_best": best,
                       "gap_to_grid": (best - j) / abs(best), "residual": r.column("grad_residual")[-1]})
    summary = {
        "instance": name,
        "median_residual": float(np.median([f["residual"] for f in finals])),
        "median_J_initial": float(np.median([f["J_initial"] for f in finals])),
        "median_J_final": float(np.median([f["J_final"] for f in finals])),
        "max_gap_to_grid": float(np.max([f["gap_to_grid"] for f in finals])),
        "runs": finals,
    }
    print(f"{name}: residual {summary['median_residual']:.4f}, "
          f"J {summary['median_J_initial']:.4f} -> {summary['median_J_final']:.4f}, "
          f"worst gap to grid best {100 * summary['max_gap_to_grid']:.2f}%")
    return summary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=500_000)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--critic-scale", type=float, default=4.0)
    ap.add_argument("--critic-offset", type=float, default=10.0)
    ap.add_argument("--actor-scale", type=float, default=3.0)
    ap.add_argument("--actor-offset", type=float, default=1000.0)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    standard, _ = generate_random_instance(2, 5, 3, gamma=0.8)
    results = [run("bandit", bandit_instance((1.0, 0.0), 0.5), args), run("standard_5x3", standard, args)]
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(results, args.out / "actor_stationarity.json")
    print(f"wrote {args.out / 'actor_stationarity.json'}")


if __name__ == "__main__":
    main()
