"""Command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 oracle or numeric error,
3 divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .critic import run_policy_evaluation
from .errors import ConfigError, RegMdpError
from .harness import RunReport, freeze_actor, run_actor_critic, validate_kushner_clark
from .io import build_run_config, config_hash, load_config_dict, read_csv, thread_cap, write_csv, write_json
from .mdp import induced_chain, restart_chain, validate_assumptions
from .oracle import h_infinity_stability, objective_J, projected_fixed_point
from .sampler import RESTART, resolve_restart

EXIT_OK = 0
EXIT_CONFIG = 1

TRACE_FILES = ("critic_trace.csv", "actor_trace.csv")
PLOT_POINTS = 200


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regmdp", description="Regularized actor-critic experiments on finite MDPs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--seed", type=_seed, help="overrides the first configured seed")
        p.add_argument("--out", default=".", help="parent directory for the run directory")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (dotted key, JSON value); repeatable")
        p.add_argument("--unsafe", action="store_true",
                       help="run even if the step-size conditions are violated")
        return p

    with_config("solve-exact", "exact q, v, omega* and stability for the initial policy")
    with_config("run-critic", "policy evaluation under the initial policy")
    run_ac = with_config("run-ac", "coupled actor-critic run")
    run_ac.add_argument("--freeze-actor", action="store_true", help="keep theta fixed")
    with_config("validate", "check config, assumptions and step sizes without running")
    sweep = with_config("sweep", "run-ac over every configured seed in parallel")
    sweep.add_argument("--freeze-actor", action="store_true", help="keep theta fixed")

    plot = sub.add_parser("plot-data", help="downsampled plot-ready CSVs from a run directory")
    plot.add_argument("run_dir")
    plot.add_argument("--out", help="output directory (defaults to the run directory)")
    plot.add_argument("--points", type=int, default=PLOT_POINTS, help="maximum rows per CSV")
    return parser


def _prepare(args):
    config = load_config_dict(args.config, args.overrides)
    run_config = build_run_config(config, unsafe=args.unsafe)
    seed = run_config.seeds[0] if args.seed is None else args.seed
    return config, run_config, seed


def _run_dir(args, config, seed):
    name = args.command + ("-frozen" if getattr(args, "freeze_actor", False) else "")
    return Path(args.out) / f"{name}-{config_hash(config)}-seed{seed}"


def _sampled_chain(run_config, table):
    if run_config.sampler_mode == RESTART:
        xi = resolve_restart(run_config.xi, run_config.mdp.n_states)
        return restart_chain(run_config.mdp, table, xi)
    return induced_chain(run_config.mdp, table)


def cmd_solve_exact(args) -> int:
    config, rc, seed = _prepare(args)
    table = rc.initial_policy().tabular()
    chain = _sampled_chain(rc, table)
    solution = projected_fixed_point(rc.mdp, table, rc.reg, rc.features, chain=chain)
    stability = h_infinity_stability(rc.mdp, table, rc.features, chain=chain)
    xi = resolve_restart(rc.xi, rc.mdp.n_states)
    payload = solution.to_dict()
    payload.update(
        policy=table.probs.tolist(),
        gamma=rc.mdp.discount,
        J=objective_J(rc.mdp, table, rc.reg, xi),
        stability={
            "matrix": stability.matrix.tolist(),
            "max_real_eig": stability.max_real_eig,
            "stable": stability.stable,
        },
        config_hash=config_hash(config),
    )
    out = _run_dir(args, config, seed)
    out.mkdir(parents=True, exist_ok=True)
    write_json(payload, out / "exact_solution.json")
    print(out)
    return EXIT_OK


def cmd_run_critic(args) -> int:
    config, rc, seed = _prepare(args)
    _, trace = run_policy_evaluation(
        rc.mdp, rc.initial_policy(), rc.reg, rc.features, rc.critic_schedule, rc.n_steps, seed,
        sampler_mode=rc.sampler_mode, xi=rc.xi, omega_mode=rc.omega_mode,
        checkpoints=rc.checkpoint_grid(),
    )
    summary = {
        "seed": seed,
        "n_steps": rc.n_steps,
        "omega_star": trace.omega_star.tolist(),
        "final_omega_error": float(trace.omega_error[-1]),
        "final_relative_error": float(trace.relative_error[-1]),
        "config_hash": config_hash(config),
    }
    out = _run_dir(args, config, seed)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(trace.rows(), RunReport.CRITIC_COLUMNS, out / "critic_trace.csv")
    write_json(summary, out / "summary.json")
    print(out)
    return EXIT_OK


def _write_ac(report, rc, config, out):
    summary = report.summary()
    summary["config_hash"] = config_hash(config)
    summary["kushner_clark"] = validate_kushner_clark(rc, report)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(report.critic_rows(), RunReport.CRITIC_COLUMNS, out / "critic_trace.csv")
    write_csv(report.actor_rows(), RunReport.ACTOR_COLUMNS, out / "actor_trace.csv")
    write_json(summary, out / "summary.json")
    return summary


def cmd_run_ac(args) -> int:
    config, rc, seed = _prepare(args)
    if args.freeze_actor:
        rc = freeze_actor(rc)
    report = run_actor_critic(rc, seed)
    out = _run_dir(args, config, seed)
    _write_ac(report, rc, config, out)
    print(out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, rc, _ = _prepare(args)
    if args.freeze_actor:
        rc = freeze_actor(rc)
    seeds = [args.seed] if args.seed is not None else list(rc.seeds)
    root = _run_dir(args, config, "s").with_name(
        "sweep" + ("-frozen" if args.freeze_actor else "") + f"-{config_hash(config)}")
    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(seeds))) as pool:
        reports = dict(zip(seeds, pool.map(lambda s: run_actor_critic(rc, s), seeds)))
    results = {}
    for seed in sorted(reports):
        summary = _write_ac(reports[seed], rc, config, root / f"seed{seed}")
        results[str(seed)] = {
            k: summary[k] for k in ("final_J", "initial_J", "final_grad_residual", "final_omega_error")
        }
    residuals = [r["final_grad_residual"] for r in results.values()]
    write_json(
        {"config_hash": config_hash(config), "seeds": results,
         "median_final_grad_residual": float(np.median(residuals))},
        root / "sweep_summary.json",
    )
    print(root)
    return EXIT_OK


def cmd_validate(args) -> int:
    config, rc, seed = _prepare(args)
    table = rc.initial_policy().tabular()
    assumptions = validate_assumptions(rc.mdp, table, rc.epsilon)
    stability = h_infinity_stability(rc.mdp, table, rc.features, chain=_sampled_chain(rc, table))
    problems = rc.step_size_problems()
    report = {
        "config_hash": config_hash(config),
        "assumptions": assumptions.to_dict(),
        "step_size_problems": problems,
        "critic_stable": stability.stable,
        "max_real_eig": stability.max_real_eig,
        "ok": bool(assumptions.ok and stability.stable and not problems),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    if not assumptions.ok or not stability.stable:
        return 2
    return EXIT_OK


def _log_downsample(n_rows: int, n_points: int) -> np.ndarray:
    """Row indices, log-spaced in position, always keeping the first and last row."""
    if n_rows <= n_points:
        return np.arange(n_rows)
    idx = np.unique(np.round(np.logspace(0, np.log10(n_rows), n_points)).astype(int) - 1)
    return np.unique(np.concatenate([[0], idx, [n_rows - 1]]))


def cmd_plot_data(args) -> int:
    run_dir = Path(args.run_dir)
    missing = [name for name in TRACE_FILES if not (run_dir / name).is_file()]
    if missing:
        raise ConfigError(f"{run_dir} lacks trace files: expected {', '.join(TRACE_FILES)}; "
                          f"missing {', '.join(missing)}")
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    out = Path(args.out) if args.out else run_dir
    plots = (
        ("critic_trace.csv", "omega_error", "plot_omega_error.csv"),
        ("actor_trace.csv", "J_theta", "plot_J.csv"),
        ("actor_trace.csv", "grad_residual", "plot_residual.csv"),
    )
    tables = {}
    for source, column, _ in plots:
        if source not in tables:
            tables[source] = read_csv(run_dir / source)
        fields, rows = tables[source]
        if "step" not in fields or column not in fields:
            raise ConfigError(f"{source} has no '{column}' column")
    out.mkdir(parents=True, exist_ok=True)
    for source, column, target in plots:
        _, rows = tables[source]
        keep = _log_downsample(len(rows), args.points)
        picked = [{"step": rows[i]["step"], column: rows[i][column]} for i in keep]
        write_csv(picked, ("step", column), out / target)
    print(out)
    return EXIT_OK


COMMANDS = {
    "solve-exact": cmd_solve_exact,
    "run-critic": cmd_run_critic,
    "run-ac": cmd_run_ac,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except RegMdpError as exc:
        print(f"regmdp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
