"""JSON/CSV formats: MDP files, run configs, traces."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from .critic import DEFAULT_ACTOR_SCHEDULE, DEFAULT_CRITIC_SCHEDULE, StepSchedule
from .errors import ConfigError, RegMdpError
from .harness import RunConfig, bandit_instance, generate_random_instance
from .mdp import FiniteMdp
from .oracle import FeatureMap
from .regularizers import Regularizer

CONFIG_VERSION = 1

MDP_SCHEMA = {
    "type": "object",
    "required": ["n_states", "n_actions", "gamma", "transition", "reward"],
    "additionalProperties": False,
    "properties": {
        "n_states": {"type": "integer", "minimum": 1},
        "n_actions": {"type": "integer", "minimum": 1},
        "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "transition": {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
        "reward": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    },
}

_SCHEDULE = {
    "type": "object",
    "required": ["scale", "exponent"],
    "additionalProperties": False,
    "properties": {
        "scale": {"type": "number", "minimum": 0},
        "exponent": {"type": "number", "exclusiveMinimum": 0},
        "offset": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["version", "mdp", "features", "regularizer", "n_steps"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "mdp": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["file"],
                    "additionalProperties": False,
                    "properties": {"file": {"type": "string"}},
                },
                {
                    "type": "object",
                    "required": ["generator"],
                    "additionalProperties": False,
                    "properties": {
                        "generator": {
                            "type": "object",
                            "required": ["seed", "n_states", "n_actions"],
                            "additionalProperties": False,
                            "properties": {
                                "seed": {"type": "integer", "minimum": 0},
                                "n_states": {"type": "integer", "minimum": 1},
                                "n_actions": {"type": "integer", "minimum": 1},
                                "sparsity": {"type": "number", "minimum": 0, "maximum": 1},
                                "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                            },
                        }
                    },
                },
                {
                    "type": "object",
                    "required": ["bandit"],
                    "additionalProperties": False,
                    "properties": {
                        "bandit": {
                            "type": "object",
                            "required": ["rewards"],
                            "additionalProperties": False,
                            "properties": {
                                "rewards": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                                "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                            },
                        }
                    },
                },
            ]
        },
        "features": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["tabular", "random", "file"]},
                "K": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "path": {"type": "string"},
            },
        },
        "regularizer": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["entropy", "negative_entropy", "l2", "half_squared_l2"]},
                "strength": {"type": "number", "minimum": 0},
            },
        },
        "critic_schedule": _SCHEDULE,
        "actor_schedule": _SCHEDULE,
        "theta_max": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "n_steps": {"type": "integer", "minimum": 0},
        "n_checkpoints": {"type": "integer", "minimum": 1},
        "checkpoints": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "omega_mode": {"enum": ["exact", "sampled", "literal"]},
        "sampler": {"enum": ["raw", "restart"]},
        "restart_dist": {"oneOf": [{"const": "uniform"}, {"type": "array", "items": {"type": "number"}}]},
        "loop": {"enum": ["simultaneous", "nested"]},
        "inner_steps": {"type": "integer", "minimum": 1},
        "theta0": {"type": "array", "items": {"type": "number"}},
    },
}


def _validate(instance, schema, what):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {exc.message}") from None


def mdp_to_dict(mdp: FiniteMdp) -> dict:
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "gamma": mdp.discount,
        "transition": mdp.transition.tolist(),
        "reward": mdp.reward.tolist(),
    }


def mdp_from_dict(data: dict) -> FiniteMdp:
    _validate(data, MDP_SCHEMA, "MDP file")
    p = np.asarray(data["transition"], dtype=float)
    r = np.asarray(data["reward"], dtype=float)
    expected = (data["n_states"], data["n_actions"], data["n_states"])
    if p.shape != expected:
        raise ConfigError(f"transition has shape {p.shape}, expected {expected}")
    if r.shape != expected[:2]:
        raise ConfigError(f"reward has shape {r.shape}, expected {expected[:2]}")
    try:
        return FiniteMdp(p, r, data["gamma"])
    except (RegMdpError, ValueError) as exc:
        raise ConfigError(f"invalid MDP: {exc}") from exc


def load_mdp(path) -> FiniteMdp:
    with open(path) as fh:
        return mdp_from_dict(json.load(fh))


def save_mdp(mdp: FiniteMdp, path):
    write_json(mdp_to_dict(mdp), path)


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_csv(rows, columns, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames, [dict(r) for r in reader]


def apply_overrides(config: dict, overrides) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    config = copy.deepcopy(config)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return config


def load_config_dict(path, overrides=()) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    config = apply_overrides(raw, overrides)
    _validate(config, CONFIG_SCHEMA, "config")
    config["_base_dir"] = str(Path(path).resolve().parent)
    return config


def config_hash(config: dict) -> str:
    clean = {k: v for k, v in config.items() if not k.startswith("_")}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _resolve(config, path):
    p = Path(path)
    return p if p.is_absolute() else Path(config.get("_base_dir", ".")) / p


def _schedule(spec, default):
    if spec is None:
        return default
    return StepSchedule(float(spec["scale"]), float(spec["exponent"]), float(spec.get("offset", 1.0)))


def build_instance(config: dict):
    """(mdp, features) described by a validated config."""
    mdp_spec, feat_spec = config["mdp"], config["features"]
    generated_phi = None
    if "file" in mdp_spec:
        mdp = load_mdp(_resolve(config, mdp_spec["file"]))
    elif "bandit" in mdp_spec:
        b = mdp_spec["bandit"]
        mdp = bandit_instance(b["rewards"], b.get("gamma", 0.5))
    else:
        g = mdp_spec["generator"]
        K = feat_spec.get("K") if feat_spec["kind"] == "random" and "seed" not in feat_spec else None
        mdp, feats = generate_random_instance(g["seed"], g["n_states"], g["n_actions"], K,
                                              g.get("sparsity", 0.0), g.get("gamma", 0.9))
        if K is not None:
            generated_phi = feats
    kind = feat_spec["kind"]
    try:
        if kind == "tabular":
            features = FeatureMap.tabular(mdp.n_pairs)
        elif kind == "file":
            if "path" not in feat_spec:
                raise ConfigError("file features need a 'path'")
            features = FeatureMap(np.asarray(json.loads(_resolve(config, feat_spec["path"]).read_text()), dtype=float))
        elif generated_phi is not None:
            features = generated_phi
        else:
            if "K" not in feat_spec:
                raise ConfigError("random features need 'K'")
            rng = np.random.Generator(np.random.Philox(feat_spec.get("seed", 0)))
            while True:
                phi = rng.standard_normal((mdp.n_pairs, feat_spec["K"]))
                if np.linalg.svd(phi, compute_uv=False).min() > 1e-6:
                    break
            features = FeatureMap(phi)
    except (RegMdpError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid features: {exc}") from exc
    if features.n_pairs != mdp.n_pairs:
        raise ConfigError(f"features have {features.n_pairs} rows, MDP has {mdp.n_pairs} pairs")
    return mdp, features


def build_run_config(config: dict, unsafe: bool = False) -> RunConfig:
    mdp, features = build_instance(config)
    reg_spec = config["regularizer"]
    try:
        return RunConfig(
            mdp=mdp,
            features=features,
            reg=Regularizer(reg_spec["kind"], reg_spec.get("strength", 1.0)),
            critic_schedule=_schedule(config.get("critic_schedule"), DEFAULT_CRITIC_SCHEDULE),
            actor_schedule=_schedule(config.get("actor_schedule"), DEFAULT_ACTOR_SCHEDULE),
            theta_max=config.get("theta_max", 10.0),
            epsilon=config.get("epsilon", 1e-3),
            n_steps=config["n_steps"],
            n_checkpoints=config.get("n_checkpoints", 30),
            checkpoints=tuple(config["checkpoints"]) if "checkpoints" in config else None,
            seeds=tuple(config.get("seeds", [0])),
            omega_mode=config.get("omega_mode", "exact"),
            sampler_mode=config.get("sampler", "raw"),
            xi=config.get("restart_dist"),
            loop=config.get("loop", "simultaneous"),
            inner_steps=config.get("inner_steps", 10),
            unsafe=unsafe,
            theta0=tuple(config["theta0"]) if "theta0" in config else None,
        )
    except ConfigError:
        raise
    except (RegMdpError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def thread_cap(default: int | None = None) -> int:
    raw = os.environ.get("REGMDP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"REGMDP_THREADS must be an integer, got {raw!r}") from None
    return default or (os.cpu_count() or 1)
