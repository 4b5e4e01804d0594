"""JSON run configuration: schema, validation and task assembly."""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import jsonschema

from .automata import parse_hoa, translate_fragment
from .envs import ENVS, make_env
from .ltl import atoms, parse_ltl
from .trainer.policy import Policy, build_policy
from .trainer.rollout import Task, TrainConfig

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["env"],
    "properties": {
        "env": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": sorted(ENVS)},
                "params": {"type": "object", "additionalProperties": _NUM},
            },
        },
        "formula": {"type": "string", "minLength": 1},
        "hoa": {"type": "string", "minLength": 1},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "mlp"]},
                "init": {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]},
                "hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "eps_head": {"type": "boolean"},
                "sigma": _POS,
                "obs_scale": {"type": "array", "items": _POS},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "tau": {"oneOf": [_POS, {"type": "object", "additionalProperties": _POS}]},
                "horizon": {"type": "integer", "minimum": 1},
                "iterations": {"type": "integer", "minimum": 0},
                "n_rollouts": {"type": "integer", "minimum": 1},
                "lr": _POS,
                "optimizer": {"enum": ["sgd", "adam"]},
                "seed": {"type": "integer", "minimum": 0},
                "estimator": {"enum": ["first", "zeroth"]},
                "sigma": _POS,
                "first_noise": {"type": "number", "minimum": 0},
                "baseline": {"type": "boolean"},
                "reward": {"enum": ["soft", "discrete"]},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "start": _NUM,
                "stop": _NUM,
                "step": _POS,
                "n_rollouts": {"type": "integer", "minimum": 1},
                "noise": {"type": "number", "minimum": 0},
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "episodes": {"type": "integer", "minimum": 1},
                "snapshot": {"type": "string"},
            },
        },
        "output": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"dir": {"type": "string"}, "timing": {"type": "boolean"}},
                },
            ]
        },
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class RunConfig:
    env: str
    env_params: dict
    formula: str | None
    hoa: str | None
    policy: dict
    train: TrainConfig
    sweep: dict
    eval: dict
    out_dir: str
    timing: bool
    base: Path

    def make_task(self) -> Task:
        env = make_env(self.env, **self.env_params)
        if self.formula is not None:
            f = parse_ltl(self.formula)
            return Task(env, translate_fragment(f), atoms(f))
        path = Path(self.hoa)
        if not path.is_absolute():
            path = self.base / path
        return Task.from_ldba(env, parse_hoa(path.read_text()))

    def make_policy(self, task: Task) -> Policy:
        desc = dict(self.policy)
        spec = task.env.spec
        if desc["kind"] == "constant":
            desc.setdefault("init", [0.5 * (lo + hi) for lo, hi in zip(spec.action_low, spec.action_high)])
        else:
            desc.update(
                obs_dim=spec.state_dim,
                n_states=task.ldba.n_states,
                low=list(spec.action_low),
                high=list(spec.action_high),
            )
        desc.setdefault("sigma", self.train.sigma)
        return build_policy(desc)


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def validate(raw: dict):
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errs:
        e = errs[0]
        raise ConfigError(f"{_path(e)}: {e.message}")
    if ("formula" in raw) == ("hoa" in raw):
        raise ConfigError("formula/hoa: exactly one of 'formula' or 'hoa' must be given")
    params = raw["env"].get("params", {})
    env_cls = ENVS[raw["env"]["name"]]
    known = {f.name for f in fields(env_cls) if f.init}
    defaults = env_cls()
    for k, v in params.items():
        if k not in known:
            raise ConfigError(f"env.params.{k}: unknown parameter for {raw['env']['name']}")
        if isinstance(getattr(defaults, k), int) and v != int(v):
            raise ConfigError(f"env.params.{k}: must be an integer")


def _env_params(name, params):
    defaults = ENVS[name]()
    return {k: int(v) if isinstance(getattr(defaults, k), int) else float(v) for k, v in params.items()}


def from_dict(raw: dict, base: Path | str = ".", seed: int | None = None, out: str | None = None) -> RunConfig:
    validate(raw)
    env_name = raw["env"]["name"]
    tr = dict(raw.get("train", {}))
    tr.setdefault("tau", ENVS[env_name].default_tau)
    if seed is not None:
        tr["seed"] = seed
    try:
        train = TrainConfig(**tr)
    except ValueError as e:
        raise ConfigError(f"train: {e}") from None
    output = raw.get("output", "out")
    if isinstance(output, str):
        output = {"dir": output}
    return RunConfig(
        env=env_name,
        env_params=_env_params(env_name, raw["env"].get("params", {})),
        formula=raw.get("formula"),
        hoa=raw.get("hoa"),
        policy=dict(raw.get("policy", {"kind": "constant"})),
        train=train,
        sweep=dict(raw.get("sweep", {})),
        eval=dict(raw.get("eval", {})),
        out_dir=out or output.get("dir", "out"),
        timing=output.get("timing", True),
        base=Path(base),
    )


def load(path, seed: int | None = None, out: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"<root>: not valid JSON ({e.msg} at line {e.lineno})") from None
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a JSON object")
    return from_dict(raw, path.parent, seed, out)
