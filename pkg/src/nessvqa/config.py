"""Run configuration: a nested YAML document plus command-line overrides."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import re

import yaml

from .errors import BadParams, ConfigError
from .models import DEFAULT_GAMMAS, MODELS

DEFAULTS: dict[str, Any] = {
    "model": {"name": "ising", "n_sites": 2, "g": 1.0, "gammas": None, "boundary": "open"},
    "convention": "standard",
    "ansatz": {"d1": 4, "d2": 4},
    "cost": {"mode": "exact", "n_unitaries": 1000, "shots": 10, "ensemble": "pauli", "faithful": False},
    "optimizer": {
        "method": "bfgs",
        "learning_rate": 0.1,
        "epsilon": 1e-12,
        "max_iters": 2000,
        "grad_mode": "param_shift",
        "fd_step": 1e-5,
        "restarts": 8,
        "init_scale": 0.1,
    },
    "sweep": {"parameter": "g", "values": None, "warm_start": True},
    "observables": [],
    "seed": 0,
    "output": {"path": None, "timing": False},
    "gradcheck": {"samples": 50, "fd_step": 1e-5, "tolerance": 1e-6, "method": "param_shift", "reference": "finite_diff"},
    "shadowbench": {
        "n_grid": [200, 800],
        "repeats": 400,
        "shots": 10,
        "ensemble": "pauli",
        "locality": None,
        "theta_scale": 3.14159,
        "distill_eps": 0.1,
        "distill_observable": None,
        "distill_runs": 60,
        "distill_unitaries": 2000,
        "distill_tuples": 20000,
    },
}

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats such as ``1e-6``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$|^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$"),
    list("-+0123456789."),
)


def _load(text: str):
    return yaml.load(text, Loader=_Loader)


_CHOICES = {
    "convention": ("standard", "paper"),
    "model.boundary": ("open", "periodic"),
    "cost.mode": ("exact", "shadow"),
    "cost.ensemble": ("pauli", "clifford"),
    "optimizer.method": ("bfgs", "gd"),
    "optimizer.grad_mode": ("param_shift", "general_shift", "finite_diff"),
    "gradcheck.method": ("param_shift", "general_shift", "finite_diff"),
    "gradcheck.reference": ("param_shift", "general_shift", "finite_diff"),
    "shadowbench.ensemble": ("pauli", "clifford"),
    "sweep.parameter": ("g",),
}


def _key_lines(text: str) -> dict[str, int]:
    """Map dotted key paths to 1-based source lines."""
    lines: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines
    walk(root, "")
    return lines


def _merge(base: dict, update: dict, lines: dict[str, int], prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in base:
            raise ConfigError(_where(path, lines) + f"unknown field {path!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(_where(path, lines) + f"{path} must be a mapping")
            out[key] = _merge(base[key], value, lines, path)
        else:
            out[key] = value
    return out


def _where(path: str, lines: dict[str, int]) -> str:
    return f"line {lines[path]}: " if path in lines else ""


def _get(cfg: dict, path: str):
    node = cfg
    for part in path.split("."):
        node = node[part]
    return node


def _set(cfg: dict, path: str, value) -> None:
    parts = path.split(".")
    node = cfg
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown field {path!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown field {path!r}")
    node[parts[-1]] = value


@dataclass
class RunConfig:
    data: dict
    lines: dict[str, int]
    source: str | None = None

    def __getitem__(self, path: str):
        return _get(self.data, path)

    def where(self, path: str) -> str:
        return _where(path, self.lines)

    def resolved(self) -> dict:
        return copy.deepcopy(self.data)


def parse_config(text: str = "", overrides: dict[str, Any] | None = None, source: str | None = None) -> RunConfig:
    try:
        raw = _load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{loc}invalid YAML: {getattr(exc, 'problem', exc)}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    lines = _key_lines(text)
    data = _merge(DEFAULTS, raw, lines)
    for path, value in (overrides or {}).items():
        _set(data, path, value)
    cfg = RunConfig(data, lines, source)
    validate(cfg)
    return cfg


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    if path is None:
        return parse_config("", overrides)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides, str(path))


def _fail(cfg: RunConfig, path: str, msg: str):
    raise ConfigError(cfg.where(path) + f"{path}: {msg}")


def validate(cfg: RunConfig) -> None:
    d = cfg.data
    for path, choices in _CHOICES.items():
        if _get(d, path) not in choices:
            _fail(cfg, path, f"must be one of {choices}, got {_get(d, path)!r}")
    name = str(d["model"]["name"]).lower()
    if name not in MODELS:
        _fail(cfg, "model.name", f"unknown model {name!r}; choose from {sorted(MODELS)}")
    d["model"]["name"] = name
    if d["model"]["gammas"] is None:
        d["model"]["gammas"] = list(DEFAULT_GAMMAS[name])
    gammas = d["model"]["gammas"]
    if not isinstance(gammas, list) or not all(isinstance(x, (int, float)) for x in gammas):
        _fail(cfg, "model.gammas", "must be a list of numbers")
    expected = len(DEFAULT_GAMMAS[name])
    if len(gammas) != expected:
        raise BadParams(
            cfg.where("model.gammas") + f"{name} model takes {expected} dissipation strengths, got {len(gammas)}",
            field="model.gammas",
        )
    for path in ("model.n_sites", "ansatz.d1", "ansatz.d2", "cost.n_unitaries", "cost.shots",
                 "optimizer.max_iters", "optimizer.restarts", "gradcheck.samples", "shadowbench.repeats",
                 "shadowbench.shots", "seed"):
        val = _get(d, path)
        if not isinstance(val, int) or isinstance(val, bool) or val < (0 if path == "seed" else 1):
            _fail(cfg, path, f"must be a positive integer, got {val!r}")
    for path in ("optimizer.epsilon", "optimizer.learning_rate", "optimizer.fd_step", "gradcheck.fd_step",
                 "gradcheck.tolerance"):
        val = _get(d, path)
        if not isinstance(val, (int, float)) or val <= 0:
            _fail(cfg, path, f"must be a positive number, got {val!r}")
    if not isinstance(d["model"]["g"], (int, float)):
        _fail(cfg, "model.g", "must be a number")
    obs = d["observables"]
    if not isinstance(obs, list):
        _fail(cfg, "observables", "must be a list of Pauli strings")
    n = d["model"]["n_sites"]
    for o in obs:
        if not isinstance(o, str) or len(o) != n or any(c not in "IXYZ" for c in o.upper()):
            _fail(cfg, "observables", f"{o!r} is not a Pauli string on {n} sites")
    values = d["sweep"]["values"]
    if values is not None and (not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values)):
        _fail(cfg, "sweep.values", "must be a list of numbers")


def parse_override(item: str) -> tuple[str, Any]:
    """``key.path=value`` with the value parsed as YAML."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, value = item.split("=", 1)
    try:
        return key.strip(), _load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {item!r}: {exc}") from exc
