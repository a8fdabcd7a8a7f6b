"""Flat ``key = value`` experiment configuration.

One setting per line, ``#`` starts a comment. Values are read as JSON when
they parse (numbers, ``true``/``false``, ``[lists]``, ``"strings"``) and as
bare strings otherwise, so ``channel = saturated_feedback`` works unquoted.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import BUILTINS, ChannelDrift, ChannelSpec, Message
from .stochastic import TimeGrid, make_even_grid

EXPERIMENTS = ("em-error", "mi-converge", "mi-crosscheck", "capacity-sweep", "sk-demo", "power-audit")
CHANNEL_EXPERIMENTS = {"em-error", "mi-converge", "mi-crosscheck", "power-audit"}

CHANNEL_PARAMS = {
    "zero": {"prior"},
    "constant_antipodal": {"a", "prior"},
    "sk_linear_feedback": {"gamma", "theta", "s_floor", "clip", "prior"},
    "saturated_feedback": {"L", "prior"},
}


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _is_int(v) -> bool:
    return isinstance(v, numbers.Integral) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool) and np.isfinite(v)


def _pos_int(v):
    return None if _is_int(v) and v >= 1 else "must be a positive integer"


def _pos_real(v):
    return None if _is_real(v) and v > 0 else "must be a positive number"


def _real(v):
    return None if _is_real(v) else "must be a finite number"


def _reals(v):
    if isinstance(v, list) and v and all(_is_real(x) for x in v):
        return None
    return "must be a non-empty list of numbers"


def _pos_reals(v):
    if isinstance(v, list) and v and all(_is_real(x) and x > 0 for x in v):
        return None
    return "must be a non-empty list of positive numbers"


def _pos_ints(v):
    if isinstance(v, list) and v and all(_is_int(x) and x >= 1 for x in v):
        return None
    return "must be a non-empty list of positive integers"


def _string(v):
    return None if isinstance(v, str) and v else "must be a non-empty string"


def _boolean(v):
    return None if isinstance(v, bool) else "must be true or false"


def _experiment(v):
    return None if v in EXPERIMENTS else f"must be one of {', '.join(EXPERIMENTS)}"


def _channel(v):
    if v in BUILTINS:
        return None
    return f"unknown channel {v!r}; available channels: {', '.join(BUILTINS)}"


SCHEMA = {
    "experiment": _experiment,
    "seed": lambda v: None if _is_int(v) and v >= 0 else "must be a nonnegative integer",
    "channel": _channel,
    "a": _real,
    "gamma": _real,
    "theta": _reals,
    "s_floor": _pos_real,
    "clip": _pos_real,
    "L": _pos_real,
    "prior": _reals,
    "T": _pos_real,
    "P": _pos_real,
    "n": _pos_int,
    "ns": _pos_ints,
    "levels": lambda v: None if _is_int(v) and v >= 2 else "must be an integer >= 2",
    "n_paths": lambda v: None if _is_int(v) and v >= 100 else "must be an integer >= 100",
    "ref_factor": lambda v: None if _is_int(v) and v >= 16 else "must be an integer >= 16",
    "omegas": _pos_reals,
    "rate": _pos_real,
    "horizons": _pos_reals,
    "dt": _pos_real,
    "n_trials": lambda v: None if _is_int(v) and v >= 100 else "must be an integer >= 100",
    "probes": _pos_int,
    "output_dir": _string,
    "threads": _pos_int,
    "deterministic": _boolean,
}

DEFAULTS = {
    "T": 1.0,
    "P": 2.0,
    "n": 64,
    "ns": [8, 16, 32, 64, 128],
    "levels": 4,
    "n_paths": 10000,
    "ref_factor": 64,
    "omegas": [1.0, 10.0, 100.0],
    "rate": 0.4,
    "horizons": [2.0, 4.0, 8.0],
    "dt": 1.0 / 64,
    "n_trials": 10000,
    "probes": 10000,
    "output_dir": "results",
    "threads": 1,
    "deterministic": True,
    "a": 1.0,
    "gamma": 1.0,
    "theta": [-1.0, 1.0],
    "L": 1.0,
}


@dataclass
class ExperimentConfig:
    values: dict
    source: str | None = None
    explicit: set = field(default_factory=set)

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return DEFAULTS[key]

    def get(self, key, default=None):
        if key in self.values:
            return self.values[key]
        return DEFAULTS.get(key, default)

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    def echo(self) -> dict:
        """Every setting in effect, defaults included."""
        keys = {"experiment", "seed"} | set(self.values)
        if self.experiment in CHANNEL_EXPERIMENTS:
            keys.add("channel")
        out = {}
        for key in sorted(keys | (set(DEFAULTS) & _relevant(self.experiment, self.values.get("channel")))):
            out[key] = self.get(key)
        return out


def _relevant(experiment: str, channel: str | None) -> set:
    common = {"output_dir", "threads", "deterministic"}
    per = {
        "em-error": {"T", "P", "ns", "n_paths", "ref_factor"},
        "mi-converge": {"T", "P", "n", "levels", "n_paths"},
        "mi-crosscheck": {"T", "P", "n", "n_paths"},
        "capacity-sweep": {"P", "omegas"},
        "sk-demo": {"P", "rate", "horizons", "dt", "n_trials"},
        "power-audit": {"T", "P", "n", "n_paths", "probes"},
    }[experiment]
    if experiment in CHANNEL_EXPERIMENTS and channel in CHANNEL_PARAMS:
        per = per | CHANNEL_PARAMS[channel]
    return common | per


def parse_text(text: str) -> tuple[dict, list[str]]:
    values, errors = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, val = (part.strip() for part in line.partition("="))
        if not key:
            errors.append(f"line {lineno}: missing key")
            continue
        if key in values:
            errors.append(f"{key}: set more than once (line {lineno})")
            continue
        try:
            values[key] = json.loads(val)
        except json.JSONDecodeError:
            values[key] = val
    return values, errors


def check(values: dict) -> list[str]:
    """All schema errors of a parsed config, each prefixed by its field."""
    errors = []
    for key in values:
        if key not in SCHEMA:
            errors.append(f"{key}: unknown key")
    for key, validate in SCHEMA.items():
        if key in values:
            msg = validate(values[key])
            if msg:
                errors.append(f"{key}: {msg}")
    if "experiment" not in values:
        errors.append("experiment: required")
    if "seed" not in values:
        errors.append("seed: required (there is no clock-based default)")
    exp = values.get("experiment")
    if exp in EXPERIMENTS:
        channel = values.get("channel")
        if exp in CHANNEL_EXPERIMENTS and "channel" not in values:
            errors.append(f"channel: required for experiment {exp}; available channels: {', '.join(BUILTINS)}")
        allowed = _relevant(exp, channel) | {"experiment", "seed"}
        if exp in CHANNEL_EXPERIMENTS:
            allowed.add("channel")
        for key in values:
            if key in SCHEMA and key not in allowed:
                where = f"channel {channel}" if key in set().union(*CHANNEL_PARAMS.values()) else f"experiment {exp}"
                errors.append(f"{key}: not a setting of {where}")
    if not errors:
        try:
            if values["experiment"] in CHANNEL_EXPERIMENTS:
                build_channel(ExperimentConfig(values))
        except ValueError as exc:
            errors.append(f"channel: {exc}")
    return errors


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    text = Path(path).read_text()
    values, errors = parse_text(text)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    errors += check(values)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(values, source=str(path), explicit=set(values))


def validate_config(path) -> list[str]:
    """Schema errors of a config file without running it (empty list means ok)."""
    values, errors = parse_text(Path(path).read_text())
    return errors + check(values)


def base_grid(cfg: ExperimentConfig) -> TimeGrid:
    return make_even_grid(cfg["T"], cfg["n"])


def coarsest_step(cfg: ExperimentConfig) -> float:
    if cfg.experiment == "em-error":
        return cfg["T"] / min(cfg["ns"])
    return cfg["T"] / cfg["n"]


def build_drift(cfg: ExperimentConfig) -> ChannelDrift:
    name = cfg["channel"]
    factory = BUILTINS[name]
    if name == "zero":
        return factory()
    if name == "constant_antipodal":
        return factory(cfg["a"])
    if name == "saturated_feedback":
        return factory(cfg["L"])
    theta = [float(t) for t in cfg["theta"]]
    return factory(
        cfg["gamma"],
        {t: t for t in theta},
        s_floor=cfg.get("s_floor") or coarsest_step(cfg),
        clip=cfg.get("clip"),
    )


def build_channel(cfg: ExperimentConfig) -> ChannelSpec:
    drift = build_drift(cfg)
    alphabet = drift.alphabet
    prior = cfg.get("prior")
    message = Message.uniform(alphabet) if prior is None else Message(alphabet, prior)
    return ChannelSpec(drift, message, cfg["T"], cfg["P"])
