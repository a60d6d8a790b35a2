"""Experiment configuration: INI sections with every default pre-filled.

A CartPole run at the stock settings needs only::

    [experiment]
    env = cartpole
    runs = 30
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    env: str = ""
    runs: int = 30
    base_seed: int = 0
    out: str = "results"
    jobs: int = 1
    checkpoint_every: int = 100
    # network (inputs/outputs come from the environment)
    hidden: int = 20
    # training lattice
    size: int = 64
    origin_x: float = 0.1
    origin_y: float = 0.1
    step_x: float = 0.1
    step_y: float = 0.1
    # schedule
    schedule: str = "incremental"
    walk_step: int = 1
    # xnes
    sigma0: float = 0.1
    init_range: float = 1e-5
    # generalist loop
    max_generations: int = 5000
    stagnation_window: int = 50
    threshold_multiplier: float = 1.0
    satisfaction_target: float | None = None  # None: take it from the environment
    # evaluation
    n_eval: int = 3
    local_distance: int = 6
    global_origin_x: float = 0.1
    global_origin_y: float = 0.1
    global_step_x: float = 0.1
    global_step_y: float = 0.1
    global_nx: int = 18
    global_ny: int = 18
    # environment extras
    env_params: dict = field(default_factory=dict)

    def hash(self) -> str:
        """Digest of everything that changes results (not paths or worker counts)."""
        d = asdict(self)
        for k in ("out", "jobs", "runs", "checkpoint_every"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        return cls(**d)


SECTIONS = {
    "experiment": ("env", "runs", "base_seed", "out", "jobs", "checkpoint_every"),
    "net": ("hidden",),
    "training": ("size", "origin_x", "origin_y", "step_x", "step_y"),
    "schedule": ("schedule", "walk_step"),
    "xnes": ("sigma0", "init_range"),
    "generalist": ("max_generations", "stagnation_window", "threshold_multiplier",
                   "satisfaction_target"),
    "metrics": ("n_eval", "local_distance", "global_origin_x", "global_origin_y",
                "global_step_x", "global_step_y", "global_nx", "global_ny"),
}
# [env] holds environment constructor keywords (e.g. x_split, episode_cap)
ENV_KEYS = {"x_split": float, "episode_cap": int, "sufficiency_threshold": float}

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(path: str, name: str, raw: str):
    t = _TYPES[name]
    try:
        if t == "int":
            return int(raw)
        if t in ("float", "float | None"):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{path}: cannot parse {raw!r} as {t}") from None


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if not cfg.env:
        raise ConfigError("experiment.env: missing required key")
    if cfg.env not in ("cartpole", "switch"):
        raise ConfigError(f"experiment.env: unknown environment {cfg.env!r}")
    if cfg.schedule not in ("incremental", "random", "random_walk"):
        raise ConfigError(f"schedule.schedule: unknown schedule {cfg.schedule!r}")
    for path, value, ok in [
        ("experiment.runs", cfg.runs, cfg.runs >= 1),
        ("experiment.jobs", cfg.jobs, cfg.jobs >= 1),
        ("net.hidden", cfg.hidden, cfg.hidden >= 1),
        ("training.size", cfg.size, cfg.size >= 1 and math.isqrt(cfg.size) ** 2 == cfg.size),
        ("schedule.walk_step", cfg.walk_step, cfg.walk_step >= 1),
        ("xnes.sigma0", cfg.sigma0, cfg.sigma0 > 0),
        ("generalist.max_generations", cfg.max_generations, cfg.max_generations >= 0),
        ("generalist.stagnation_window", cfg.stagnation_window, cfg.stagnation_window >= 1),
        ("metrics.n_eval", cfg.n_eval, cfg.n_eval >= 1),
    ]:
        if not ok:
            raise ConfigError(f"{path}: invalid value {value!r}")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values: dict = {}
    env_params: dict = {}
    for section in cp.sections():
        if section == "env":
            for key, raw in cp.items(section):
                if key not in ENV_KEYS:
                    raise ConfigError(f"env.{key}: unknown key")
                try:
                    env_params[key] = ENV_KEYS[key](raw)
                except ValueError:
                    raise ConfigError(f"env.{key}: cannot parse {raw!r}") from None
            continue
        if section not in SECTIONS:
            raise ConfigError(f"[{section}]: unknown section")
        for key, raw in cp.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            values[key] = _convert(f"{section}.{key}", key, raw)
    return validate(ExperimentConfig(**values, env_params=env_params))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
