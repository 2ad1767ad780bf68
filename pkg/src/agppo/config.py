"""Experiment configuration: TOML files, command-line overrides and resolved snapshots.

A config file has four optional tables::

    [experiment]  shaping, paper_literal
    [env]         training environment: ``preset`` plus any GridConfig field
    [train]       TrainConfig fields (seed, total_timesteps, widths, ...)
    [eval]        env preset, episodes, seed (first episode seed), stochastic

Missing keys take their defaults; unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from . import grid_env
from .errors import ConfigError
from .shaping import get_config
from .trainer import TrainConfig

_GRID_FIELDS = {f.name for f in dataclasses.fields(grid_env.GridConfig)}
_TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)} - {"env", "shaping"}


@dataclass(frozen=True)
class EvalSettings:
    env: str = "gw-a-test"
    episodes: int = 100
    seed: int = 10_000
    stochastic: bool = False

    def __post_init__(self):
        grid_env.preset(self.env)
        if self.episodes < 1:
            raise ConfigError("eval episodes must be at least 1")

    @property
    def seeds(self) -> list[int]:
        return list(range(self.seed, self.seed + self.episodes))

    @property
    def grid(self) -> grid_env.GridConfig:
        return grid_env.preset(self.env)


@dataclass(frozen=True)
class ExperimentConfig:
    shaping: str = "baseline"
    paper_literal: bool = False
    env_preset: str = "gw-a-train"
    env_overrides: dict = field(default_factory=dict)
    train_overrides: dict = field(default_factory=dict)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        get_config(self.shaping)
        grid_env.preset(self.env_preset)
        _check_keys("env", self.env_overrides, _GRID_FIELDS)
        _check_keys("train", self.train_overrides, _TRAIN_FIELDS)

    @property
    def grid(self) -> grid_env.GridConfig:
        try:
            return grid_env.preset(self.env_preset).replace(**self.env_overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[env]: {exc}") from exc

    def train_config(self) -> TrainConfig:
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in self.train_overrides.items()}
        try:
            cfg = TrainConfig(shaping=self.shaping, env=self.grid, **kw)
        except TypeError as exc:
            raise ConfigError(f"[train]: {exc}") from exc
        return cfg.paper_literal() if self.paper_literal else cfg

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Apply command-line flags; ``None`` values leave the config untouched."""
        kw = {k: v for k, v in kw.items() if v is not None}
        top, ev, train = {}, {}, dict(self.train_overrides)
        for key, value in kw.items():
            if key in ("shaping", "paper_literal", "env_preset"):
                top[key] = value
            elif key.startswith("eval_"):
                ev[key[5:]] = value
            elif key == "train_seed":
                train["seed"] = value
            else:
                raise ConfigError(f"unknown override {key!r}")
        return dataclasses.replace(
            self, **top, train_overrides=train, eval=dataclasses.replace(self.eval, **ev)
        )

    def resolved(self) -> dict:
        """Every setting spelled out, in the same layout the loader reads."""
        train = dataclasses.asdict(self.train_config())
        env = train.pop("env")
        train.pop("shaping")
        return {
            "experiment": {"shaping": self.shaping, "paper_literal": self.paper_literal},
            "env": {"preset": self.env_preset, **env},
            "train": {k: list(v) if isinstance(v, tuple) else v for k, v in train.items()},
            "eval": dataclasses.asdict(self.eval),
        }


def _check_keys(table: str, data: dict, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"[{table}]: unknown keys {unknown}; valid: {sorted(allowed)}")


def from_dict(data: dict) -> ExperimentConfig:
    _check_keys("top level", data, {"experiment", "env", "train", "eval"})
    exp = dict(data.get("experiment", {}))
    _check_keys("experiment", exp, {"shaping", "paper_literal"})
    env = dict(data.get("env", {}))
    env_preset = env.pop("preset", "gw-a-train")
    base = grid_env.preset(env_preset)
    # a resolved snapshot lists every field; keep only the ones that differ from the preset
    env = {k: v for k, v in env.items() if k not in _GRID_FIELDS or getattr(base, k) != v}
    ev = dict(data.get("eval", {}))
    _check_keys("eval", ev, {f.name for f in dataclasses.fields(EvalSettings)})
    try:
        return ExperimentConfig(
            env_preset=env_preset,
            env_overrides=env,
            train_overrides=dict(data.get("train", {})),
            eval=EvalSettings(**ev),
            **exp,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.resolved())


def save(path, cfg: ExperimentConfig) -> None:
    Path(path).write_text(dumps(cfg))
