"""Experiment configuration: a flat key-value document (YAML) overridden by CLI flags."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .model import ChainModel, builtin_ur10, conditioned, load_chain


class ConfigError(ValueError):
    pass


CONDITIONINGS = ("twin", "uniform", "kinematic")


@dataclass
class ExperimentConfig:
    model: str = "ur10-builtin"
    conditioning: str = "twin"
    mass: float = 1.0
    inertia: list = field(default_factory=lambda: np.eye(3).tolist())
    # solver parameters; None means "use the experiment's default"
    dt: Optional[float] = None
    iters: Optional[int] = None
    kp: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 0.1, 0.1, 0.1])
    kd: list = field(default_factory=lambda: [0.0] * 6)
    alpha: Optional[float] = None
    samples: int = 100_000
    seed: int = 0
    gains: list = field(default_factory=lambda: [1.0, 5.0, 50.0])
    # scenario geometry
    step_offset: list = field(default_factory=lambda: [0.3, 0.3, -0.2])
    step_axis: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    step_angle_deg: float = 20.0
    square_side: float = 0.4
    square_steps: int = 1000
    speed: float = 0.2
    rate: float = 100.0
    out_dir: str = "results"
    plot: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.conditioning not in CONDITIONINGS:
            raise ConfigError(f"conditioning must be one of {CONDITIONINGS}, got {self.conditioning!r}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ConfigError("samples must be a positive integer")
        if self.seed is None or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not self.mass > 0:
            raise ConfigError("mass must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.iters is not None and (int(self.iters) != self.iters or self.iters < 1):
            raise ConfigError("iters must be a positive integer")
        if not self.gains or any(not g > 0 for g in self.gains):
            raise ConfigError("gains must be a non-empty list of positive numbers")
        if len(self.kp) not in (1, 6) or len(self.kd) not in (1, 6):
            raise ConfigError("kp and kd need 1 or 6 entries")
        if not self.speed > 0 or not self.rate > 0:
            raise ConfigError("speed and rate must be positive")
        if not self.square_side >= 0 or int(self.square_steps) != self.square_steps or self.square_steps < 1:
            raise ConfigError("square_side must be >= 0 and square_steps a positive integer")
        if np.shape(self.inertia) != (3, 3):
            raise ConfigError("inertia must be a 3x3 nested list")
        self.samples = int(self.samples)
        self.seed = int(self.seed)

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a key-value document")
        return cls.from_dict({**data, **overrides})

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        return asdict(self)

    def base_chain(self) -> ChainModel:
        if self.model == "ur10-builtin":
            return builtin_ur10()
        return load_chain(Path(self.model).read_text())

    def chain(self, conditioning=None) -> ChainModel:
        """The base chain with the requested (default: configured) conditioning."""
        return conditioned(self.base_chain(), conditioning or self.conditioning,
                           self.mass, np.array(self.inertia, dtype=float))
