"""Run configuration: defaults, JSON config files, and flag merging.

Precedence: command-line flag over config-file value over built-in default.
API keys are named by environment variable only and never read from files.
"""

from __future__ import annotations

import dataclasses
import json
import shlex
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Tuple

from .bandit import SolverId
from .featurize import FeaturizerConfig

SELECTORS = ("single", "double", "linear-single", "linear-double")
REWARDS = ("time", "cost", "binary")
BACKENDS = ("replay", "http", "record")


@dataclass(frozen=True)
class ModelConfig:
    name: str
    styles: Tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "styles": list(self.styles),
            "endpoint": self.endpoint,
            "api_key_env": self.api_key_env,
        }

    @staticmethod
    def from_json(obj: Mapping) -> "ModelConfig":
        return ModelConfig(
            name=obj["name"],
            styles=tuple(obj.get("styles", (1, 2, 3, 4, 5, 6))),
            endpoint=obj.get("endpoint"),
            api_key_env=obj.get("api_key_env"),
        )


@dataclass(frozen=True)
class RunConfig:
    selector: str = "single"      # or double, linear-single, linear-double, fixed:<id>
    reward: str = "binary"
    time_budget: float = 100.0    # T, seconds per query
    cost_budget: float = 100_000.0  # C, token-cost units per query
    k: int = 15
    delta1: float = 0.05          # time-allocation error threshold
    delta2: float = 0.05          # cost-allocation error threshold
    models: Tuple[ModelConfig, ...] = ()
    include_enumerator: bool = True
    backend: str = "replay"
    fixtures: Optional[str] = None
    state: Optional[str] = None
    smt_cmd: Optional[str] = None
    seed: int = 0
    runs: int = 1
    out: Optional[str] = None
    grace: float = 0.5            # seconds of deadline-overrun tolerance
    temperature: float = 0.2
    tolerate_replay_miss: bool = False
    normalize_features: bool = False

    def __post_init__(self) -> None:
        if not (self.selector in SELECTORS or self.selector.startswith("fixed:")):
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.reward not in REWARDS:
            raise ValueError(f"unknown reward {self.reward!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.time_budget <= 0 or self.cost_budget <= 0:
            raise ValueError("budgets must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for d in (self.delta1, self.delta2):
            if not 0.0 < d < 1.0:
                raise ValueError("delta thresholds must lie in (0, 1)")

    def portfolio(self) -> list[SolverId]:
        solvers: list[SolverId] = []
        if self.include_enumerator:
            solvers.append(SolverId.enumerator())
        for m in self.models:
            solvers.extend(SolverId.llm(m.name, s) for s in m.styles)
        return solvers

    def featurizer(self) -> FeaturizerConfig:
        return FeaturizerConfig(normalize_by_length=self.normalize_features)

    def smt_command(self) -> Optional[Tuple[str, ...]]:
        if not self.smt_cmd:
            return None
        return tuple(shlex.split(self.smt_cmd))

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["models"] = [m.to_json() for m in self.models]
        return out

    @staticmethod
    def from_json(obj: Mapping) -> "RunConfig":
        data = dict(obj)
        models = tuple(ModelConfig.from_json(m) for m in data.pop("models", ()))
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(models=models, **data)

    @staticmethod
    def load(path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return RunConfig.from_json(json.load(fh))

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides (flag values beat file values)."""
        cleaned = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **cleaned)
