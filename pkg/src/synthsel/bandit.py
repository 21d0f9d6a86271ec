"""k-nearest-neighbor contextual bandit over solvers.

A solver is either the built-in enumerator or an LLM paired with one of six
prompt styles. Records of successful solves, labeled with the reward earned,
form the database; ranking a new query scores each solver by the sum of its
rewards among the k nearest recorded queries and appends never-seen solvers
in random order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .featurize import distance

ENUMERATOR_KIND = "enumerator"
LLM_KIND = "llm"
PROMPT_STYLE_RANGE = range(1, 7)


@dataclass(frozen=True)
class SolverId:
    kind: str  # "enumerator" | "llm"
    model: Optional[str] = None
    style: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind == ENUMERATOR_KIND:
            if self.model is not None or self.style is not None:
                raise ValueError("the enumerator takes no model or prompt style")
        elif self.kind == LLM_KIND:
            if not self.model:
                raise ValueError("llm solvers need a model name")
            if self.style not in PROMPT_STYLE_RANGE:
                raise ValueError(f"prompt style must be 1..6, got {self.style}")
        else:
            raise ValueError(f"unknown solver kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind == ENUMERATOR_KIND:
            return ENUMERATOR_KIND
        return f"{self.model}-p{self.style}"

    @staticmethod
    def enumerator() -> "SolverId":
        return SolverId(ENUMERATOR_KIND)

    @staticmethod
    def llm(model: str, style: int) -> "SolverId":
        return SolverId(LLM_KIND, model, style)

    @staticmethod
    def parse(text: str) -> "SolverId":
        if text == ENUMERATOR_KIND:
            return SolverId.enumerator()
        model, sep, style = text.rpartition("-p")
        if sep and model and style.isdigit():
            return SolverId.llm(model, int(style))
        raise ValueError(f"cannot parse solver id {text!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "model": self.model, "style": self.style}

    @staticmethod
    def from_json(obj: Mapping) -> "SolverId":
        return SolverId(obj["kind"], obj.get("model"), obj.get("style"))


@dataclass(frozen=True)
class SolveRecord:
    """One successful solve: where it sat in feature space, who solved it,
    the reward earned, the elapsed seconds, and the token cost."""

    features: Tuple[float, ...]
    solver: SolverId
    reward: float
    time: float
    cost: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(float(x) for x in self.features))
        if not 0.0 <= self.reward <= 1.0:
            raise ValueError(f"reward must be in [0, 1], got {self.reward}")
        if self.time < 0 or self.cost < 0:
            raise ValueError("time and cost must be nonnegative")

    def to_json(self) -> dict:
        return {
            "features": list(self.features),
            "solver": self.solver.to_json(),
            "reward": self.reward,
            "time": self.time,
            "cost": self.cost,
        }

    @staticmethod
    def from_json(obj: Mapping) -> "SolveRecord":
        return SolveRecord(
            features=tuple(obj["features"]),
            solver=SolverId.from_json(obj["solver"]),
            reward=float(obj["reward"]),
            time=float(obj["time"]),
            cost=float(obj["cost"]),
        )


class BanditStore:
    """Append-only list of solve records plus the exploration RNG."""

    def __init__(self, seed: int = 0,
                 records: Iterable[SolveRecord] = ()) -> None:
        self.records: list[SolveRecord] = list(records)
        self.rng = random.Random(seed)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: SolveRecord) -> None:
        self.records.append(record)

    # -- persistence (JSON lines, one record per line) ----------------------

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json()) + "\n")

    @staticmethod
    def load(path: str | Path, seed: int = 0) -> "BanditStore":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(SolveRecord.from_json(json.loads(line)))
        return BanditStore(seed=seed, records=records)


def record_outcome(store: BanditStore, record: SolveRecord, solved: bool) -> bool:
    """Append the record when the solve succeeded; failures leave the store
    untouched. Returns whether a record was appended."""
    if not solved:
        return False
    store.append(record)
    return True


# ---------------------------------------------------------------------------
# Reward functions
# ---------------------------------------------------------------------------

def reward_time(t: float, T: float, solved: bool) -> float:
    """(1 - t/T)^4 when solved, else 0."""
    if T <= 0:
        raise ValueError(f"time budget must be positive, got {T}")
    if t < 0 or t > T:
        raise ValueError(f"elapsed time {t} outside [0, {T}]")
    if not solved:
        return 0.0
    return (1.0 - t / T) ** 4


def reward_cost(c: float, C: float, solved: bool) -> float:
    """(1 - c/C)^4 when solved, else 0."""
    if C <= 0:
        raise ValueError(f"cost budget must be positive, got {C}")
    if c < 0 or c > C:
        raise ValueError(f"cost {c} outside [0, {C}]")
    if not solved:
        return 0.0
    return (1.0 - c / C) ** 4


def reward_binary(solved: bool) -> float:
    return 1.0 if solved else 0.0


@dataclass(frozen=True)
class RewardKind:
    """Which reward drives learning, with the budgets it is scored against."""

    kind: str  # "time" | "cost" | "binary"
    T: float = 100.0
    C: float = 100_000.0

    def __post_init__(self) -> None:
        if self.kind not in ("time", "cost", "binary"):
            raise ValueError(f"unknown reward kind {self.kind!r}")
        if self.T <= 0 or self.C <= 0:
            raise ValueError("budgets T and C must be positive")

    def compute(self, t: float, c: float, solved: bool) -> float:
        if self.kind == "time":
            return reward_time(min(max(t, 0.0), self.T), self.T, solved)
        if self.kind == "cost":
            return reward_cost(min(max(c, 0.0), self.C), self.C, solved)
        return reward_binary(solved)


def estimate_cost(input_tokens: float, output_tokens: float,
                  solver: SolverId) -> float:
    """Token cost of one solve: input + 3x output for LLMs; the enumerator's
    cost is a flat 0.4 regardless of runtime."""
    if input_tokens < 0 or output_tokens < 0:
        raise ValueError("token counts must be nonnegative")
    if solver.kind == ENUMERATOR_KIND:
        return ENUMERATOR_COST
    return float(input_tokens) + 3.0 * float(output_tokens)


ENUMERATOR_COST = 0.4


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------

Arm = Hashable


def nearest_records(store: BanditStore, features: Sequence[float], k: int,
                    predicate: Optional[Callable[[SolveRecord], bool]] = None
                    ) -> list[SolveRecord]:
    """The k records closest to `features` (all of them when fewer than k).

    Ties at the k-boundary break by insertion order: the older record wins.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pool = store.records if predicate is None else [
        r for r in store.records if predicate(r)]
    if not pool:
        return []
    target = np.asarray(features, dtype=float)
    dists = [distance(np.asarray(r.features), target) for r in pool]
    order = sorted(range(len(pool)), key=lambda i: (dists[i], i))
    return [pool[i] for i in order[:k]]


def knn_scores(store: BanditStore, features: Sequence[float], k: int,
               key: Optional[Callable[[SolverId], Arm]] = None
               ) -> dict[Arm, float]:
    """Sum of rewards per solver (projected through `key`) over the k nearest
    records. Only solvers present among those neighbors appear."""
    proj = key or (lambda s: s)
    scores: dict[Arm, float] = {}
    for rec in nearest_records(store, features, k):
        arm = proj(rec.solver)
        scores[arm] = scores.get(arm, 0.0) + rec.reward
    return scores


def rank_single(store: BanditStore, features: Sequence[float], k: int,
                arms: Sequence[Arm],
                key: Optional[Callable[[SolverId], Arm]] = None,
                rng: Optional[random.Random] = None) -> list[Arm]:
    """Rank every arm: scored arms by descending reward sum over the k nearest
    records (equal scores shuffled uniformly), then the remaining arms in
    uniformly random order. The result is a permutation of `arms`."""
    if not arms:
        raise ValueError("cannot rank an empty solver set")
    rng = rng or store.rng
    scores = knn_scores(store, features, k, key=key)
    present = [a for a in arms if a in scores]
    absent = [a for a in arms if a not in scores]
    rng.shuffle(present)  # uniform order among equal scores after stable sort
    present.sort(key=lambda a: -scores[a])
    rng.shuffle(absent)
    return present + absent


def model_arm(solver: SolverId) -> str:
    """Layer-1 arm key: the base model for LLM solvers, the enumerator itself."""
    return solver.model if solver.kind == LLM_KIND else ENUMERATOR_KIND


def rank_double(model_store: BanditStore,
                prompt_stores: Mapping[str, BanditStore],
                features: Sequence[float], k: int,
                models: Sequence[str],
                prompts: Mapping[str, Sequence[int]],
                include_enumerator: bool = True) -> list[SolverId]:
    """Two-layer ranking: models (and the enumerator) first, then each LLM's
    prompts via that model's own independent store. Flattens to a full solver
    order; the enumerator arm expands to itself."""
    arms: list[str] = list(models)
    if include_enumerator:
        arms.append(ENUMERATOR_KIND)
    order = rank_single(model_store, features, k, arms, key=model_arm)
    ranked: list[SolverId] = []
    for arm in order:
        if arm == ENUMERATOR_KIND and include_enumerator:
            ranked.append(SolverId.enumerator())
            continue
        store = prompt_stores.get(arm)
        if store is None:
            store = BanditStore(seed=model_store.rng.randrange(2 ** 31))
        styles = list(prompts.get(arm, PROMPT_STYLE_RANGE))
        style_order = rank_single(store, features, k, styles,
                                  key=lambda s: s.style)
        ranked.extend(SolverId.llm(arm, style) for style in style_order)
    return ranked
