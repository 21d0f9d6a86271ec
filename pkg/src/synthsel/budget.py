"""Per-solver time and token-cost allocation.

Observed solve costs are modeled as exponentially distributed; the maximum
likelihood rate over the k nearest samples gives, through the CDF, the
smallest allocation a for which the chance of the true requirement landing in
(a, B] stays below the error threshold. The total budget is divided greedily
down the ranking; leftover goes to the final solver, and a solver allocated
zero tokens is also allocated zero time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .bandit import BanditStore, SolverId, nearest_records


@dataclass(frozen=True)
class ExponentialFit:
    rate: float  # per cost-unit or per second
    n: int

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.n < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n}")


def fit_exponential(samples: Sequence[float]) -> ExponentialFit:
    """MLE for the exponential rate: n over the sample sum."""
    if not samples:
        raise ValueError("cannot fit an exponential to zero samples")
    for s in samples:
        if s <= 0:
            raise ValueError(f"samples must be positive, got {s}")
    return ExponentialFit(rate=len(samples) / sum(samples), n=len(samples))


def allocate_one(fit: ExponentialFit, budget: float, delta: float) -> float:
    """Smallest allocation a with P(a < requirement < budget) <= delta,
    i.e. -ln(delta + exp(-rate * budget)) / rate, clamped into [0, budget]."""
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    lam = fit.rate
    tail = delta + math.exp(-lam * budget)
    a = -math.log(tail) / lam
    return min(max(a, 0.0), budget)


@dataclass(frozen=True)
class ScheduleEntry:
    solver: SolverId
    time: float
    cost: float


@dataclass(frozen=True)
class SolverSchedule:
    """Ranked solvers with their time and cost slices.

    Invariants: slices are nonnegative, totals stay within the budgets, any
    leftover sits on the final solver, and zero cost forces zero time.
    """

    entries: Tuple[ScheduleEntry, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total_time(self) -> float:
        return sum(e.time for e in self.entries)

    @property
    def total_cost(self) -> float:
        return sum(e.cost for e in self.entries)


def allocate_sequence(ranking: Sequence[SolverId], store: BanditStore,
                      features: Sequence[float], k: int,
                      budget: float, delta: float,
                      dimension: str) -> list[float]:
    """Walk the ranking, fitting an exponential to each solver's k nearest
    recorded values of `dimension` ("cost" or "time") and assigning its
    allocation, capped by what remains. Solvers with no nearby samples split
    the remaining budget evenly among all sample-less solvers still to come;
    once the budget runs out, every following solver gets zero; leftover after
    the walk is handed to the final solver."""
    if not ranking:
        raise ValueError("cannot allocate over an empty ranking")
    if dimension not in ("cost", "time"):
        raise ValueError(f"unknown dimension {dimension!r}")

    samples_per_solver: list[list[float]] = []
    for solver in ranking:
        recs = nearest_records(store, features, k,
                               predicate=lambda r, s=solver: r.solver == s)
        values = [(r.cost if dimension == "cost" else r.time) for r in recs]
        samples_per_solver.append([v for v in values if v > 0])

    allocations = [0.0] * len(ranking)
    remaining = budget
    for i, solver in enumerate(ranking):
        if remaining <= 0:
            break
        samples = samples_per_solver[i]
        if samples:
            fit = fit_exponential(samples)
            want = allocate_one(fit, budget, delta)
        else:
            sampleless_left = sum(1 for j in range(i, len(ranking))
                                  if not samples_per_solver[j])
            want = remaining / sampleless_left
        got = min(want, remaining)
        allocations[i] = got
        remaining -= got
    if remaining > 0:
        allocations[-1] += remaining
    return allocations


def build_schedule(ranking: Sequence[SolverId], store: BanditStore,
                   features: Sequence[float], k: int,
                   T: float, C: float,
                   delta_time: float = 0.05,
                   delta_cost: float = 0.05) -> SolverSchedule:
    """Cost slices first, then time slices over the solvers that received a
    nonzero cost slice (the coupling rule: no tokens means no time; the time
    freed that way is redistributed by re-running the greedy walk)."""
    costs = allocate_sequence(ranking, store, features, k, C, delta_cost, "cost")
    funded = [s for s, c in zip(ranking, costs) if c > 0]
    if funded:
        funded_times = iter(allocate_sequence(funded, store, features, k, T,
                                              delta_time, "time"))
        times = [next(funded_times) if c > 0 else 0.0 for c in costs]
    else:
        times = [0.0] * len(ranking)
    entries = tuple(
        ScheduleEntry(solver=s, time=t, cost=c)
        for s, t, c in zip(ranking, times, costs)
    )
    return SolverSchedule(entries)


def linear_schedule(ranking: Sequence[SolverId], T: float, C: float) -> SolverSchedule:
    """Equal division of both budgets across all ranked solvers."""
    if not ranking:
        raise ValueError("cannot allocate over an empty ranking")
    n = len(ranking)
    return SolverSchedule(tuple(
        ScheduleEntry(solver=s, time=T / n, cost=C / n) for s in ranking
    ))
