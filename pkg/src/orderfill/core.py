"""Problem instance, inventory state and per-cycle accounting types."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Money is carried as integer micro-units so per-cycle profit identities stay exact.
MICRO = 1_000_000
LAMBDA_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid user-supplied configuration."""


class DomainError(ValueError):
    """A numeric precondition of a formula is not met."""


class InvariantViolation(RuntimeError):
    """Simulation dynamics broke an invariant that correct code never breaks."""


def to_micro(x: float) -> int:
    return int(round(x * MICRO))


def from_micro(m: int | float) -> float:
    return m / MICRO


@dataclass(frozen=True)
class ProblemSpec:
    num_types: int
    periods_per_cycle: int
    num_cycles: int
    lead_time: int
    rewards: tuple[float, ...]
    arrival_probs: tuple[float, ...]  # [lambda_0, lambda_1, ..., lambda_M]
    holding_cost: float

    def __post_init__(self):
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        object.__setattr__(self, "arrival_probs", tuple(float(p) for p in self.arrival_probs))

    # short aliases used throughout the numerics
    @property
    def M(self) -> int:
        return self.num_types

    @property
    def T(self) -> int:
        return self.periods_per_cycle

    @property
    def N(self) -> int:
        return self.num_cycles

    @property
    def L(self) -> int:
        return self.lead_time

    @property
    def h(self) -> float:
        return self.holding_cost

    @property
    def no_arrival_prob(self) -> float:
        return self.arrival_probs[0]

    @property
    def arrival_rate(self) -> float:
        """Probability that some customer arrives in a period."""
        return 1.0 - self.arrival_probs[0]

    @property
    def reward_micro(self) -> tuple[int, ...]:
        return tuple(to_micro(r) for r in self.rewards)

    @property
    def holding_micro(self) -> int:
        return to_micro(self.holding_cost)

    def replace(self, **kw) -> "ProblemSpec":
        d = dict(
            num_types=self.num_types,
            periods_per_cycle=self.periods_per_cycle,
            num_cycles=self.num_cycles,
            lead_time=self.lead_time,
            rewards=self.rewards,
            arrival_probs=self.arrival_probs,
            holding_cost=self.holding_cost,
        )
        d.update(kw)
        return ProblemSpec(**d)

    def to_json_dict(self) -> dict:
        return {
            "M": self.num_types,
            "T": self.periods_per_cycle,
            "N": self.num_cycles,
            "L": self.lead_time,
            "rewards": list(self.rewards),
            "lambda": list(self.arrival_probs),
            "h": self.holding_cost,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProblemSpec":
        keys = {"M", "T", "N", "L", "rewards", "lambda", "h"}
        if not isinstance(d, dict) or set(d) != keys:
            got = sorted(d) if isinstance(d, dict) else type(d).__name__
            raise ConfigError(f"problem spec needs exactly the keys {sorted(keys)}, got {got}")
        try:
            spec = cls(
                num_types=_as_int(d["M"], "M"),
                periods_per_cycle=_as_int(d["T"], "T"),
                num_cycles=_as_int(d["N"], "N"),
                lead_time=_as_int(d["L"], "L"),
                rewards=tuple(d["rewards"]),
                arrival_probs=tuple(d["lambda"]),
                holding_cost=float(d["h"]),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"malformed problem spec: {e}") from e
        return spec

    @classmethod
    def from_json(cls, s: str) -> "ProblemSpec":
        try:
            return cls.from_json_dict(json.loads(s))
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e


def _as_int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return int(v)


def validate(spec: ProblemSpec) -> list[str]:
    """Return every violated invariant of ``spec``; an empty list means valid."""
    out = []
    if spec.num_types < 2:
        out.append("M >= 2 required")
    if spec.periods_per_cycle < 1:
        out.append("T must be a positive integer")
    if spec.num_cycles < 1:
        out.append("N must be a positive integer")
    if spec.lead_time < 0:
        out.append("L must be a nonnegative integer")
    if len(spec.rewards) != spec.num_types:
        out.append(f"rewards must have length M={spec.num_types}")
    else:
        r = spec.rewards
        if not all(math.isfinite(x) for x in r):
            out.append("rewards must be finite")
        elif r and r[0] <= 0:
            out.append("rewards must be positive")
        if any(b <= a for a, b in zip(r, r[1:])):
            out.append("rewards must be strictly increasing")
    lam = spec.arrival_probs
    if len(lam) != spec.num_types + 1:
        out.append(f"lambda must have length M+1={spec.num_types + 1}")
    if any(not math.isfinite(p) or p < 0 for p in lam):
        out.append("arrival probabilities must be nonnegative")
    elif abs(math.fsum(lam) - 1.0) > LAMBDA_TOL:
        out.append("probabilities must sum to 1")
    if not (math.isfinite(spec.holding_cost) and spec.holding_cost > 0):
        out.append("holding cost h must be positive")
    return out


def require_valid(spec: ProblemSpec) -> ProblemSpec:
    problems = validate(spec)
    if problems:
        raise ConfigError("; ".join(problems))
    return spec


@dataclass(frozen=True)
class PipelineState:
    """On-hand stock plus in-flight orders; ``in_flight[l-1]`` arrives ``l`` cycles from now."""

    on_hand: int
    in_flight: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "in_flight", tuple(int(q) for q in self.in_flight))
        if self.on_hand < 0 or any(q < 0 for q in self.in_flight):
            raise InvariantViolation(f"negative inventory in state {self}")


def inventory_position(state: PipelineState) -> int:
    return state.on_hand + sum(state.in_flight)


@dataclass(frozen=True)
class ArrivalPath:
    """Arrival type per (cycle, period); 0 means nobody showed up."""

    arrivals: np.ndarray  # shape (N, T), small ints

    def __post_init__(self):
        a = np.asarray(self.arrivals)
        if a.ndim != 2:
            raise ValueError("arrival grid must be two dimensional (cycles x periods)")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "arrivals", a)

    @property
    def num_cycles(self) -> int:
        return self.arrivals.shape[0]

    @property
    def periods(self) -> int:
        return self.arrivals.shape[1]

    def demand(self, cycle: int, j: int, t1: int = 1, t2: int | None = None) -> int:
        """Count of type ``j`` arrivals in periods t1..t2 (1-based, inclusive) of ``cycle`` (1-based)."""
        t2 = self.periods if t2 is None else t2
        return int(np.count_nonzero(self.arrivals[cycle - 1, t1 - 1:t2] == j))

    def demand_counts(self, cycle: int, num_types: int) -> tuple[int, ...]:
        row = self.arrivals[cycle - 1]
        counts = np.bincount(row, minlength=num_types + 1)
        return tuple(int(c) for c in counts[1:num_types + 1])


@dataclass(frozen=True)
class CycleResult:
    reward: int  # micro-units
    holding: int  # micro-units
    start_inventory: int
    ending_inventory: int
    accepted: tuple[int, ...]
    rejected: tuple[int, ...]
    lost: tuple[int, ...]  # rejections that happened with no stock on hand
    events: tuple[tuple[int, int, bool], ...] = field(default=(), compare=False)
    # events: (period, type, accepted) for online executors, in time order

    @property
    def profit(self) -> int:
        return self.reward - self.holding

    def check(self, demand: Sequence[int], holding_micro: int) -> None:
        for j, d in enumerate(demand):
            if self.accepted[j] + self.rejected[j] != d:
                raise InvariantViolation(f"type {j + 1}: accepted+rejected != demand")
            if self.lost[j] > self.rejected[j]:
                raise InvariantViolation(f"type {j + 1}: lost exceeds rejected")
        if sum(self.accepted) != self.start_inventory - self.ending_inventory:
            raise InvariantViolation("accepted units do not match inventory drawdown")
        if not 0 <= self.ending_inventory <= self.start_inventory:
            raise InvariantViolation("ending inventory out of range")
        if self.holding != holding_micro * self.ending_inventory:
            raise InvariantViolation("holding charge is not h times ending inventory")
