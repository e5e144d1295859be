"""Base-stock and constant-order replenishment with pipeline bookkeeping."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .core import ConfigError, InvariantViolation, PipelineState, ProblemSpec, inventory_position


@dataclass(frozen=True)
class BaseStock:
    S: int
    kind = "base_stock"

    def __post_init__(self):
        if int(self.S) != self.S or self.S < 0:
            raise ConfigError(f"base-stock level must be a nonnegative integer, got {self.S}")
        object.__setattr__(self, "S", int(self.S))

    @property
    def param(self) -> int:
        return self.S

    def to_json_dict(self) -> dict:
        return {"kind": "base_stock", "S": self.S}


@dataclass(frozen=True)
class ConstantOrder:
    c: int
    kind = "constant_order"

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 0:
            raise ConfigError(f"order size must be a nonnegative integer, got {self.c}")
        object.__setattr__(self, "c", int(self.c))

    @property
    def param(self) -> int:
        return self.c

    def to_json_dict(self) -> dict:
        return {"kind": "constant_order", "c": self.c}


ReplenishmentPolicy = BaseStock | ConstantOrder


def policy_from_json_dict(d: dict) -> ReplenishmentPolicy:
    if not isinstance(d, dict):
        raise ConfigError("policy must be a JSON object")
    kind = d.get("kind")
    if kind == "base_stock" and set(d) == {"kind", "S"}:
        return BaseStock(d["S"])
    if kind == "constant_order" and set(d) == {"kind", "c"}:
        return ConstantOrder(d["c"])
    raise ConfigError(f"unrecognized policy {d!r}")


def with_param(policy: ReplenishmentPolicy, value: int) -> ReplenishmentPolicy:
    return BaseStock(value) if isinstance(policy, BaseStock) else ConstantOrder(value)


def check_regime(policy: ReplenishmentPolicy, spec: ProblemSpec) -> bool:
    """Warn when a constant order sits outside 0 <= c < T(1 - lambda_0); return True if inside."""
    if not isinstance(policy, ConstantOrder):
        return True
    inside = policy.c < spec.T * spec.arrival_rate
    if not inside:
        warnings.warn(
            f"constant order c={policy.c} is not below mean cycle demand "
            f"{spec.T * spec.arrival_rate:g}; inventory grows without bound",
            stacklevel=2,
        )
    return inside


def initial_state(policy: ReplenishmentPolicy, spec: ProblemSpec) -> PipelineState:
    """Start-of-run state right after the first order has been placed."""
    return initial_pipeline(policy, spec.lead_time)


def initial_pipeline(policy: ReplenishmentPolicy, lead_time: int) -> PipelineState:
    """Base-stock splits S evenly across on-hand and the open orders; the most recent
    order takes the remainder so the position is exactly S."""
    L = lead_time
    if isinstance(policy, ConstantOrder):
        return PipelineState(policy.c, (policy.c,) * L)
    share = policy.S // (L + 1)
    if L == 0:
        return PipelineState(policy.S, ())
    older = (share,) * (L - 1)
    closing = policy.S - share - sum(older)
    return PipelineState(share, older + (closing,))


def place_order(policy: ReplenishmentPolicy, state: PipelineState) -> int:
    if isinstance(policy, ConstantOrder):
        return policy.c
    pos = inventory_position(state)
    if pos > policy.S:
        raise InvariantViolation(f"inventory position {pos} exceeds base-stock level {policy.S}")
    return policy.S - pos


def advance_cycle(state: PipelineState, ending_inventory: int, placed_order: int) -> PipelineState:
    """Move to the next cycle: the oldest open order lands, the new one joins the back."""
    if not state.in_flight:
        return PipelineState(ending_inventory + placed_order, ())
    q = state.in_flight
    return PipelineState(ending_inventory + q[0], q[1:] + (placed_order,))


def next_state(policy: ReplenishmentPolicy, state: PipelineState, ending_inventory: int) -> tuple[PipelineState, int]:
    """End-of-cycle transition: compute the next order from leftover stock and shift the pipeline."""
    placed = place_order(policy, PipelineState(ending_inventory, state.in_flight))
    return advance_cycle(state, ending_inventory, placed), placed
