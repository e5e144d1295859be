"""Fulfillment algorithms: per-cycle executors plus batched kernels over many paths."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ConfigError, CycleResult, ProblemSpec
from .lpsolve import (GAP_TOL, LpError, build_lookahead_lp, greedy_order, nested_greedy_batch,
                      solve_lp, stage_weights)

# accept when accepted mass >= rejected mass; this absorbs float noise on exact ties
TIE_TOL = 1e-9

KINDS = ("greedy", "myopic_offline", "lookahead_online", "lookahead_offline")


@dataclass(frozen=True)
class FulfillmentAlgo:
    kind: str
    n_tilde: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown fulfillment algorithm {self.kind!r}")
        if int(self.n_tilde) != self.n_tilde or self.n_tilde < 0:
            raise ConfigError("n_tilde must be a nonnegative integer")
        if not self.is_lookahead and self.n_tilde:
            raise ConfigError(f"{self.kind} takes no look-ahead horizon")

    @property
    def is_lookahead(self) -> bool:
        return self.kind.startswith("lookahead")

    @property
    def is_offline(self) -> bool:
        return self.kind in ("myopic_offline", "lookahead_offline")

    @property
    def label(self) -> str:
        if self.kind == "lookahead_online" and self.n_tilde == 0:
            return "bayes_selector"
        return f"{self.kind}({self.n_tilde})" if self.is_lookahead else self.kind

    def to_json_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.is_lookahead:
            d["n_tilde"] = self.n_tilde
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "FulfillmentAlgo":
        if not isinstance(d, dict) or "kind" not in d or not set(d) <= {"kind", "n_tilde"}:
            raise ConfigError(f"malformed algorithm {d!r}")
        if d["kind"] == "bayes_selector":
            if d.get("n_tilde", 0) != 0:
                raise ConfigError("bayes_selector has no look-ahead horizon")
            return bayes_selector()
        return cls(d["kind"], d.get("n_tilde", 0))

    def check_horizon(self, lead_time: int) -> None:
        if self.is_lookahead and self.n_tilde > lead_time:
            warnings.warn(f"look-ahead of {self.n_tilde} cycles exceeds lead time {lead_time}; "
                          "orders beyond the pipeline count as zero", stacklevel=2)


def bayes_selector() -> FulfillmentAlgo:
    return FulfillmentAlgo("lookahead_online", 0)


GREEDY = FulfillmentAlgo("greedy")
MYOPIC_OFFLINE = FulfillmentAlgo("myopic_offline")


@dataclass(frozen=True)
class LookAheadContext:
    future_orders: tuple[int, ...]  # units landing at cycles n+1, n+2, ...
    cycle_demand: tuple[float, ...]  # T * lambda_j for j = 1..M

    def expected_demand(self, i: int) -> tuple[float, ...]:
        return self.cycle_demand

    @classmethod
    def for_spec(cls, spec: ProblemSpec, future_orders: Sequence[int] = (), n_tilde: int | None = None):
        orders = tuple(int(o) for o in future_orders)
        if n_tilde is not None:
            orders = (orders + (0,) * n_tilde)[:n_tilde]
        if any(o < 0 for o in orders):
            raise ConfigError("future orders must be nonnegative")
        lam = spec.arrival_probs[1:]
        return cls(orders, tuple(spec.periods_per_cycle * l for l in lam))


def expected_remaining(spec: ProblemSpec, t: int) -> tuple[float, ...]:
    """(T - t + 1) lambda_j for 1-based period t, counting period t itself."""
    left = spec.periods_per_cycle - t + 1
    return tuple(left * l for l in spec.arrival_probs[1:])


def _result(spec, start, ending, accepted, rejected, lost, events=()):
    r = spec.reward_micro
    reward = sum(a * rj for a, rj in zip(accepted, r))
    return CycleResult(reward=reward, holding=spec.holding_micro * ending, start_inventory=start,
                       ending_inventory=ending, accepted=tuple(accepted), rejected=tuple(rejected),
                       lost=tuple(lost), events=tuple(events))


def run_cycle_greedy(spec: ProblemSpec, inventory: int, arrivals: Sequence[int]) -> CycleResult:
    M = spec.num_types
    acc, rej, lost = [0] * M, [0] * M, [0] * M
    on_hand = inventory
    events = []
    for t, j in enumerate(arrivals, start=1):
        if j == 0:
            continue
        if on_hand > 0:
            on_hand -= 1
            acc[j - 1] += 1
            events.append((t, j, True))
        else:
            rej[j - 1] += 1
            lost[j - 1] += 1
            events.append((t, j, False))
    return _result(spec, inventory, on_hand, acc, rej, lost, events)


def run_cycle_myopic_offline(spec: ProblemSpec, inventory: int, demand: Sequence[int]) -> CycleResult:
    """Serve the realized cycle demand from the highest reward down."""
    M = spec.num_types
    acc = [0] * M
    left = inventory
    for j in range(M - 1, -1, -1):
        acc[j] = min(demand[j], left)
        left -= acc[j]
    rej = [d - a for d, a in zip(demand, acc)]
    return _result(spec, inventory, left, acc, rej, rej)


@dataclass(frozen=True)
class LookaheadDecision:
    accept: bool
    accepted_mass: float
    rejected_mass: float
    objective: float  # including the -h * n_tilde * I_t constant
    duality_gap: float
    solved: bool  # False when stock was empty and no LP was needed


def lookahead_decide(spec: ProblemSpec, n_tilde: int, inventory: int, remaining_now: Sequence[float],
                     ctx: LookAheadContext, arriving: int, backend: str = "greedy") -> LookaheadDecision:
    if arriving < 1:
        raise ValueError("arriving type must be a customer type (>= 1)")
    if inventory <= 0:
        return LookaheadDecision(False, 0.0, float(remaining_now[arriving - 1]), 0.0, 0.0, False)
    problem, index, lp = build_lookahead_lp(spec, n_tilde, inventory, remaining_now, ctx)
    demand = lp.upper[0, arriving - 1]
    if backend == "greedy":
        res = nested_greedy_batch(lp.weights, lp.upper[None], lp.caps[None], certify=True)
        v = float(res.x[0, 0, arriving - 1])
        obj = float(res.objective[0])
        gap = float(res.gap[0])
        if not abs(gap) <= GAP_TOL * (1 + abs(obj)):
            raise LpError(f"greedy packing failed its duality check (gap {gap:g})", problem.dump())
    elif backend == "simplex":
        sol = solve_lp(problem)
        if not sol.certified:
            raise LpError("simplex solution failed certification", problem.dump())
        v = float(sol.x[index[(0, arriving)]])
        obj, gap = sol.objective, sol.duality_gap
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    rejected = demand - v
    return LookaheadDecision(v - rejected >= -TIE_TOL, v, rejected, obj + lp.constant, gap, True)


def bayes_selector_accept(spec: ProblemSpec, inventory: int, t: int, arriving: int) -> bool:
    """Closed-form Bayes Selector: higher types claim their expected remaining demand first;
    accept if what is left covers at least half of the arriving type's remaining demand."""
    if inventory <= 0:
        return False
    lam = expected_remaining(spec, t)
    above = sum(lam[arriving:])
    return 2.0 * (inventory - above) - lam[arriving - 1] >= -TIE_TOL


def run_cycle_resolving(spec: ProblemSpec, algo: FulfillmentAlgo, inventory: int,
                        arrivals: Sequence[int], ctx: LookAheadContext,
                        backend: str = "greedy") -> CycleResult:
    if not algo.is_lookahead:
        raise ConfigError(f"{algo.kind} is not a look-ahead variant")
    M, T = spec.num_types, spec.periods_per_cycle
    arrivals = [int(a) for a in arrivals]
    acc, rej, lost = [0] * M, [0] * M, [0] * M
    events = []
    on_hand = inventory
    for t, j in enumerate(arrivals, start=1):
        if j == 0:
            continue
        if algo.kind == "lookahead_online":
            remaining = expected_remaining(spec, t)
        else:
            tail = arrivals[t - 1:]
            remaining = tuple(float(tail.count(k)) for k in range(1, M + 1))
        d = lookahead_decide(spec, algo.n_tilde, on_hand, remaining, ctx, j, backend)
        if d.accept:
            on_hand -= 1
            acc[j - 1] += 1
        else:
            rej[j - 1] += 1
            if on_hand == 0:
                lost[j - 1] += 1
        events.append((t, j, d.accept))
    return _result(spec, inventory, on_hand, acc, rej, lost, events)


def run_cycle(spec: ProblemSpec, algo: FulfillmentAlgo, inventory: int, arrivals: Sequence[int],
              ctx: LookAheadContext | None = None, backend: str = "greedy") -> CycleResult:
    """Dispatch one cycle to the executor for ``algo``."""
    if algo.kind == "greedy":
        return run_cycle_greedy(spec, inventory, arrivals)
    if algo.kind == "myopic_offline":
        arr = np.asarray(arrivals)
        demand = [int(np.count_nonzero(arr == j)) for j in range(1, spec.num_types + 1)]
        return run_cycle_myopic_offline(spec, inventory, demand)
    if ctx is None:
        ctx = LookAheadContext.for_spec(spec, (), algo.n_tilde)
    return run_cycle_resolving(spec, algo, inventory, arrivals, ctx, backend)


# ---------------------------------------------------------------- batched kernels


@dataclass
class BatchCycle:
    reward: np.ndarray  # (K,) int64 micro-units
    ending: np.ndarray  # (K,) int64
    accepted: np.ndarray  # (K, M)
    rejected: np.ndarray  # (K, M)
    lost: np.ndarray  # (K, M)
    lp_count: int = 0
    lp_worst_gap: float = 0.0  # max of gap / (1 + |objective|)


def _type_counts(mask: np.ndarray, arr: np.ndarray, M: int) -> np.ndarray:
    return np.stack([np.count_nonzero(mask & (arr == j), axis=1) for j in range(1, M + 1)], axis=1)


class BatchKernel:
    """Executes one cycle of an algorithm for a batch of paths; construction caches the LP layout."""

    def __init__(self, spec: ProblemSpec, algo: FulfillmentAlgo, certify: bool = False):
        self.spec = spec
        self.algo = algo
        self.certify = certify
        self.M = spec.num_types
        self.r_micro = np.asarray(spec.reward_micro, dtype=np.int64)
        if algo.is_lookahead:
            nt = algo.n_tilde
            self.weights = stage_weights(spec.rewards, spec.holding_cost, nt)
            self.order = greedy_order(self.weights)
            T = spec.periods_per_cycle
            # same float expressions as the scalar path so decisions match bit for bit
            self.future_upper = np.array([T * l for l in spec.arrival_probs[1:]], dtype=np.float64)
            self.online_upper = np.array([[(T - t) * l for l in spec.arrival_probs[1:]]
                                          for t in range(T)], dtype=np.float64)

    def run(self, inventory: np.ndarray, arrivals: np.ndarray, future_orders: np.ndarray | None = None) -> BatchCycle:
        kind = self.algo.kind
        if kind == "greedy":
            return self._greedy(inventory, arrivals)
        if kind == "myopic_offline":
            return self._myopic(inventory, arrivals)
        return self._resolving(inventory, arrivals, future_orders)

    def _finish(self, acc, rej, lost, ending, lp_count=0, worst=0.0):
        reward = acc.astype(np.int64) @ self.r_micro
        return BatchCycle(reward, ending.astype(np.int64), acc, rej, lost, lp_count, worst)

    def _greedy(self, inventory, arr):
        nz = arr > 0
        served = nz & (np.cumsum(nz, axis=1) <= inventory[:, None])
        acc = _type_counts(served, arr, self.M)
        rej = _type_counts(nz & ~served, arr, self.M)
        ending = inventory - acc.sum(axis=1)
        return self._finish(acc, rej, rej.copy(), ending)

    def _myopic(self, inventory, arr):
        demand = _type_counts(arr > 0, arr, self.M)
        acc = np.zeros_like(demand)
        left = inventory.astype(np.int64).copy()
        for j in range(self.M - 1, -1, -1):
            acc[:, j] = np.minimum(demand[:, j], left)
            left -= acc[:, j]
        rej = demand - acc
        return self._finish(acc, rej, rej.copy(), left)

    def _resolving(self, inventory, arr, future_orders):
        K, T = arr.shape
        M = self.M
        nt = self.algo.n_tilde
        S1 = nt + 1
        if future_orders is None:
            future_orders = np.zeros((K, nt), dtype=np.int64)
        future_orders = np.asarray(future_orders, dtype=np.float64).reshape(K, -1)[:, :nt]
        if future_orders.shape[1] < nt:
            future_orders = np.pad(future_orders, ((0, 0), (0, nt - future_orders.shape[1])))
        cap_steps = np.concatenate([np.zeros((K, 1)), np.cumsum(future_orders, axis=1)], axis=1)
        offline = self.algo.kind == "lookahead_offline"
        if offline:
            onehot = np.stack([(arr == j) for j in range(1, M + 1)], axis=2).astype(np.float64)
            suffix = np.cumsum(onehot[:, ::-1, :], axis=1)[:, ::-1, :]  # counts in periods t..T
        on_hand = inventory.astype(np.int64).copy()
        acc = np.zeros((K, M), dtype=np.int64)
        rej = np.zeros((K, M), dtype=np.int64)
        lost = np.zeros((K, M), dtype=np.int64)
        rows = np.arange(K)
        lp_count = 0
        worst = 0.0
        upper = np.empty((K, S1, M))
        if nt:
            upper[:, 1:, :] = self.future_upper
        for t in range(T):
            j = arr[:, t].astype(np.int64)
            arriving = j > 0
            if not arriving.any():
                continue
            stocked = arriving & (on_hand > 0)
            out = arriving & ~stocked
            if out.any():
                np.add.at(rej, (rows[out], j[out] - 1), 1)
                np.add.at(lost, (rows[out], j[out] - 1), 1)
            idx = np.flatnonzero(stocked)
            if idx.size == 0:
                continue
            jj = j[idx] - 1
            u = upper[idx]
            u[:, 0, :] = suffix[idx, t, :] if offline else self.online_upper[t]
            caps = on_hand[idx, None] + cap_steps[idx]
            res = nested_greedy_batch(self.weights, u, caps, certify=self.certify, order=self.order)
            v = res.x[np.arange(idx.size), 0, jj]
            d = u[np.arange(idx.size), 0, jj]
            take = v - (d - v) >= -TIE_TOL
            lp_count += idx.size
            if self.certify:
                rel = np.abs(res.gap) / (1.0 + np.abs(res.objective))
                worst = max(worst, float(rel.max()))
            yes, no = idx[take], idx[~take]
            np.add.at(acc, (yes, j[yes] - 1), 1)
            np.add.at(rej, (no, j[no] - 1), 1)
            on_hand[yes] -= 1
        return self._finish(acc, rej, lost, on_hand, lp_count, worst)
