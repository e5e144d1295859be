"""Several inventory resources sharing one arrival stream.

Each resource has its own rewards per customer type, holding cost, lead time and
replenishment policy. Fulfillment decides which resource (if any) serves an arrival.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import LAMBDA_TOL, ConfigError, InvariantViolation, PipelineState, ProblemSpec, to_micro
from .engine import ProfitStats, config_hash, write_csv
from .fulfillment import TIE_TOL, FulfillmentAlgo
from .lpsolve import LpError, LpProblem, solve_lp
from .replenishment import (BaseStock, ReplenishmentPolicy, advance_cycle,
                            initial_pipeline, place_order, policy_from_json_dict)
from .stochastics import RngStream, sample_paths

INTEGRALITY_TOL = 1e-9


@dataclass(frozen=True)
class MultiSpec:
    num_resources: int
    periods_per_cycle: int
    num_cycles: int
    arrival_probs: tuple[float, ...]  # index 0 is "no arrival"
    rewards: tuple[tuple[float, ...], ...]  # rewards[j-1][l] for type j served from resource l
    holding_costs: tuple[float, ...]
    lead_times: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "arrival_probs", tuple(float(x) for x in self.arrival_probs))
        object.__setattr__(self, "rewards", tuple(tuple(float(x) for x in row) for row in self.rewards))
        object.__setattr__(self, "holding_costs", tuple(float(x) for x in self.holding_costs))
        object.__setattr__(self, "lead_times", tuple(int(x) for x in self.lead_times))
        problems = validate_multi(self)
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def d(self) -> int:
        return self.num_resources

    @property
    def T(self) -> int:
        return self.periods_per_cycle

    @property
    def N(self) -> int:
        return self.num_cycles

    @property
    def num_types(self) -> int:
        return len(self.arrival_probs) - 1

    @property
    def arrival_rate(self) -> float:
        return 1.0 - self.arrival_probs[0]

    @property
    def reward_matrix(self) -> np.ndarray:
        return np.array(self.rewards, dtype=float)

    @property
    def reward_micro(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(to_micro(x) for x in row) for row in self.rewards)

    @property
    def holding_micro(self) -> tuple[int, ...]:
        return tuple(to_micro(x) for x in self.holding_costs)

    def replace(self, **kw) -> "MultiSpec":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return MultiSpec(**d)

    def to_json_dict(self) -> dict:
        return {"d": self.d, "T": self.T, "N": self.N, "lambda": list(self.arrival_probs),
                "rewards_matrix": [list(r) for r in self.rewards], "h_vec": list(self.holding_costs),
                "L_vec": list(self.lead_times)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "MultiSpec":
        keys = {"d", "T", "N", "lambda", "rewards_matrix", "h_vec", "L_vec"}
        if not isinstance(d, dict) or set(d) != keys:
            raise ConfigError(f"multi-resource spec needs exactly the keys {sorted(keys)}")
        try:
            return cls(int(d["d"]), int(d["T"]), int(d["N"]), tuple(d["lambda"]),
                       tuple(tuple(r) for r in d["rewards_matrix"]), tuple(d["h_vec"]), tuple(d["L_vec"]))
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"malformed multi-resource spec: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "MultiSpec":
        try:
            return cls.from_json_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e

    @classmethod
    def from_single(cls, spec: ProblemSpec) -> "MultiSpec":
        return cls(1, spec.T, spec.N, spec.arrival_probs, tuple((r,) for r in spec.rewards),
                   (spec.holding_cost,), (spec.lead_time,))

    def resource_spec(self, resource: int) -> ProblemSpec:
        """Single-resource view of one resource (needs increasing rewards down the column)."""
        return ProblemSpec(self.num_types, self.T, self.N, self.lead_times[resource],
                           tuple(row[resource] for row in self.rewards), self.arrival_probs,
                           self.holding_costs[resource])


def validate_multi(ms: MultiSpec) -> list[str]:
    out = []
    d, M = ms.num_resources, len(ms.arrival_probs) - 1
    if d < 1:
        out.append("d >= 1 required")
    if ms.periods_per_cycle < 1 or ms.num_cycles < 1:
        out.append("T and N must be positive")
    if M < 1:
        out.append("at least one customer type required")
    if any(p < 0 for p in ms.arrival_probs) or abs(sum(ms.arrival_probs) - 1.0) > LAMBDA_TOL:
        out.append("probabilities must be nonnegative and sum to 1")
    if len(ms.rewards) != M or any(len(r) != d for r in ms.rewards):
        out.append("rewards_matrix must have one row per type and one column per resource")
    elif len({x for row in ms.rewards for x in row}) < 2 and M * d > 1:
        out.append("rewards must not all be identical")
    if any(x < 0 for row in ms.rewards for x in row):
        out.append("rewards must be nonnegative")
    if len(ms.holding_costs) != d or any(h <= 0 for h in ms.holding_costs):
        out.append("h_vec must hold one positive holding cost per resource")
    if len(ms.lead_times) != d or any(L < 0 for L in ms.lead_times):
        out.append("L_vec must hold one nonnegative lead time per resource")
    return out


@dataclass(frozen=True)
class MultiState:
    resources: tuple[PipelineState, ...]

    @property
    def on_hand(self) -> tuple[int, ...]:
        return tuple(r.on_hand for r in self.resources)

    def positions(self) -> tuple[int, ...]:
        return tuple(r.on_hand + sum(r.in_flight) for r in self.resources)


def initial_multi_state(policies: Sequence[ReplenishmentPolicy], ms: MultiSpec) -> MultiState:
    return MultiState(tuple(initial_pipeline(p, L) for p, L in zip(policies, ms.lead_times)))


def next_multi_state(policies: Sequence[ReplenishmentPolicy], state: MultiState,
                     ending: Sequence[int]) -> MultiState:
    out = []
    for pol, res, e in zip(policies, state.resources, ending):
        placed = place_order(pol, PipelineState(int(e), res.in_flight))
        out.append(advance_cycle(res, int(e), placed))
    return MultiState(tuple(out))


# ---------------------------------------------------------------- fulfillment rules


def greedy_assign(arriving: int, on_hand: Sequence[int], ms: MultiSpec) -> int | None:
    """Highest-reward resource with stock for this type; ties to the lowest index; None on stockout."""
    if arriving < 1:
        raise ValueError("arriving type must be a customer type (>= 1)")
    best, best_r = None, -math.inf
    for ell, stock in enumerate(on_hand):
        r = ms.rewards[arriving - 1][ell]
        if stock > 0 and r > best_r:
            best, best_r = ell, r
    return best


def myopic_offline_assign(demand: Sequence[int], on_hand: Sequence[int], ms: MultiSpec) -> np.ndarray:
    """Reward-maximizing transportation of realized cycle demand to resources, as an integer matrix (M, d)."""
    M, d = ms.num_types, ms.num_resources
    demand = np.asarray(demand, dtype=float)
    on_hand = np.asarray(on_hand, dtype=float)
    if (demand < 0).any() or (on_hand < 0).any():
        raise ValueError("demand and inventories must be nonnegative")
    n = M * d
    A = np.zeros((d + M, n))
    for j in range(M):
        for ell in range(d):
            A[ell, j * d + ell] = 1.0
            A[d + j, j * d + ell] = 1.0
    problem = LpProblem(ms.reward_matrix.reshape(-1), A, np.concatenate([on_hand, demand]), np.full(n, np.inf))
    sol = solve_lp(problem)
    if not sol.certified:
        raise LpError("transportation LP failed certification", problem.dump())
    x = sol.x.reshape(M, d)
    rounded = np.rint(x)
    if np.abs(x - rounded).max(initial=0.0) > INTEGRALITY_TOL:
        raise LpError("transportation LP optimum is not integral", problem.dump())
    return rounded.astype(np.int64)


@dataclass(frozen=True)
class MultiDecision:
    resource: int | None  # None means reject
    accepted_mass: float
    rejected_mass: float
    resource_mass: tuple[float, ...]
    objective: float
    duality_gap: float

    @property
    def accept(self) -> bool:
        return self.resource is not None


def build_multi_lookahead_lp(ms: MultiSpec, n_tilde: int, on_hand: Sequence[int],
                             remaining_now: Sequence[float], future_orders: Sequence[Sequence[int]]):
    """Fluid packing LP over stages 0..n_tilde with per-resource nested stock caps.

    Variable (stage s, type j, resource l) sits at ((s*M) + j-1)*d + l. Returns (problem, index).
    """
    M, d, T = ms.num_types, ms.num_resources, ms.T
    S1 = n_tilde + 1
    n = S1 * M * d

    def idx(s, j, ell):
        return (s * M + j - 1) * d + ell

    c = np.zeros(n)
    for s in range(S1):
        for j in range(1, M + 1):
            for ell in range(d):
                c[idx(s, j, ell)] = ms.rewards[j - 1][ell] + (n_tilde - s) * ms.holding_costs[ell]
    rows, rhs = [], []
    for ell in range(d):
        orders = list(future_orders[ell])[:n_tilde] + [0] * max(0, n_tilde - len(future_orders[ell]))
        cap = float(on_hand[ell])
        for k in range(S1):
            if k:
                cap += orders[k - 1]
            row = np.zeros(n)
            for s in range(k + 1):
                for j in range(1, M + 1):
                    row[idx(s, j, ell)] = 1.0
            rows.append(row)
            rhs.append(cap)
    for s in range(S1):
        for j in range(1, M + 1):
            row = np.zeros(n)
            for ell in range(d):
                row[idx(s, j, ell)] = 1.0
            rows.append(row)
            rhs.append(float(remaining_now[j - 1]) if s == 0 else T * ms.arrival_probs[j])
    return LpProblem(c, np.array(rows), np.array(rhs), np.full(n, np.inf)), idx


def multi_lookahead_decide(ms: MultiSpec, n_tilde: int, on_hand: Sequence[int], remaining_now: Sequence[float],
                           future_orders: Sequence[Sequence[int]], arriving: int) -> MultiDecision:
    """Accept on the resource carrying the most current-stage mass for this type, if the LP
    accepts at least as much of the type's remaining demand as it rejects."""
    if arriving < 1:
        raise ValueError("arriving type must be a customer type (>= 1)")
    d = ms.num_resources
    demand = float(remaining_now[arriving - 1])
    if not any(x > 0 for x in on_hand):
        return MultiDecision(None, 0.0, demand, (0.0,) * d, 0.0, 0.0)
    problem, idx = build_multi_lookahead_lp(ms, n_tilde, on_hand, remaining_now, future_orders)
    sol = solve_lp(problem)
    if not sol.certified:
        raise LpError("look-ahead LP failed certification", problem.dump())
    mass = tuple(float(sol.x[idx(0, arriving, ell)]) for ell in range(d))
    v = sum(mass)
    rejected = demand - v
    resource = None
    if v - rejected >= -TIE_TOL:
        stocked = [ell for ell in range(d) if on_hand[ell] > 0]
        resource = max(stocked, key=lambda ell: (mass[ell], -ell))
    return MultiDecision(resource, v, rejected, mass, sol.objective, sol.duality_gap)


@dataclass(frozen=True)
class MultiCycleResult:
    reward: int  # micro-units
    holding: int  # micro-units
    ending: tuple[int, ...]
    accepted: tuple[int, ...]  # by type
    rejected: tuple[int, ...]
    lost: tuple[int, ...]
    served: tuple[int, ...]  # units drawn from each resource
    lp_count: int = 0
    lp_worst_gap: float = 0.0

    @property
    def profit(self) -> int:
        return self.reward - self.holding


def run_multi_cycle(ms: MultiSpec, algo: FulfillmentAlgo, on_hand: Sequence[int], arrivals: Sequence[int],
                    future_orders: Sequence[Sequence[int]] = (), memo: dict | None = None) -> MultiCycleResult:
    """One cycle of multi-resource fulfillment.

    ``memo`` caches look-ahead decisions across calls; a decision depends only on its
    inputs, so sharing one dict over many paths changes nothing but speed.
    """
    M, d, T = ms.num_types, ms.num_resources, ms.T
    rmicro = ms.reward_micro
    arrivals = [int(a) for a in arrivals]
    stock = [int(x) for x in on_hand]
    acc, rej, lost = [0] * M, [0] * M, [0] * M
    served = [0] * d
    reward = 0
    lp_count, worst = 0, 0.0
    if algo.kind == "myopic_offline":
        demand = [arrivals.count(j) for j in range(1, M + 1)]
        x = myopic_offline_assign(demand, stock, ms)
        for j in range(M):
            for ell in range(d):
                k = int(x[j, ell])
                acc[j] += k
                served[ell] += k
                stock[ell] -= k
                reward += k * rmicro[j][ell]
            rej[j] = lost[j] = demand[j] - acc[j]
        lp_count = 1
    else:
        if algo.is_lookahead and not future_orders:
            future_orders = [()] * d
        orders_key = tuple(tuple(int(q) for q in f) for f in future_orders)
        for t, j in enumerate(arrivals, start=1):
            if j == 0:
                continue
            if algo.kind == "greedy":
                ell = greedy_assign(j, stock, ms)
            else:
                if algo.kind == "lookahead_online":
                    remaining = [(T - t + 1) * ms.arrival_probs[k] for k in range(1, M + 1)]
                else:
                    tail = arrivals[t - 1:]
                    remaining = [float(tail.count(k)) for k in range(1, M + 1)]
                key = (algo, tuple(stock), tuple(remaining), orders_key, j)
                dec = memo.get(key) if memo is not None else None
                if dec is None:
                    dec = multi_lookahead_decide(ms, algo.n_tilde, stock, remaining, future_orders, j)
                    if memo is not None:
                        memo[key] = dec
                if any(stock):
                    lp_count += 1
                    worst = max(worst, abs(dec.duality_gap))
                ell = dec.resource
            if ell is None:
                rej[j - 1] += 1
                if not any(stock):
                    lost[j - 1] += 1
            else:
                stock[ell] -= 1
                served[ell] += 1
                acc[j - 1] += 1
                reward += rmicro[j - 1][ell]
    holding = sum(h * e for h, e in zip(ms.holding_micro, stock))
    return MultiCycleResult(reward, holding, tuple(stock), tuple(acc), tuple(rej), tuple(lost),
                            tuple(served), lp_count, worst)


# ---------------------------------------------------------------- simulation


@dataclass(frozen=True)
class MultiRunConfig:
    spec: MultiSpec
    policies: tuple[ReplenishmentPolicy, ...]
    algo: FulfillmentAlgo
    num_paths: int
    master_seed: int = 0
    initial: MultiState | None = None
    burn_in: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        if len(self.policies) != self.spec.num_resources:
            raise ConfigError("need one replenishment policy per resource")
        if self.num_paths < 1 or self.threads < 1:
            raise ConfigError("num_paths and threads must be at least 1")
        if not 0 <= self.burn_in < self.spec.num_cycles:
            raise ConfigError("burn_in must leave at least one counted cycle")
        if self.initial is not None:
            lens = tuple(len(r.in_flight) for r in self.initial.resources)
            if lens != self.spec.lead_times:
                raise ConfigError("initial pipelines must match the resource lead times")

    def replace(self, **kw) -> "MultiRunConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return MultiRunConfig(**d)

    def to_json_dict(self) -> dict:
        d = {"spec": self.spec.to_json_dict(), "policies": [p.to_json_dict() for p in self.policies],
             "algo": self.algo.to_json_dict(), "K": self.num_paths, "seed": self.master_seed}
        if self.initial is not None:
            d["initial"] = [{"on_hand": r.on_hand, "in_flight": list(r.in_flight)} for r in self.initial.resources]
        if self.burn_in:
            d["burn_in"] = self.burn_in
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "MultiRunConfig":
        try:
            initial = None
            if "initial" in d:
                initial = MultiState(tuple(PipelineState(int(r["on_hand"]), tuple(r["in_flight"]))
                                           for r in d["initial"]))
            return cls(MultiSpec.from_json_dict(d["spec"]), tuple(policy_from_json_dict(p) for p in d["policies"]),
                       FulfillmentAlgo.from_json_dict(d["algo"]), int(d.get("K", 1000)), int(d.get("seed", 0)),
                       initial, int(d.get("burn_in", 0)))
        except (KeyError, TypeError, InvariantViolation) as e:
            raise ConfigError(f"malformed multi-resource config: {e}") from e

    @property
    def config_hash(self) -> str:
        return config_hash(self.to_json_dict())


@dataclass
class MultiRunSummary(ProfitStats):
    config: MultiRunConfig
    path_profit: np.ndarray
    cycle_profit_sum: np.ndarray
    ending_sum: np.ndarray  # (N,) aggregate over resources, summed over paths
    accepted: np.ndarray
    rejected: np.ndarray
    lost: np.ndarray
    runtime_ms: float = 0.0
    lp_count: int = 0
    lp_worst_gap: float = 0.0
    position_violations: int = 0
    trace: dict = field(default_factory=dict, repr=False)

    @property
    def num_paths(self) -> int:
        return self.config.num_paths

    @property
    def periods(self) -> int:
        return self.config.spec.T

    @property
    def counted_cycles(self) -> int:
        return self.config.spec.N - self.config.burn_in

    def csv_row(self, timing: bool = False) -> dict:
        cfg = self.config
        return {
            "config_hash": cfg.config_hash,
            "d": cfg.spec.d,
            "T": cfg.spec.T,
            "N": cfg.spec.N,
            "L_vec": " ".join(map(str, cfg.spec.lead_times)),
            "policies": " ".join(f"{p.kind}:{p.param}" for p in cfg.policies),
            "algo": cfg.algo.kind,
            "n_tilde": cfg.algo.n_tilde if cfg.algo.is_lookahead else "",
            "K": cfg.num_paths,
            "seed": cfg.master_seed,
            "avg_profit_cycle": repr(self.avg_profit_per_cycle),
            "avg_profit_period": repr(self.avg_profit_per_period),
            "se": repr(self.std_error),
            "runtime_ms": f"{self.runtime_ms:.0f}" if timing else "",
        }


MULTI_COLUMNS = ("config_hash", "d", "T", "N", "L_vec", "policies", "algo", "n_tilde", "K", "seed",
                 "avg_profit_cycle", "avg_profit_period", "se", "runtime_ms")


def multi_summaries_csv(summaries, timing: bool = False) -> str:
    return write_csv((s.csv_row(timing) for s in summaries), MULTI_COLUMNS)


def _future_orders(policies, state: MultiState, n_tilde: int):
    out = []
    for pol, res in zip(policies, state.resources):
        out.append(res.in_flight[:n_tilde] if isinstance(pol, BaseStock) else (pol.c,) * n_tilde)
    return out


def _simulate_paths(cfg: MultiRunConfig, paths: np.ndarray) -> dict:
    ms = cfg.spec
    N, M, d = ms.N, ms.num_types, ms.d
    nt = cfg.algo.n_tilde if cfg.algo.is_lookahead else 0
    stream = RngStream(cfg.master_seed)
    grids = sample_paths(ms, stream, paths)
    B = paths.size
    out = {"cycle_profit": np.zeros((B, N), np.int64), "ending": np.zeros((B, N, d), np.int32),
           "accepted": np.zeros((B, M), np.int64), "rejected": np.zeros((B, M), np.int64),
           "lost": np.zeros((B, M), np.int64), "violations": np.zeros(B, np.int64),
           "lp_count": 0, "lp_worst_gap": 0.0}
    targets = [p.S if isinstance(p, BaseStock) else None for p in cfg.policies]
    memo = {}
    for b in range(B):
        state = cfg.initial if cfg.initial is not None else initial_multi_state(cfg.policies, ms)
        for n in range(N):
            if n > 0 or cfg.initial is None:
                out["violations"][b] += sum(1 for S, pos in zip(targets, state.positions())
                                            if S is not None and pos != S)
            res = run_multi_cycle(ms, cfg.algo, state.on_hand, grids[b, n], _future_orders(cfg.policies, state, nt),
                                  memo)
            out["cycle_profit"][b, n] = res.profit
            out["ending"][b, n] = res.ending
            out["accepted"][b] += res.accepted
            out["rejected"][b] += res.rejected
            out["lost"][b] += res.lost
            out["lp_count"] += res.lp_count
            out["lp_worst_gap"] = max(out["lp_worst_gap"], res.lp_worst_gap)
            state = next_multi_state(cfg.policies, state, res.ending)
    return out


def simulate_multi(cfg: MultiRunConfig) -> MultiRunSummary:
    """Monte Carlo over paths; path k uses the same arrival stream as the single-resource engine."""
    K = cfg.num_paths
    start = time.perf_counter()
    blocks = [b for b in np.array_split(np.arange(K), max(cfg.threads, math.ceil(K / 500))) if b.size]
    if cfg.threads == 1:
        outs = [_simulate_paths(cfg, b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outs = list(pool.map(lambda b: _simulate_paths(cfg, b), blocks))
    elapsed = (time.perf_counter() - start) * 1000.0

    def cat(name):
        return np.concatenate([o[name] for o in outs])

    profit, ending = cat("cycle_profit"), cat("ending")
    violations = int(cat("violations").sum())
    s = MultiRunSummary(
        config=cfg,
        path_profit=profit[:, cfg.burn_in:].sum(axis=1),
        cycle_profit_sum=profit.sum(axis=0),
        ending_sum=ending.sum(axis=2).sum(axis=0).astype(np.int64),
        accepted=cat("accepted").sum(axis=0),
        rejected=cat("rejected").sum(axis=0),
        lost=cat("lost").sum(axis=0),
        runtime_ms=elapsed,
        lp_count=sum(o["lp_count"] for o in outs),
        lp_worst_gap=max(o["lp_worst_gap"] for o in outs),
        position_violations=violations,
        trace={"cycle_profit": profit, "ending": ending},
    )
    if violations:
        raise InvariantViolation(f"{violations} per-resource base-stock position violations")
    return s


@dataclass(frozen=True)
class InventoryGaps:
    """Online minus offline ending inventory on matched paths: aggregate (K, N) and per resource (K, N, d)."""
    aggregate: np.ndarray
    per_resource: np.ndarray

    @property
    def aggregate_violations(self) -> int:
        return int((self.aggregate < 0).sum())

    @property
    def per_resource_range(self) -> tuple[int, int]:
        return int(self.per_resource.min()), int(self.per_resource.max())


def inventory_gaps(online: MultiRunSummary, offline: MultiRunSummary) -> InventoryGaps:
    a, b = online.config, offline.config
    if a.spec != b.spec or a.num_paths != b.num_paths or a.master_seed != b.master_seed:
        raise ConfigError("gap comparison needs runs on the same spec, paths and seed")
    per = online.trace["ending"].astype(np.int64) - offline.trace["ending"].astype(np.int64)
    return InventoryGaps(per.sum(axis=2), per)
