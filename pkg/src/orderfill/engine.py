"""Multi-cycle Monte Carlo over paths, parameter search, regret series and exact enumeration.

Simulation runs "lanes" in lock step with numpy: a lane is one (path, policy parameter)
pair. Every lane's arithmetic is elementwise, so results do not depend on how lanes are
chunked across worker threads; money stays in integer micro-units until the end.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import (MICRO, ConfigError, InvariantViolation, PipelineState, ProblemSpec,
                   inventory_position, require_valid)
from .fulfillment import BatchKernel, FulfillmentAlgo, LookAheadContext, run_cycle
from .replenishment import (BaseStock, ConstantOrder, ReplenishmentPolicy, initial_state,
                            next_state, policy_from_json_dict, with_param)
from .stochastics import RngStream, sample_paths

LANES_PER_BLOCK = 20_000
CHECKPOINTS = (10, 50, 100)


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    policy: ReplenishmentPolicy
    algo: FulfillmentAlgo
    num_paths: int
    master_seed: int = 0
    initial: PipelineState | None = None
    burn_in: int = 0
    threads: int = 1
    certify: bool = False

    def __post_init__(self):
        if self.num_paths < 1:
            raise ConfigError("num_paths must be at least 1")
        if not 0 <= self.burn_in < self.spec.num_cycles:
            raise ConfigError("burn_in must leave at least one counted cycle")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.initial is not None and len(self.initial.in_flight) != self.spec.lead_time:
            raise ConfigError("initial pipeline length must equal the lead time")

    def replace(self, **kw) -> "RunConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return RunConfig(**d)

    def to_json_dict(self) -> dict:
        d = {
            "spec": self.spec.to_json_dict(),
            "policy": self.policy.to_json_dict(),
            "algo": self.algo.to_json_dict(),
            "K": self.num_paths,
            "seed": self.master_seed,
        }
        if self.initial is not None:
            d["initial"] = {"on_hand": self.initial.on_hand, "in_flight": list(self.initial.in_flight)}
        if self.burn_in:
            d["burn_in"] = self.burn_in
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunConfig":
        try:
            spec = require_valid(ProblemSpec.from_json_dict(d["spec"]))
            initial = None
            if "initial" in d:
                initial = PipelineState(int(d["initial"]["on_hand"]), tuple(d["initial"]["in_flight"]))
            return cls(spec=spec, policy=policy_from_json_dict(d["policy"]),
                       algo=FulfillmentAlgo.from_json_dict(d["algo"]), num_paths=int(d.get("K", 1000)),
                       master_seed=int(d.get("seed", 0)), initial=initial, burn_in=int(d.get("burn_in", 0)))
        except (KeyError, TypeError, InvariantViolation) as e:
            raise ConfigError(f"malformed run config: {e}") from e

    @property
    def config_hash(self) -> str:
        return config_hash(self.to_json_dict())


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class ProfitStats:
    """Estimators shared by single- and multi-resource summaries.

    Needs ``path_profit`` (micro-units per path over counted cycles), ``cycle_profit_sum``,
    ``ending_sum`` and the properties ``num_paths``, ``counted_cycles``, ``periods``.
    """

    @property
    def total_profit_micro(self) -> int:
        return int(self.path_profit.sum())

    @property
    def profit_per_cycle_exact(self) -> Fraction:
        return Fraction(self.total_profit_micro, MICRO * self.num_paths * self.counted_cycles)

    @property
    def profit_per_period_exact(self) -> Fraction:
        return self.profit_per_cycle_exact / self.periods

    @property
    def avg_profit_per_cycle(self) -> float:
        return float(self.profit_per_cycle_exact)

    @property
    def avg_profit_per_period(self) -> float:
        return float(self.profit_per_period_exact)

    @property
    def per_path_average(self) -> np.ndarray:
        """Each path's average profit per cycle, in money."""
        return self.path_profit / (MICRO * self.counted_cycles)

    @property
    def std_error(self) -> float:
        K = self.num_paths
        if K < 2:
            return 0.0
        return float(np.std(self.per_path_average, ddof=1) / math.sqrt(K))

    @property
    def std_error_period(self) -> float:
        return self.std_error / self.periods

    @property
    def cycle_profit_mean(self) -> np.ndarray:
        return self.cycle_profit_sum / (MICRO * self.num_paths)

    @property
    def ending_inventory_mean(self) -> np.ndarray:
        return self.ending_sum / self.num_paths


@dataclass
class RunSummary(ProfitStats):
    config: RunConfig
    path_profit: np.ndarray  # (K,) micro-units summed over the counted cycles
    cycle_profit_sum: np.ndarray  # (N,) micro-units summed over paths
    ending_sum: np.ndarray  # (N,) units summed over paths
    accepted: np.ndarray  # (M,)
    rejected: np.ndarray  # (M,)
    lost: np.ndarray  # (M,)
    runtime_ms: float = 0.0
    lp_count: int = 0
    lp_worst_gap: float = 0.0
    position_violations: int = 0
    orders_nonnegative: bool = True
    trace: dict = field(default_factory=dict, repr=False)

    @property
    def num_paths(self) -> int:
        return self.config.num_paths

    @property
    def periods(self) -> int:
        return self.config.spec.periods_per_cycle

    @property
    def counted_cycles(self) -> int:
        return self.config.spec.num_cycles - self.config.burn_in

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "config_hash": self.config.config_hash,
            "avg_profit_per_cycle": self.avg_profit_per_cycle,
            "avg_profit_per_period": self.avg_profit_per_period,
            "std_error": self.std_error,
            "cycle_profit_mean": self.cycle_profit_mean.tolist(),
            "ending_inventory_mean": self.ending_inventory_mean.tolist(),
            "accepted_by_type": self.accepted.tolist(),
            "rejected_by_type": self.rejected.tolist(),
            "lost_by_type": self.lost.tolist(),
            "position_violations": self.position_violations,
        }

    def csv_row(self, timing: bool = False) -> dict:
        cfg = self.config
        return {
            "config_hash": cfg.config_hash,
            "T": cfg.spec.periods_per_cycle,
            "N": cfg.spec.num_cycles,
            "L": cfg.spec.lead_time,
            "policy": cfg.policy.kind,
            "param": cfg.policy.param,
            "algo": cfg.algo.kind,
            "n_tilde": cfg.algo.n_tilde if cfg.algo.is_lookahead else "",
            "K": cfg.num_paths,
            "seed": cfg.master_seed,
            "avg_profit_cycle": repr(self.avg_profit_per_cycle),
            "avg_profit_period": repr(self.avg_profit_per_period),
            "se": repr(self.std_error),
            "runtime_ms": f"{self.runtime_ms:.0f}" if timing else "",
        }


SUMMARY_COLUMNS = ("config_hash", "T", "N", "L", "policy", "param", "algo", "n_tilde", "K", "seed",
                   "avg_profit_cycle", "avg_profit_period", "se", "runtime_ms")


def write_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def summaries_csv(summaries: Iterable[RunSummary], timing: bool = False) -> str:
    return write_csv((s.csv_row(timing) for s in summaries), SUMMARY_COLUMNS)


# ---------------------------------------------------------------- lane simulation


@dataclass
class _LaneOutput:
    cycle_profit: np.ndarray  # (B, N) int64
    ending: np.ndarray  # (B, N) int32
    off_target: np.ndarray  # (B,) cycles after the first whose post-order position missed S
    first_off_target: np.ndarray  # (B,) position off target at cycle 1
    min_order: np.ndarray  # (B,)
    accepted: np.ndarray  # (B, M)
    rejected: np.ndarray
    lost: np.ndarray
    lp_count: int
    lp_worst_gap: float


def _initial_arrays(spec, policy_kind, params, initial, B):
    L = spec.lead_time
    on_hand = np.empty(B, dtype=np.int64)
    pipe = np.empty((B, L), dtype=np.int64)
    cache = {}
    for b, p in enumerate(params):
        if p not in cache:
            if initial is not None:
                st = initial
            else:
                pol = BaseStock(int(p)) if policy_kind == "base_stock" else ConstantOrder(int(p))
                st = initial_state(pol, spec)
            cache[p] = st
        st = cache[p]
        on_hand[b] = st.on_hand
        pipe[b] = st.in_flight
    return on_hand, pipe


def _run_lanes(spec: ProblemSpec, algo: FulfillmentAlgo, policy_kind: str, params: np.ndarray,
               path_ids: np.ndarray, seed: int, initial: PipelineState | None,
               certify: bool) -> _LaneOutput:
    """Simulate lanes sharing a block of unique paths. ``path_ids`` indexes into the block."""
    N, T, L, M = spec.num_cycles, spec.periods_per_cycle, spec.lead_time, spec.num_types
    uniq, lane_to_path = np.unique(path_ids, return_inverse=True)
    B = params.size
    kernel = BatchKernel(spec, algo, certify)
    stream = RngStream(seed)
    h = spec.holding_micro
    on_hand, pipe = _initial_arrays(spec, policy_kind, params, initial, B)
    base = policy_kind == "base_stock"
    nt = algo.n_tilde if algo.is_lookahead else 0
    out = _LaneOutput(np.zeros((B, N), np.int64), np.zeros((B, N), np.int32), np.zeros(B, np.int64),
                      np.zeros(B, bool), np.full(B, np.iinfo(np.int64).max), np.zeros((B, M), np.int64),
                      np.zeros((B, M), np.int64), np.zeros((B, M), np.int64), 0, 0.0)
    for n in range(N):
        if base:
            miss = on_hand + pipe.sum(axis=1) != params
            if n == 0:
                out.first_off_target = miss
            else:
                out.off_target += miss
        arr = sample_paths(spec, stream, uniq, num_cycles=1, first_cycle=n)[:, 0, :][lane_to_path]
        future = None
        if nt:
            if base:
                future = pipe[:, :nt]
            else:
                future = np.broadcast_to(params[:, None], (B, nt))
        res = kernel.run(on_hand, arr, future)
        ending = res.ending
        out.cycle_profit[:, n] = res.reward - h * ending
        out.ending[:, n] = ending
        out.accepted += res.accepted
        out.rejected += res.rejected
        out.lost += res.lost
        out.lp_count += res.lp_count
        out.lp_worst_gap = max(out.lp_worst_gap, res.lp_worst_gap)
        placed = params - (ending + pipe.sum(axis=1)) if base else params.astype(np.int64)
        if L:
            arriving = pipe[:, 0].copy()
            pipe = np.concatenate([pipe[:, 1:], placed[:, None]], axis=1)
        else:
            arriving = placed
        out.min_order = np.minimum(out.min_order, placed)
        on_hand = ending + arriving
    return out


def _blocks(K: int, lanes_per_path: int, threads: int) -> list[np.ndarray]:
    per_block = max(1, LANES_PER_BLOCK // max(1, lanes_per_path))
    n_blocks = max(threads, math.ceil(K / per_block))
    return [b for b in np.array_split(np.arange(K), n_blocks) if b.size]


def _simulate_params(cfg: RunConfig, params: Sequence[int]) -> list[RunSummary]:
    """Evaluate every parameter value on the same K paths (common random numbers)."""
    spec = require_valid(cfg.spec)
    params = np.asarray(list(params), dtype=np.int64)
    C, K, N, M = params.size, cfg.num_paths, spec.num_cycles, spec.num_types
    kind = cfg.policy.kind
    start = time.perf_counter()
    blocks = _blocks(K, C, cfg.threads)

    def work(paths):
        lane_params = np.repeat(params, paths.size)
        lane_paths = np.tile(paths, C)
        return _run_lanes(spec, cfg.algo, kind, lane_params, lane_paths, cfg.master_seed,
                          cfg.initial, cfg.certify)

    if cfg.threads == 1:
        outs = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outs = list(pool.map(work, blocks))
    elapsed = (time.perf_counter() - start) * 1000.0

    def gather(name, c):
        return np.concatenate([getattr(o, name).reshape(C, -1, *getattr(o, name).shape[1:])[c] for o in outs])

    lp_count = sum(o.lp_count for o in outs)
    worst = max(o.lp_worst_gap for o in outs)
    summaries = []
    burn = cfg.burn_in
    for c, p in enumerate(params):
        profit = gather("cycle_profit", c)
        ending = gather("ending", c)
        off = gather("off_target", c)
        violations = 0
        if kind == "base_stock":
            # cycle 1 uses the supplied start state; every later cycle starts right after ordering
            violations = int(off.sum())
            if cfg.initial is None:
                violations += int(gather("first_off_target", c).sum())
        summaries.append(RunSummary(
            config=cfg.replace(policy=with_param(cfg.policy, int(p))),
            path_profit=profit[:, burn:].sum(axis=1),
            cycle_profit_sum=profit.sum(axis=0),
            ending_sum=ending.sum(axis=0),
            accepted=gather("accepted", c).sum(axis=0),
            rejected=gather("rejected", c).sum(axis=0),
            lost=gather("lost", c).sum(axis=0),
            runtime_ms=elapsed / C,
            lp_count=lp_count,
            lp_worst_gap=worst,
            position_violations=violations,
            orders_nonnegative=bool(gather("min_order", c).min() >= 0),
            trace={"cycle_profit": profit, "ending": ending, "off_target": off},
        ))
    return summaries


def simulate(cfg: RunConfig) -> RunSummary:
    """Monte Carlo estimate for one configuration; path k always uses stream (seed, k)."""
    if cfg.algo.is_lookahead and isinstance(cfg.policy, BaseStock):
        cfg.algo.check_horizon(cfg.spec.lead_time)
    s = _simulate_params(cfg, [cfg.policy.param])[0]
    if s.position_violations:
        bad = int(np.argmax(s.trace["off_target"] > 0))
        raise InvariantViolation(f"base-stock position off target on path {bad}")
    return s


def simulate_many(cfg: RunConfig, params: Sequence[int]) -> list[RunSummary]:
    return _simulate_params(cfg, params)


def optimize_parameter(cfg: RunConfig, search: Iterable[int]) -> tuple[int, RunSummary]:
    """Best policy parameter by average profit per cycle; ties go to the smallest value."""
    cands = sorted(set(int(s) for s in search))
    if not cands:
        raise ConfigError("empty search range")
    results = _simulate_params(cfg, cands)
    best = max(range(len(cands)), key=lambda i: (results[i].total_profit_micro, -cands[i]))
    return cands[best], results[best]


def refine_parameter(cfg: RunConfig, lo: int, hi: int, coarse_step: int) -> tuple[int, RunSummary]:
    """Coarse grid over [lo, hi] then a unit-step pass around the coarse winner."""
    lo, hi = max(0, lo), max(lo, hi)
    step = max(1, coarse_step)
    best, _ = optimize_parameter(cfg, range(lo, hi + 1, step))
    if step == 1:
        return optimize_parameter(cfg, [best])
    return optimize_parameter(cfg, range(max(lo, best - step + 1), min(hi, best + step - 1) + 1))


@dataclass
class RegretReport:
    per_cycle_gap: np.ndarray  # (N,) mean over paths of offline minus online profit, money
    cumulative_gap: np.ndarray  # (N,)
    checkpoints: dict  # N -> (mean gap in cycle N, standard error)
    running_average: dict  # N -> (mean per-cycle gap over cycles 1..N, standard error)

    def to_json_dict(self) -> dict:
        return {
            "per_cycle_gap": self.per_cycle_gap.tolist(),
            "cumulative_gap": self.cumulative_gap.tolist(),
            "checkpoints": {str(k): list(v) for k, v in self.checkpoints.items()},
            "running_average": {str(k): list(v) for k, v in self.running_average.items()},
        }


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def regret_series(cfg_off: RunConfig, cfg_on: RunConfig, checkpoints: Sequence[int] = CHECKPOINTS) -> RegretReport:
    same = (cfg_off.spec == cfg_on.spec and cfg_off.policy == cfg_on.policy
            and cfg_off.master_seed == cfg_on.master_seed and cfg_off.num_paths == cfg_on.num_paths
            and cfg_off.initial == cfg_on.initial)
    if not same:
        raise ConfigError("regret needs identical spec, policy, seed, paths and initial state")
    off = _simulate_params(cfg_off, [cfg_off.policy.param])[0]
    on = _simulate_params(cfg_on, [cfg_on.policy.param])[0]
    diff = (off.trace["cycle_profit"] - on.trace["cycle_profit"]) / MICRO  # (K, N)
    per_cycle = diff.mean(axis=0)
    N = diff.shape[1]
    cum = np.cumsum(diff, axis=1)
    points = {c: _mean_se(diff[:, c - 1]) for c in checkpoints if c <= N}
    running = {c: _mean_se(cum[:, c - 1] / c) for c in checkpoints if c <= N}
    return RegretReport(per_cycle, np.cumsum(per_cycle), points, running)


# ---------------------------------------------------------------- exact enumeration

MAX_GRIDS = 10**6


def exact_expectation(spec: ProblemSpec, policy: ReplenishmentPolicy | None, algo: FulfillmentAlgo,
                      initial: PipelineState | None = None, schedule: Sequence[int] | None = None,
                      backend: str = "greedy") -> float:
    """Expected total profit over all N cycles by enumerating every arrival grid.

    ``schedule[n-1]`` (optional) is an exogenous quantity landing at the start of
    cycle n+1, overriding the policy's own orders.
    """
    require_valid(spec)
    M, N, T = spec.num_types, spec.num_cycles, spec.periods_per_cycle
    cells = N * T
    if (M + 1) ** cells > MAX_GRIDS:
        raise ConfigError(f"{(M + 1) ** cells} arrival grids exceed the enumeration limit {MAX_GRIDS}")
    if initial is None:
        if policy is None:
            raise ConfigError("need a policy or an explicit initial state")
        initial = initial_state(policy, spec)
    if schedule is None and policy is None:
        raise ConfigError("need a policy or an order schedule")
    sched = list(schedule) if schedule is not None else None
    lam = spec.arrival_probs
    nt = algo.n_tilde if algo.is_lookahead else 0
    terms = []
    for grid in itertools.product(range(M + 1), repeat=cells):
        w = math.prod(lam[j] for j in grid)
        if w == 0.0:
            continue
        state = initial
        total = 0
        for n in range(N):
            arrivals = grid[n * T:(n + 1) * T]
            if sched is not None:
                orders = sched[n:n + nt]
            else:
                orders = state.in_flight[:nt] if isinstance(policy, BaseStock) else (policy.c,) * nt
            ctx = LookAheadContext.for_spec(spec, orders, nt)
            res = run_cycle(spec, algo, state.on_hand, arrivals, ctx, backend)
            total += res.profit
            if n + 1 < N:
                if sched is not None:
                    state = PipelineState(res.ending_inventory + sched[n], state.in_flight)
                else:
                    state, _ = next_state(policy, state, res.ending_inventory)
        terms.append(w * total)
    return math.fsum(terms) / MICRO


def simulate_scalar(cfg: RunConfig, backend: str = "greedy") -> list[list[int]]:
    """Reference path-by-path simulation with the scalar executors; returns per-cycle profits."""
    spec = cfg.spec
    nt = cfg.algo.n_tilde if cfg.algo.is_lookahead else 0
    stream = RngStream(cfg.master_seed)
    out = []
    for k in range(cfg.num_paths):
        grid = sample_paths(spec, stream, [k])[0]
        state = cfg.initial if cfg.initial is not None else initial_state(cfg.policy, spec)
        row = []
        for n in range(spec.num_cycles):
            if isinstance(cfg.policy, BaseStock):
                if inventory_position(state) != cfg.policy.S and (n > 0 or cfg.initial is None):
                    raise InvariantViolation(f"position off target at path {k}, cycle {n + 1}")
                orders = state.in_flight[:nt]
            else:
                orders = (cfg.policy.c,) * nt
            ctx = LookAheadContext.for_spec(spec, orders, nt)
            res = run_cycle(spec, cfg.algo, state.on_hand, grid[n], ctx, backend)
            row.append(res.profit)
            state, _ = next_state(cfg.policy, state, res.ending_inventory)
        out.append(row)
    return out
