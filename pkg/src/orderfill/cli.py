"""Command-line driver: preset experiments, bound reports and tidy CSV/JSON output."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .bounds import RegretModel, bound_report, scaling_rows
from .core import ConfigError, DomainError, ProblemSpec, require_valid
from .engine import (RunConfig, config_hash, exact_expectation, optimize_parameter, refine_parameter,
                     regret_series, simulate, summaries_csv, write_csv)
from .fulfillment import GREEDY, MYOPIC_OFFLINE, FulfillmentAlgo, bayes_selector
from .lpsolve import LpError
from .multires import (MultiRunConfig, MultiSpec, inventory_gaps, multi_summaries_csv, simulate_multi)
from .replenishment import BaseStock, ConstantOrder

FULL_PATHS = 10_000
DEFAULT_SCALE = 0.2

EXAMPLE1_TARGETS = {"offline": 16.4669, "bs": 16.6289}
FIG1_T_GRID = (5, 10, 20, 50, 100)
FIG3_LEAD_TIMES = (8, 10)
FIG3_HORIZONS = tuple(range(6))
FIG4_T_GRID = (10, 20, 30, 40, 50)
TABLE1_REWARDS = ((1, 9, 10), (1, 5, 10), (1, 2, 10))
TABLE1_TYPE_PROBS = ((0.2, 0.3, 0.3), (0.2, 0.2, 0.4), (0.2, 0.1, 0.5))
TABLE1_HOLDING = (2.0, 3.0)
TABLE1_NO_ARRIVAL = 0.2  # the table lists only the three type probabilities
LOOKAHEAD_REWARDS = (1, 9, 10)
LOOKAHEAD_PROBS = (0.2, 0.2, 0.3, 0.3)
LOOKAHEAD_RADIUS = 10  # look-ahead S search half-width around the baseline optimum


# ---------------------------------------------------------------- presets


def example1_spec() -> ProblemSpec:
    """Two cycles of two periods, one unit on hand and one unit arriving for cycle 2.

    Each type arrives with probability 0.3 and no one arrives with probability 0.1;
    this assignment reproduces the offline value 16.4669.
    """
    return ProblemSpec(3, 2, 2, 1, (1, 9, 10), (0.1, 0.3, 0.3, 0.3), 0.5)


def fig1_spec(T: int, N: int = 1000) -> ProblemSpec:
    return ProblemSpec(3, T, N, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0)


def lookahead_spec(T: int = 50, N: int = 50, L: int = 10, h: float = 2.0,
                   rewards=LOOKAHEAD_REWARDS, probs=LOOKAHEAD_PROBS) -> ProblemSpec:
    return ProblemSpec(len(rewards), T, N, L, tuple(rewards), tuple(probs), h)


def table1_specs() -> list[ProblemSpec]:
    out = []
    for r in TABLE1_REWARDS:
        for lam in TABLE1_TYPE_PROBS:
            for h in TABLE1_HOLDING:
                out.append(lookahead_spec(50, 50, 10, h, r, (TABLE1_NO_ARRIVAL,) + lam))
    return out


def multi_spec() -> MultiSpec:
    return MultiSpec(2, 20, 20, (0.3, 0.2, 0.3, 0.2), ((5, 4), (8, 9), (10, 8)), (2.0, 1.0), (1, 2))


def scaled_paths(scale: float, paths: int | None = None) -> int:
    if paths is not None:
        return paths
    if not 0 < scale <= 1:
        raise ConfigError("scale must lie in (0, 1]")
    return math.ceil(scale * FULL_PATHS)


# ---------------------------------------------------------------- parameter search


def base_stock_window(spec: ProblemSpec) -> tuple[int, int, int]:
    """(lo, hi, coarse step) around mean lead-time demand."""
    n = (spec.L + 1) * spec.T
    mean = n * spec.arrival_rate
    sd = math.sqrt(n * spec.arrival_rate * spec.no_arrival_prob)
    lo = max(0, math.floor(mean - 4 * sd - 2))
    hi = math.ceil(mean + 2 * sd + 2)
    return lo, hi, max(1, round(sd / 2))


def constant_order_window(spec: ProblemSpec) -> tuple[int, int, int]:
    mean = spec.T * spec.arrival_rate
    sd = math.sqrt(spec.T * spec.arrival_rate * spec.no_arrival_prob)
    hi = math.ceil(mean) - 1
    lo = max(0, math.floor(mean - 4 * sd - 2))
    return lo, max(lo, hi), max(1, round(sd / 2))


def best_policy(cfg: RunConfig):
    """Grid-optimize the policy parameter of ``cfg`` with common random numbers."""
    window = base_stock_window if isinstance(cfg.policy, BaseStock) else constant_order_window
    lo, hi, step = window(cfg.spec)
    return refine_parameter(cfg, lo, hi, step)


def best_near(cfg: RunConfig, center: int, radius: int = LOOKAHEAD_RADIUS):
    return optimize_parameter(cfg, range(max(0, center - radius), center + radius + 1))


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class Example1Report:
    offline: float
    bs: float

    def lines(self) -> list[str]:
        t = EXAMPLE1_TARGETS
        return [f"offline={self.offline:.4f} target={t['offline']:.4f} delta={self.offline - t['offline']:+.4f}",
                f"bs={self.bs:.4f} target={t['bs']:.4f} delta={self.bs - t['bs']:+.4f}",
                f"bs-offline={self.bs - self.offline:+.4f}"]


def run_example1() -> Example1Report:
    spec = example1_spec()
    policy = ConstantOrder(1)
    return Example1Report(exact_expectation(spec, policy, MYOPIC_OFFLINE),
                          exact_expectation(spec, policy, bayes_selector()))


FIG1_COMBOS = (("base_stock", "greedy"), ("base_stock", "bayes_selector"),
               ("constant_order", "greedy"), ("constant_order", "bayes_selector"))


def run_fig1(Ts: Sequence[int], paths: int, cycles: int, seed: int = 0, threads: int = 1) -> list[dict]:
    rows = []
    for T in Ts:
        spec = fig1_spec(T, cycles)
        for kind, algo_name in FIG1_COMBOS:
            algo = GREEDY if algo_name == "greedy" else bayes_selector()
            policy = BaseStock(0) if kind == "base_stock" else ConstantOrder(0)
            cfg = RunConfig(spec, policy, algo, paths, seed, threads=threads)
            param, s = best_policy(cfg)
            rows.append({"config_hash": s.config.config_hash, "T": T, "combination": f"{kind}+{algo_name}",
                         "param": param, "profit": repr(s.avg_profit_per_period),
                         "se": repr(s.std_error_period), "K": paths, "N": cycles, "seed": seed})
    return rows


FIG1_COLUMNS = ("config_hash", "T", "combination", "param", "profit", "se", "K", "N", "seed")


def _uplift(value: float, base: float) -> float:
    return (value - base) / base


def lookahead_comparison(spec: ProblemSpec, n_tilde: int, paths: int, seed: int = 0, threads: int = 1,
                         certify: bool = False) -> dict:
    """Myopic offline, offline look-ahead, BS and online look-ahead, each at its own optimized S.

    Baselines search a wide window; look-ahead searches around its baseline's optimum.
    """
    def cfg(algo):
        return RunConfig(spec, BaseStock(0), algo, paths, seed, threads=threads, certify=certify)

    s_off, off = best_policy(cfg(MYOPIC_OFFLINE))
    s_bs, bs = best_policy(cfg(bayes_selector()))
    if n_tilde == 0:
        s_la_off, la_off, s_la_on, la_on = s_off, off, s_bs, bs
    else:
        s_la_off, la_off = best_near(cfg(FulfillmentAlgo("lookahead_offline", n_tilde)), s_off)
        s_la_on, la_on = best_near(cfg(FulfillmentAlgo("lookahead_online", n_tilde)), s_bs)
    return {
        "config_hash": config_hash({"spec": spec.to_json_dict(), "n_tilde": n_tilde, "K": paths, "seed": seed}),
        "T": spec.T, "N": spec.N, "L": spec.L, "n_tilde": n_tilde, "h": spec.h,
        "rewards": " ".join(f"{r:g}" for r in spec.rewards),
        "lambda": " ".join(f"{p:g}" for p in spec.arrival_probs),
        "S_offline": s_off, "offline_myopic": repr(off.avg_profit_per_period),
        "S_offline_lookahead": s_la_off, "offline_lookahead": repr(la_off.avg_profit_per_period),
        "uplift_offline": repr(_uplift(la_off.avg_profit_per_period, off.avg_profit_per_period)),
        "S_bs": s_bs, "online_bs": repr(bs.avg_profit_per_period),
        "S_online_lookahead": s_la_on, "online_lookahead": repr(la_on.avg_profit_per_period),
        "uplift_online": repr(_uplift(la_on.avg_profit_per_period, bs.avg_profit_per_period)),
        "se_online_bs": repr(bs.std_error_period), "se_online_lookahead": repr(la_on.std_error_period),
        "lp_worst_gap": repr(max(la_on.lp_worst_gap, la_off.lp_worst_gap)),
        "K": paths, "seed": seed,
    }


LOOKAHEAD_COLUMNS = ("config_hash", "T", "N", "L", "n_tilde", "h", "rewards", "lambda",
                     "S_offline", "offline_myopic", "S_offline_lookahead", "offline_lookahead", "uplift_offline",
                     "S_bs", "online_bs", "S_online_lookahead", "online_lookahead", "uplift_online",
                     "se_online_bs", "se_online_lookahead", "lp_worst_gap", "K", "seed")


def run_fig3(L: int, paths: int, seed: int = 0, threads: int = 1, horizons=FIG3_HORIZONS) -> list[dict]:
    spec = lookahead_spec(50, 50, L, 2.0)
    return [lookahead_comparison(spec, nt, paths, seed, threads) for nt in horizons]


def run_fig4(Ts: Sequence[int], paths: int, seed: int = 0, threads: int = 1) -> list[dict]:
    return [lookahead_comparison(lookahead_spec(T, 50, 10, 3.0), 5, paths, seed, threads) for T in Ts]


def run_table1(paths: int, seed: int = 0, threads: int = 1, rows: Sequence[int] | None = None,
               n_tilde: int = 5, certify: bool = False) -> list[dict]:
    specs = table1_specs()
    picks = range(len(specs)) if rows is None else rows
    return [lookahead_comparison(specs[i], n_tilde, paths, seed, threads, certify) for i in picks]


def run_multi(cfg_base: MultiRunConfig) -> tuple[list, dict]:
    """Greedy, myopic offline and BS on the same paths plus online-minus-offline inventory gaps."""
    runs = [simulate_multi(cfg_base.replace(algo=a)) for a in (GREEDY, MYOPIC_OFFLINE, bayes_selector())]
    gaps = {}
    for s in (runs[0], runs[2]):
        g = inventory_gaps(s, runs[1])
        lo, hi = g.per_resource_range
        gaps[s.config.algo.label] = {"aggregate_min": int(g.aggregate.min()),
                                     "aggregate_violations": g.aggregate_violations,
                                     "per_resource_min": lo, "per_resource_max": hi}
    return runs, gaps


# ---------------------------------------------------------------- command handlers


def _load_json(path: str | None):
    if path is None:
        return None
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def _emit(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    print(f"wrote {p}")
    return p


def _run_config(args) -> RunConfig:
    d = _load_json(args.config)
    if d is None:
        raise ConfigError("--config is required for this command")
    cfg = RunConfig.from_json_dict(d)
    kw = {"threads": args.threads}
    if args.seed is not None:
        kw["master_seed"] = args.seed
    if args.paths is not None:
        kw["num_paths"] = args.paths
    return cfg.replace(**kw), d


def cmd_simulate(args) -> None:
    cfg, _ = _run_config(args)
    s = simulate(cfg)
    _emit(args.out, "simulate.csv", summaries_csv([s], timing=args.timing))
    _emit(args.out, "simulate.json", json.dumps(s.to_json_dict(), indent=2, sort_keys=True) + "\n")
    print(f"profit_per_period={s.avg_profit_per_period:.6f} se={s.std_error_period:.6f}")


def cmd_optimize(args) -> None:
    cfg, d = _run_config(args)
    if "search" in d:
        lo, hi, step = (int(x) for x in d["search"])
        param, s = refine_parameter(cfg, lo, hi, step)
    else:
        param, s = best_policy(cfg)
    _emit(args.out, "optimize.csv", summaries_csv([s], timing=args.timing))
    print(f"best_{s.config.policy.kind}={param} profit_per_period={s.avg_profit_per_period:.6f}")


def cmd_regret(args) -> None:
    cfg, d = _run_config(args)
    online = FulfillmentAlgo.from_json_dict(d.get("online_algo", {"kind": "bayes_selector"}))
    rep = regret_series(cfg, cfg.replace(algo=online))
    rows = [{"config_hash": cfg.config_hash, "cycle": n + 1, "gap": repr(g), "cumulative": repr(c)}
            for n, (g, c) in enumerate(zip(rep.per_cycle_gap, rep.cumulative_gap))]
    _emit(args.out, "regret.csv", write_csv(rows, ("config_hash", "cycle", "gap", "cumulative")))
    _emit(args.out, "regret.json", json.dumps(rep.to_json_dict(), indent=2, sort_keys=True) + "\n")


def cmd_bounds(args) -> None:
    d = _load_json(args.config)
    spec = require_valid(ProblemSpec.from_json_dict(d)) if d is not None else fig1_spec(50)
    model = RegretModel.bayes_selector(spec.rewards, spec.arrival_probs)
    h = config_hash(spec.to_json_dict())
    if args.sweep_T:
        Ts = [int(x) for x in args.sweep_T.split(",")]
        rows = [{"config_hash": h, "T": T, "name": n, "value": repr(v)} for T, n, v in scaling_rows(spec, Ts)]
        _emit(args.out, "bounds_sweep.csv", write_csv(rows, ("config_hash", "T", "name", "value")))
        return
    rep = bound_report(spec, model)
    _emit(args.out, "bounds.json", rep.to_json())
    rows = [{"config_hash": h, "T": T, "name": n, "value": repr(v)} for T, n, v in rep.csv_rows(spec.T)]
    _emit(args.out, "bounds.csv", write_csv(rows, ("config_hash", "T", "name", "value")))
    for f in rep.flags:
        print(f"note: {f}")


def cmd_example1(args) -> None:
    for line in run_example1().lines():
        print(line)


def cmd_fig1(args) -> None:
    K = scaled_paths(args.scale, args.paths)
    N = max(1, math.ceil(args.scale * 1000))
    rows = run_fig1(FIG1_T_GRID, K, N, args.seed or 0, args.threads)
    _emit(args.out, "fig1.csv", write_csv(rows, FIG1_COLUMNS))


def cmd_fig3(args) -> None:
    K = scaled_paths(args.scale, args.paths)
    rows = []
    for L in ([args.lead_time] if args.lead_time is not None else FIG3_LEAD_TIMES):
        rows += run_fig3(L, K, args.seed or 0, args.threads)
    _emit(args.out, "fig3.csv", write_csv(rows, LOOKAHEAD_COLUMNS))


def cmd_fig4(args) -> None:
    K = scaled_paths(args.scale, args.paths)
    _emit(args.out, "fig4.csv", write_csv(run_fig4(FIG4_T_GRID, K, args.seed or 0, args.threads),
                                          LOOKAHEAD_COLUMNS))


def cmd_table1(args) -> None:
    K = scaled_paths(args.scale, args.paths)
    rows = run_table1(K, args.seed or 0, args.threads, args.row)
    _emit(args.out, "table1.csv", write_csv(rows, LOOKAHEAD_COLUMNS))


def cmd_multi(args) -> None:
    d = _load_json(args.config)
    if d is not None:
        cfg = MultiRunConfig.from_json_dict(d)
    else:
        cfg = MultiRunConfig(multi_spec(), (ConstantOrder(6), ConstantOrder(6)), GREEDY,
                             scaled_paths(args.scale))
    kw = {"threads": args.threads}
    if args.seed is not None:
        kw["master_seed"] = args.seed
    if args.paths is not None:
        kw["num_paths"] = args.paths
    runs, gaps = run_multi(cfg.replace(**kw))
    _emit(args.out, "multi.csv", multi_summaries_csv(runs, timing=args.timing))
    _emit(args.out, "multi_gaps.json", json.dumps(gaps, indent=2, sort_keys=True) + "\n")


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "regret": cmd_regret, "bounds": cmd_bounds,
            "example1": cmd_example1, "fig1": cmd_fig1, "fig3": cmd_fig3, "fig4": cmd_fig4,
            "table1": cmd_table1, "multi": cmd_multi}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orderfill", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--paths", type=int, help="number of sample paths K")
        sp.add_argument("--scale", type=float, default=DEFAULT_SCALE, help="fraction of full-size K (and N for fig1)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
        if name == "bounds":
            sp.add_argument("--sweep-T", dest="sweep_T", help="comma-separated T values for scaling rows")
        if name == "fig3":
            sp.add_argument("--lead-time", dest="lead_time", type=int)
        if name == "table1":
            sp.add_argument("--row", type=int, action="append", help="row index (0-based); repeatable")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DomainError, LpError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
