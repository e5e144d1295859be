"""Acceptance criteria AC-1 .. AC-14, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together at the end of
the pytest run (see conftest.py) and also when this file is run as a script.
"""

import math
import time

import numpy as np
import pytest

from orderfill.bounds import (a1_lower, a1_upper, a2, backorder_cost, constant_order_cost, cstar,
                              kingman_expected_inventory, pipeline_law, replenishment_gap_envelope,
                              scaling_rows)
from orderfill.cli import (EXAMPLE1_TARGETS, best_policy, fig1_spec, multi_spec, run_example1, run_fig1,
                           run_table1, table1_specs, write_csv, FIG1_COLUMNS)
from orderfill.core import ProblemSpec
from orderfill.engine import RunConfig, regret_series, simulate, summaries_csv
from orderfill.fulfillment import (GREEDY, MYOPIC_OFFLINE, FulfillmentAlgo, LookAheadContext, bayes_selector,
                                   bayes_selector_accept, expected_remaining, lookahead_decide)
from orderfill.lpsolve import build_lookahead_lp, nested_greedy_batch, solve_lp
from orderfill.multires import MultiRunConfig, MultiSpec, inventory_gaps, multi_summaries_csv, simulate_multi
from orderfill.replenishment import BaseStock, ConstantOrder

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []
_shared: dict = {}


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _random_decision_state(rng):
    M = int(rng.integers(2, 5))
    rewards = tuple(float(x) for x in np.sort(rng.choice(np.arange(1, 20), M, replace=False)))
    lam = rng.dirichlet(np.ones(M + 1))
    lam[0] = 1.0 - lam[1:].sum()
    spec = ProblemSpec(M, int(rng.integers(1, 60)), 5, int(rng.integers(0, 4)), rewards, tuple(lam),
                       float(rng.uniform(0.1, 3.0)))
    t = int(rng.integers(1, spec.T + 1))
    return spec, t, int(rng.integers(0, 2 * spec.T + 1)), int(rng.integers(1, M + 1))


def test_ac01_example1_exact():
    start = time.perf_counter()
    rep = run_example1()
    secs = time.perf_counter() - start
    d_off = abs(rep.offline - EXAMPLE1_TARGETS["offline"])
    d_bs = abs(rep.bs - EXAMPLE1_TARGETS["bs"])
    ok = d_off <= 0.0005 and d_bs <= 0.0005 and secs < 1.0
    record("AC-1", ok, f"offline={rep.offline:.4f} (target 16.4669), bs={rep.bs:.4f} (target 16.6289), "
                       f"{secs:.2f}s")


def test_ac02_lookahead_zero_is_bayes_selector():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    agree, gaps = 0, []
    for _ in range(1000):
        spec, t, I, j = _random_decision_state(rng)
        ctx = LookAheadContext.for_spec(spec, (), 0)
        d = lookahead_decide(spec, 0, I, expected_remaining(spec, t), ctx, j)
        agree += d.accept == bayes_selector_accept(spec, I, t, j)
        if d.solved:
            gaps.append(abs(d.duality_gap) / (1 + abs(d.objective)))
    secs = time.perf_counter() - start
    _shared["ac2_gap"] = max(gaps)
    record("AC-2", agree == 1000 and secs < 5, f"{agree}/1000 decisions agree, {secs:.2f}s")


def test_ac03_offline_ending_inventory_dominance():
    start = time.perf_counter()
    spec = fig1_spec(50, 100)
    cfg = RunConfig(spec, ConstantOrder(30), MYOPIC_OFFLINE, 2000, 3)
    off = simulate(cfg).trace["ending"]
    worst = {}
    for algo in (GREEDY, bayes_selector()):
        on = simulate(cfg.replace(algo=algo)).trace["ending"]
        worst[algo.label] = int((off > on).sum())
    secs = time.perf_counter() - start
    record("AC-3", all(v == 0 for v in worst.values()) and secs < 120,
           f"violations {worst} over 2000 paths x 100 cycles (c=30), {secs:.0f}s")


def test_ac04_base_stock_position_invariant():
    spec = fig1_spec(50, 100)
    bad = {}
    for algo in (MYOPIC_OFFLINE, GREEDY, bayes_selector()):
        s = simulate(RunConfig(spec, BaseStock(105), algo, 2000, 3))
        bad[algo.label] = s.position_violations
        _shared.setdefault("ac4_csv", {})[algo.label] = summaries_csv([s])
    record("AC-4", all(v == 0 for v in bad.values()), f"position violations {bad} (S=105)")


def test_ac05_kingman_recursion():
    start = time.perf_counter()
    spec = ProblemSpec(3, 20, 30, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0)
    s = simulate(RunConfig(spec, ConstantOrder(10), MYOPIC_OFFLINE, 20_000, 5))
    ending = s.trace["ending"][:, -1].astype(float)
    mc, se = ending.mean(), ending.std(ddof=1) / math.sqrt(ending.size)
    exact = kingman_expected_inventory(30, 20, 0.3, 10)
    secs = time.perf_counter() - start
    record("AC-5", abs(mc - exact) <= 3 * se and secs < 60,
           f"formula {exact:.5f} vs MC {mc:.5f} (se {se:.5f}), {secs:.0f}s")


def test_ac06_fig1_crossover():
    start = time.perf_counter()
    rows = run_fig1((5, 100), 2000, 200, seed=0)
    secs = time.perf_counter() - start
    _shared["ac6_csv"] = write_csv(rows, FIG1_COLUMNS)
    by = {(r["T"], r["combination"]): (float(r["profit"]), float(r["se"])) for r in rows}
    bg5, cb5 = by[(5, "base_stock+greedy")], by[(5, "constant_order+bayes_selector")]
    bb100, bg100 = by[(100, "base_stock+bayes_selector")], by[(100, "base_stock+greedy")]
    m5 = (bg5[0] - cb5[0]) / math.hypot(bg5[1], cb5[1])
    m100 = (bb100[0] - bg100[0]) / math.hypot(bb100[1], bg100[1])
    record("AC-6", m5 >= 2 and m100 >= 2 and secs < 600,
           f"T=5 margin {m5:.1f} SE, T=100 margin {m100:.1f} SE, {secs:.0f}s")


def test_ac07_regret_stability():
    start = time.perf_counter()
    spec = fig1_spec(50, 100)
    S = a1_upper(50, spec.h, spec.rewards[-1], spec.L, spec.no_arrival_prob).level
    cfg = RunConfig(spec, BaseStock(S), MYOPIC_OFFLINE, 5000, 7)
    rep = regret_series(cfg, cfg.replace(algo=bayes_selector()), checkpoints=(10, 100))
    (g10, s10), (g100, s100) = rep.checkpoints[10], rep.checkpoints[100]
    secs = time.perf_counter() - start
    se = math.hypot(s10, s100)
    record("AC-7", abs(g10 - g100) <= 3 * se and secs < 300,
           f"S={S}: gap@10={g10:.4f}, gap@100={g100:.4f}, combined se {se:.4f}, {secs:.0f}s")


def test_ac08_fractiles_and_cstar():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    frac_ok = 0
    for _ in range(100):
        T, L = int(rng.integers(1, 40)), int(rng.integers(0, 5))
        lam0, h, p = float(rng.uniform(0.02, 0.95)), float(rng.uniform(0.1, 5)), float(rng.uniform(0.2, 30))
        law = pipeline_law(T, L, lam0)
        good = True
        for res in (a1_upper(T, h, p, L, lam0), a1_lower(T, h, p, L, lam0)):
            sweep = np.array([backorder_cost(law, S, h, res.penalty) for S in range((L + 1) * T + 1)])
            good &= sweep[res.level] <= sweep.min() + 1e-9
        frac_ok += good
    c_ok = 0
    for _ in range(50):
        T, lam0 = int(rng.integers(2, 60)), float(rng.uniform(0.05, 0.8))
        h, p = float(rng.uniform(0.2, 5)), float(rng.uniform(0.5, 30))
        v = a2(T, h, p, lam0)
        near = [constant_order_cost(T, h, p, lam0, c).value for c in (v.c.c - 1, v.c.c + 1) if c >= 0]
        c_ok += v.c.residual <= 1e-6 and all(v.value <= x + 1e-12 for x in near)
    secs = time.perf_counter() - start
    record("AC-8", frac_ok == 100 and c_ok == 50 and secs < 60,
           f"fractiles {frac_ok}/100, c* {c_ok}/50, {secs:.0f}s")


def test_ac09_sqrt_scaling():
    start = time.perf_counter()
    rows = scaling_rows(fig1_spec(400), [400, 1600])
    by = {(T, n): v / math.sqrt(T) for T, n, v in rows}
    ratios = {n: by[(1600, n)] / by[(400, n)] for n in ("a1_upper", "a1_lower", "a2")}
    secs = time.perf_counter() - start
    ok = all(abs(r - 1) <= 0.15 for r in ratios.values()) and secs < 60
    record("AC-9", ok, ", ".join(f"{n} ratio {r:.3f}" for n, r in ratios.items()) + f", {secs:.0f}s")


def test_ac10_gap_envelope_containment():
    start = time.perf_counter()
    lines, ok = [], True
    for T in (5, 100):
        spec = fig1_spec(T, 200)
        _, b = best_policy(RunConfig(spec, BaseStock(0), MYOPIC_OFFLINE, 5000, 10, burn_in=20))
        _, c = best_policy(RunConfig(spec, ConstantOrder(0), MYOPIC_OFFLINE, 5000, 10, burn_in=20))
        diff = (b.path_profit - c.path_profit) / (1e6 * b.counted_cycles)
        gap, se = diff.mean(), diff.std(ddof=1) / math.sqrt(diff.size)
        env = replenishment_gap_envelope(spec)
        lo, hi = env["envelope_lower"], env["envelope_upper"]
        inside = lo - 3 * se <= gap <= hi + 3 * se
        ok &= inside
        lines.append(f"T={T}: gap {gap:.3f} (se {se:.3f}) in [{lo:.3f}, {hi:.3f}] {inside}")
    secs = time.perf_counter() - start
    record("AC-10", ok and secs < 600, "; ".join(lines) + f", {secs:.0f}s")


def test_ac11_lookahead_uplift():
    start = time.perf_counter()
    row = run_table1(2000, rows=[1], certify=True)[0]
    secs = time.perf_counter() - start
    _shared["ac11_row"] = row
    up_on, up_off = float(row["uplift_online"]), float(row["uplift_offline"])
    ok = 0.003 <= up_on <= 0.03 and up_off >= 0 and secs < 900
    record("AC-11", ok, f"online uplift {100 * up_on:.3f}% (BS {float(row['online_bs']):.4f} at S={row['S_bs']}, "
                        f"look-ahead {float(row['online_lookahead']):.4f} at S={row['S_online_lookahead']}); "
                        f"offline uplift {100 * up_off:.3f}%, {secs:.0f}s")


def test_ac12_lp_certification():
    rng = np.random.default_rng(12)
    worst_match = 0.0
    for _ in range(1000):
        spec, t, I, _ = _random_decision_state(rng)
        nt = int(rng.integers(0, 6))
        ctx = LookAheadContext.for_spec(spec, tuple(int(x) for x in rng.integers(0, 2 * spec.T, nt)), nt)
        prob, _, lp = build_lookahead_lp(spec, nt, max(I, 1), expected_remaining(spec, t), ctx)
        sol = solve_lp(prob)
        g = nested_greedy_batch(lp.weights, lp.upper[None], lp.caps[None], certify=True)
        worst_match = max(worst_match, abs(float(g.objective[0]) - sol.objective) / (1 + abs(sol.objective)))
    if "ac2_gap" not in _shared:
        test_ac02_lookahead_zero_is_bayes_selector()
    if "ac11_row" in _shared:
        la_gap, source = float(_shared["ac11_row"]["lp_worst_gap"]), "AC-11 run"
    else:
        # AC-11 not in this session: certify the LPs of a short run on its configuration
        spec = table1_specs()[1]
        s = simulate(RunConfig(spec, BaseStock(400), FulfillmentAlgo("lookahead_online", 5), 20, certify=True))
        la_gap, source = s.lp_worst_gap, "20-path AC-11 config run"
    ok = worst_match <= 1e-8 and _shared["ac2_gap"] <= 1e-8 and la_gap <= 1e-8
    record("AC-12", ok, f"greedy vs simplex worst relative difference {worst_match:.1e}; "
                        f"worst duality gap AC-2 {_shared['ac2_gap']:.1e}, {source} {la_gap:.1e}")


def test_ac13_multi_resource():
    start = time.perf_counter()
    spec = fig1_spec(10, 30)
    ident = True
    for policy, algo in ((BaseStock(21), GREEDY), (ConstantOrder(6), MYOPIC_OFFLINE), (BaseStock(21), bayes_selector())):
        one = simulate(RunConfig(spec, policy, algo, 300, 13))
        many = simulate_multi(MultiRunConfig(MultiSpec.from_single(spec), (policy,), algo, 300, 13))
        ident &= np.array_equal(one.trace["cycle_profit"], many.trace["cycle_profit"])
    ms = multi_spec()
    cfg = MultiRunConfig(ms, (ConstantOrder(7), ConstantOrder(7)), bayes_selector(), 1000, 13)
    off = simulate_multi(cfg.replace(algo=MYOPIC_OFFLINE))
    on = simulate_multi(cfg)
    gaps = inventory_gaps(on, off)
    lo, hi = gaps.per_resource_range
    _shared["ac13_cfg"] = cfg
    _shared["ac13_csv"] = multi_summaries_csv([on, off])
    secs = time.perf_counter() - start
    record("AC-13", ident and gaps.aggregate_violations == 0 and secs < 300,
           f"d=1 identical {ident}; d=2 aggregate violations {gaps.aggregate_violations} "
           f"(per-resource gap range [{lo}, {hi}]), {secs:.0f}s")


def test_ac14_thread_determinism():
    checks = {}
    spec = fig1_spec(50, 100)
    for algo in (MYOPIC_OFFLINE, GREEDY, bayes_selector()):
        ref = _shared.get("ac4_csv", {}).get(algo.label)
        if ref is None:
            ref = summaries_csv([simulate(RunConfig(spec, BaseStock(105), algo, 2000, 3))])
        again = summaries_csv([simulate(RunConfig(spec, BaseStock(105), algo, 2000, 3, threads=8))])
        checks[f"AC-4 {algo.label}"] = ref == again
    rows = run_fig1((5,), 500, 50, seed=0, threads=1)
    checks["fig1 T=5"] = write_csv(rows, FIG1_COLUMNS) == write_csv(run_fig1((5,), 500, 50, seed=0, threads=8),
                                                                    FIG1_COLUMNS)
    cfg = _shared.get("ac13_cfg") or MultiRunConfig(multi_spec(), (ConstantOrder(7), ConstantOrder(7)),
                                                    bayes_selector(), 1000, 13)
    ref = multi_summaries_csv([simulate_multi(cfg)])
    checks["AC-13 multi BS"] = ref == multi_summaries_csv([simulate_multi(cfg.replace(threads=8))])
    record("AC-14", all(checks.values()), ", ".join(f"{k} {'identical' if v else 'DIFFERS'}"
                                                   for k, v in checks.items()))


if __name__ == "__main__":
    import sys
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_ac")]
    for fn in tests:
        try:
            fn()
        except AssertionError:
            pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(" PASS" in r for r in RESULTS) else 1)
