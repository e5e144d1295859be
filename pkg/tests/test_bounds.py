import math

import numpy as np
import pytest

from orderfill.bounds import (BoundReport, RegretModel, a1_lower, a1_upper, a2, backorder_cost,
                              backorder_fractile_level, bennett, bound_report, constant_order_cost, cstar,
                              foc_sum, kingman_expected_inventory, offline_stock_bound, multires_bounds,
                              offline_greedy_bounds, offline_greedy_constants, online_stock_term,
                              pipeline_law, regret_envelopes, replenishment_gap_envelope, scaling_rows,
                              theta_grid)
from orderfill.core import DomainError, ProblemSpec
from orderfill.engine import RunConfig, simulate
from orderfill.fulfillment import MYOPIC_OFFLINE
from orderfill.replenishment import ConstantOrder
from orderfill.stochastics import BinomialLaw, binom_cdf_many


def _random_spec(rng):
    M = int(rng.integers(2, 5))
    rewards = tuple(float(x) for x in np.sort(rng.choice(np.arange(1, 30), M, replace=False)))
    lam = rng.dirichlet(np.ones(M + 1) * 2)
    lam[0] = 1.0 - lam[1:].sum()
    return ProblemSpec(M, int(rng.integers(2, 40)), 10, int(rng.integers(0, 4)), rewards, tuple(lam),
                       float(rng.uniform(0.2, 3.0)))


def test_kingman_examples():
    assert kingman_expected_inventory(1, 2, 0.5, 1) == pytest.approx(0.25)
    assert kingman_expected_inventory(7, 5, 0.4, 0) == 0.0
    with pytest.raises(DomainError):
        kingman_expected_inventory(3, 5, 0.4, 4)


def test_kingman_matches_simulated_leftover():
    # constant orders arrive every cycle; start from the order already on hand
    spec = ProblemSpec(2, 6, 8, 0, (1, 2), (0.4, 0.3, 0.3), 1.0)
    s = simulate(RunConfig(spec, ConstantOrder(3), MYOPIC_OFFLINE, 20_000, 4))
    ending = s.trace["ending"][:, -1].astype(float)
    se = ending.std(ddof=1) / math.sqrt(ending.size)
    assert abs(ending.mean() - kingman_expected_inventory(8, 6, 0.4, 3)) <= 3 * se


def test_fractile_examples():
    law = BinomialLaw(6, 0.5)
    assert backorder_fractile_level(law, 0.6) == 3
    assert backorder_fractile_level(law, 1.0) == 6
    assert backorder_fractile_level(law, 1e-9) == 0
    with pytest.raises(DomainError):
        backorder_fractile_level(law, 0.0)


def test_newsvendor_levels_are_brute_force_minimizers():
    rng = np.random.default_rng(0)
    for _ in range(30):
        T, L = int(rng.integers(1, 25)), int(rng.integers(0, 4))
        lam0, h, p = float(rng.uniform(0.05, 0.9)), float(rng.uniform(0.1, 4)), float(rng.uniform(0.5, 20))
        law = pipeline_law(T, L, lam0)
        for res in (a1_upper(T, h, p, L, lam0), a1_lower(T, h, p, L, lam0)):
            sweep = [backorder_cost(law, S, h, res.penalty) for S in range((L + 1) * T + 1)]
            assert res.value <= min(sweep) + 1e-9
            assert res.value == pytest.approx(sweep[res.level])


def test_cost_sandwich():
    rng = np.random.default_rng(1)
    for _ in range(200):
        T, L = int(rng.integers(1, 60)), int(rng.integers(0, 5))
        lam0, h, p = float(rng.uniform(0.01, 0.95)), float(rng.uniform(0.1, 4)), float(rng.uniform(0.1, 30))
        assert a1_lower(T, h, p, L, lam0).value <= a1_upper(T, h, p, L, lam0).value + 1e-12


def test_cstar_is_local_optimum_of_constant_order_cost():
    res = a2(20, 2.0, 5.0, 0.3)
    assert res.c.residual <= 1e-6
    for step in (1.0, 0.5, 0.1, 0.01):
        for c in (res.c.c - step, res.c.c + step):
            assert res.value <= constant_order_cost(20, 2.0, 5.0, 0.3, c).value + 1e-12


def test_cstar_residual_and_truncation_certificate():
    rng = np.random.default_rng(2)
    for _ in range(30):
        T, lam0 = int(rng.integers(2, 50)), float(rng.uniform(0.05, 0.8))
        h, p = float(rng.uniform(0.2, 4)), float(rng.uniform(0.5, 20))
        cs = cstar(T, h, p, lam0)
        assert cs.residual <= 1e-6
        ns = np.arange(cs.terms + 1, cs.terms + 51, dtype=float)
        extra = binom_cdf_many(ns * T, np.floor(ns * cs.c + 1e-9), 1 - lam0).sum()
        assert extra <= cs.tail_bound + 1e-300


def test_cstar_limit_for_vanishing_penalty():
    vals = [a2(20, 1.0, p, 0.3) for p in (1e-2, 1e-4, 1e-7, 1e-10)]
    cs = [v.c.c for v in vals]
    ratios = [v.value / (p * 20 * 0.7) for v, p in zip(vals, (1e-2, 1e-4, 1e-7, 1e-10))]
    assert cs == sorted(cs, reverse=True) and cs[-1] <= 1.0
    assert ratios == sorted(ratios) and ratios[-1] > 0.95


def test_cstar_without_root_is_domain_error():
    with pytest.raises(DomainError):
        cstar(5, 1.0, 1e-20, 0.3)
    with pytest.raises(DomainError):
        foc_sum(5, 0.3, 3.5)


def test_gap_envelope_is_ordered():
    rng = np.random.default_rng(3)
    for _ in range(60):
        rep = replenishment_gap_envelope(_random_spec(rng))
        assert rep["envelope_lower"] <= rep["envelope_upper"]


def test_greedy_constants():
    g = offline_greedy_constants(ProblemSpec(2, 5, 2, 1, (1, 2), (0.4, 0.3, 0.3), 1.0))
    assert g.A_k == pytest.approx((0.3,)) and g.A == pytest.approx(0.3) and g.K2 == 0.5
    assert g.M1 == pytest.approx(2 * math.sqrt(0.21))
    rng = np.random.default_rng(4)
    for _ in range(100):
        assert offline_greedy_constants(_random_spec(rng)).A > 0


def test_greedy_gap_bounds():
    only_low = ProblemSpec(3, 16, 2, 1, (1, 2, 3), (0.5, 0.5, 0.0, 0.0), 1.0)
    assert offline_greedy_bounds(only_low, 3.0, 2.0, 0.5).upper == 0.0
    rng = np.random.default_rng(5)
    for _ in range(50):
        spec = _random_spec(rng).replace(periods_per_cycle=int(rng.integers(100, 400)))
        d = float(rng.uniform(0, 20))
        b = offline_greedy_bounds(spec, d, d, float(rng.uniform(0, 1)))
        assert b.lower_large_T <= b.upper


def test_bennett():
    assert bennett(0.0) == 0.0
    assert bennett(math.e - 1) == pytest.approx(1.0)


def test_constant_regret_model_bound_is_flat_in_T():
    m = RegretModel(0.0, 3.0, 2.0, 1.0)
    spec = ProblemSpec(2, 10, 5, 2, (1, 4), (0.3, 0.3, 0.4), 2.0)
    for T in (10, 100, 1000):
        rep = regret_envelopes(spec.replace(periods_per_cycle=T), m)
        assert rep["base_stock_regret"] == pytest.approx(3.0 + 3 * 2.0 * 2.0)


def test_bayes_selector_constants():
    m = RegretModel.bayes_selector((5, 8, 10), (0.3, 0.2, 0.3, 0.2))
    assert m.alpha == 0 and m.C1 == pytest.approx(2 * 10 * math.exp(-0.2) / 0.04)
    assert m.C2 == pytest.approx(m.C1 / 5) and m.C3 == pytest.approx(m.C1 / 2)
    with pytest.raises(DomainError):
        RegretModel(1.5, 1, 1, 1)


def test_stock_term_example_fig1_T200():
    # default constants, c = 0.8 T (1 - lambda_0)
    spec = ProblemSpec(3, 200, 10, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0)
    model = RegretModel.bayes_selector(spec.rewards, spec.arrival_probs)
    st = online_stock_term(0.8 * 200 * 0.7, 200, 0.3, model)
    assert st.beta is not None and st.beta < 1 and st.value < 0.01


def test_stock_term_shrinks_with_cycle_length():
    model = RegretModel.bayes_selector((5, 8, 10), (0.3, 0.2, 0.3, 0.2))
    vals = [online_stock_term(0.8 * T * 0.7, T, 0.3, model).value for T in (1000, 2000, 5000)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 0.01


def test_vacuous_stock_term_is_flagged_not_raised():
    spec = ProblemSpec(2, 50, 5, 1, (1, 4), (0.3, 0.3, 0.4), 2.0)
    model = RegretModel(0.0, 10.0, 1.0, 1.0)
    rep = regret_envelopes(spec, model, c=30.0, grid=[5.0])
    assert rep["constant_regret"] is None and any("vacuous" in f for f in rep.flags)


def test_wider_theta_grid_never_raises_bound():
    model = RegretModel(0.0, 10.0, 2.0, 1.0)
    narrow = theta_grid(0.2, 0.7, points=50, decades=2)
    wide = np.concatenate([narrow, theta_grid(0.2, 0.7, points=200, decades=6)])
    for T in (200, 500):
        a = online_stock_term(0.8 * 0.7 * T, T, 0.3, model, narrow).value
        b = online_stock_term(0.8 * 0.7 * T, T, 0.3, model, wide).value
        assert b <= a


def test_multires_plug_ins():
    m = RegretModel(0.5, 2.0, 1.0, 3.0)
    T = 16
    one = multires_bounds([[1.0], [4.0]], [2.0], [3], T, 0.3, m)
    assert one["base_stock_regret"] == pytest.approx(2 * 4 + 4 * 3 * 3 * 4 + 2 * (9 - 3 + 2) * 3 * 4)
    zero = multires_bounds([[1.0, 2.0], [4.0, 3.0]], [2.0, 1.0], [0, 0], T, 0.3, m)
    assert zero["base_stock_regret"] == pytest.approx(2 * 4 + 2 * 3 * 4 * 3.0)


def test_offline_stock_bound_positive_and_decreasing():
    vals = [offline_stock_bound(T, 0.3, 0.1) for T in (50, 100, 200, 400, 800)]
    assert all(v > 0 for v in vals) and vals == sorted(vals, reverse=True)


def test_report_json_round_trip():
    rep = bound_report(ProblemSpec(3, 20, 10, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0))
    back = BoundReport.from_json(rep.to_json())
    assert back.values == rep.values and back.flags == rep.flags
    assert {"envelope_lower", "envelope_upper", "A", "M1", "regret_base_stock_regret"} <= set(rep.values)


def test_scaling_ratios_plateau():
    spec = ProblemSpec(3, 400, 10, 2, (5, 8, 10), (0.3, 0.2, 0.3, 0.2), 2.0)
    rows = scaling_rows(spec, [400, 1600])
    by = {(T, n): v / math.sqrt(T) for T, n, v in rows}
    for name in ("a1_upper", "a1_lower", "a2"):
        lo, hi = sorted((by[(400, name)], by[(1600, name)]))
        assert hi <= 1.15 * lo
