from fractions import Fraction

import numpy as np
import pytest

from orderfill.core import MICRO, ConfigError, InvariantViolation, PipelineState, ProblemSpec
from orderfill.engine import (RunConfig, exact_expectation, optimize_parameter, refine_parameter, regret_series,
                              simulate, simulate_many, simulate_scalar, summaries_csv)
from orderfill.fulfillment import GREEDY, MYOPIC_OFFLINE, FulfillmentAlgo, bayes_selector
from orderfill.replenishment import BaseStock, ConstantOrder

ALGOS = [GREEDY, MYOPIC_OFFLINE, bayes_selector(), FulfillmentAlgo("lookahead_online", 1),
         FulfillmentAlgo("lookahead_offline", 1)]


@pytest.mark.parametrize("algo", ALGOS, ids=lambda a: a.label)
@pytest.mark.parametrize("policy", [BaseStock(7), ConstantOrder(2)], ids=lambda p: p.kind)
def test_lane_engine_matches_scalar_reference(small, algo, policy):
    cfg = RunConfig(small, policy, algo, 60, master_seed=5)
    lanes = simulate(cfg).trace["cycle_profit"]
    assert lanes.tolist() == simulate_scalar(cfg)


def test_profit_identity_and_exact_average(small):
    s = simulate(RunConfig(small, BaseStock(6), GREEDY, 200, 1))
    assert s.total_profit_micro == int(s.path_profit.sum()) == int(s.cycle_profit_sum.sum())
    assert s.profit_per_cycle_exact == Fraction(s.total_profit_micro, MICRO * 200 * small.N)
    assert s.avg_profit_per_period == pytest.approx(s.avg_profit_per_cycle / small.T)
    assert s.position_violations == 0 and s.orders_nonnegative


def test_thread_count_does_not_change_output(fig1):
    cfg = RunConfig(fig1, BaseStock(25), bayes_selector(), 300, 11)
    runs = [simulate_many(cfg.replace(threads=t), [20, 25, 30]) for t in (1, 8)]
    assert summaries_csv(runs[0]) == summaries_csv(runs[1])
    assert np.array_equal(runs[0][1].trace["cycle_profit"], runs[1][1].trace["cycle_profit"])


def test_path_streams_do_not_depend_on_path_count(small):
    a = simulate(RunConfig(small, BaseStock(6), GREEDY, 10, 3)).trace["cycle_profit"]
    b = simulate(RunConfig(small, BaseStock(6), GREEDY, 25, 3)).trace["cycle_profit"]
    assert np.array_equal(a, b[:10])


def test_common_random_numbers_across_parameters(small):
    batch = simulate_many(RunConfig(small, BaseStock(0), GREEDY, 50, 2), [4, 9])
    for s in batch:
        alone = simulate(RunConfig(small, BaseStock(s.config.policy.param), GREEDY, 50, 2))
        assert np.array_equal(s.trace["cycle_profit"], alone.trace["cycle_profit"])


def test_no_demand_gives_zero_stock():
    spec = ProblemSpec(2, 5, 6, 1, (1, 2), (1.0, 0.0, 0.0), 1.0)
    best, s = optimize_parameter(RunConfig(spec, BaseStock(0), GREEDY, 20), range(0, 11))
    assert best == 0 and s.total_profit_micro == 0


def test_optimizer_ties_go_to_smallest():
    # one cycle with L=1: S=0 and S=1 both start with nothing on hand, so they tie exactly
    spec = ProblemSpec(2, 5, 1, 1, (1, 2), (0.2, 0.4, 0.4), 1.0)
    best, s = optimize_parameter(RunConfig(spec, BaseStock(0), GREEDY, 10), [1, 0])
    assert best == 0 and s.total_profit_micro == 0


def test_refine_finds_unit_step_optimum(fig1):
    cfg = RunConfig(fig1, BaseStock(0), GREEDY, 200, 4)
    full, _ = optimize_parameter(cfg, range(10, 41))
    refined, _ = refine_parameter(cfg, 10, 40, 4)
    assert refined == full


def test_regret_against_itself_is_zero(small):
    cfg = RunConfig(small, BaseStock(6), GREEDY, 100, 8)
    rep = regret_series(cfg, cfg, checkpoints=(2, 6))
    assert not rep.per_cycle_gap.any() and rep.checkpoints[6] == (0.0, 0.0)


def test_regret_offline_never_below_online_on_average(small):
    cfg = RunConfig(small, BaseStock(6), MYOPIC_OFFLINE, 500, 8)
    rep = regret_series(cfg, cfg.replace(algo=bayes_selector()), checkpoints=(6,))
    mean, se = rep.running_average[6]
    assert mean > -3 * se
    assert rep.checkpoints[6][0] == pytest.approx(rep.per_cycle_gap[5])
    assert rep.running_average[6][0] == pytest.approx(rep.cumulative_gap[5] / 6)


def test_regret_requires_matched_runs(small):
    cfg = RunConfig(small, BaseStock(6), GREEDY, 10)
    with pytest.raises(ConfigError):
        regret_series(cfg, cfg.replace(master_seed=1))


def test_exact_enumeration_agrees_with_monte_carlo():
    spec = ProblemSpec(3, 2, 2, 1, (1, 9, 10), (0.1, 0.3, 0.3, 0.3), 0.5)
    for algo in (MYOPIC_OFFLINE, bayes_selector()):
        exact = exact_expectation(spec, ConstantOrder(1), algo)
        mc = simulate(RunConfig(spec, ConstantOrder(1), algo, 50_000, 9))
        per_path = mc.avg_profit_per_cycle * spec.N
        assert abs(per_path - exact) <= 4 * mc.std_error * spec.N


def test_exact_enumeration_backends_agree():
    spec = ProblemSpec(2, 2, 2, 1, (1, 4), (0.2, 0.4, 0.4), 0.5)
    la = FulfillmentAlgo("lookahead_online", 1)
    assert exact_expectation(spec, BaseStock(3), la) == pytest.approx(
        exact_expectation(spec, BaseStock(3), la, backend="simplex"), abs=1e-9)


def test_custom_initial_state_excuses_first_cycle(small):
    cfg = RunConfig(small, BaseStock(6), GREEDY, 20, initial=PipelineState(0, (0,)))
    assert simulate(cfg).position_violations == 0


def test_config_validation_and_round_trip(small):
    cfg = RunConfig(small, BaseStock(6), FulfillmentAlgo("lookahead_online", 1), 20, 3, burn_in=2)
    assert RunConfig.from_json_dict(cfg.to_json_dict()) == cfg
    assert cfg.config_hash == RunConfig.from_json_dict(cfg.to_json_dict()).config_hash
    with pytest.raises(ConfigError):
        RunConfig(small, BaseStock(6), GREEDY, 0)
    with pytest.raises(ConfigError):
        RunConfig(small, BaseStock(6), GREEDY, 5, burn_in=small.N)
    with pytest.raises(ConfigError):
        RunConfig(small, BaseStock(6), GREEDY, 5, initial=PipelineState(1, (1, 1)))
    with pytest.raises(ConfigError):
        RunConfig.from_json_dict({"policy": {}})


def test_burn_in_drops_early_cycles(small):
    full = simulate(RunConfig(small, BaseStock(6), GREEDY, 30, 2))
    late = simulate(RunConfig(small, BaseStock(6), GREEDY, 30, 2, burn_in=2))
    assert late.total_profit_micro == int(full.trace["cycle_profit"][:, 2:].sum())
    assert late.counted_cycles == small.N - 2
