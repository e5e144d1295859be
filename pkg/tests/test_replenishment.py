import warnings

import pytest

from orderfill.core import ConfigError, InvariantViolation, PipelineState, ProblemSpec, inventory_position
from orderfill.replenishment import (BaseStock, ConstantOrder, advance_cycle, check_regime, initial_state,
                                     next_state, place_order, policy_from_json_dict)


def _spec(L, T=5):
    return ProblemSpec(2, T, 10, L, (1, 2), (0.5, 0.25, 0.25), 1.0)


def test_base_stock_even_split_with_closing_order():
    s = initial_state(BaseStock(10), _spec(2))
    assert s == PipelineState(3, (3, 4))
    assert inventory_position(s) == 10
    assert initial_state(BaseStock(9), _spec(2)) == PipelineState(3, (3, 3))


def test_base_stock_zero_lead_time():
    assert initial_state(BaseStock(7), _spec(0)) == PipelineState(7, ())


def test_constant_order_full_pipeline():
    assert initial_state(ConstantOrder(5), _spec(3)) == PipelineState(5, (5, 5, 5))


def test_place_order_examples():
    assert place_order(BaseStock(10), PipelineState(3, (2, 2))) == 3
    assert place_order(BaseStock(10), PipelineState(6, (2, 2))) == 0
    assert place_order(ConstantOrder(4), PipelineState(100, (0,))) == 4
    with pytest.raises(InvariantViolation):
        place_order(BaseStock(5), PipelineState(6, ()))


def test_advance_cycle_shifts_pipeline():
    assert advance_cycle(PipelineState(9, (3, 4)), 2, 1) == PipelineState(5, (4, 1))
    # L = 1: the single slot is the order arriving next cycle
    assert advance_cycle(PipelineState(9, (6,)), 0, 2) == PipelineState(6, (2,))
    assert advance_cycle(PipelineState(9, ()), 3, 4) == PipelineState(7, ())


def test_constant_order_recursion():
    spec = _spec(2)
    state = initial_state(ConstantOrder(3), spec)
    for ending in (0, 2, 5, 1):
        nxt, placed = next_state(ConstantOrder(3), state, ending)
        assert placed == 3 and nxt.on_hand == ending + 3
        state = nxt


@pytest.mark.parametrize("L", [0, 1, 3])
def test_base_stock_position_restored(L):
    pol = BaseStock(12)
    state = initial_state(pol, _spec(L))
    for used in (0, 3, 1, 4, 0, 2):
        ending = max(0, state.on_hand - used)
        state, placed = next_state(pol, state, ending)
        assert placed >= 0
        assert inventory_position(state) == 12


def test_regime_warning():
    spec = _spec(0, T=10)  # mean cycle demand 5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_regime(ConstantOrder(4), spec)
    with pytest.warns(UserWarning):
        assert not check_regime(ConstantOrder(5), spec)


def test_policy_validation_and_json():
    with pytest.raises(ConfigError):
        BaseStock(-1)
    with pytest.raises(ConfigError):
        ConstantOrder(1.5)
    for p in (BaseStock(4), ConstantOrder(2)):
        assert policy_from_json_dict(p.to_json_dict()) == p
    with pytest.raises(ConfigError):
        policy_from_json_dict({"kind": "s_S", "s": 1})
