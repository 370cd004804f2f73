import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import production_toy
from viakern.order import (
    Classification,
    ControlBounds,
    Direction,
    Indicator,
    IndicatorSet,
    MonotoneDynamics,
    as_state,
    check_indicator_directions,
    check_monotonicity,
    fixed_control_dynamics,
    leq,
    state_slice,
)


@pytest.mark.parametrize("a, b, expected", [
    ((1, 2), (1, 2), True),
    ((1, 3), (2, 2), False),
    ((0, 0), (5, 7), True),
])
def test_leq(a, b, expected):
    assert leq(a, b) is expected


def test_leq_dimension_mismatch():
    with pytest.raises(ValueError):
        leq((1, 2), (1, 2, 3))


def test_as_state_rejects_negative_and_nan():
    with pytest.raises(ValueError):
        as_state([1.0, -0.1])
    with pytest.raises(ValueError):
        as_state([np.nan])
    with pytest.raises(ValueError):
        as_state([1.0], dim=2)


def test_control_bounds_order():
    with pytest.raises(ValueError):
        ControlBounds([1.0], [0.0])
    assert ControlBounds([0.0], [0.3]).contains([0.3])


def single(thr=1.0, direction=Direction.INCREASING):
    return IndicatorSet((Indicator(lambda x, u: x[0], thr, direction, name="x"),))


def test_contains_simple():
    assert single().contains([2.0], [0.0])
    assert not single().contains([0.5], [0.0])


def test_contains_tie_is_inclusive():
    assert single(1.0).contains([1.0], [0.0])


def test_classification():
    inc = Indicator(lambda x, u: u[0], 0.0, Direction.INCREASING)
    dec = Indicator(lambda x, u: -u[0], 0.0, Direction.DECREASING)
    assert IndicatorSet((inc,)).classification is Classification.PRODUCTION
    assert IndicatorSet((dec,)).classification is Classification.PRESERVATION
    assert IndicatorSet((inc, dec)).classification is Classification.MIXED
    assert IndicatorSet(()).classification is Classification.PRODUCTION


def test_indicator_must_increase_in_state():
    with pytest.raises(ValueError):
        Indicator(lambda x, u: -x[0], 0.0, Direction.INCREASING, state_direction=Direction.DECREASING)


def test_slice_at_sharp_for_toy():
    toy = production_toy()
    pred = state_slice(toy.constraints.with_thresholds([-math.inf, 0.05]), [0.3])
    for x in np.linspace(0.0, 1.0, 301):
        assert pred([x]) == (0.3 * x >= 0.05)
    assert pred([1 / 6 + 1e-12]) and not pred([1 / 6 - 1e-9])


def test_slice_witness_production():
    toy = production_toy()
    pred = state_slice(toy.constraints, toy.dynamics.bounds.upper)
    for x in np.linspace(0, 4, 41):
        if pred([x]):
            assert toy.constraints.contains([x], [0.3])


def test_fixed_control_dynamics_toy():
    toy = production_toy()
    assert toy.dynamics.flat([1.0])[0] == pytest.approx(math.exp(0.1))
    assert toy.dynamics.sharp([1.0])[0] == pytest.approx(math.exp(-0.2))
    assert fixed_control_dynamics(toy.dynamics, "lower")([1.0])[0] == toy.dynamics.flat([1.0])[0]
    with pytest.raises(ValueError):
        fixed_control_dynamics(toy.dynamics, "middle")


def dyn(f):
    return MonotoneDynamics(map=lambda x, u: np.asarray(f(x, u), dtype=float),
                            bounds=ControlBounds([0.0], [1.0]), state_dim=1)


def test_monotonicity_flags_decreasing_state():
    rep = check_monotonicity(dyn(lambda x, u: -x), 200, 0, ([0.0], [2.0]))
    assert rep.state_violations and not rep.ok


def test_monotonicity_flags_increasing_control():
    rep = check_monotonicity(dyn(lambda x, u: x + u), 200, 0, ([0.0], [2.0]))
    assert rep.control_violations and rep.sandwich_violations


def test_monotonicity_clean_and_seeded():
    g = dyn(lambda x, u: x * np.exp(-u))
    assert check_monotonicity(g, 300, 5, ([0.0], [3.0])).ok


def test_indicator_direction_check():
    d = IndicatorSet((Indicator(lambda x, u: -u[0], 0.0, Direction.INCREASING, name="wrong"),))
    bad = check_indicator_directions(d, ControlBounds([0.0], [1.0]), 50, 0, ([0.0], [1.0]))
    assert ("wrong", "control") in bad


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=3, max_size=3),
       st.lists(st.floats(0, 1e6), min_size=3, max_size=3))
def test_leq_is_componentwise(a, b):
    assert leq(a, b) == all(x <= y for x, y in zip(a, b))
    assert leq(a, a)
    if leq(a, b) and leq(b, a):
        assert a == b
