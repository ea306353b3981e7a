import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driverwarn.baselines import (
    RuleParams,
    min_gap_terms,
    rule_based_warning,
    rule_warning_from_gap,
    take_over_condition,
    time_to_collision,
    ttc_warning,
)
from driverwarn.core import CAR_LENGTH, WarningLevel as W

import oracles
from conftest import car, make_state

PARAMS = RuleParams()


def lead_state(gap, v_ego, v_front):
    return make_state(car(0.0, v_ego), [("lead", car(gap + CAR_LENGTH, v_front))])


# TTC --------------------------------------------------------------------------

def test_ttc_examples():
    assert time_to_collision(lead_state(13.5, 11.0, 8.0)) == pytest.approx(4.5)
    assert time_to_collision(lead_state(13.5, 8.0, 11.0)) is None
    assert time_to_collision(lead_state(13.5, 8.0, 8.0)) is None
    assert time_to_collision(make_state(car(0.0, 11.0))) is None


@pytest.mark.parametrize("gap,v_ego,v_front", list(itertools.product(
    [1.0, 5.5, 13.5, 30.0], [4.0, 11.0, 16.0], [0.0, 3.0, 8.0])))
def test_ttc_matches_forward_integration(gap, v_ego, v_front):
    ttc = time_to_collision(lead_state(gap, v_ego, v_front))
    brute = oracles.ttc_brute_force(gap, v_ego, v_front)
    if brute is None:
        assert ttc is None
    else:
        assert abs(ttc - brute) <= 0.01 + 1e-9


def test_ttc_ladder():
    expect = [(None, W.NO_WARNING), (6.0, W.NO_WARNING), (4.9, W.TEXT), (3.4, W.VOICE),
              (2.4, W.ALARM), (1.4, W.TAKE_OVER), (0.0, W.TAKE_OVER)]
    for ttc, w in expect:
        assert ttc_warning(ttc, PARAMS) == w
    # thresholds are strict
    assert ttc_warning(5.0, PARAMS) == W.NO_WARNING
    assert ttc_warning(1.5, PARAMS) == W.ALARM


# minimum-gap rule ---------------------------------------------------------------

def test_min_gap_hand_case():
    d_front, d_ego, d_min = min_gap_terms(13.5, 11.0, 8.0, PARAMS)
    assert abs(d_front - 64.0 / 12.0) <= 1e-12
    assert abs(d_ego - (11.0 + 121.0 / 12.0)) <= 1e-12
    assert abs(d_min - (-2.25)) <= 1e-12
    assert abs(d_min - oracles.rule_terms(13.5, 11.0, 8.0)[2]) <= 1e-12
    # -2.25 <= -alpha * 11  <=>  alpha <= 0.2045...
    assert 2.25 / 11.0 == pytest.approx(0.2045, abs=1e-4)
    assert rule_warning_from_gap(13.5, 11.0, 8.0, PARAMS) == W.TEXT
    tighter = RuleParams(alpha_table={W.TEXT: 0.21, W.VOICE: 0.4, W.ALARM: 0.7, W.TAKE_OVER: 1.0})
    assert rule_warning_from_gap(13.5, 11.0, 8.0, tighter) == W.NO_WARNING


def test_take_over_boundary_is_inclusive():
    v_ego, v_front = 11.0, 8.0
    gap = (v_ego ** 2 - v_front ** 2) / 12.0
    assert take_over_condition(gap, v_ego, v_front, PARAMS)
    assert rule_warning_from_gap(gap, v_ego, v_front, PARAMS) == W.TAKE_OVER
    assert not take_over_condition(gap + 1e-9, v_ego, v_front, PARAMS)


def test_take_over_equivalence_grid():
    grid = itertools.product(np.linspace(0.0, 30.0, 10), np.linspace(0.0, 20.0, 10),
                             np.linspace(0.0, 20.0, 10))
    n = 0
    for gap, v_ego, v_front in grid:
        n += 1
        expect = oracles.eq16(gap, v_ego, v_front)
        assert take_over_condition(gap, v_ego, v_front, PARAMS) == expect
        assert (rule_warning_from_gap(gap, v_ego, v_front, PARAMS) == W.TAKE_OVER) == expect
    assert n == 1000


@given(st.floats(0, 40), st.floats(0, 20), st.floats(0, 20))
def test_rule_matches_formula(gap, v_ego, v_front):
    _, _, d_min = oracles.rule_terms(gap, v_ego, v_front)
    if oracles.eq16(gap, v_ego, v_front):
        expect = W.TAKE_OVER
    elif d_min <= -0.7 * v_ego:
        expect = W.ALARM
    elif d_min <= -0.4 * v_ego:
        expect = W.VOICE
    elif d_min <= -0.15 * v_ego:
        expect = W.TEXT
    else:
        expect = W.NO_WARNING
    assert rule_warning_from_gap(gap, v_ego, v_front, PARAMS) == expect


@given(st.floats(0, 30), st.floats(0, 30), st.floats(0, 20), st.floats(0, 20))
def test_severity_monotone_in_gap(g1, g2, v_ego, v_front):
    lo, hi = sorted((g1, g2))
    assert rule_warning_from_gap(lo, v_ego, v_front, PARAMS) >= rule_warning_from_gap(hi, v_ego, v_front, PARAMS)


def test_rule_on_state():
    assert rule_based_warning(lead_state(13.5, 11.0, 8.0), PARAMS) == W.TEXT
    assert rule_based_warning(make_state(car(0.0, 11.0)), PARAMS) == W.NO_WARNING


@pytest.mark.parametrize("kw", [
    dict(acc_min=1.0), dict(T_D=0.0),
    dict(alpha_table={W.TEXT: 0.5, W.VOICE: 0.4, W.ALARM: 0.7, W.TAKE_OVER: 1.0}),
    dict(ttc_thresholds={W.TEXT: 1.0, W.VOICE: 3.5, W.ALARM: 2.5, W.TAKE_OVER: 1.5}),
])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        RuleParams(**kw)
