import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnalloc import model as M
from attnalloc.errors import OrderingViolation, ValidationError
from attnalloc.model import RegimeTag
from attnalloc.oracle import solve_infinite_horizon, stop_actions
from attnalloc.value import solve
from attnalloc.variants import (AsymRates, AttentionBounds, MiddleAction, asymmetric_solution,
                                c_underbar_characterized, multi_action_envelope,
                                multi_action_policy, nonexclusive_c_bar, nonexclusive_c_underbar,
                                nonexclusive_solution, nonexclusive_technology, m_strategy_cutoffs,
                                own_intersection_test)
from conftest import SKEW, SYM, learning_params_st

GRID = np.linspace(0, 1, 2001)


# ------------------------------------------------------- non-exclusive

def test_bounds_validation():
    with pytest.raises(ValidationError):
        AttentionBounds(0.6, 0.9)


@given(learning_params_st())
def test_full_bounds_reproduce_baseline(p):
    ne = nonexclusive_solution(p, AttentionBounds.symmetric(1.0))
    base = solve(p)
    assert ne.regime is base.regime
    assert np.max(np.abs(ne.value(GRID) - base.value(GRID))) <= 1e-10
    assert nonexclusive_c_bar(p, AttentionBounds.symmetric(1.0)) == pytest.approx(M.c_bar(p), abs=1e-12)
    assert nonexclusive_c_underbar(p, AttentionBounds.symmetric(1.0)) == pytest.approx(M.c_underbar(p), abs=1e-12)


def test_cost_cutoffs_move_with_alpha_max():
    his = [1.0, 0.95, 0.9, 0.8, 0.7, 0.6]
    cb = [nonexclusive_c_bar(SKEW, AttentionBounds.symmetric(a)) for a in his]
    cu = [nonexclusive_c_underbar(SKEW, AttentionBounds.symmetric(a)) for a in his]
    assert all(np.diff(cb) < 0)
    assert all(np.diff(cu) >= 0) and cu[-1] > cu[0]


@pytest.mark.parametrize("hi", [0.95, 0.8, 0.7])
@pytest.mark.parametrize("rho", [0.0, 0.2])
def test_closed_form_c_underbar_matches_characterization(hi, rho):
    p = SYM.replace(rho=rho)
    b = AttentionBounds.symmetric(hi)
    tech = nonexclusive_technology(p, b)
    cb = nonexclusive_c_bar(p, b)
    assert nonexclusive_c_underbar(p, b) == pytest.approx(c_underbar_characterized(p, tech, cb), abs=1e-8)


@given(learning_params_st())
@settings(max_examples=30)
def test_value_falls_as_attention_restricted(p):
    prev = solve(p).value(GRID)
    for hi in (0.9, 0.75, 0.6):
        v = nonexclusive_solution(p, AttentionBounds.symmetric(hi)).value(GRID)
        assert np.all(v <= prev + 1e-10)
        prev = v


def test_experimentation_region_shrinks():
    p = SKEW.replace(c=0.2)
    a = solve(p).experimentation_region
    b = nonexclusive_solution(p, AttentionBounds.symmetric(0.8)).experimentation_region
    assert a[0] < b[0] and b[1] < a[1]


# ----------------------------------------------------------- asymmetric

@given(learning_params_st())
@settings(max_examples=30)
def test_equal_rates_give_baseline(p):
    sol = asymmetric_solution(p, AsymRates(p.lam, p.lam))
    base = solve(p)
    assert sol.regime is base.regime
    assert np.max(np.abs(sol.value(GRID) - base.value(GRID))) <= 1e-10
    for k in ("p_low_star", "p_high_star", "p_star", "p_check", "p_low", "p_high"):
        x, y = getattr(sol.cutoffs, k), getattr(base.cutoffs, k)
        if y is None:
            continue
        assert x == pytest.approx(y, abs=1e-8), k


@pytest.mark.parametrize("lr,ll", [(1.0, 0.6), (0.5, 1.5), (2.0, 1.0)])
def test_stationary_belief_without_discounting(lr, ll):
    sol = asymmetric_solution(SYM.replace(c=0.05), AsymRates(lr, ll))
    assert sol.cutoffs.p_star == pytest.approx(ll / (lr + ll), abs=1e-14)


def test_unequal_rates_examples():
    rates = AsymRates(1.0, 0.6)
    p = SYM.replace(c=0.15)
    test = own_intersection_test(p, rates)
    assert test.degenerate
    sol = asymmetric_solution(p, rates)
    lo, hi = sol.experimentation_region
    g = np.linspace(lo + 1e-6, hi - 1e-6, 2001)
    assert not np.any(sol.alpha(g) == 0.0)
    low = asymmetric_solution(SYM.replace(c=0.07), rates)
    assert low.cutoffs.p_star == pytest.approx(0.375, abs=1e-14)
    assert low.regime is RegimeTag.OWN_AND_OPPOSITE


@pytest.mark.parametrize("c", [0.05, 0.13, 0.3])
def test_asymmetric_continuity(c):
    p = SKEW.replace(c=c)
    base = solve(p).value(GRID)
    gaps = []
    for d in (1e-2, 1e-3, 1e-4):
        v = asymmetric_solution(p, AsymRates(1.0 + d, 1.0)).value(GRID)
        gaps.append(np.max(np.abs(v - base)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] <= 1e-2


# -------------------------------------------------------- middle actions

SAFE = MiddleAction(0.0, 0.0)


@pytest.mark.parametrize("c", [0.1, 0.3, 0.5])
def test_safe_action_cutoffs(c):
    p = SYM.replace(c=c)
    cut = m_strategy_cutoffs(p, SAFE)
    assert cut.q1 == pytest.approx(c / (p.u_r_R * p.lam), abs=1e-14)
    assert cut.q2 == pytest.approx((p.u_l_L * p.lam - c) / (p.u_l_L * p.lam), abs=1e-14)


def test_unattractive_right_branch_absent():
    p = SYM.replace(c=0.3)
    fa1 = (p.lam * p.u_r_R - p.c) / (p.rho + p.lam)
    cut = m_strategy_cutoffs(p, MiddleAction(fa1 + 0.01, -0.5))
    assert cut.q1 is None and cut.p_m_high == 1.0


@given(learning_params_st(), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_q1_above_q2(p, s, t):
    m = MiddleAction(p.u_l_R + s * (p.u_r_R - p.u_l_R), p.u_l_L - t * 2.0)
    cut = m_strategy_cutoffs(p, m)
    us = lambda q: float(M.stationary_value(p, q))
    if cut.q1 is not None and cut.q2 is not None:
        if m.payoff(cut.q1) >= us(cut.q1) and m.payoff(cut.q2) >= us(cut.q2):
            assert cut.q1 >= cut.q2 - 1e-12


def test_no_middles_is_baseline():
    v, lab = multi_action_envelope(SKEW, [], GRID)
    assert np.array_equal(v, solve(SKEW).value(GRID))


def test_dominated_middle_changes_nothing():
    m = MiddleAction(-0.99, -20.0)
    v, lab = multi_action_envelope(SKEW, [m], GRID)
    assert np.array_equal(v, solve(SKEW).value(GRID))
    assert not any(s.startswith(("m-", "action m")) for s in lab)


@given(learning_params_st(), st.floats(0.05, 0.95), st.floats(0.05, 2.0))
@settings(max_examples=30)
def test_envelope_dominates_baseline(p, s, t):
    m = MiddleAction(p.u_l_R + s * (p.u_r_R - p.u_l_R), p.u_l_L - t)
    v, _ = multi_action_envelope(p, [m], GRID)
    assert np.all(v >= solve(p).value(GRID) - 1e-15)


def test_safe_middle_region_sequence():
    pol = multi_action_policy(SYM.replace(c=0.3), [MiddleAction(0.6, 0.6)])
    assert pol.region_sequence() == [
        "action l", "own alpha=1", "m-strategy alpha=0", "action m",
        "m-strategy alpha=1", "own alpha=0", "action r"]


def test_ordering_violation():
    with pytest.raises(OrderingViolation):
        multi_action_envelope(SYM, [MiddleAction(1.5, 0.0)], 0.5)
    with pytest.raises(OrderingViolation):
        multi_action_envelope(SYM, [MiddleAction(0.2, 0.2), MiddleAction(0.3, 0.3)], 0.5)


@pytest.mark.slow
def test_multiaction_matches_extended_oracle():
    p = SYM.replace(c=0.3)
    m = MiddleAction(0.6, 0.6)
    pol = multi_action_policy(p, [m])
    dp = solve_infinite_horizon(p, dt=1e-3, n_grid=1001, actions=stop_actions(p, [m]))
    v, _ = pol.evaluate(dp.grid)
    assert np.max(np.abs(dp.value - v)) <= 1e-2
