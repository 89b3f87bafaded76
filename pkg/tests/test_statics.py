import numpy as np
import pytest
from hypothesis import assume, given, settings

from attnalloc import model as M
from attnalloc.model import ModelParams
from attnalloc.statics import CLAIMS, check_claims, fd
from conftest import SKEW, draw_params, learning_params_st

# the example where the lower boundary moves down as rho rises
COUNTER = ModelParams(0.371, 0.484, -0.808, -1.397, 0.928, 0.429, 0.669)


def _low_rho_sign(p):
    return np.sign(p.u_l_L * p.lam * (p.u_r_R - p.u_l_R) - p.c * (p.u_l_L - p.u_l_R))


def _high_rho_sign(p):
    return -np.sign(p.u_r_R * p.lam * (p.u_l_L - p.u_r_L) - p.c * (p.u_r_R - p.u_r_L))


def test_claim_table_is_well_formed():
    for cl in CLAIMS:
        assert cl.sign in (-1, 1)
        assert cl.param in ("c", "rho", "uRR", "uLL", "uLR", "uRL")


def test_skew_example_has_no_violations():
    for c in (0.13, 0.3):
        n, bad = check_claims(SKEW.replace(c=c))
        assert n > 10 and bad == []


def test_cbar_rho_sign_condition():
    # U(p_hat) = 0 here, so rho has no first-order effect
    assert fd(SKEW, "c_bar", "rho") == pytest.approx(0.0, abs=1e-9)
    pos = ModelParams(1.0, 1.0, -0.5, -0.5, 1.0, 0.1, 0.3)
    neg = ModelParams(1.0, 1.0, -2.0, -2.0, 1.0, 0.1, 0.3)
    assert float(M.u_max(pos, M.p_hat(pos))) > 0 and fd(pos, "c_bar", "rho") < 0
    assert float(M.u_max(neg, M.p_hat(neg))) < 0 and fd(neg, "c_bar", "rho") > 0


@given(learning_params_st())
@settings(max_examples=80)
def test_rho_effect_on_boundaries_follows_corrected_condition(p):
    d_lo = fd(p, "p_low_star", "rho")
    d_hi = fd(p, "p_high_star", "rho")
    assume(abs(d_lo) > 1e-6 and abs(d_hi) > 1e-6)
    assert np.sign(d_lo) == _low_rho_sign(p)
    assert np.sign(d_hi) == _high_rho_sign(p)


@given(learning_params_st())
@settings(max_examples=80)
def test_corrected_condition_is_positive_full_attention_value(p):
    pls = M.p_low_star_for(p, p.lam)
    fa = float(M.full_attention_value(p, pls))
    assume(abs(fa) > 1e-9)
    assert _low_rho_sign(p) == np.sign(fa)


def test_counterexample_to_unconditional_rho_claim():
    assert M.regime_cutoffs(COUNTER).regime.value != "NoLearning"
    d = fd(COUNTER, "p_low_star", "rho")
    assert d < -0.1
    assert _low_rho_sign(COUNTER) < 0
    _, bad = check_claims(COUNTER)
    assert any("dp_low_star/drho" in b for b in bad)


def test_draws_mostly_consistent():
    rng = np.random.default_rng(123)
    total, viol = 0, []
    for _ in range(40):
        p = draw_params(rng)
        n, bad = check_claims(p)
        total += n
        viol += [b for b in bad if "/drho" not in b]
    assert total > 200
    assert viol == []


@pytest.mark.parametrize("rho", [0.0, 0.2])
def test_c_underbar_falls_with_mistake_payoffs(rho):
    p = SKEW.replace(c=0.13, rho=rho)
    d = [fd(p, "c_underbar", k) for k in ("uLR", "uRL")]
    assert max(d) <= 1e-9 and min(d) < 0
