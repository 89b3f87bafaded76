import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attnalloc import model as M
from attnalloc.errors import AssumptionViolated, SaddleDegenerate, ValidationError
from attnalloc.gamma import (GammaFrontier, ab_coefficients, sqrt_frontier, gamma_from_g,
                             gamma_oracle, gamma_solution, integrate_opposite, interior_value,
                             lambda_ode, linear_frontier, saddle_slope)
from attnalloc.model import ModelParams
from attnalloc.value import solve

FR = sqrt_frontier()
BASE = ModelParams(1, 1, 0, 0, 1.0, 0.0, 0.1)


def test_linear_frontier():
    fr = linear_frontier()
    ls = np.linspace(0, 1, 21)
    assert np.allclose(fr.value(ls), 1 - ls, atol=1e-12)
    assert fr.gamma == 0.5 and fr.linear


def test_sqrt_frontier_fixed_point():
    assert abs(FR.gamma - (math.sqrt(2.75) - 1)) <= 1e-10
    assert abs(float(FR.value(FR.gamma)) - FR.gamma) <= 1e-10


def test_frontier_is_an_involution():
    ls = np.linspace(0, 1, 101)
    assert np.max(np.abs(FR.value(FR.value(ls)) - ls)) <= 1e-8


def test_frontier_shape():
    ls = np.linspace(0.01, 0.99, 99)
    assert np.all(np.diff(FR.value(ls)) < 0)
    assert np.all(FR.second(ls) < 0)
    assert float(FR.prime(FR.gamma)) == pytest.approx(-1.0, abs=1e-9)


def test_bad_g_rejected():
    with pytest.raises(AssumptionViolated):
        gamma_from_g(lambda x: np.asarray(x) ** 0.5 * 0.5)
    # convex g gives a convex frontier
    with pytest.raises(AssumptionViolated, match="concave"):
        gamma_from_g(lambda x: np.asarray(x, dtype=float) ** 2)


@pytest.mark.parametrize("rho", [0.0, 0.1, 0.5])
@pytest.mark.parametrize("c", [0.04, 0.1, 0.4])
def test_stationary_identity_at_gamma(rho, c):
    p = BASE.replace(rho=rho, c=c)
    h = FR.gamma * p.lam
    us = (h * p.u_r_R - c) / (rho + h)
    assert float(interior_value(FR, FR.gamma, p)) == pytest.approx(us, abs=1e-12)


@pytest.mark.parametrize("rho", [0.0, 0.3])
def test_ab_extremal_at_gamma(rho):
    h = 1e-5
    A = lambda x: float(ab_coefficients(FR, x, rho)[0])
    B = lambda x: float(ab_coefficients(FR, x, rho)[1])
    g = FR.gamma
    assert abs(A(g + h) - A(g - h)) / (2 * h) <= 1e-6
    assert abs(B(g + h) - B(g - h)) / (2 * h) <= 1e-6
    # A bottoms out and B peaks at the fixed point
    for x in (0.2, 0.5, 0.9):
        assert A(x) >= A(g) - 1e-12 and B(x) < B(g)


@pytest.mark.parametrize("rho", [0.0, 0.2])
def test_initial_slope_is_saddle_slope(rho):
    p = BASE.replace(rho=rho)
    opp = integrate_opposite(FR, p)
    s0 = saddle_slope(FR, rho)
    assert s0 > 0 and opp.slope0 == s0
    assert float(opp.lam(0.5)) == pytest.approx(FR.gamma, abs=1e-12)
    h = 1e-4
    fd = (float(opp.lam(0.5 + h)) - float(opp.lam(0.5 - h))) / (2 * h)
    assert abs(fd - s0) <= 1e-8 + 1e-3 * h * abs(s0)
    # the slope should also make the ODE right-hand side consistent just off the saddle
    rhs = lambda_ode(FR, rho)
    q = 0.5 + 1e-3
    assert rhs(q, float(opp.lam(q))) == pytest.approx(s0, rel=5e-3)


def test_saddle_degenerate():
    lin = linear_frontier()
    fake = GammaFrontier(lin.g, lin.g_prime, lin.g_second, 0.5)
    with pytest.raises(SaddleDegenerate):
        saddle_slope(fake, 0.0)


def test_opposite_lambda_increasing_and_value_convex():
    sol = gamma_solution(FR, BASE)
    opp = sol.opp
    g = np.linspace(opp.q_low + 1e-4, opp.q_high - 1e-4, 801)
    assert np.all(np.diff(opp.lam(g)) > 0)
    _, v = sol.candidates(g)
    assert np.all(np.diff(v, 2) > 0)


def test_interior_identity_along_segments():
    sol = gamma_solution(FR, BASE)
    g = np.linspace(sol.opp.q_low + 1e-3, sol.opp.q_high - 1e-3, 301)
    v, lam, labels = sol.value(g), sol.lam(g), sol.labels(g)
    checked = 0
    for x, vi, li, lab in zip(g, v, lam, labels):
        if lab != "opposite":
            continue
        # mirror the right half onto the left, where l is the R-evidence rate
        ll = li if x <= 0.5 else float(FR.value(li))
        assert abs(vi - float(interior_value(FR, ll, BASE))) <= 1e-7
        checked += 1
    assert checked > 100


def _hamiltonian(p, v, dv, ls, par):
    G = FR.value(ls)
    flow = p * ls * (par.u_r_R - v) + (1 - p) * G * (par.u_l_L - v)
    return par.lam * (flow - p * (1 - p) * (ls - G) * dv) - par.c


@pytest.mark.parametrize("c", [0.1, 0.04])
def test_hjb_residual(c):
    par = BASE.replace(c=c)
    sol = gamma_solution(FR, par)
    ls = np.linspace(0, 1, 2001)
    g = np.linspace(sol.opp.q_low + 0.01, sol.opp.q_high - 0.01, 41)
    for x, lab in zip(g, sol.labels(g)):
        if lab != "opposite" or abs(x - 0.5) < 1e-3:
            continue
        h = 1e-6
        v = float(sol.value(x)[0])
        dv = float((sol.value(x + h) - sol.value(x - h))[0]) / (2 * h)
        lam = float(sol.lam(x)[0])
        at = float(_hamiltonian(x, v, dv, lam, par))
        assert abs(par.rho * v - at) <= 1e-6
        assert np.max(_hamiltonian(x, v, dv, ls, par)) <= at + 1e-6


@pytest.mark.parametrize("c", [0.05, 0.13, 0.3, 0.6])
@pytest.mark.parametrize("rho", [0.0, 0.2])
def test_linear_frontier_is_baseline(c, rho):
    par = ModelParams(1, 1, -1, -1, 1.0, rho, c)
    g = np.linspace(0, 1, 2001)
    v = gamma_solution(linear_frontier(), par).value(g)
    assert np.max(np.abs(v - solve(par).value(g))) <= 1e-8


def test_no_learning_gives_U():
    par = BASE.replace(c=5.0)
    g = np.linspace(0, 1, 101)
    assert np.array_equal(gamma_solution(FR, par).value(g), M.u_max(par, g))


def test_asymmetric_payoffs_rejected():
    with pytest.raises(ValidationError):
        gamma_solution(FR, ModelParams(1, 0.8, 0, 0, 1, 0, 0.1))


def test_opposite_value_pastes_flat_at_center():
    sol = gamma_solution(FR, BASE)
    us = float(M.stationary_value(BASE, 0.5, M.Technology(1, 0, 0, 1, FR.gamma)))
    _, vopp = sol.candidates(np.array([0.5 - 1e-5, 0.5, 0.5 + 1e-5]))
    assert vopp[1] == pytest.approx(us, abs=1e-12)
    assert abs(vopp[2] - vopp[0]) / 2e-5 <= 1e-8


@given(st.sampled_from([1e-5, 1e-6, 1e-7]))
def test_saddle_offset_insensitive(eps):
    ref = integrate_opposite(FR, BASE)
    alt = integrate_opposite(FR, BASE, eps=eps)
    assert abs(alt.q_low - ref.q_low) <= 1e-8
    assert abs(alt.q_high - ref.q_high) <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("c", [0.4, 0.1, 0.04])
def test_restricted_frontier_oracle(c):
    par = BASE.replace(c=c)
    dp = gamma_oracle(FR, par, dt=1e-3, n_grid=1001)
    v = gamma_solution(FR, par).value(dp.grid)
    assert np.max(np.abs(dp.value - v)) <= 2e-2
