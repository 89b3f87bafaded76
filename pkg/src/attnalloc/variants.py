"""Extensions that keep the technology linear.

* non-exclusive attention: the share is confined to ``[alpha_min, alpha_max]``;
* asymmetric arrival rates for R- and L-evidence;
* extra "middle" actions and the m-strategy that stops on them.

The first two only change the rates of the two learning modes, so they reuse
the generic branch and envelope machinery in :mod:`attnalloc.value`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import model as M
from .branches import LinearBranch
from .errors import OrderingViolation, ValidationError
from .model import CutoffSet, ModelParams, RegimeTag, Technology
from .value import (BranchKind, RegimeSolution, assemble_envelope, baseline_candidates,
                    build_solution, own_left_branch, own_right_branch, solve)


# ------------------------------------------------------ non-exclusive

@dataclass(frozen=True)
class AttentionBounds:
    alpha_min: float
    alpha_max: float

    def __post_init__(self):
        if not (0 <= self.alpha_min < 0.5 < self.alpha_max <= 1):
            raise ValidationError(["need 0 <= alpha_min < 1/2 < alpha_max <= 1"])

    @classmethod
    def symmetric(cls, alpha_max: float) -> "AttentionBounds":
        return cls(1.0 - alpha_max, alpha_max)

    @property
    def is_symmetric(self) -> bool:
        return abs(self.alpha_min - (1.0 - self.alpha_max)) <= 1e-14


def nonexclusive_technology(params: ModelParams, bounds: AttentionBounds) -> Technology:
    lam, hi = params.lam, bounds.alpha_max
    return Technology(hi * lam, (1 - hi) * lam, (1 - hi) * lam, hi * lam, lam / 2.0,
                      alpha_hi=hi, alpha_lo=bounds.alpha_min)


def nonexclusive_c_bar(params: ModelParams, bounds: AttentionBounds) -> float:
    return M.c_bar(params, params.lam * bounds.alpha_max)


def nonexclusive_c_underbar(params: ModelParams, bounds: AttentionBounds) -> float:
    """Closed form; reduces to the baseline cutoff at ``alpha_max = 1``."""
    lam, rho, hi = params.lam, params.rho, bounds.alpha_max
    dr = params.u_r_R - params.u_l_R
    dl = params.u_l_L - params.u_r_L
    cb = nonexclusive_c_bar(params, bounds)
    d = 2 * hi - 1
    slack = (1 - hi) + rho / lam
    if slack == 0:
        return max(0.0, min(cb, lam / (1.0 + math.e ** 2) * min(dr, dl)))
    k = 1.0 + math.exp(d / slack * math.log((2 * rho + lam) / (d * lam)))
    t_r = (rho + lam * hi) * dr / k - rho * params.u_r_R
    t_l = (rho + lam * hi) * dl / k - rho * params.u_l_L
    return max(0.0, min(cb, t_r, t_l))


def own_beats_stationary(params: ModelParams, tech: Technology) -> float:
    """``max(V_own_low(p*), V_own_high(p*)) - U^S(p*)``; its root in ``c`` is c_underbar."""
    ps = M.p_star_for(params, tech.a_hi, tech.b_lo)
    lo = own_left_branch(params, tech).value(ps)
    hi = own_right_branch(params, tech).value(ps)
    return float(max(lo, hi) - M.stationary_value(params, ps, tech))


def c_underbar_characterized(params: ModelParams, tech: Technology, c_hi: float) -> float:
    """Numerical c_underbar: the cost where own-biased learning ties U^S at p*."""
    f = lambda c: own_beats_stationary(params.replace(c=c), tech)
    lo = 1e-12
    if f(lo) >= 0:
        return 0.0
    if f(c_hi) < 0:
        return c_hi
    return float(brentq(f, lo, c_hi, xtol=1e-14, rtol=1e-14))


def nonexclusive_solution(params: ModelParams, bounds: AttentionBounds) -> RegimeSolution:
    M.check_params(params)
    if not bounds.is_symmetric:
        raise ValidationError(["non-exclusive solution needs alpha_min = 1 - alpha_max"])
    tech = nonexclusive_technology(params, bounds)
    cb = nonexclusive_c_bar(params, bounds)
    cu = nonexclusive_c_underbar(params, bounds)
    return build_solution(params, tech, cb, cu)


# ---------------------------------------------------------- asymmetric

@dataclass(frozen=True)
class AsymRates:
    lambda_R: float
    lambda_L: float

    def __post_init__(self):
        if not (self.lambda_R > 0 and self.lambda_L > 0):
            raise ValidationError(["both arrival rates must be positive"])


def asymmetric_technology(rates: AsymRates) -> Technology:
    lr, ll = rates.lambda_R, rates.lambda_L
    h = lr * ll / (lr + ll)
    return Technology(lr, 0.0, 0.0, ll, h, alpha_stat=ll / (lr + ll))


@dataclass(frozen=True)
class IntersectionTest:
    """Where the R-seeking own branch crosses U_r, against p_high_star."""

    q_bar: Optional[float]
    p_high_star: float
    degenerate: bool


def own_intersection_test(params: ModelParams, rates: AsymRates) -> IntersectionTest:
    tech = asymmetric_technology(rates)
    pls = M.p_low_star_for(params, tech.a_hi)
    phs = M.p_high_star_for(params, tech.b_lo)
    if not 0 < pls < M.p_hat(params):
        return IntersectionTest(None, phs, False)
    br = own_left_branch(params, tech, pls)
    f = lambda p: float(br.value(p) - M.u_right(params, p))
    grid = np.linspace(pls, 1 - 1e-9, 2001)
    vals = np.array([f(p) for p in grid])
    idx = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    if len(idx) == 0:
        return IntersectionTest(None, phs, False)
    q = float(brentq(f, grid[idx[0]], grid[idx[0] + 1], xtol=1e-14))
    return IntersectionTest(q, phs, q >= phs)


def _regime_of(regions) -> RegimeTag:
    kinds = {r.kind for r in regions}
    if kinds & {BranchKind.OPP_LEFT, BranchKind.OPP_RIGHT}:
        return RegimeTag.OWN_AND_OPPOSITE
    if kinds & {BranchKind.OWN_LEFT, BranchKind.OWN_RIGHT}:
        return RegimeTag.OWN_ONLY
    return RegimeTag.NO_LEARNING


def _edge_between(regions, left, right):
    for a, b in zip(regions[:-1], regions[1:]):
        if a.kind is left and b.kind is right:
            return a.hi
    return None


def asymmetric_solution(params: ModelParams, rates: AsymRates) -> RegimeSolution:
    """Pointwise max over the generalized branches.

    When the own-biased R-seeking branch reaches U_r only at or beyond
    ``p_high_star`` the L-seeking own branch is dropped, so the policy
    goes straight from alpha = 1 to action r.
    """
    M.check_params(params)
    tech = asymmetric_technology(rates)
    test = own_intersection_test(params, rates)
    cands = baseline_candidates(params, tech, include_own_right=not test.degenerate)
    regs = assemble_envelope(params, tech, cands)
    regime = _regime_of(regs)
    ph = M.p_hat(params)
    pls = M.p_low_star_for(params, tech.a_hi)
    phs = M.p_high_star_for(params, tech.b_lo)
    ps = M.p_star_for(params, tech.a_hi, tech.b_lo)
    cut = CutoffSet(
        ph, pls, phs, ps, None, None,
        p_check=_edge_between(regs, BranchKind.OWN_LEFT, BranchKind.OWN_RIGHT),
        p_low=_edge_between(regs, BranchKind.OWN_LEFT, BranchKind.OPP_LEFT),
        p_high=_edge_between(regs, BranchKind.OPP_RIGHT, BranchKind.OWN_RIGHT))
    return RegimeSolution(params, regime, cut, regs, tech)


# -------------------------------------------------------- middle actions

@dataclass(frozen=True)
class MiddleAction:
    u_m_R: float
    u_m_L: float
    name: str = "m"

    def payoff(self, p):
        return np.asarray(p) * self.u_m_R + (1 - np.asarray(p)) * self.u_m_L

    def as_extra(self) -> dict:
        return {"u_m_R": self.u_m_R, "u_m_L": self.u_m_L, "name": self.name}


def check_middle(params: ModelParams, m: MiddleAction) -> None:
    bad = []
    if not params.u_l_R < m.u_m_R < params.u_r_R:
        bad.append(f"{m.name}: u_m_R must lie in (u_l_R, u_r_R)")
    if not m.u_m_L < params.u_l_L:
        bad.append(f"{m.name}: u_m_L must be below u_l_L")
    if bad:
        raise OrderingViolation(bad)


@dataclass(frozen=True)
class MCutoffs:
    q1: Optional[float]
    q2: Optional[float]
    p_m_low: float
    p_m_high: float


def m_strategy_cutoffs(params: ModelParams, m: MiddleAction) -> MCutoffs:
    check_middle(params, m)
    lam, rho, c = params.lam, params.rho, params.c
    fa1 = (lam * params.u_r_R - c) / (rho + lam)
    fa0 = (lam * params.u_l_L - c) / (rho + lam)
    q1 = q2 = None
    if m.u_m_R < fa1 and c + rho * m.u_m_L > 0:
        q1 = (m.u_m_L * rho + c) / (rho * (m.u_m_L - m.u_m_R) + (params.u_r_R - m.u_m_R) * lam)
    if m.u_m_L < fa0 and c + rho * m.u_m_R > 0:
        q2 = (((params.u_l_L - m.u_m_L) * lam - m.u_m_L * rho - c)
              / (rho * (m.u_m_R - m.u_m_L) + (params.u_l_L - m.u_m_L) * lam))
    us = lambda p: float(M.stationary_value(params, p))
    hi = q1 if q1 is not None and m.payoff(q1) >= us(q1) else 1.0
    lo = q2 if q2 is not None and m.payoff(q2) >= us(q2) else 0.0
    return MCutoffs(q1, q2, lo, hi)


@dataclass(frozen=True)
class MStrategy:
    action: MiddleAction
    cutoffs: MCutoffs
    left: Optional[LinearBranch]
    right: Optional[LinearBranch]

    def value(self, p):
        p = np.asarray(p, dtype=float)
        lo, hi = self.cutoffs.p_m_low, self.cutoffs.p_m_high
        out = np.asarray(self.action.payoff(p), dtype=float).copy()
        if self.left is not None:
            msk = p < lo
            out[msk] = self.left.value(p[msk])
        if self.right is not None:
            msk = p > hi
            out[msk] = self.right.value(p[msk])
        return out

    def label(self, p: float) -> str:
        lo, hi = self.cutoffs.p_m_low, self.cutoffs.p_m_high
        if p < lo:
            return f"{self.action.name}-strategy alpha=0"
        if p > hi:
            return f"{self.action.name}-strategy alpha=1"
        return f"action {self.action.name}"

    def alpha(self, p: float):
        lo, hi = self.cutoffs.p_m_low, self.cutoffs.p_m_high
        return 0.0 if p < lo else 1.0 if p > hi else None


def m_strategy(params: ModelParams, m: MiddleAction) -> MStrategy:
    cut = m_strategy_cutoffs(params, m)
    lam = params.lam
    left = right = None
    if cut.p_m_low > 0:
        left = LinearBranch.of(params, 0.0, lam, cut.p_m_low, float(m.payoff(cut.p_m_low)))
    if cut.p_m_high < 1:
        right = LinearBranch.of(params, lam, 0.0, cut.p_m_high, float(m.payoff(cut.p_m_high)))
    return MStrategy(m, cut, left, right)


def _sorted_middles(params, middles: Sequence[MiddleAction]):
    ms = sorted(middles, key=lambda m: m.u_m_R)
    for m in ms:
        check_middle(params, m)
    for a, b in zip(ms[:-1], ms[1:]):
        if not (a.u_m_R < b.u_m_R and a.u_m_L > b.u_m_L):
            raise OrderingViolation([f"{a.name}/{b.name}: one middle action weakly dominates the other"])
    return ms


_BASE_LABEL = {
    BranchKind.STOP_L: "action l", BranchKind.STOP_R: "action r",
    BranchKind.OWN_LEFT: "own alpha=1", BranchKind.OWN_RIGHT: "own alpha=0",
    BranchKind.OPP_LEFT: "opposite alpha=0", BranchKind.OPP_RIGHT: "opposite alpha=1",
    BranchKind.STATIONARY: "stationary",
}


@dataclass(frozen=True)
class MultiActionPolicy:
    base: RegimeSolution
    strategies: tuple

    def _winners(self, p):
        vals = [np.asarray(self.base.value(p), dtype=float)]
        vals += [s.value(p) for s in self.strategies]
        stack = np.vstack(vals)
        # a middle strategy has to strictly beat the baseline to be reported
        bonus = np.zeros((len(vals), 1))
        bonus[0] = 1e-12
        return stack, np.argmax(stack + bonus, axis=0)

    def evaluate(self, p):
        """Value and active heuristic label at each belief."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        stack, win = self._winners(p)
        value = stack[win, np.arange(p.size)]
        labels = []
        for k, q in zip(win, p):
            if k == 0:
                labels.append(_BASE_LABEL[self.base.decision(float(q)).kind])
            else:
                labels.append(self.strategies[k - 1].label(float(q)))
        return value, labels

    def alpha(self, p):
        """Attention share of the winning strategy, NaN when stopping."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        _, win = self._winners(p)
        out = np.full(p.shape, np.nan)
        for i, (k, q) in enumerate(zip(win, p)):
            a = self.base.decision(float(q)).alpha if k == 0 else self.strategies[k - 1].alpha(float(q))
            if a is not None:
                out[i] = a
        return out

    def region_sequence(self, n: int = 4001) -> list:
        grid = np.linspace(0.0, 1.0, n)
        _, lab = self.evaluate(grid)
        seq = [lab[0]]
        for s in lab[1:]:
            if s != seq[-1]:
                seq.append(s)
        return seq


def multi_action_policy(params: ModelParams, middles: Sequence[MiddleAction]) -> MultiActionPolicy:
    ms = _sorted_middles(params, middles)
    return MultiActionPolicy(solve(params), tuple(m_strategy(params, m) for m in ms))


def multi_action_envelope(params: ModelParams, middles: Sequence[MiddleAction], p):
    """``(value, choice)`` of the pointwise max of baseline and m-strategies."""
    return multi_action_policy(params, middles).evaluate(p)
