"""Value function envelope, optimal attention policy and HJB diagnostics.

A :class:`RegimeSolution` is a list of belief intervals, each carrying a
value branch and a policy. Intervals are closed; where two overlap at a
shared endpoint the one with the higher ``priority`` wins. This encodes the
tie-breaking convention: stopping beats learning at the stopping
boundaries, r beats l at the kink of U, and at interior switch points the
belief joins the opposite-biased region, or the R-biased (alpha low) own
region at the own/own switch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from . import model as M
from .branches import LinearBranch, mode_flow, mode_slope
from .errors import BracketingFailure, KinkPoint, UndefinedBranch
from .model import CutoffSet, ModelParams, RegimeTag, Technology

ROOT_TOL = 1e-12


class BranchKind(str, enum.Enum):
    OWN_LEFT = "OwnLeft"
    OWN_RIGHT = "OwnRight"
    OPP_LEFT = "OppLeft"
    OPP_RIGHT = "OppRight"
    STOP_L = "StopL"
    STOP_R = "StopR"
    STATIONARY = "Stationary"


PRIORITY = {
    BranchKind.STOP_R: 6, BranchKind.STOP_L: 5, BranchKind.STATIONARY: 4,
    BranchKind.OPP_LEFT: 3, BranchKind.OPP_RIGHT: 3,
    BranchKind.OWN_RIGHT: 2, BranchKind.OWN_LEFT: 1,
}


@dataclass(frozen=True)
class Region:
    kind: BranchKind
    lo: float
    hi: float
    alpha: Optional[float]
    branch: Optional[LinearBranch] = None

    @property
    def priority(self) -> int:
        return PRIORITY[self.kind]

    @property
    def is_stop(self) -> bool:
        return self.kind in (BranchKind.STOP_L, BranchKind.STOP_R)

    @property
    def action(self) -> Optional[str]:
        return {BranchKind.STOP_L: "l", BranchKind.STOP_R: "r"}.get(self.kind)


@dataclass(frozen=True)
class Decision:
    """Either a stop with ``action`` or learning with attention ``alpha``."""

    alpha: Optional[float]
    action: Optional[str]
    kind: BranchKind

    @property
    def stop(self) -> bool:
        return self.alpha is None


@dataclass(frozen=True)
class RegimeSolution:
    params: ModelParams
    regime: RegimeTag
    cutoffs: CutoffSet
    regions: tuple
    tech: Technology = field(default=None)

    # ---- lookup
    def _ordered(self):
        return sorted(self.regions, key=lambda r: -r.priority)

    def region_at(self, p: float) -> Region:
        for reg in self._ordered():
            if reg.lo <= p <= reg.hi:
                return reg
        raise ValueError(f"belief {p} not covered")

    def _side_region(self, p: float, left: bool) -> Region:
        best = None
        for reg in self.regions:
            inside = (reg.lo < p <= reg.hi) if left else (reg.lo <= p < reg.hi)
            if inside and (best is None or reg.priority > best.priority):
                best = reg
        return best if best is not None else self.region_at(p)

    def _eval(self, reg: Region, p, deriv: bool):
        par = self.params
        if reg.kind is BranchKind.STOP_L:
            return (par.u_l_R - par.u_l_L) + 0 * p if deriv else M.u_left(par, p)
        if reg.kind is BranchKind.STOP_R:
            return (par.u_r_R - par.u_r_L) + 0 * p if deriv else M.u_right(par, p)
        if reg.kind is BranchKind.STATIONARY:
            if deriv:
                h = self.tech.stat_rate
                return h * (par.u_r_R - par.u_l_L) / (par.rho + h) + 0 * p
            return M.stationary_value(par, p, self.tech)
        return reg.branch.slope(p) if deriv else reg.branch.value(p)

    def _vector(self, p, deriv: bool):
        arr = np.asarray(p, dtype=float)
        flat = arr.reshape(-1)
        out = np.full(flat.shape, np.nan)
        todo = np.ones(flat.shape, dtype=bool)
        for reg in self._ordered():
            mask = todo & (flat >= reg.lo) & (flat <= reg.hi)
            if mask.any():
                out[mask] = self._eval(reg, flat[mask], deriv)
                todo &= ~mask
        if todo.any():
            raise ValueError("beliefs outside [0,1]")
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def value(self, p):
        return self._vector(p, False)

    def slope(self, p):
        """Derivative of V; at a kink this is the left derivative."""
        arr = np.asarray(p, dtype=float)
        if arr.ndim == 0:
            return float(self.slope_pair(float(arr))[0])
        return np.array([self.slope_pair(float(x))[0] for x in arr.reshape(-1)]).reshape(arr.shape)

    def slope_pair(self, p: float):
        lr = self._side_region(p, left=True)
        rr = self._side_region(p, left=False)
        return float(self._eval(lr, p, True)), float(self._eval(rr, p, True))

    def decision(self, p: float) -> Decision:
        reg = self.region_at(p)
        return Decision(reg.alpha, reg.action, reg.kind)

    def alpha(self, p):
        """Attention share, NaN where the decision maker stops."""
        arr = np.asarray(p, dtype=float)
        flat = arr.reshape(-1)
        out = np.full(flat.shape, np.nan)
        todo = np.ones(flat.shape, dtype=bool)
        for reg in self._ordered():
            mask = todo & (flat >= reg.lo) & (flat <= reg.hi)
            if reg.alpha is not None:
                out[mask] = reg.alpha
            todo &= ~mask
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def kinds(self, p) -> list:
        return [self.region_at(float(x)).kind.value for x in np.atleast_1d(p)]

    @property
    def kinks(self) -> list:
        c = self.cutoffs
        return [x for x in (c.p_check, c.p_low, c.p_high) if x is not None]

    @property
    def experimentation_region(self):
        c = self.cutoffs
        if self.regime is RegimeTag.NO_LEARNING:
            return None
        return (c.p_low_star, c.p_high_star)


# ------------------------------------------------------------ branches

def _tech(params, tech):
    return Technology.baseline(params.lam) if tech is None else tech


def own_left_branch(params, tech=None, p_low_star=None) -> LinearBranch:
    t = _tech(params, tech)
    x = M.p_low_star_for(params, t.a_hi) if p_low_star is None else p_low_star
    return LinearBranch.of(params, t.a_hi, t.b_hi, x, float(M.u_left(params, x)))


def own_right_branch(params, tech=None, p_high_star=None) -> LinearBranch:
    t = _tech(params, tech)
    x = M.p_high_star_for(params, t.b_lo) if p_high_star is None else p_high_star
    return LinearBranch.of(params, t.a_lo, t.b_lo, x, float(M.u_right(params, x)))


def opp_branches(params, tech=None):
    t = _tech(params, tech)
    ps = M.p_star_for(params, t.a_hi, t.b_lo)
    us = float(M.stationary_value(params, ps, t))
    left = LinearBranch.of(params, t.a_lo, t.b_lo, ps, us)
    right = LinearBranch.of(params, t.a_hi, t.b_hi, ps, us)
    return left, right


def make_branch(params: ModelParams, kind, tech=None) -> LinearBranch:
    kind = BranchKind(kind)
    if kind in (BranchKind.OWN_LEFT, BranchKind.OWN_RIGHT):
        t = _tech(params, tech)
        ok = (M.exp_holds(params, t.a_hi) if kind is BranchKind.OWN_LEFT
              else M.exp_holds(params, t.b_lo))
        if not ok:
            raise UndefinedBranch(f"{kind.value} needs full attention to beat U at p_hat")
        return own_left_branch(params, t) if kind is BranchKind.OWN_LEFT else own_right_branch(params, t)
    if kind is BranchKind.OPP_LEFT:
        return opp_branches(params, tech)[0]
    if kind is BranchKind.OPP_RIGHT:
        return opp_branches(params, tech)[1]
    raise UndefinedBranch(f"{kind.value} is not a learning branch")


def branch_value(params: ModelParams, kind, p: float, tech=None):
    """Closed-form value and derivative of one branch at ``p``."""
    kind = BranchKind(kind)
    if kind is BranchKind.STOP_L:
        return float(M.u_left(params, p)), params.u_l_R - params.u_l_L
    if kind is BranchKind.STOP_R:
        return float(M.u_right(params, p)), params.u_r_R - params.u_r_L
    br = make_branch(params, kind, tech)
    return float(br.value(p)), float(br.slope(p))


# ---------------------------------------------------------- root finding

def _root(f, lo, hi, what):
    try:
        return float(bisect(f, lo, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps, maxiter=400))
    except ValueError as exc:
        raise BracketingFailure(f"{what}: no sign change on [{lo}, {hi}]") from exc


def solve_switch_points(params: ModelParams, tech=None, regime=None, bounds=None):
    """p_check in OwnOnly, (p_low, p_high) in OwnAndOpposite."""
    t = _tech(params, tech)
    if regime is None:
        regime = M.regime_cutoffs(params).regime
    pls = M.p_low_star_for(params, t.a_hi)
    phs = M.p_high_star_for(params, t.b_lo)
    own_l, own_r = own_left_branch(params, t, pls), own_right_branch(params, t, phs)
    if regime is RegimeTag.OWN_ONLY:
        return _root(lambda p: own_l.value(p) - own_r.value(p), pls, phs, "p_check")
    if regime is RegimeTag.OWN_AND_OPPOSITE:
        opp_l, opp_r = opp_branches(params, t)
        ps = opp_l.anchor
        lo = _root(lambda p: own_l.value(p) - opp_l.value(p), pls, ps, "p_low")
        hi = _root(lambda p: opp_r.value(p) - own_r.value(p), ps, phs, "p_high")
        return lo, hi
    raise ValueError("no switch points without learning")


# ------------------------------------------------------------ assembly

def _stop_regions(params, lo_edge, hi_edge):
    return [Region(BranchKind.STOP_L, 0.0, lo_edge, None),
            Region(BranchKind.STOP_R, hi_edge, 1.0, None)]


def build_solution(params: ModelParams, tech: Technology, cb: float, cu: float) -> RegimeSolution:
    """Envelope assembly from a technology and the two cost cutoffs."""
    t = tech
    ph = M.p_hat(params)
    regime = M.classify(params.c, cb, cu)
    if regime is RegimeTag.NO_LEARNING:
        cut = CutoffSet(ph, None, None, None, cb, cu)
        regs = (Region(BranchKind.STOP_L, 0.0, ph, None), Region(BranchKind.STOP_R, ph, 1.0, None))
        return RegimeSolution(params, regime, cut, regs, t)
    pls = M.p_low_star_for(params, t.a_hi)
    phs = M.p_high_star_for(params, t.b_lo)
    ps = M.p_star_for(params, t.a_hi, t.b_lo)
    own_l, own_r = own_left_branch(params, t, pls), own_right_branch(params, t, phs)
    regs = _stop_regions(params, pls, phs)
    if regime is RegimeTag.OWN_ONLY:
        pc = solve_switch_points(params, t, regime)
        regs += [Region(BranchKind.OWN_LEFT, pls, pc, t.alpha_hi, own_l),
                 Region(BranchKind.OWN_RIGHT, pc, phs, t.alpha_lo, own_r)]
        cut = CutoffSet(ph, pls, phs, ps, cb, cu, p_check=pc)
    else:
        pl, pu = solve_switch_points(params, t, regime)
        opp_l, opp_r = opp_branches(params, t)
        regs += [Region(BranchKind.OWN_LEFT, pls, pl, t.alpha_hi, own_l),
                 Region(BranchKind.OPP_LEFT, pl, ps, t.alpha_lo, opp_l),
                 Region(BranchKind.STATIONARY, ps, ps, t.alpha_stat),
                 Region(BranchKind.OPP_RIGHT, ps, pu, t.alpha_hi, opp_r),
                 Region(BranchKind.OWN_RIGHT, pu, phs, t.alpha_lo, own_r)]
        cut = CutoffSet(ph, pls, phs, ps, cb, cu, p_low=pl, p_high=pu)
    return RegimeSolution(params, regime, cut, tuple(regs), t)


def solve(params: ModelParams) -> RegimeSolution:
    """Solve the baseline model."""
    M.check_params(params)
    rc = M.regime_cutoffs(params)
    return build_solution(params, Technology.baseline(params.lam), rc.c_bar, rc.c_underbar)


def value_envelope(params: ModelParams, p, solution: Optional[RegimeSolution] = None):
    sol = solve(params) if solution is None else solution
    return sol.value(p)


def optimal_alpha(params: ModelParams, p: float, solution: Optional[RegimeSolution] = None) -> Decision:
    sol = solve(params) if solution is None else solution
    return sol.decision(p)


# ------------------------------------------------- candidate envelope

@dataclass(frozen=True)
class Candidate:
    kind: BranchKind
    lo: float
    hi: float
    alpha: Optional[float]
    branch: Optional[LinearBranch]


def _cand_values(params, cands, p):
    out = np.full((len(cands), p.size), -np.inf)
    for i, cd in enumerate(cands):
        m = (p >= cd.lo) & (p <= cd.hi)
        if not m.any():
            continue
        if cd.kind is BranchKind.STOP_L:
            out[i, m] = M.u_left(params, p[m])
        elif cd.kind is BranchKind.STOP_R:
            out[i, m] = M.u_right(params, p[m])
        else:
            out[i, m] = cd.branch.value(p[m])
    return out


def _winners(params, cands, grid):
    vals = _cand_values(params, cands, grid)
    pri = np.array([PRIORITY[c.kind] for c in cands], dtype=float)
    return np.argmax(vals + 1e-13 * pri[:, None], axis=0)


def _edge(params, cands, i0, i1, a, b):
    c0, c1 = cands[i0], cands[i1]
    if a <= c0.hi < b:
        return c0.hi
    if a < c1.lo <= b:
        return c1.lo

    def f(q):
        v = _cand_values(params, [c0, c1], np.array([q]))
        return v[0, 0] - v[1, 0]

    if f(a) * f(b) > 0:
        # smooth pasting: the pair touches without crossing at a branch anchor
        for cd in (c0, c1):
            if cd.branch is not None and abs(cd.branch.anchor - 0.5 * (a + b)) <= 4 * (b - a) + 1e-6:
                return cd.branch.anchor
    return _root(f, a, b, f"{c0.kind.value}/{c1.kind.value} crossing")


def assemble_envelope(params: ModelParams, tech: Technology, cands: Sequence[Candidate],
                      n_scan: int = 4001, n_fine: int = 2001):
    """Pointwise max over feasible strategy values, split into regions.

    Every candidate is the value of a feasible strategy on its domain, so the
    max is a lower bound on the optimum and equals it whenever the optimum
    is built from these pieces. Breakpoints are found on a coarse scan, each
    transition cell is rescanned finely, and the final edge is refined by
    bisection on the difference of the two adjacent pieces. Regions narrower
    than the fine spacing (about 1e-7) can be missed.
    """
    cands = list(cands)
    grid = np.linspace(0.0, 1.0, n_scan)
    win = _winners(params, cands, grid)
    segs = [int(win[0])]
    edges = []
    for j in range(1, n_scan):
        if win[j] == win[j - 1]:
            continue
        fine = np.linspace(grid[j - 1], grid[j], n_fine)
        fw = _winners(params, cands, fine)
        for k in range(1, n_fine):
            if fw[k] != fw[k - 1]:
                if fw[k - 1] != segs[-1]:
                    segs.append(int(fw[k - 1]))
                    edges.append(fine[k - 1])
                edges.append(_edge(params, cands, fw[k - 1], fw[k], fine[k - 1], fine[k]))
                segs.append(int(fw[k]))
        if segs[-1] != win[j]:
            edges.append(grid[j])
            segs.append(int(win[j]))
    bounds = [0.0] + list(edges) + [1.0]
    out = [Region(cands[i].kind, bounds[k], bounds[k + 1], cands[i].alpha, cands[i].branch)
           for k, i in enumerate(segs)]
    final = []
    for k, reg in enumerate(out):
        final.append(reg)
        if (reg.kind is BranchKind.OPP_LEFT and k + 1 < len(out)
                and out[k + 1].kind is BranchKind.OPP_RIGHT):
            final.append(Region(BranchKind.STATIONARY, reg.hi, reg.hi, tech.alpha_stat))
    return tuple(final)


def baseline_candidates(params: ModelParams, tech: Technology, include_own_right=True,
                        include_own_left=True):
    t = tech
    cands = [Candidate(BranchKind.STOP_L, 0.0, 1.0, None, None),
             Candidate(BranchKind.STOP_R, 0.0, 1.0, None, None)]
    pls = M.p_low_star_for(params, t.a_hi)
    phs = M.p_high_star_for(params, t.b_lo)
    ph = M.p_hat(params)
    if include_own_left and 0 < pls < ph:
        cands.append(Candidate(BranchKind.OWN_LEFT, pls, 1.0, t.alpha_hi,
                               own_left_branch(params, t, pls)))
    if include_own_right and ph < phs < 1:
        cands.append(Candidate(BranchKind.OWN_RIGHT, 0.0, phs, t.alpha_lo,
                               own_right_branch(params, t, phs)))
    ol, orr = opp_branches(params, t)
    ps = ol.anchor
    cands.append(Candidate(BranchKind.OPP_LEFT, 0.0, ps, t.alpha_lo, ol))
    cands.append(Candidate(BranchKind.OPP_RIGHT, ps, 1.0, t.alpha_hi, orr))
    return cands


# ------------------------------------------------------------ diagnostics

@dataclass(frozen=True)
class HJBReport:
    p: float
    value: float
    slope: float
    residual: float
    crossing_gap: float
    dF_dalpha: float
    dF_identity_gap: float
    smooth_paste_gap: float


def dF_dalpha(params: ModelParams, p, v, dv):
    lam = params.lam
    return (lam * p * (params.u_r_R - v) - lam * (1 - p) * (params.u_l_L - v)
            - 2 * lam * p * (1 - p) * dv)


def crossing_identity(params: ModelParams, p, v):
    """Return (V0' - V1', (lam+2 rho)/(lam p (1-p)) (V - U^S)) at a common (p, V)."""
    lam, rho = params.lam, params.rho
    d0 = mode_slope(params, 0.0, lam, p, v)
    d1 = mode_slope(params, lam, 0.0, p, v)
    rhs = (lam + 2 * rho) / (lam * p * (1 - p)) * (v - M.stationary_value(params, p))
    return d0 - d1, rhs


def hjb_residual(sol: RegimeSolution, p, v=None, dv=None):
    """|max{U - V, max_alpha F_alpha - c - rho V}| for the solution's technology."""
    par, t = sol.params, sol.tech
    v = sol.value(p) if v is None else v
    dv = sol.slope(p) if dv is None else dv
    f = np.maximum(mode_flow(par, t.a_hi, t.b_hi, p, v, dv),
                   mode_flow(par, t.a_lo, t.b_lo, p, v, dv))
    return np.abs(np.maximum(M.u_max(par, p) - v, f - par.c - par.rho * v))


def smooth_paste_gap(sol: RegimeSolution) -> float:
    if sol.regime is RegimeTag.NO_LEARNING:
        return 0.0
    par, c = sol.params, sol.cutoffs
    gaps = []
    lo_reg = sol._side_region(c.p_low_star, left=False)
    hi_reg = sol._side_region(c.p_high_star, left=True)
    gaps.append(abs(sol._eval(lo_reg, c.p_low_star, True) - (par.u_l_R - par.u_l_L)))
    gaps.append(abs(sol._eval(hi_reg, c.p_high_star, True) - (par.u_r_R - par.u_r_L)))
    return float(max(gaps))


def hjb_diagnostics(params: ModelParams, p: float, solution: Optional[RegimeSolution] = None,
                    kink_tol: float = 1e-12) -> HJBReport:
    sol = solve(params) if solution is None else solution
    for k in sol.kinks:
        if abs(p - k) <= kink_tol:
            left, right = sol.slope_pair(k)
            raise KinkPoint(f"kink at {k}: left slope {left}, right slope {right}")
    v = float(sol.value(p))
    dv = float(sol.slope_pair(p)[1])
    res = float(hjb_residual(sol, p, v, dv))
    lhs, rhs = crossing_identity(params, p, v)
    dfa = float(dF_dalpha(params, p, v, dv))
    d0 = mode_slope(params, 0.0, params.lam, p, v)
    ident = abs(float(dF_dalpha(params, p, v, d0))
                - (2 * params.rho + params.lam) * (float(M.stationary_value(params, p)) - v))
    return HJBReport(p, v, dv, res, float(abs(lhs - rhs)), dfa, ident, smooth_paste_gap(sol))


@dataclass(frozen=True)
class KinkReport:
    p: float
    left: float
    right: float

    @property
    def convex(self) -> bool:
        return self.left <= self.right


def kink_check(sol: RegimeSolution) -> list:
    return [KinkReport(k, *sol.slope_pair(k)) for k in sol.kinks]
