"""Diminishing returns to attention.

Attention ``x`` to the R-evidence source yields R-evidence at rate
``lam * g(x)`` and L-evidence at rate ``lam * g(1 - x)``. The efficient
pairs form the frontier ``(l, Gamma(l))`` with ``Gamma(l) = g(1 - g^{-1}(l))``
(rates in units of ``lam``). Only symmetric payoffs are handled:
``u_r_R = u_l_L = u_bar`` and ``u_l_R = u_r_L``.

Rates are normalized by ``lam``, so everything below works with
``r = rho / lam`` and ``k = c / lam``. Inside an interior segment the value is
``A(l) u_bar - B(l) k``, and ``l(p)`` solves a first-order ODE. That ODE has a
saddle at ``(1/2, gamma)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import model as M
from .branches import LinearBranch
from .errors import AssumptionViolated, SaddleDegenerate, ValidationError
from .model import ModelParams
from .oracle import ExperimentFamily, poisson_pairs, solve_infinite_horizon
from .value import own_left_branch

INV_TOL = 1e-12
LINEAR_TOL = 1e-9
SADDLE_EPS = 1e-6


def _bisect_inverse(g, y, tol=INV_TOL):
    """Inverse of an increasing g on [0, 1]; bracketed Brent for scalars."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        yv = float(y)
        if yv <= g(0.0):
            return np.float64(0.0)
        if yv >= g(1.0):
            return np.float64(1.0)
        return np.float64(brentq(lambda x: g(x) - yv, 0.0, 1.0, xtol=tol, rtol=1e-15))
    lo, hi = np.zeros_like(y), np.ones_like(y)
    while y.size and np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        up = g(mid) < y
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return 0.5 * (lo + hi)


def _stencil1(f, x, h=1e-4):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _stencil2(f, x, h=1e-3):
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


@dataclass(frozen=True)
class GammaFrontier:
    g: Callable
    g_prime: Callable
    g_second: Callable
    gamma: float
    linear: bool = False

    def inverse(self, lam):
        return _bisect_inverse(self.g, lam)

    def value(self, lam):
        return self.g(1.0 - self.inverse(lam))

    __call__ = value

    def prime(self, lam):
        x = self.inverse(lam)
        return -self.g_prime(1.0 - x) / self.g_prime(x)

    def second(self, lam):
        x = self.inverse(lam)
        y = 1.0 - x
        gx = self.g_prime(x)
        return self.g_second(y) / gx ** 2 + self.g_prime(y) * self.g_second(x) / gx ** 3

    def parts(self, lam):
        """``Gamma``, ``Gamma'`` and ``Gamma''`` from a single inversion."""
        x = self.inverse(lam)
        y = 1.0 - x
        gx, gy = self.g_prime(x), self.g_prime(y)
        g2 = self.g_second(y) / gx ** 2 + gy * self.g_second(x) / gx ** 3
        return self.g(y), -gy / gx, g2

    def alpha(self, lam):
        """Attention share that produces R-rate ``lam``."""
        return self.inverse(lam)


def gamma_from_g(g: Callable, g_prime: Optional[Callable] = None,
                 g_second: Optional[Callable] = None, n_check: int = 201) -> GammaFrontier:
    """Frontier built from ``g``; derivatives by chain rule or 5-point stencils."""
    gp = g_prime if g_prime is not None else (lambda x: _stencil1(g, x))
    gs = g_second if g_second is not None else (lambda x: _stencil2(g, x))
    fails = []
    xs = np.linspace(0.0, 1.0, n_check)
    gx = np.asarray(g(xs), dtype=float)
    if abs(gx[0]) > 1e-12 or abs(gx[-1] - 1) > 1e-12:
        fails.append("g(0)=0 and g(1)=1 required")
    if np.any(np.diff(gx) <= 0):
        fails.append("g must be strictly increasing")
    if fails:
        raise AssumptionViolated(fails)
    gam = float(g(0.5))
    fr = GammaFrontier(g, gp, gs, gam)
    ls = np.linspace(0.0, 1.0, n_check)
    G = np.asarray(fr.value(ls))
    if abs(G[0] - 1) > 1e-9 or abs(G[-1]) > 1e-9:
        fails.append("Gamma(0)=1 and Gamma(1)=0 violated")
    bad = np.nonzero(np.diff(G) >= 0)[0]
    if len(bad):
        fails.append(f"Gamma not strictly decreasing near l={ls[bad[0]]:.4g}")
    inner = ls[1:-1]
    G2 = np.asarray(fr.second(inner))
    linear = bool(np.all(np.abs(G2) <= LINEAR_TOL))
    if not linear and np.any(G2 >= 0):
        k = int(np.nonzero(G2 >= 0)[0][0])
        fails.append(f"Gamma must be strictly concave; Gamma''({inner[k]:.4g}) = {G2[k]:.3g}")
    if abs(float(fr.prime(gam)) + 1) > 1e-6:
        fails.append(f"Gamma'(gamma) = {float(fr.prime(gam)):.6g}, expected -1")
    if fails:
        raise AssumptionViolated(fails)
    return GammaFrontier(g, gp, gs, gam, linear)


def sqrt_frontier() -> GammaFrontier:
    """The concave example ``g(x) = sqrt(1 + 4x - x^2) - 1``."""
    g = lambda x: np.sqrt(1 + 4 * x - x * x) - 1
    gp = lambda x: (2 - x) / np.sqrt(1 + 4 * x - x * x)
    gs = lambda x: -5.0 / (1 + 4 * x - x * x) ** 1.5
    return gamma_from_g(g, gp, gs)


def linear_frontier() -> GammaFrontier:
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return gamma_from_g(lambda x: np.asarray(x, dtype=float), one, zero)


# ------------------------------------------------------------- A and B

def ab_coefficients(fr: GammaFrontier, lam, rho: float):
    """``A(l)``, ``B(l)`` with ``rho`` already divided by the rate scale."""
    G, Gp, _ = fr.parts(lam)
    d = G - Gp * lam + rho * (1 - Gp)
    return (G - Gp * lam) / d, (1 - Gp) / d


def interior_value(fr: GammaFrontier, lam, params: ModelParams):
    r, k = params.rho / params.lam, params.c / params.lam
    A, B = ab_coefficients(fr, lam, r)
    return A * params.u_r_R - B * k


def lambda_ode(fr: GammaFrontier, rho: float):
    """Right-hand side of ``dl/dp`` (``rho`` normalized)."""
    def rhs(p, lam):
        G, Gp, G2 = fr.parts(lam)
        num = (p + (1 - p) * Gp) * (G - Gp * lam + rho * (1 - Gp))
        return num / (p * (1 - p) * (G - lam) * G2)
    return rhs


def saddle_slope(fr: GammaFrontier, rho: float) -> float:
    g2 = float(fr.second(fr.gamma))
    if not g2 < 0:
        raise SaddleDegenerate(f"Gamma''(gamma) = {g2} is not negative")
    s = rho + fr.gamma
    return -s + np.sqrt(s * s - 8 * s / g2)


def check_symmetric(params: ModelParams):
    bad = []
    if params.u_r_R != params.u_l_L:
        bad.append("u_r_R must equal u_l_L")
    if params.u_l_R != params.u_r_L:
        bad.append("u_l_R must equal u_r_L")
    if bad:
        raise ValidationError(bad)


# -------------------------------------------------------- integration

@dataclass(frozen=True)
class LambdaPiece:
    """``l(p)`` on ``[lo, hi]`` from a dense ODE solution."""

    lo: float
    hi: float
    dense: object

    def __call__(self, p):
        p = np.clip(np.asarray(p, dtype=float), self.lo, self.hi)
        if p.size == 0:
            return p.copy()
        return np.asarray(self.dense(p)).reshape(np.shape(p))


def _integrate(fr, rho, p0, l0, p_end, stop_levels):
    """Integrate ``l(p)`` from ``(p0, l0)`` toward ``p_end`` until a stop level.

    Approaching ``l = gamma`` away from the saddle the slope blows up like
    ``1 / (l - gamma)``. When the solver stalls there, the last stretch is
    finished in the inverse variable ``p(l)``, whose slope vanishes instead.
    Returns ``(dense, p_stop, level_hit)``.
    """
    f = lambda_ode(fr, rho)
    rhs = lambda p, y: [float(f(p, y[0]))]
    events = []
    for lev in stop_levels:
        ev = (lambda lv: (lambda p, y: y[0] - lv))(lev)
        ev.terminal = True
        events.append(ev)
    sol = solve_ivp(rhs, (p0, p_end), [l0], method="DOP853", rtol=1e-12, atol=1e-14,
                    events=events, dense_output=True, max_step=1e-2)
    p_stop, hit = float(sol.t[-1]), None
    for lev, te in zip(stop_levels, sol.t_events):
        if len(te):
            hit, p_stop = lev, float(te[0])
    dense = sol.sol
    if hit is None and sol.status == -1:
        y_last = float(sol.y[0][-1])
        near = [lv for lv in stop_levels if abs(y_last - lv) < 1e-3]
        if not near:
            raise RuntimeError(f"lambda ODE failed at p={p_stop}: {sol.message}")
        lev = near[0]
        inv = solve_ivp(lambda l, q: [1.0 / float(f(q[0], l))], (y_last, lev), [p_stop],
                        method="DOP853", rtol=1e-12, atol=1e-15)
        p_last, q = p_stop, float(inv.y[0][-1])
        base = sol.sol

        def dense(p, base=base, p_last=p_last, q=q, y_last=y_last, lev=lev):
            p = np.asarray(p, dtype=float)
            out = np.asarray(base(np.minimum(p, p_last) if q >= p_last else np.maximum(p, p_last)))
            tail = (p - p_last) / (q - p_last) if q != p_last else np.zeros_like(p)
            beyond = (tail > 0) & (tail <= 1)
            return np.where(beyond, y_last + (lev - y_last) * np.clip(tail, 0, 1), out)
        hit, p_stop = lev, q
    return dense, p_stop, hit


@dataclass(frozen=True)
class OppositePolicy:
    q_low: float
    q_high: float
    left: LambdaPiece
    right: LambdaPiece
    slope0: float

    def lam(self, p):
        p = np.asarray(p, dtype=float)
        out = np.where(p <= self.q_low, 0.0, np.where(p >= self.q_high, 1.0, np.nan))
        m = (p > self.q_low) & (p < 0.5)
        out = np.where(m, self.left(p), out)
        m = (p >= 0.5) & (p < self.q_high)
        return np.where(m, self.right(p), out)


def integrate_opposite(fr: GammaFrontier, params: ModelParams, eps: float = SADDLE_EPS) -> OppositePolicy:
    """Leave the saddle along the increasing manifold and run to l = 0 or 1."""
    check_symmetric(params)
    r = params.rho / params.lam
    s0 = saddle_slope(fr, r)
    g = fr.gamma
    solR, qh, hitR = _integrate(fr, r, 0.5 + eps, g + s0 * eps, 1 - 1e-12, [1.0])
    solL, ql, hitL = _integrate(fr, r, 0.5 - eps, g - s0 * eps, 1e-12, [0.0])
    if hitR is None:
        qh = 1.0
    if hitL is None:
        ql = 0.0
    left = _saddle_piece(solL, ql, 0.5, g, s0, eps)
    right = _saddle_piece(solR, 0.5, qh, g, s0, eps)
    return OppositePolicy(ql, qh, left, right, s0)


def _saddle_piece(dense, lo, hi, g, s0, eps):
    def f(p):
        p = np.asarray(p, dtype=float)
        near = np.abs(p - 0.5) < eps
        far = np.asarray(dense(np.where(near, 0.5 + np.sign(p - 0.5 + 1e-300) * eps, p)))[0]
        return np.where(near, g + s0 * (p - 0.5), far)
    return LambdaPiece(lo, hi, f)


@dataclass(frozen=True)
class OwnPolicy:
    p_low_star: float
    q_b: float         # left corner end; >= 1/2 means no interior segment
    q_s: float         # where l reaches gamma (1/2 if it never does)
    piece: Optional[LambdaPiece]

    @property
    def has_plateau(self) -> bool:
        return self.q_s < 0.5


def integrate_own(fr: GammaFrontier, params: ModelParams) -> OwnPolicy:
    check_symmetric(params)
    r = params.rho / params.lam
    pls = M.p_low_star_for(params, params.lam)
    br = own_left_branch(params)
    target = float(interior_value(fr, 1.0, params))
    f = lambda p: float(br.value(p)) - target
    grid = np.linspace(pls, 0.5, 4001)
    vals = np.array([f(p) for p in grid])
    idx = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    if fr.linear:
        # the interior ODE collapses; corner play runs until V_own meets U^S
        if len(idx) == 0:
            return OwnPolicy(pls, 0.5, 0.5, None)
        qb = float(brentq(f, grid[idx[0]], grid[idx[0] + 1], xtol=1e-15))
        return OwnPolicy(pls, qb, qb, None)
    if abs(vals[0]) < 1e-13:
        qb = pls
    elif len(idx) == 0:
        return OwnPolicy(pls, 0.5, 0.5, None)
    else:
        qb = float(brentq(f, grid[idx[0]], grid[idx[0] + 1], xtol=1e-15))
    sol, qs, hit = _integrate(fr, r, qb, 1.0, 0.5, [fr.gamma])
    if hit is None:
        qs = 0.5
    piece = LambdaPiece(qb, qs, lambda p: np.asarray(sol(p))[0])
    return OwnPolicy(pls, qb, qs, piece)


# ----------------------------------------------------------- envelope

@dataclass(frozen=True)
class GammaSolution:
    params: ModelParams
    frontier: GammaFrontier
    exp: bool
    own: Optional[OwnPolicy]
    opp: Optional[OppositePolicy]
    case: str  # "no-learning", "own", "own+opposite"

    # candidate values on [0, 1/2]; the right half mirrors
    def _own_left(self, p):
        par, own = self.params, self.own
        us = float(M.stationary_value(par, 0.5))
        v = np.asarray(M.u_left(par, p), dtype=float).copy()
        br = own_left_branch(par)
        m = (p > own.p_low_star) & (p <= min(own.q_b, 0.5))
        v[m] = br.value(p[m])
        if own.piece is not None:
            m = (p > own.q_b) & (p <= own.q_s)
            v[m] = interior_value(self.frontier, own.piece(p[m]), par)
        if own.q_b < 0.5:
            v[p > own.q_s] = us
        return v

    def _opp_left(self, p):
        par, opp = self.params, self.opp
        v = np.empty_like(p)
        m = p <= opp.q_low
        if np.any(m):
            anchor_v = float(interior_value(self.frontier, 0.0, par))
            br = LinearBranch.of(par, 0.0, par.lam, opp.q_low, anchor_v)
            v[m] = br.value(p[m])
        lam = opp.left(p[~m]) if opp.q_low < 0.5 else np.full((~m).sum(), self.frontier.gamma)
        v[~m] = interior_value(self.frontier, lam, par)
        return v

    def candidates(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        q = np.minimum(p, 1 - p)
        own = self._own_left(q) if self.own is not None else M.u_max(self.params, p)
        opp = self._opp_left(q) if self.opp is not None else np.full_like(p, -np.inf)
        return own, opp

    def value(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if not self.exp:
            return np.asarray(M.u_max(self.params, p), dtype=float)
        own, opp = self.candidates(p)
        if self.case == "own":
            return own
        return np.maximum(own, opp)

    def lam(self, p):
        """R-evidence rate per unit ``lam``; NaN where the DM stops."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.full(p.shape, np.nan)
        if not self.exp:
            return out
        own, opp = self.candidates(p)
        use_opp = (opp > own) if self.case != "own" else np.zeros(p.shape, bool)
        for i, x in enumerate(p):
            q = min(x, 1 - x)
            if use_opp[i]:
                out[i] = self._lam_opp(x)
                continue
            o = self.own
            if q <= o.p_low_star:
                continue
            if q <= o.q_b:
                ll = 1.0
            elif o.piece is not None and q <= o.q_s:
                ll = float(o.piece(q))
            else:
                ll = self.frontier.gamma
            out[i] = ll if x <= 0.5 else float(self.frontier.value(ll))
        return out

    def _lam_opp(self, x):
        o = self.opp
        if x <= o.q_low:
            return 0.0
        if x >= o.q_high:
            return 1.0
        return float(o.lam(x))

    def labels(self, p) -> list:
        """Branch name per belief: stop l/r, own, opposite or stationary."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        lam = self.lam(p)
        if not self.exp:
            return ["stop l" if x < M.p_hat(self.params) else "stop r" for x in p]
        own, opp = self.candidates(p)
        out = []
        for x, ll, vo, vp in zip(p, lam, own, opp):
            if np.isnan(ll):
                out.append("stop l" if x < 0.5 else "stop r")
            elif self.case != "own" and vp > vo:
                out.append("opposite")
            elif self.own.q_b < 0.5 and min(x, 1 - x) > self.own.q_s:
                out.append("stationary")
            else:
                out.append("own")
        return out

    def alpha(self, p):
        lam = self.lam(p)
        out = np.full(lam.shape, np.nan)
        m = ~np.isnan(lam)
        out[m] = self.frontier.inverse(lam[m])
        return out


def gamma_solution(fr: GammaFrontier, params: ModelParams) -> GammaSolution:
    check_symmetric(params)
    M.check_params(params)
    if not M.exp_holds(params):
        return GammaSolution(params, fr, False, None, None, "no-learning")
    own = integrate_own(fr, params)
    if fr.linear:
        opp = OppositePolicy(0.5, 0.5, None, None, float("inf"))
    else:
        opp = integrate_opposite(fr, params)
    case = "own+opposite" if own.q_b < 0.5 and own.q_s < 0.5 else "own"
    return GammaSolution(params, fr, True, own, opp, case)


def gamma_envelope(fr: GammaFrontier, params: ModelParams, p, solution: Optional[GammaSolution] = None):
    """``(value, alpha)`` of the Gamma model at beliefs ``p``."""
    sol = solution or gamma_solution(fr, params)
    return sol.value(p), sol.alpha(p)


# --------------------------------------------------------------- oracle

def gamma_family(fr: GammaFrontier, params: ModelParams, dt: float, n: int = 51) -> ExperimentFamily:
    ls = np.linspace(0.0, 1.0, n)
    G = np.asarray(fr.value(ls), dtype=float)
    return poisson_pairs(params.lam * ls, params.lam * G, dt, alpha=fr.inverse(ls))


def gamma_oracle(fr: GammaFrontier, params: ModelParams, dt: float = 1e-3, n_grid: int = 2001,
                 n_lambda: int = 51):
    return solve_infinite_horizon(params, dt=dt, n_grid=n_grid, family=gamma_family(fr, params, dt, n_lambda))
