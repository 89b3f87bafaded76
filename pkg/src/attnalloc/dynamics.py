"""Belief paths, first-passage times, delay/accuracy and Monte-Carlo paths.

Absent news the log-odds of R move linearly: ``d/dt logit(p) = -lam (2 alpha - 1)``.
Every policy here is piecewise constant in the belief, so the no-news path
is a finite list of constant-attention segments whose endpoints are the
policy's switch beliefs. Breakthroughs arrive at rate ``lam alpha`` in
state R and ``lam (1 - alpha)`` in state L. Their integrated hazard is
piecewise linear in time, which is what the simulator inverts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import model as M
from .errors import Unreachable
from .model import ModelParams
from .value import BranchKind, Decision, RegimeSolution

MAX_SEGMENTS = 64


def _logit(p):
    return math.log(p) - math.log1p(-p)


def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def belief_after(params: ModelParams, p0: float, alpha: float, t: float) -> float:
    """No-news belief after time ``t`` under constant attention."""
    if p0 <= 0.0 or p0 >= 1.0 or t == 0:
        return float(p0)
    return _expit(_logit(p0) - params.lam * (2 * alpha - 1) * t)


def drift(params: ModelParams, p, alpha):
    return -params.lam * (2 * np.asarray(alpha) - 1) * p * (1 - p)


def first_passage_time(params: ModelParams, p0: float, target: float, alpha: float) -> float:
    """Time for the no-news belief to move from ``p0`` to ``target``."""
    if p0 == target:
        return 0.0
    if not (0 < p0 < 1 and 0 < target < 1):
        raise Unreachable("certain beliefs never move")
    speed = -params.lam * (2 * alpha - 1)
    gap = _logit(target) - _logit(p0)
    if speed == 0 or gap / speed < 0:
        raise Unreachable(f"alpha={alpha} moves the belief away from {target}")
    return gap / speed


# --------------------------------------------------------------- policies

@dataclass(frozen=True)
class PiecewisePolicy:
    """Attention as a step function of the belief.

    ``breaks`` are interior switch beliefs. ``alphas[i]`` applies on the
    i-th open interval, ``at_breaks[i]`` exactly at ``breaks[i]`` (defaults
    to the interval on the right). ``None`` means stop, with the action
    taken from ``x_star``.
    """

    breaks: tuple = ()
    alphas: tuple = (0.5,)
    at_breaks: Optional[tuple] = None

    def decision(self, p: float, params: ModelParams) -> Decision:
        for i, b in enumerate(self.breaks):
            if p == b:
                a = self.at_breaks[i] if self.at_breaks else self.alphas[i + 1]
                return _decision(a, p, params)
            if p < b:
                return _decision(self.alphas[i], p, params)
        return _decision(self.alphas[-1], p, params)

    def edges(self) -> list:
        return list(self.breaks)


def _decision(alpha, p, params):
    if alpha is None:
        x = M.immediate_payoffs(params, p).x_star
        return Decision(None, x, BranchKind.STOP_R if x == "r" else BranchKind.STOP_L)
    return Decision(float(alpha), None, BranchKind.STATIONARY)


def constant_policy(alpha: float) -> PiecewisePolicy:
    return PiecewisePolicy((), (float(alpha),))


PolicyLike = Union[RegimeSolution, PiecewisePolicy, float]


def _as_policy(policy: PolicyLike):
    if isinstance(policy, (int, float)):
        return constant_policy(float(policy))
    return policy


def _decide(policy, p, params) -> Decision:
    if isinstance(policy, RegimeSolution):
        return policy.decision(p)
    return policy.decision(p, params)


def _edges(policy) -> list:
    if isinstance(policy, RegimeSolution):
        pts = set()
        for r in policy.regions:
            pts.update((r.lo, r.hi))
        return sorted(x for x in pts if 0 < x < 1)
    return policy.edges()


# ------------------------------------------------------------ path object

@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float  # may be inf
    alpha: float
    p0: float
    p1: float  # belief at t1 (limit if t1 is inf)

    def belief(self, params, t):
        return belief_after(params, self.p0, self.alpha, t - self.t0)


@dataclass(frozen=True)
class NoNewsPath:
    """The deterministic belief path conditional on no breakthrough."""

    p0: float
    segments: tuple
    stop_time: float  # inf if the path never stops
    stop_action: Optional[str]
    stop_belief: Optional[float]

    def belief(self, params: ModelParams, t: float) -> float:
        if not self.segments:
            return self.p0
        if t >= self.stop_time:
            return self.stop_belief
        for s in self.segments:
            if t <= s.t1:
                return s.belief(params, t)
        return self.segments[-1].p1

    def hazards(self, params: ModelParams):
        """Per-segment (duration, rate in R, rate in L)."""
        lam = params.lam
        return [(s.t1 - s.t0, lam * s.alpha, lam * (1 - s.alpha)) for s in self.segments]

    def integrated_hazard(self, params: ModelParams, t, state: str):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        k = 1 if state == "R" else 2
        for s, hz in zip(self.segments, self.hazards(params)):
            span = np.clip(t - s.t0, 0.0, hz[0])
            out = out + hz[k] * span
        return out


def no_news_path(params: ModelParams, policy: PolicyLike, p0: float) -> NoNewsPath:
    """Follow the policy from ``p0`` until it stops or settles forever.

    Switch beliefs are reached analytically. A belief pushed back toward
    where it came from (a chattering switch) is held there with balanced
    attention, the limit of infinitely fast alternation.
    """
    policy = _as_policy(policy)
    edges = _edges(policy)
    p, t = float(p0), 0.0
    segs: list = []
    came_from = 0
    for _ in range(MAX_SEGMENTS):
        d = _decide(policy, p, params)
        if d.stop:
            return NoNewsPath(p0, tuple(segs), t, d.action, p)
        a = d.alpha
        direction = 0 if (a == 0.5 or p in (0.0, 1.0)) else (-1 if a > 0.5 else 1)
        if direction != 0 and came_from != 0 and direction == -came_from:
            a, direction = 0.5, 0
        if direction == 0:
            segs.append(Segment(t, math.inf, a, p, p))
            return NoNewsPath(p0, tuple(segs), math.inf, None, None)
        ahead = [e for e in edges if (e < p if direction < 0 else e > p)]
        if not ahead:
            limit = 0.0 if direction < 0 else 1.0
            segs.append(Segment(t, math.inf, a, p, limit))
            return NoNewsPath(p0, tuple(segs), math.inf, None, None)
        nxt = max(ahead) if direction < 0 else min(ahead)
        tau = first_passage_time(params, p, nxt, a)
        segs.append(Segment(t, t + tau, a, p, nxt))
        t += tau
        p = nxt
        came_from = direction
    raise RuntimeError("policy switches too often")


def drift_and_path(params: ModelParams, alpha_policy: PolicyLike, p0: float, t: float) -> float:
    """No-news belief at time ``t`` under a piecewise-constant policy."""
    return no_news_path(params, alpha_policy, p0).belief(params, t)


# ---------------------------------------------------- analytic outcomes

@dataclass(frozen=True)
class Outcomes:
    expected_delay: float
    mistake_prob: float


def _seg_survival_integral(h0, h, dur):
    """int_0^dur exp(-(h0 + h s)) ds."""
    if h == 0:
        return math.exp(-h0) * dur
    if math.isinf(dur):
        return math.exp(-h0) / h
    return math.exp(-h0) * (-math.expm1(-h * dur)) / h


def analytic_outcomes(params: ModelParams, solution: PolicyLike, p0: float) -> Outcomes:
    """Expected decision time and probability of a wrong action.

    Both follow exactly from the no-news path: the decision time survives
    each segment with probability ``p0 exp(-H_R) + (1-p0) exp(-H_L)``, and a
    mistake happens only when the path stops without news while the other
    state holds.
    """
    path = no_news_path(params, solution, p0)
    delay = 0.0
    hr = hl = 0.0
    for (dur, ar, al) in path.hazards(params):
        if p0 > 0:
            delay += p0 * _seg_survival_integral(hr, ar, dur)
        if p0 < 1:
            delay += (1 - p0) * _seg_survival_integral(hl, al, dur)
        if math.isinf(dur):
            if (p0 > 0 and ar == 0) or (p0 < 1 and al == 0):
                delay = math.inf
            break
        hr += ar * dur
        hl += al * dur
    mistake = 0.0
    if math.isfinite(path.stop_time):
        if path.stop_action == "r":
            mistake = (1 - p0) * math.exp(-hl)
        else:
            mistake = p0 * math.exp(-hr)
    return Outcomes(delay, mistake)


def delay_ode_rk4(params: ModelParams, solution: RegimeSolution, p: float, step: float = 1e-4) -> float:
    """Expected delay in the opposite-biased region from its ODEs.

    Integrates from ``tau(p*) = 2/lam`` outward with classical RK4, using
    the alpha = 1 equation above p* and the alpha = 0 equation below it.
    """
    lam = params.lam
    ps = solution.cutoffs.p_star
    if solution.cutoffs.p_low is None:
        raise ValueError("no opposite-biased region")
    if p > ps:
        f = lambda x, tau: (1 - lam * x * tau) / (x * (1 - x) * lam)
    else:
        f = lambda x, tau: (lam * (1 - x) * tau - 1) / (x * (1 - x) * lam)
    n = max(1, int(math.ceil(abs(p - ps) / step)))
    h = (p - ps) / n
    x, tau = ps, 2.0 / lam
    for _ in range(n):
        k1 = f(x, tau)
        k2 = f(x + h / 2, tau + h / 2 * k1)
        k3 = f(x + h / 2, tau + h / 2 * k2)
        k4 = f(x + h, tau + h * k3)
        tau += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
    return tau


# ------------------------------------------------------------ Monte-Carlo

def path_uniforms(seed: int, start: int, stop: int, k: int = 2) -> np.ndarray:
    """Uniform draws for paths ``start..stop-1``, ``k`` per path.

    Path ``i`` always reads stream positions ``k*i .. k*i+k-1`` of a PCG64
    generator seeded with ``seed``, so its draws do not depend on how the
    paths are chunked or ordered.
    """
    bg = np.random.PCG64(seed)
    bg.advance(k * start)
    return np.random.Generator(bg).random(k * (stop - start)).reshape(-1, k)


def _invert_hazard(path: NoNewsPath, params: ModelParams, e: np.ndarray, state: str):
    """Breakthrough times for exponential draws ``e`` (inf if none)."""
    k = 1 if state == "R" else 2
    out = np.full(e.shape, np.inf)
    left = e.copy()
    done = np.zeros(e.shape, dtype=bool)
    for s, hz in zip(path.segments, path.hazards(params)):
        dur, rate = hz[0], hz[k]
        cap = rate * dur if math.isfinite(dur) else (math.inf if rate > 0 else 0.0)
        hit = (~done) & (left <= cap)
        if rate > 0:
            out[hit] = s.t0 + left[hit] / rate
        done |= hit
        left = np.where(done, left, left - cap)
    return out


@dataclass
class MonteCarloResult:
    n_paths: int
    mean_delay: float
    se_delay: float
    mistake_rate: float
    se_mistake: float
    value_estimate: float
    se_value: float
    states: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)  # 1 for r, 0 for l, -1 undecided
    breakthrough: np.ndarray = field(repr=False)
    payoffs: np.ndarray = field(repr=False)
    path: NoNewsPath = field(repr=False)
    params: ModelParams = field(repr=False)

    def posterior_at(self, t: float) -> np.ndarray:
        """Belief of every path at time ``t``; news fixes it at 0 or 1."""
        base = self.path.belief(self.params, t)
        out = np.full(self.n_paths, base)
        hit = self.breakthrough & (self.times <= t)
        out[hit] = self.states[hit].astype(float)
        return out


def _se(x):
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def monte_carlo(params: ModelParams, solution: PolicyLike, p0: float, n_paths: int,
                seed: int = 0) -> MonteCarloResult:
    if n_paths < 1:
        raise ValueError("n_paths >= 1")
    path = no_news_path(params, solution, p0)
    u = path_uniforms(seed, 0, n_paths)
    state_R = u[:, 0] < p0
    e = -np.log1p(-u[:, 1])
    t_news = np.where(state_R, _invert_hazard(path, params, e, "R"),
                      _invert_hazard(path, params, e, "L"))
    news = t_news < path.stop_time
    times = np.where(news, t_news, path.stop_time)
    stop_r = 1 if path.stop_action == "r" else 0
    actions = np.where(news, state_R.astype(int), stop_r if math.isfinite(path.stop_time) else -1)
    decided = actions >= 0
    correct = decided & (actions == state_R.astype(int))
    mistakes = decided & ~correct
    uR = np.where(actions == 1, params.u_r_R, params.u_l_R)
    uL = np.where(actions == 1, params.u_r_L, params.u_l_L)
    reward = np.where(state_R, uR, uL)
    rho, c = params.rho, params.c
    with np.errstate(invalid="ignore", over="ignore"):
        if rho > 0:
            pay = np.exp(-rho * times) * reward - c * (-np.expm1(-rho * times)) / rho
        else:
            pay = reward - c * times
    pay = np.where(decided, pay, -np.inf if c > 0 else 0.0)
    return MonteCarloResult(
        n_paths, float(times.mean()), _se(times), float(mistakes.mean()), _se(mistakes.astype(float)),
        float(pay.mean()), _se(pay), state_R, times, actions, news, pay, path, params)
