"""Model primitives: parameters, payoffs, benchmark values and closed-form cutoffs.

Beliefs are the probability ``p`` of state R. Two conclusive news sources
exist: the L-biased source reveals R (rate ``lam * alpha``) and the R-biased
source reveals L (rate ``lam * (1 - alpha)``), where ``alpha`` is the share
of attention paid to the L-biased source.

Most formulas here are written for a general *technology*: a pair of
learning modes with Poisson rates ``(a, b)`` of R-evidence in state R and
L-evidence in state L. The baseline uses ``(lam, 0)`` and ``(0, lam)``; the
variants module supplies other pairs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ExpViolated, ValidationError

P_CLAMP = 1e-12


@dataclass(frozen=True)
class ModelParams:
    u_r_R: float
    u_l_L: float
    u_l_R: float
    u_r_L: float
    lam: float
    rho: float
    c: float

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def symmetric(self) -> bool:
        return self.u_r_R == self.u_l_L and self.u_l_R == self.u_r_L

    def as_dict(self) -> dict:
        return {
            "u_r_R": self.u_r_R, "u_l_L": self.u_l_L, "u_l_R": self.u_l_R,
            "u_r_L": self.u_r_L, "lambda": self.lam, "rho": self.rho, "c": self.c,
        }


class RegimeTag(str, enum.Enum):
    NO_LEARNING = "NoLearning"
    OWN_ONLY = "OwnOnly"
    OWN_AND_OPPOSITE = "OwnAndOpposite"


@dataclass(frozen=True)
class Technology:
    """Rates of the two learning modes plus the stationary mix.

    Mode ``hi`` seeks R-evidence (belief drifts down absent news), mode ``lo``
    seeks L-evidence. ``alpha_hi``/``alpha_lo`` are the attention shares the
    modes correspond to, ``stat_rate`` the common breakthrough rate at the
    stationary mix and ``alpha_stat`` the share that produces it.
    """

    a_hi: float
    b_hi: float
    a_lo: float
    b_lo: float
    stat_rate: float
    alpha_hi: float = 1.0
    alpha_lo: float = 0.0
    alpha_stat: float = 0.5

    @classmethod
    def baseline(cls, lam: float) -> "Technology":
        return cls(lam, 0.0, 0.0, lam, lam / 2.0)


@dataclass(frozen=True)
class CutoffSet:
    p_hat: float
    p_low_star: Optional[float]
    p_high_star: Optional[float]
    p_star: Optional[float]
    c_bar: Optional[float]
    c_underbar: Optional[float]
    p_check: Optional[float] = None
    p_low: Optional[float] = None
    p_high: Optional[float] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def validate_params(params: ModelParams) -> list[str]:
    """Return every violated invariant; an empty list means valid."""
    out = []
    vals = params.as_dict()
    for k, v in vals.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            out.append(f"{k} must be a finite real")
    if out:
        return out
    if not params.u_r_R > max(0.0, params.u_l_R):
        out.append("u_r_R > max(0,u_l_R)")
    if not params.u_l_L > max(0.0, params.u_r_L):
        out.append("u_l_L > max(0,u_r_L)")
    r_dom = params.u_r_R >= params.u_l_R and params.u_r_L >= params.u_l_L
    l_dom = params.u_l_R >= params.u_r_R and params.u_l_L >= params.u_r_L
    if r_dom or l_dom:
        out.append("no dominant action")
    if not params.lam > 0:
        out.append("lambda > 0")
    if params.rho < 0:
        out.append("rho >= 0")
    if params.c < 0:
        out.append("c >= 0")
    if not params.rho + params.c > 0:
        out.append("rho + c > 0")
    return out


def check_params(params: ModelParams) -> ModelParams:
    bad = validate_params(params)
    if bad:
        raise ValidationError(bad)
    return params


def clamp(p):
    return np.clip(p, P_CLAMP, 1.0 - P_CLAMP)


# ---------------------------------------------------------------- payoffs

def u_left(params: ModelParams, p):
    return p * params.u_l_R + (1.0 - p) * params.u_l_L


def u_right(params: ModelParams, p):
    return p * params.u_r_R + (1.0 - p) * params.u_r_L


def p_hat(params: ModelParams) -> float:
    # U_l(p) = U_r(p)
    num = params.u_l_L - params.u_r_L
    return num / (num + params.u_r_R - params.u_l_R)


def u_max(params: ModelParams, p):
    return np.maximum(u_left(params, p), u_right(params, p))


def u_max_slope(params: ModelParams, p):
    """Right derivative of U (ties at the kink resolve toward r)."""
    ph = p_hat(params)
    return np.where(np.asarray(p) >= ph, params.u_r_R - params.u_r_L,
                    params.u_l_R - params.u_l_L)


@dataclass(frozen=True)
class Payoffs:
    U_l: float
    U_r: float
    U: float
    x_star: str
    p_hat: float


def immediate_payoffs(params: ModelParams, p: float) -> Payoffs:
    ul, ur = float(u_left(params, p)), float(u_right(params, p))
    ph = p_hat(params)
    x = "r" if (ur > ul or p >= ph) else "l"
    return Payoffs(ul, ur, max(ul, ur), x, ph)


def expected_best(params: ModelParams, p):
    """Payoff from acting after learning the state: p u_r_R + (1-p) u_l_L."""
    return p * params.u_r_R + (1.0 - p) * params.u_l_L


# ------------------------------------------------------- benchmark values

def stationary_value(params: ModelParams, p, tech: Optional[Technology] = None):
    h = params.lam / 2.0 if tech is None else tech.stat_rate
    return (h * expected_best(params, p) - params.c) / (params.rho + h)


def full_attention_value(params: ModelParams, p, rate: Optional[float] = None):
    a = params.lam if rate is None else rate
    return (a * expected_best(params, p) - params.c) / (params.rho + a)


def full_attention_split(params: ModelParams, p, a: float, b: float):
    """Full attention when R-evidence and L-evidence arrive at different rates."""
    rho, c = params.rho, params.c
    return p * (a * params.u_r_R - c) / (rho + a) + (1 - p) * (b * params.u_l_L - c) / (rho + b)


@dataclass(frozen=True)
class Benchmarks:
    U_S: float
    U_FA: float
    exp_holds: bool


def benchmark_values(params: ModelParams, p: float) -> Benchmarks:
    ph = p_hat(params)
    exp = full_attention_value(params, ph) > u_max(params, ph)
    return Benchmarks(float(stationary_value(params, p)),
                      float(full_attention_value(params, p)), bool(exp))


def exp_holds(params: ModelParams, rate: Optional[float] = None) -> bool:
    ph = p_hat(params)
    return bool(full_attention_value(params, ph, rate) > u_max(params, ph))


# ---------------------------------------------------------------- cutoffs

def c_bar(params: ModelParams, rate: Optional[float] = None) -> float:
    """Largest cost at which full attention still beats acting at p_hat."""
    a = params.lam if rate is None else rate
    dr = params.u_r_R - params.u_l_R
    dl = params.u_l_L - params.u_r_L
    cross = params.u_r_R * params.u_l_L - params.u_l_R * params.u_r_L
    return max(0.0, (a * dr * dl - params.rho * cross) / (dr + dl))


def c_underbar(params: ModelParams) -> float:
    lam, rho = params.lam, params.rho
    dr = params.u_r_R - params.u_l_R
    dl = params.u_l_L - params.u_r_L
    cb = c_bar(params)
    if rho == 0:
        return min(cb, lam / (1.0 + math.e ** 2) * min(dr, dl))
    x = rho / lam
    # ((2 rho + lam)/lam)^(lam/rho) -> e^2 as rho -> 0; log form keeps it finite
    k = 1.0 + math.exp(math.log1p(2.0 * x) / x)
    t_r = (rho + lam) * dr / k - rho * params.u_r_R
    t_l = (rho + lam) * dl / k - rho * params.u_l_L
    return max(0.0, min(cb, t_r, t_l))


def classify(c: float, cb: float, cu: float) -> RegimeTag:
    if c >= cb:
        return RegimeTag.NO_LEARNING
    if c >= cu:
        return RegimeTag.OWN_ONLY
    return RegimeTag.OWN_AND_OPPOSITE


@dataclass(frozen=True)
class RegimeCutoffs:
    c_bar: float
    c_underbar: float
    regime: RegimeTag


def regime_cutoffs(params: ModelParams) -> RegimeCutoffs:
    cb, cu = c_bar(params), c_underbar(params)
    return RegimeCutoffs(cb, cu, classify(params.c, cb, cu))


def p_low_star_for(params: ModelParams, a_hi: float) -> float:
    """Smooth-pasting point of the R-seeking branch with U_l."""
    rho, c = params.rho, params.c
    return (c + rho * params.u_l_L) / (
        a_hi * (params.u_r_R - params.u_l_R) + rho * (params.u_l_L - params.u_l_R))


def p_high_star_for(params: ModelParams, b_lo: float) -> float:
    rho, c = params.rho, params.c
    return 1.0 - (c + rho * params.u_r_R) / (
        b_lo * (params.u_l_L - params.u_r_L) + rho * (params.u_r_R - params.u_r_L))


def p_star_for(params: ModelParams, a_hi: float, b_lo: float) -> float:
    """Belief where value matching and smooth pasting with U^S hold."""
    wl = b_lo * (params.c + params.rho * params.u_l_L)
    wr = a_hi * (params.c + params.rho * params.u_r_R)
    return wl / (wl + wr)


@dataclass(frozen=True)
class BoundaryBeliefs:
    p_low_star: float
    p_high_star: float
    p_star: float


def boundary_beliefs(params: ModelParams) -> BoundaryBeliefs:
    if not exp_holds(params):
        raise ExpViolated("full attention does not beat U at p_hat; no experimentation region")
    lam = params.lam
    return BoundaryBeliefs(p_low_star_for(params, lam), p_high_star_for(params, lam),
                           p_star_for(params, lam, lam))
