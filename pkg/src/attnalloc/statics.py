"""Finite-difference checks of the comparative statics of the baseline cutoffs.

Each claim is a (quantity, parameter, expected sign) triple. The derivative
is a central difference on the closed forms (or on the bisected switch
points), and a claim is violated when the difference has the wrong sign
beyond ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import model as M
from .model import ModelParams, RegimeTag
from .value import solve_switch_points

FIELDS = {"c": "c", "rho": "rho", "uRR": "u_r_R", "uLL": "u_l_L", "uLR": "u_l_R", "uRL": "u_r_L"}


@dataclass(frozen=True)
class Claim:
    quantity: str
    param: str
    sign: int  # +1 increasing, -1 decreasing
    regime: tuple = ()  # regimes where it applies; empty = whenever learning happens
    when: Callable = None  # extra precondition on params


def _quantity(p: ModelParams, name: str) -> float:
    if name == "p_low_star":
        return M.p_low_star_for(p, p.lam)
    if name == "p_high_star":
        return M.p_high_star_for(p, p.lam)
    if name == "c_bar":
        return M.c_bar(p)
    if name == "c_underbar":
        return M.c_underbar(p)
    if name == "p_check":
        return solve_switch_points(p, regime=RegimeTag.OWN_ONLY)
    lo, hi = solve_switch_points(p, regime=RegimeTag.OWN_AND_OPPOSITE)
    return lo if name == "p_low" else hi


def _strong_payoffs(p):
    return p.u_r_R > abs(p.u_l_R) and p.u_l_L > abs(p.u_r_L)


LEARN = (RegimeTag.OWN_ONLY, RegimeTag.OWN_AND_OPPOSITE)
CLAIMS = (
    # experimentation region grows as c or rho falls
    Claim("p_low_star", "c", +1, LEARN), Claim("p_high_star", "c", -1, LEARN),
    Claim("p_low_star", "rho", +1, LEARN), Claim("p_high_star", "rho", -1, LEARN),
    # ... and as the mistake payoffs fall
    Claim("p_low_star", "uLR", +1, LEARN), Claim("p_high_star", "uRL", -1, LEARN),
    # shifts down with u_r_R, up with u_l_L
    Claim("p_low_star", "uRR", -1, LEARN), Claim("p_high_star", "uRR", -1, LEARN),
    Claim("p_low_star", "uLL", +1, LEARN), Claim("p_high_star", "uLL", +1, LEARN),
    # own-biased switch point
    Claim("p_check", "uLR", +1, (RegimeTag.OWN_ONLY,)),
    Claim("p_check", "uRL", -1, (RegimeTag.OWN_ONLY,)),
    # opposite-biased region expands as mistakes get worse
    Claim("p_low", "uLR", +1, (RegimeTag.OWN_AND_OPPOSITE,)),
    Claim("p_low", "uRL", +1, (RegimeTag.OWN_AND_OPPOSITE,)),
    Claim("p_high", "uLR", -1, (RegimeTag.OWN_AND_OPPOSITE,)),
    Claim("p_high", "uRL", -1, (RegimeTag.OWN_AND_OPPOSITE,)),
    Claim("c_underbar", "uLR", -1, LEARN), Claim("c_underbar", "uRL", -1, LEARN),
    # discounting vs flow cost, sufficient condition for the lower cutoff
    Claim("c_underbar", "rho", -1, LEARN,
          lambda p: _strong_payoffs(p) and M.c_underbar(p) > 0),
)


def fd(p: ModelParams, quantity: str, param: str, h: float = 1e-6) -> float:
    f = FIELDS[param]
    x = getattr(p, f)
    lo = max(x - h, 0.0) if param in ("c", "rho") else x - h
    up, dn = p.replace(**{f: x + h}), p.replace(**{f: lo})
    return (_quantity(up, quantity) - _quantity(dn, quantity)) / (x + h - lo)


def _stable(p: ModelParams, param: str, h: float) -> bool:
    """Regime unchanged under the perturbation used by :func:`fd`."""
    f = FIELDS[param]
    x = getattr(p, f)
    tags = set()
    for y in (x - h, x + h):
        if param in ("c", "rho"):
            y = max(y, 0.0)
        q = p.replace(**{f: y})
        if M.validate_params(q):
            return False
        tags.add(M.regime_cutoffs(q).regime)
    return tags == {M.regime_cutoffs(p).regime}


def check_claims(p: ModelParams, h: float = 1e-6, tol: float = 1e-7) -> tuple:
    """Return ``(n_checked, violations)`` for one parameter draw."""
    regime = M.regime_cutoffs(p).regime
    checked, bad = 0, []
    for cl in CLAIMS:
        if regime not in cl.regime or (cl.when is not None and not cl.when(p)):
            continue
        if not _stable(p, cl.param, h):
            continue
        d = fd(p, cl.quantity, cl.param, h)
        checked += 1
        if d * cl.sign < -tol:
            bad.append(f"d{cl.quantity}/d{cl.param}={d:.3g}, expected sign {cl.sign:+d}")
    # c_bar falls with rho exactly when U is positive everywhere
    if M.c_bar(p) > 0 and _stable(p, "rho", h):
        u_min = min(p.u_l_L, p.u_r_R, float(M.u_max(p, M.p_hat(p))))
        if abs(u_min) > 1e-6:
            d = fd(p, "c_bar", "rho", h)
            checked += 1
            if (d < 0) != (u_min > 0):
                bad.append(f"dc_bar/drho={d:.3g} but min U={u_min:.3g}")
    return checked, bad

