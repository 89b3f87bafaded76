"""Closed-form solutions of the HJB equation under a fixed learning mode.

With R-evidence arriving at rate ``a`` in state R and L-evidence at rate
``b`` in state L, a value function that keeps this mode satisfies

    c + rho V = a p (u_R - V) + b (1-p) (u_L - V) - (a-b) p (1-p) V'.

The general solution is ``z(p) + K h(p)`` with

    h(p) = p^{-(rho+b)/(a-b)} (1-p)^{(rho+a)/(a-b)}

and ``z`` a particular solution. ``z`` is linear unless ``rho = 0`` and one
rate vanishes. In that case ``z`` picks up a ``log(p/(1-p))`` term. Both
cases are coded explicitly because the linear form divides by ``rho + b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import P_CLAMP, ModelParams


def _logit(p):
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class LinearBranch:
    """Value of a fixed mode, pinned by ``V(anchor) = anchor_value``."""

    u_R: float
    u_L: float
    rho: float
    c: float
    a: float
    b: float
    anchor: float
    anchor_value: float

    @classmethod
    def of(cls, params: ModelParams, a: float, b: float, anchor: float, anchor_value: float):
        if a == b:
            raise ValueError("a stationary mode has no drift; use the stationary value")
        return cls(params.u_r_R, params.u_l_L, params.rho, params.c, float(a), float(b),
                   float(anchor), float(anchor_value))

    # -- particular solution
    def _kind(self) -> str:
        if self.rho == 0 and self.b == 0:
            return "log_hi"
        if self.rho == 0 and self.a == 0:
            return "log_lo"
        return "linear"

    def particular(self, p):
        rho, c, a, b = self.rho, self.c, self.a, self.b
        kind = self._kind()
        if kind == "log_hi":
            return self.u_R - c / a - (c / a) * (1.0 - p) * _logit(p)
        if kind == "log_lo":
            return self.u_L - c / b + (c / b) * p * _logit(p)
        return (1.0 - p) * (b * self.u_L - c) / (rho + b) + p * (a * self.u_R - c) / (rho + a)

    def particular_slope(self, p):
        rho, c, a, b = self.rho, self.c, self.a, self.b
        kind = self._kind()
        if kind == "log_hi":
            return (c / a) * (_logit(p) - 1.0 / p)
        if kind == "log_lo":
            return (c / b) * (_logit(p) + 1.0 / (1.0 - p))
        return (a * self.u_R - c) / (rho + a) - (b * self.u_L - c) / (rho + b)

    # -- homogeneous part, log scale
    def log_h(self, p):
        d = self.a - self.b
        return (-(self.rho + self.b) * np.log(p) + (self.rho + self.a) * np.log1p(-p)) / d

    def dlog_h(self, p):
        d = self.a - self.b
        return (-(self.rho + self.b) / p - (self.rho + self.a) / (1.0 - p)) / d

    def _k_term(self, p):
        x = min(max(self.anchor, P_CLAMP), 1 - P_CLAMP)
        gap = self.anchor_value - self.particular(x)
        return gap * np.exp(self.log_h(p) - self.log_h(x))

    def value(self, p):
        p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1 - P_CLAMP)
        return self.particular(p) + self._k_term(p)

    def slope(self, p):
        p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1 - P_CLAMP)
        return self.particular_slope(p) + self._k_term(p) * self.dlog_h(p)

    def curvature(self, p):
        """Second derivative, from the ODE differentiated once."""
        p = np.clip(np.asarray(p, dtype=float), P_CLAMP, 1 - P_CLAMP)
        h = 1e-5
        return (self.slope(p + h) - self.slope(p - h)) / (2 * h)

    def residual(self, p, v=None, dv=None):
        """ODE residual ``c + rho V - RHS``; exact solutions give rounding error."""
        p = np.asarray(p, dtype=float)
        v = self.value(p) if v is None else v
        dv = self.slope(p) if dv is None else dv
        rhs = (self.a * p * (self.u_R - v) + self.b * (1 - p) * (self.u_L - v)
               - (self.a - self.b) * p * (1 - p) * dv)
        return self.c + self.rho * v - rhs


def mode_slope(params: ModelParams, a: float, b: float, p, v):
    """Solve the fixed-mode ODE for ``V'`` given ``V`` at ``p``."""
    rhs = (a * p * (params.u_r_R - v) + b * (1 - p) * (params.u_l_L - v)
           - params.c - params.rho * v)
    return rhs / ((a - b) * p * (1 - p))


def mode_flow(params: ModelParams, a: float, b: float, p, v, dv):
    """The flow payoff F of a mode: breakthrough terms plus drift times V'."""
    return (a * p * (params.u_r_R - v) + b * (1 - p) * (params.u_l_L - v)
            - (a - b) * p * (1 - p) * dv)
