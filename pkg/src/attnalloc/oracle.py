"""Discrete-time dynamic programming oracle on a belief grid.

Each period of length ``dt`` the decision maker either acts or pays
``c * dt`` and runs one experiment. An experiment is a finite signal
structure given by its likelihoods in the two states. The binary family
``(a, b)`` with ``a + b = 1 + lam * dt`` spans the frontier between the two
conclusive corners: ``a = 1`` reveals R for sure on an R-signal (it is the
L-biased source, attention one) and ``a = lam * dt`` reveals L on an L-signal.

Continuation values off the grid are linear interpolants, which keeps them
convex when the grid values are convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import DegenerateSignal
from .model import ModelParams


@dataclass(frozen=True)
class Experiment:
    a: float
    b: float
    dt: float

    def validate(self, lam: float) -> list[str]:
        out = []
        if not (0 <= self.a <= 1 and 0 <= self.b <= 1):
            out.append("a, b in [0,1]")
        if not (1 - 1e-12 <= self.a + self.b <= 1 + lam * self.dt + 1e-12):
            out.append("1 <= a + b <= 1 + lam dt")
        if not self.dt * lam < 1:
            out.append("dt < 1/lam")
        return out


@dataclass(frozen=True)
class SignalPosteriors:
    q_R: float
    prob_R: float
    q_L: float
    prob_L: float


def experiment_posteriors(p: float, e: Experiment, lam: float) -> SignalPosteriors:
    """Posteriors after the R- and L-signal of a binary experiment.

    Raises :class:`DegenerateSignal` if a signal has probability zero; the
    caller should skip that branch.
    """
    prob_R = p * e.b + (1 - p) * (1 - e.a)
    prob_L = p * (1 - e.b) + (1 - p) * e.a
    if prob_R <= 0 or prob_L <= 0:
        raise DegenerateSignal("a signal has zero probability")
    return SignalPosteriors(p * e.b / prob_R, prob_R, p * (1 - e.b) / prob_L, prob_L)


# -------------------------------------------------------------- families

@dataclass(frozen=True)
class ExperimentFamily:
    """K experiments with S signals each: likelihood arrays of shape (K, S)."""

    lik_R: np.ndarray
    lik_L: np.ndarray
    labels: tuple
    alpha: np.ndarray  # attention share each experiment stands for (NaN if none)

    @property
    def size(self) -> int:
        return self.lik_R.shape[0]


def binary_frontier(lam: float, dt: float, n_a: int = 201) -> ExperimentFamily:
    a = np.linspace(lam * dt, 1.0, n_a)
    b = 1.0 + lam * dt - a
    # signals: (R, L)
    lik_R = np.stack([b, 1 - b], axis=1)
    lik_L = np.stack([1 - a, a], axis=1)
    alpha = np.where(np.isclose(a, 1.0), 1.0, np.where(np.isclose(a, lam * dt), 0.0, np.nan))
    labels = tuple(f"a={x:.6g}" for x in a)
    return ExperimentFamily(lik_R, lik_L, labels, alpha)


def binary_interior(lam: float, dt: float, n: int = 101) -> ExperimentFamily:
    """Experiments strictly inside the constraint set (a + b < 1 + lam dt)."""
    pts = []
    for a in np.linspace(0.0, 1.0, n):
        for b in np.linspace(0.0, 1.0, n):
            if 1.0 <= a + b < 1.0 + lam * dt - 1e-12:
                pts.append((a, b))
    a, b = np.array(pts).T
    lik_R = np.stack([b, 1 - b], axis=1)
    lik_L = np.stack([1 - a, a], axis=1)
    return ExperimentFamily(lik_R, lik_L, tuple(f"a={x:.4g},b={y:.4g}" for x, y in pts),
                            np.full(len(pts), np.nan))


def poisson_pairs(rate_R: np.ndarray, rate_L: np.ndarray, dt: float, alpha=None) -> ExperimentFamily:
    """Per-period versions of conclusive Poisson pairs.

    Signals are (R-news, L-news, nothing); R-news arrives with probability
    ``rate_R dt`` in state R only and L-news with ``rate_L dt`` in state L only.
    """
    rate_R, rate_L = np.asarray(rate_R, float), np.asarray(rate_L, float)
    z = np.zeros_like(rate_R)
    lik_R = np.stack([rate_R * dt, z, 1 - rate_R * dt], axis=1)
    lik_L = np.stack([z, rate_L * dt, 1 - rate_L * dt], axis=1)
    labels = tuple(f"R={x:.6g},L={y:.6g}" for x, y in zip(rate_R, rate_L))
    al = np.full(rate_R.shape, np.nan) if alpha is None else np.asarray(alpha, float)
    return ExperimentFamily(lik_R, lik_L, labels, al)


def technology_family(tech, dt: float, n: int = 51) -> ExperimentFamily:
    """Mixtures of a linear technology's two modes, as Poisson pairs."""
    w = np.linspace(0.0, 1.0, n)
    rate_R = w * tech.a_hi + (1 - w) * tech.a_lo
    rate_L = w * tech.b_hi + (1 - w) * tech.b_lo
    return poisson_pairs(rate_R, rate_L, dt, alpha=w * tech.alpha_hi + (1 - w) * tech.alpha_lo)


# -------------------------------------------------------------- backups

def stop_actions(params: ModelParams, extra: Sequence = ()) -> list:
    """Stopping payoffs as (name, u_R, u_L); extra entries are middle actions."""
    acts = [("l", params.u_l_R, params.u_l_L), ("r", params.u_r_R, params.u_r_L)]
    for i, m in enumerate(extra):
        acts.append((f"m{i}", m.u_m_R, m.u_m_L))
    return acts


def stop_value(actions, p):
    vals = np.stack([p * uR + (1 - p) * uL for _, uR, uL in actions])
    return vals.max(axis=0), vals.argmax(axis=0)


def _interp_weights(q, n):
    x = np.clip(q, 0.0, 1.0) * (n - 1)
    j = np.minimum(np.floor(x).astype(np.int64), n - 2)
    w = x - j
    return j, w


@dataclass
class Backup:
    value: np.ndarray
    choice: np.ndarray  # >= 0 experiment index, < 0 means stop with action -1-choice
    exp_value: np.ndarray
    stop_value: np.ndarray


def _continuation(grid, cont, q):
    if callable(cont):
        return cont(q)
    return np.interp(q, grid, cont)


def experiment_values(params: ModelParams, dt: float, grid: np.ndarray, cont,
                      family: ExperimentFamily):
    """One-step objective of every experiment at every grid belief, shape (N, K)."""
    p = grid[:, None, None]
    num_R = p * family.lik_R[None]
    prob = num_R + (1 - p) * family.lik_L[None]
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(prob > 0, num_R / np.where(prob > 0, prob, 1.0), 0.0)
    vals = _continuation(grid, cont, q.reshape(-1)).reshape(q.shape)
    ev = (prob * vals).sum(axis=2)
    return -params.c * dt + math.exp(-params.rho * dt) * ev


def bellman_backup(params: ModelParams, dt: float, grid: np.ndarray, cont,
                   family: Optional[ExperimentFamily] = None, actions=None) -> Backup:
    """Max over stopping and experimenting for every grid belief.

    ``cont`` is either grid values (linearly interpolated) or a callable.
    Stopping wins ties, so an experiment is recorded only when it strictly
    helps.
    """
    family = binary_frontier(params.lam, dt) if family is None else family
    actions = stop_actions(params) if actions is None else actions
    ev = experiment_values(params, dt, grid, cont, family)
    best_k = ev.argmax(axis=1)
    best = ev[np.arange(len(grid)), best_k]
    sv, sa = stop_value(actions, grid)
    go = best > sv
    return Backup(np.where(go, best, sv), np.where(go, best_k, -1 - sa), best, sv)


@dataclass
class DiscreteDP:
    grid: np.ndarray
    dt: float
    values: list  # values[k] with k+1 periods remaining (last entry is the first period)
    choices: list
    family: ExperimentFamily = field(repr=False)
    actions: list = field(repr=False)
    iterations: int = 0
    residual: float = 0.0

    @property
    def value(self) -> np.ndarray:
        return self.values[-1]

    @property
    def choice(self) -> np.ndarray:
        return self.choices[-1]

    def labels(self, choice=None) -> list:
        """Readable choice per cell: 'stop:x', 'sigma_L', 'sigma_R' or an experiment label."""
        ch = self.choice if choice is None else choice
        out = []
        for k in ch:
            if k < 0:
                out.append("stop:" + self.actions[-1 - k][0])
            else:
                a = self.family.alpha[k]
                out.append("sigma_L" if a == 1.0 else "sigma_R" if a == 0.0 else self.family.labels[k])
        return out

    def alpha(self) -> np.ndarray:
        """Attention implied by the chosen corner, NaN when stopping."""
        ch = self.choice
        al = np.full(ch.shape, np.nan)
        m = ch >= 0
        al[m] = self.family.alpha[ch[m]]
        return al


def solve_finite_horizon(params: ModelParams, dt: float, n_periods: int, n_grid: int = 2001,
                         family: Optional[ExperimentFamily] = None, actions=None) -> DiscreteDP:
    """Backward induction from the terminal stopping value."""
    if n_periods < 1:
        raise ValueError("n_periods >= 1")
    grid = np.linspace(0.0, 1.0, n_grid)
    family = binary_frontier(params.lam, dt) if family is None else family
    actions = stop_actions(params) if actions is None else actions
    cont, _ = stop_value(actions, grid)
    values, choices = [], []
    for _ in range(n_periods):
        bk = bellman_backup(params, dt, grid, cont, family, actions)
        values.append(bk.value)
        choices.append(bk.choice)
        cont = bk.value
    return DiscreteDP(grid, dt, values, choices, family, actions, n_periods)


def _evaluate_policy(params, dt, grid, family, actions, choice):
    """Exact value of a stationary grid policy (sparse linear solve)."""
    n = len(grid)
    beta = math.exp(-params.rho * dt)
    sv, _ = stop_value(actions, grid)
    rows, cols, data = [], [], []
    rhs = np.empty(n)
    exp_cells = np.flatnonzero(choice >= 0)
    stop_cells = np.flatnonzero(choice < 0)
    rows.append(stop_cells)
    cols.append(stop_cells)
    data.append(np.ones(len(stop_cells)))
    rhs[stop_cells] = sv[stop_cells]
    if len(exp_cells):
        k = choice[exp_cells]
        p = grid[exp_cells][:, None]
        num = p * family.lik_R[k]
        prob = num + (1 - p) * family.lik_L[k]
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(prob > 0, num / np.where(prob > 0, prob, 1.0), 0.0)
        j, w = _interp_weights(q, n)
        r = np.repeat(exp_cells[:, None], q.shape[1], axis=1)
        rows += [exp_cells, r.ravel(), r.ravel()]
        cols += [exp_cells, j.ravel(), (j + 1).ravel()]
        data += [np.ones(len(exp_cells)), (-beta * prob * (1 - w)).ravel(), (-beta * prob * w).ravel()]
        rhs[exp_cells] = -params.c * dt
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return spsolve(A.tocsc(), rhs)


def solve_infinite_horizon(params: ModelParams, dt: float = 1e-3, n_grid: int = 2001,
                           family: Optional[ExperimentFamily] = None, actions=None,
                           tol: float = 1e-12, max_iter: int = 500) -> DiscreteDP:
    """Stationary fixpoint of the Bellman operator.

    Greedy improvement alternates with exact policy evaluation (a sparse
    solve) until one more backup moves no grid value by more than ``tol``.
    The result is the fixpoint plain value iteration converges to, reached
    in far fewer sweeps when ``rho`` is small.
    """
    grid = np.linspace(0.0, 1.0, n_grid)
    family = binary_frontier(params.lam, dt) if family is None else family
    actions = stop_actions(params) if actions is None else actions
    v, _ = stop_value(actions, grid)
    bk = bellman_backup(params, dt, grid, v, family, actions)
    it, res = 0, np.inf
    while it < max_iter:
        it += 1
        v = _evaluate_policy(params, dt, grid, family, actions, bk.choice)
        bk = bellman_backup(params, dt, grid, v, family, actions)
        res = float(np.max(np.abs(bk.value - v)))
        if res <= tol:
            break
    return DiscreteDP(grid, dt, [bk.value], [bk.choice], family, actions, it, res)


# ---------------------------------------------------- corner dominance

@dataclass(frozen=True)
class CornerCheck:
    best_corner_value: float
    best_interior_value: float
    dominated: bool
    best_interior_a: float


def corner_dominance_check(params: ModelParams, dt: float, continuation: Callable, p: float,
                           n_a: int = 2001, tol: float = 1e-10) -> CornerCheck:
    """Compare the frontier's interior experiments with its two corners."""
    fam = binary_frontier(params.lam, dt, n_a)
    ev = experiment_values(params, dt, np.array([float(p)]), continuation, fam)[0]
    corners = max(ev[0], ev[-1])
    inner = ev[1:-1]
    k = int(inner.argmax())
    a = params.lam * dt + (k + 1) * (1 - params.lam * dt) / (n_a - 1)
    return CornerCheck(float(corners), float(inner[k]), bool(inner[k] <= corners + tol), float(a))


# ------------------------------------------------------ two-period table

@dataclass(frozen=True)
class TwoPeriodTable:
    experiment_lo: float
    own_lo_hi: float
    own_hi_lo: float
    experiment_hi: float


def _runs(mask, grid):
    out, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        if not m and start is not None:
            out.append((grid[start], grid[i - 1]))
            start = None
    if start is not None:
        out.append((grid[start], grid[-1]))
    return out


def two_period_thresholds(params: ModelParams, dt: float = 1.0, n_grid: int = 20001) -> TwoPeriodTable:
    """First-period thresholds of the two-period problem.

    Own-biased means sigma_R above 1/2 and sigma_L below (the source biased
    toward the currently likely state). Assumes symmetric payoffs.
    """
    fam = binary_frontier(params.lam, dt, 2)
    dp = solve_finite_horizon(params, dt, 2, n_grid, fam)
    g, al = dp.grid, dp.alpha()
    learn = ~np.isnan(al)
    runs = _runs(learn, g)
    lo, hi = runs[0][0], runs[-1][1]
    own = learn & (((g < 0.5) & (al == 1.0)) | ((g > 0.5) & (al == 0.0)))
    own_runs = _runs(own, g)
    return TwoPeriodTable(float(lo), float(own_runs[0][1]), float(own_runs[-1][0]), float(hi))
