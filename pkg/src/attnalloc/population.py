"""Population of voters following the optimal policy under a fixed true state.

A voter's no-news path depends only on the prior, and every policy region
flows monotonically toward one endpoint. The time-``t`` state of the whole
population therefore has a closed form in the prior. The simulator never
steps in time. It evaluates that form at each snapshot time, integrating
survival weights over prior cells by Gauss-Legendre quadrature. Each
quadrature weight is split between "still here", "arrived at the
boundary" and "jumped to the revealed state", so mass is conserved to
rounding.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .dynamics import no_news_path
from .errors import EmptyHalf, InvalidSpec
from .value import RegimeSolution

GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(8)

MEDIA = ("L-outlet", "R-outlet", "multi-home", "none")


def _media_of(alpha) -> str:
    if alpha is None:
        return "none"
    if alpha == 0.5:
        return "multi-home"
    return "L-outlet" if alpha > 0.5 else "R-outlet"


# ------------------------------------------------------------------ measure

@dataclass(frozen=True)
class DensityPiece:
    """Piecewise-linear density on ``x`` with exact cell masses ``m``.

    On each cell the density is the linear interpolant of ``f`` rescaled so
    that it integrates to ``m``. The rescale factor is 1 up to the
    quadrature error of the advected shape.
    """

    x: np.ndarray
    f: np.ndarray
    m: np.ndarray
    media: str = "none"

    @property
    def mass(self) -> float:
        return float(self.m.sum())

    def _scale(self):
        tr = 0.5 * (self.f[1:] + self.f[:-1]) * np.diff(self.x)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tr > 0, self.m / np.where(tr > 0, tr, 1.0), 0.0)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        s = self._scale()
        for i in range(len(self.m)):
            lo, hi = self.x[i], self.x[i + 1]
            if hi <= lo:
                continue
            msk = (y >= lo) & (y < hi)
            out[msk] = s[i] * np.interp(y[msk], [lo, hi], [self.f[i], self.f[i + 1]])
        return out

    def mass_below(self, y: float, lo: float = -np.inf) -> float:
        """Mass on ``[lo, y]``."""
        return self._mass_between(lo, y)

    def _mass_between(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        s = self._scale()
        tot = 0.0
        for i in range(len(self.m)):
            x0, x1 = self.x[i], self.x[i + 1]
            if x1 <= a or x0 >= b:
                continue
            if x1 <= x0:
                if a <= x0 <= b:
                    tot += self.m[i]
                continue
            u0, u1 = max(a, x0), min(b, x1)
            if u0 == x0 and u1 == x1:
                tot += self.m[i]
                continue
            f0 = np.interp(u0, [x0, x1], [self.f[i], self.f[i + 1]])
            f1 = np.interp(u1, [x0, x1], [self.f[i], self.f[i + 1]])
            tot += s[i] * 0.5 * (f0 + f1) * (u1 - u0)
        return float(tot)


@dataclass(frozen=True)
class BeliefMeasure:
    """Weighted atoms plus piecewise-linear density pieces on [0, 1]."""

    atom_loc: np.ndarray
    atom_mass: np.ndarray
    pieces: tuple = ()
    atom_media: tuple = ()

    @property
    def total_mass(self) -> float:
        return float(self.atom_mass.sum() + sum(pc.mass for pc in self.pieces))

    @property
    def density_mass(self) -> float:
        return float(sum(pc.mass for pc in self.pieces))

    def atoms(self) -> list:
        return list(zip(self.atom_loc.tolist(), self.atom_mass.tolist()))

    def merged_atoms(self, tol: float = 1e-12) -> dict:
        out: dict = {}
        for x, m in zip(self.atom_loc, self.atom_mass):
            key = next((k for k in out if abs(k - x) <= tol), float(x))
            out[key] = out.get(key, 0.0) + float(m)
        return out

    def mass_in(self, a: float, b: float) -> float:
        """Mass on the closed interval [a, b]."""
        am = self.atom_mass[(self.atom_loc >= a) & (self.atom_loc <= b)].sum()
        return float(am + sum(pc._mass_between(a, b) for pc in self.pieces))

    def cdf(self, y: float) -> float:
        return self.mass_in(-np.inf, y)

    def nodes(self):
        if not self.pieces:
            return np.empty(0), np.empty(0)
        return (np.concatenate([pc.x for pc in self.pieces]),
                np.concatenate([pc.f * np.r_[pc._scale(), pc._scale()[-1:]] for pc in self.pieces]))

    def media_share(self) -> dict:
        share = {k: 0.0 for k in MEDIA}
        for m, md in zip(self.atom_mass, self.atom_media or ["none"] * len(self.atom_mass)):
            share[md] += float(m)
        for pc in self.pieces:
            share[pc.media] += pc.mass
        tot = sum(share.values())
        return {k: v / tot for k, v in share.items()} if tot > 0 else share


def _normalize(meas: BeliefMeasure) -> BeliefMeasure:
    tot = meas.total_mass
    if tot <= 0:
        raise InvalidSpec("measure has no mass")
    pieces = tuple(DensityPiece(pc.x, pc.f / tot, pc.m / tot, pc.media) for pc in meas.pieces)
    return BeliefMeasure(meas.atom_loc, meas.atom_mass / tot, pieces, meas.atom_media)


def _piece_from_nodes(x, f) -> DensityPiece:
    x, f = np.asarray(x, float), np.asarray(f, float)
    if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
        raise InvalidSpec("node lists need matching 1-D x and f with at least two nodes")
    if np.any(np.diff(x) < 0) or x[0] < 0 or x[-1] > 1:
        raise InvalidSpec("nodes must be sorted inside [0, 1]")
    if np.any(f < 0):
        raise InvalidSpec("negative density")
    m = 0.5 * (f[1:] + f[:-1]) * np.diff(x)
    return DensityPiece(x, f, m)


def init_population(spec: Union[str, dict] = "uniform", n_nodes: int = 2001) -> BeliefMeasure:
    """Normalized prior measure.

    ``spec`` is ``"uniform"`` or a dict with ``kind`` one of
    ``uniform``, ``truncated_normal`` (``mean``, ``sd``), ``nodes``
    (``x``, ``f``) or ``atoms`` (``locations``, ``masses``).
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    empty = np.empty(0)
    if kind == "uniform":
        lo, hi = spec.get("lo", 0.0), spec.get("hi", 1.0)
        x = np.linspace(lo, hi, n_nodes)
        meas = BeliefMeasure(empty, empty, (_piece_from_nodes(x, np.ones_like(x)),))
    elif kind == "truncated_normal":
        mu, sd = float(spec["mean"]), float(spec["sd"])
        if sd <= 0:
            raise InvalidSpec("sd must be positive")
        x = np.linspace(0.0, 1.0, n_nodes)
        meas = BeliefMeasure(empty, empty, (_piece_from_nodes(x, np.exp(-0.5 * ((x - mu) / sd) ** 2)),))
    elif kind == "nodes":
        meas = BeliefMeasure(empty, empty, (_piece_from_nodes(spec["x"], spec["f"]),))
    elif kind == "atoms":
        loc = np.asarray(spec["locations"], float)
        mass = np.asarray(spec.get("masses", np.ones_like(loc)), float)
        if np.any(mass < 0) or np.any((loc < 0) | (loc > 1)):
            raise InvalidSpec("atoms need nonnegative mass inside [0, 1]")
        meas = BeliefMeasure(loc, mass, (), ("none",) * len(loc))
    else:
        raise InvalidSpec(f"unknown distribution kind {kind!r}")
    return _normalize(meas)


def restrict(meas: BeliefMeasure, lo: float, hi: float, n_nodes: int = 2001) -> BeliefMeasure:
    """Conditional measure on (lo, hi), resampled on ``n_nodes`` nodes."""
    keep = (meas.atom_loc > lo) & (meas.atom_loc < hi)
    x = np.linspace(lo, hi, n_nodes)
    f = sum(pc.density(x) for pc in meas.pieces) if meas.pieces else np.zeros_like(x)
    f[-1] = f[-2] if n_nodes > 1 else f[-1]
    pieces = (_piece_from_nodes(x, f),) if np.any(f > 0) else ()
    media = tuple(np.array(meas.atom_media or ["none"] * len(meas.atom_loc), dtype=object)[keep])
    return _normalize(BeliefMeasure(meas.atom_loc[keep], meas.atom_mass[keep], pieces, media))


# ----------------------------------------------------------- propagation

@dataclass
class PopulationSnapshot:
    time: float
    measure: BeliefMeasure
    media_share: dict
    polarization: float


def _regions(sol: RegimeSolution):
    """Open experimentation intervals with their attention, in belief order."""
    out = []
    for r in sorted(sol.regions, key=lambda r: (r.lo, r.hi)):
        if r.alpha is None or r.hi <= r.lo:
            continue
        out.append(r)
    return out


def _cells_of(meas: BeliefMeasure, lo: float, hi: float, extra: Sequence[float] = ()):
    """Prior cells clipped to [lo, hi] and split at ``extra``: (x0, x1, f0, f1, scale)."""
    cells = []
    cut = sorted(x for x in extra if lo < x < hi)
    for pc in meas.pieces:
        s = pc._scale()
        for i in range(len(pc.m)):
            x0, x1 = max(pc.x[i], lo), min(pc.x[i + 1], hi)
            if x1 <= x0 or pc.m[i] == 0:
                continue
            pts = [x0] + [c for c in cut if x0 < c < x1] + [x1]
            for a, b in zip(pts[:-1], pts[1:]):
                fa = np.interp(a, [pc.x[i], pc.x[i + 1]], [pc.f[i], pc.f[i + 1]]) * s[i]
                fb = np.interp(b, [pc.x[i], pc.x[i + 1]], [pc.f[i], pc.f[i + 1]]) * s[i]
                cells.append((a, b, fa, fb))
    return cells


def _quad(a, b, fa, fb, weight):
    """Gauss points of one cell: (points, prior mass weights)."""
    y = 0.5 * (b - a) * GAUSS_X + 0.5 * (a + b)
    fy = fa + (fb - fa) * (y - a) / (b - a)
    return y, 0.5 * (b - a) * GAUSS_W * fy


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _expit(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _propagate_region(sol, meas, reg, state, t, atoms, pieces):
    """Advance prior mass inside one experimentation region to time ``t``."""
    par = sol.params
    lam, a = par.lam, reg.alpha
    hz = lam * a if state == "R" else lam * (1 - a)
    jump_to = 1.0 if state == "R" else 0.0
    media = _media_of(a)
    if a == 0.5:
        # a single stationary point carries no density
        return
    speed = -lam * (2 * a - 1)  # logit velocity
    target = reg.lo if speed < 0 else reg.hi
    # what happens at the target
    after = sol.decision(target)
    after_alpha = after.alpha
    if after.stop:
        tail = 0.0
    elif after_alpha == 0.5:
        tail = lam * 0.5
    else:
        raise NotImplementedError("density flowing into another learning region")
    # prior belief whose arrival time is exactly t
    c = float(_expit(_logit(target) - speed * t))
    cells = _cells_of(meas, reg.lo, reg.hi, [c])
    c = min(max(c, reg.lo), reg.hi)
    lo_out = c if speed < 0 else reg.lo
    hi_out = reg.hi if speed < 0 else c
    arrived_mass = jumped = 0.0
    xs, fs, ms = [], [], []
    for (x0, x1, f0, f1) in cells:
        mid = 0.5 * (x0 + x1)
        y, w = _quad(x0, x1, f0, f1, None)
        moving = lo_out <= mid <= hi_out
        if moving:
            surv = math.exp(-hz * t)
            jumped += float(w.sum()) * (1 - surv)
            mass = float(w.sum()) * surv
            # advect the cell endpoints, density divided by the Jacobian
            ends = np.array([x0, x1])
            z = _expit(_logit(ends) + speed * t)
            jac = z * (1 - z) / (ends * (1 - ends))
            fe = np.array([f0, f1]) * surv / jac
            xs.append(z)
            fs.append(fe)
            ms.append(mass)
        else:
            tau = (_logit(target) - _logit(y)) / speed
            s_arr = np.exp(-hz * tau)
            s_now = s_arr * np.exp(-tail * (t - tau))
            arrived_mass += float((w * s_now).sum())
            jumped += float((w * (1 - s_now)).sum())
    if arrived_mass > 0:
        atoms.append((target, arrived_mass, "none" if after.stop else "multi-home"))
    if jumped > 0:
        atoms.append((jump_to, jumped, "none"))
    if ms:
        x = np.concatenate([[e[0]] for e in xs] + [[xs[-1][1]]])
        f = np.concatenate([[e[0]] for e in fs] + [[fs[-1][1]]])
        # consecutive cells share endpoints; keep the exact per-cell masses
        order = np.argsort(x, kind="stable")
        m = np.array(ms)
        if order[0] != 0:
            x, f, m = x[::-1], f[::-1], m[::-1]
        pieces.append(DensityPiece(x, f, m, media))


def _propagate_atom(sol, loc, mass, state, t, atoms):
    par = sol.params
    path = no_news_path(par, sol, loc)
    H = float(path.integrated_hazard(par, t, state))
    surv = math.exp(-H)
    if mass * (1 - surv) > 0:
        atoms.append((1.0 if state == "R" else 0.0, mass * (1 - surv), "none"))
    where = path.belief(par, t)
    if t >= path.stop_time:
        md = "none"
    else:
        md = _media_of(sol.decision(where).alpha) if 0 < where < 1 else "none"
    atoms.append((where, mass * surv, md))


def state_at(sol: RegimeSolution, meas: BeliefMeasure, true_state: str, t: float) -> BeliefMeasure:
    if true_state not in ("L", "R"):
        raise ValueError("true_state must be 'L' or 'R'")
    atoms: list = []
    pieces: list = []
    for loc, mass in zip(meas.atom_loc, meas.atom_mass):
        _propagate_atom(sol, float(loc), float(mass), true_state, t, atoms)
    for reg in sorted(sol.regions, key=lambda r: (r.lo, r.hi)):
        if reg.hi <= reg.lo:
            continue
        if reg.alpha is None:
            # static: priors in stopping regions keep their density
            for (x0, x1, f0, f1) in _cells_of(meas, reg.lo, reg.hi):
                m = 0.5 * (f0 + f1) * (x1 - x0)
                pieces.append(DensityPiece(np.array([x0, x1]), np.array([f0, f1]), np.array([m]), "none"))
            continue
        _propagate_region(sol, meas, reg, true_state, t, atoms, pieces)
    pieces = _merge_pieces(pieces)
    loc = np.array([a[0] for a in atoms], float)
    mass = np.array([a[1] for a in atoms], float)
    med = tuple(a[2] for a in atoms)
    return BeliefMeasure(loc, mass, tuple(pieces), med)


def _merge_pieces(pieces):
    """Join adjacent single-cell static pieces that share media and endpoints."""
    out = []
    for pc in sorted(pieces, key=lambda q: q.x[0]):
        if (out and out[-1].media == pc.media and out[-1].x[-1] == pc.x[0]
                and out[-1].f[-1] == pc.f[0]):
            last = out.pop()
            pc = DensityPiece(np.r_[last.x, pc.x[1:]], np.r_[last.f, pc.f[1:]],
                              np.r_[last.m, pc.m], pc.media)
        out.append(pc)
    return out


def evolve(solution: RegimeSolution, measure: BeliefMeasure, true_state: str = "L",
           dt: Optional[float] = None, t_end: Optional[float] = None,
           times: Optional[Iterable[float]] = None) -> list:
    """Snapshots at ``times`` (default 0, .4, 1.5) or every ``dt`` up to ``t_end``."""
    if times is None:
        if dt is not None and t_end is not None:
            n = int(round(t_end / dt))
            times = [k * dt for k in range(n + 1)]
        else:
            times = [0.0, 0.4, 1.5]
    out = []
    for t in times:
        m = state_at(solution, measure, true_state, float(t))
        try:
            pol = polarization_metric(m)
        except EmptyHalf:
            pol = float("nan")
        out.append(PopulationSnapshot(float(t), m, m.media_share(), pol))
    return out


# ------------------------------------------------------------ polarization

def _quantile(meas: BeliefMeasure, lo: float, hi: float, q: float = 0.5) -> float:
    """Smallest y in [lo, hi] with mass([lo, y]) >= q * mass([lo, hi])."""
    tot = meas.mass_in(lo, hi)
    if tot <= 0:
        raise EmptyHalf(f"no mass on [{lo}, {hi}]")
    goal = q * tot
    a, b = lo, hi
    if meas.mass_in(lo, lo) >= goal:
        return lo
    for _ in range(200):
        mid = 0.5 * (a + b)
        if meas.mass_in(lo, mid) >= goal - 1e-15:
            b = mid
        else:
            a = mid
        if b - a < 1e-13:
            break
    return b


def polarization_metric(meas: BeliefMeasure) -> float:
    """Median of the p >= 1/2 half minus median of the p <= 1/2 half."""
    m_r = _quantile(meas, 0.5, 1.0)
    m_l = _quantile(meas, 0.0, 0.5)
    return m_r - m_l


# ------------------------------------------------------------------ export

def snapshots_to_csv(snaps: Sequence[PopulationSnapshot], fmt=lambda v: format(v, ".17g")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "kind", "location", "mass_or_density", "media_choice"])
    for s in snaps:
        for x, m, md in zip(s.measure.atom_loc, s.measure.atom_mass,
                            s.measure.atom_media or ["none"] * len(s.measure.atom_loc)):
            w.writerow([fmt(s.time), "atom", fmt(float(x)), fmt(float(m)), md])
        for pc in s.measure.pieces:
            sc = pc._scale()
            dens = pc.f * np.r_[sc, sc[-1:]]
            for x, f in zip(pc.x, dens):
                w.writerow([fmt(s.time), "node", fmt(float(x)), fmt(float(f)), pc.media])
    return buf.getvalue()
