"""Command-line front end.

Usage::

    python -m attnalloc solve --lambda 1 --rho 0 --uRR 1 --uLL .8 --uLR -1 --uRL -.8 --c .3
    python -m attnalloc sweep --config run.cfg --sweep_key c --sweep_values 0.05:0.95:19

A config file holds flat ``key=value`` lines (``#`` starts a comment) or a
JSON object with the same keys. Flags override file values. Artifacts go to
``--out``, else ``$ATTNALLOC_OUT``, else the working directory.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import model as M
from .dynamics import analytic_outcomes, monte_carlo
from .errors import (AssumptionViolated, AttnAllocError, InvalidSpec, OrderingViolation,
                     ParseError, ValidationError)
from .gamma import sqrt_frontier, gamma_oracle, gamma_solution, linear_frontier, saddle_slope
from .model import ModelParams
from .oracle import (solve_finite_horizon, solve_infinite_horizon, stop_actions,
                     technology_family, two_period_thresholds)
from .population import evolve, init_population, snapshots_to_csv
from .value import hjb_diagnostics, kink_check, smooth_paste_gap, solve
from .variants import (AsymRates, AttentionBounds, MiddleAction, asymmetric_solution,
                       multi_action_policy, nonexclusive_solution)

OUT_ENV = "ATTNALLOC_OUT"
COMMANDS = ("solve", "oracle", "simulate", "population", "sweep", "diagnose", "twoperiod")
VARIANTS = ("baseline", "nonexclusive", "asymmetric", "gamma", "multiaction")

MODEL_KEYS = {"lambda": "lam", "rho": "rho", "uRR": "u_r_R", "uLL": "u_l_L",
              "uLR": "u_l_R", "uRL": "u_r_L", "c": "c"}
VARIANT_KEYS = {
    "nonexclusive": {"alpha_max": float, "alpha_min": float},
    "asymmetric": {"lambda_R": float, "lambda_L": float},
    "gamma": {"frontier": str},
    "multiaction": {"m_R": str, "m_L": str},
}
REQUIRED_VARIANT_KEYS = {
    "nonexclusive": ("alpha_max",),
    "asymmetric": ("lambda_R", "lambda_L"),
    "gamma": (),
    "multiaction": ("m_R", "m_L"),
}
COMMAND_KEYS = {
    "grid": int, "seed": int, "n_paths": int, "horizon": int, "dt": float, "t_end": float,
    "p0": float, "per_path": str, "snapshots": str, "prior": str, "prior_mean": float,
    "prior_sd": float, "true_state": str, "sweep_key": str, "sweep_values": str,
}
OUTPUT_KEYS = {"out": str, "format": str, "variant": str}


def _all_keys() -> dict:
    keys = {k: float for k in MODEL_KEYS}
    for v in VARIANT_KEYS.values():
        keys.update(v)
    keys.update(COMMAND_KEYS)
    keys.update(OUTPUT_KEYS)
    return keys


ALL_KEYS = _all_keys()


# ------------------------------------------------------------- formatting

def fmt(x) -> str:
    """17 significant digits, locale independent; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj) -> str:
    """JSON text whose numbers come from :func:`fmt`; non-finite floats become null."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer, float, np.floating)):
        s = fmt(obj)
        return "null" if s in ("nan", "inf", "-inf") else s
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_text(columns: Sequence[str], rows, header: Optional[dict] = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}={v if isinstance(v, str) else fmt(v) if v is not None else 'none'}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    return buf.getvalue()


# ----------------------------------------------------------------- config

@dataclass
class RunConfig:
    params: ModelParams
    variant: str = "baseline"
    variant_keys: dict = field(default_factory=dict)
    command_keys: dict = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "csv"
    raw: dict = field(default_factory=dict, repr=False)

    def get(self, key, default=None):
        return self.command_keys.get(key, default)

    @property
    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or ".")


def _convert(key: str, value, line=None):
    if key not in ALL_KEYS:
        raise ParseError("unknown key", key=key, line=line)
    typ = ALL_KEYS[key]
    if isinstance(value, str):
        value = value.strip()
    try:
        if typ is int:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if typ is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ParseError(f"cannot read {value!r} as {typ.__name__}", key=key, line=line) from None


def read_config_text(text: str) -> dict:
    """Parse a flat key=value file or a JSON object into typed values."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad JSON: {e.msg}", line=e.lineno) from None
        if "config" in obj and isinstance(obj["config"], dict):
            obj = obj["config"]  # a solve artifact doubles as a fixture
        return {k: _convert(k, v) for k, v in obj.items() if v is not None}
    out = {}
    for no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError("expected key=value", line=no)
        k, v = (s.strip() for s in body.split("=", 1))
        if k in out:
            raise ParseError("duplicate key", key=k, line=no)
        out[k] = _convert(k, v, line=no)
    return out


def _flag_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="attnalloc", add_help=True)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config")
    for k in ALL_KEYS:
        names = [f"--{k}"]
        if "_" in k:
            names.append("--" + k.replace("_", "-"))
        ap.add_argument(*names, dest=k, default=None)
    return ap


def build_config(values: dict) -> RunConfig:
    """Typed values to a validated :class:`RunConfig`."""
    for k in MODEL_KEYS:
        if k not in values:
            raise ParseError("missing required key", key=k)
    params = ModelParams(**{MODEL_KEYS[k]: float(values[k]) for k in MODEL_KEYS})
    bad = M.validate_params(params)
    variant = values.get("variant", "baseline")
    if variant not in VARIANTS:
        raise ParseError(f"variant must be one of {', '.join(VARIANTS)}", key="variant")
    allowed = VARIANT_KEYS.get(variant, {})
    vkeys = {}
    for name, keys in VARIANT_KEYS.items():
        for k in keys:
            if k in values:
                if k not in allowed:
                    bad.append(f"{k} only applies to variant {name}")
                else:
                    vkeys[k] = values[k]
    for k in REQUIRED_VARIANT_KEYS.get(variant, ()):
        if k not in values:
            raise ParseError(f"variant {variant} needs this key", key=k)
    fmt_ = values.get("format", "csv")
    if fmt_ not in ("csv", "json"):
        bad.append("format must be csv or json")
    if bad:
        raise ValidationError(bad)
    ckeys = {k: values[k] for k in COMMAND_KEYS if k in values}
    return RunConfig(params, variant, vkeys, ckeys, values.get("out"), fmt_, dict(values))


def parse_config(argv: Sequence[str]):
    """``(command, RunConfig)`` from command-line arguments."""
    ap = _flag_parser()
    ns, unknown = ap.parse_known_args(list(argv))
    if unknown:
        key = unknown[0].lstrip("-").split("=", 1)[0]
        raise ParseError("unknown key", key=key)
    values = {}
    if ns.config:
        try:
            values = read_config_text(Path(ns.config).read_text())
        except OSError as e:
            raise ParseError(f"cannot read config file: {e.strerror}", key="config") from None
    for k in ALL_KEYS:
        v = getattr(ns, k)
        if v is not None:
            values[k] = _convert(k, v)
    return ns.command, build_config(values)


# --------------------------------------------------------------- variants

def _middles(cfg: RunConfig) -> list:
    try:
        rs = [float(x) for x in cfg.variant_keys["m_R"].split(",")]
        ls = [float(x) for x in cfg.variant_keys["m_L"].split(",")]
    except ValueError:
        raise ParseError("middle payoffs must be comma-separated numbers", key="m_R") from None
    if len(rs) != len(ls):
        raise ValidationError(["m_R and m_L need the same length"])
    return [MiddleAction(r, l, f"m{i + 1}") for i, (r, l) in enumerate(zip(rs, ls))]


def _bounds(cfg: RunConfig) -> AttentionBounds:
    amax = cfg.variant_keys["alpha_max"]
    amin = cfg.variant_keys.get("alpha_min", 1.0 - amax)
    if not 0.5 < amax <= 1.0 or not 0.0 <= amin < 0.5:
        raise ValidationError(["need 1/2 < alpha_max <= 1 and 0 <= alpha_min < 1/2"])
    return AttentionBounds(amin, amax)


def _frontier(cfg: RunConfig):
    name = cfg.variant_keys.get("frontier", "sqrt")
    if name == "sqrt":
        return sqrt_frontier()
    if name == "linear":
        return linear_frontier()
    raise ValidationError(["frontier must be sqrt or linear"])


def linear_solution(cfg: RunConfig):
    """RegimeSolution for the variants with a linear technology."""
    par = cfg.params
    if cfg.variant == "baseline":
        return solve(par)
    if cfg.variant == "nonexclusive":
        return nonexclusive_solution(par, _bounds(cfg))
    if cfg.variant == "asymmetric":
        return asymmetric_solution(par, AsymRates(cfg.variant_keys["lambda_R"],
                                                  cfg.variant_keys["lambda_L"]))
    raise ValidationError([f"variant {cfg.variant} has no linear-technology solution"])


@dataclass
class Evaluated:
    header: dict
    value: np.ndarray
    alpha: np.ndarray
    branch: list


def evaluate(cfg: RunConfig, grid: np.ndarray) -> Evaluated:
    """Value, attention and branch name of the configured model on ``grid``."""
    par = cfg.params
    head = {"variant": cfg.variant}
    if cfg.variant == "gamma":
        fr = _frontier(cfg)
        sol = gamma_solution(fr, par)
        head.update(regime=sol.case, gamma=fr.gamma)
        if sol.own is not None:
            head.update(p_low_star=sol.own.p_low_star, q_b=sol.own.q_b, q_s=sol.own.q_s)
        if sol.opp is not None and not fr.linear:
            head.update(q_low=sol.opp.q_low, q_high=sol.opp.q_high,
                        saddle_slope=saddle_slope(fr, par.rho / par.lam))
        return Evaluated(head, sol.value(grid), sol.alpha(grid), sol.labels(grid))
    if cfg.variant == "multiaction":
        pol = multi_action_policy(par, _middles(cfg))
        head["regime"] = pol.base.regime.value
        for s in pol.strategies:
            head[f"{s.action.name}_low"] = s.cutoffs.p_m_low
            head[f"{s.action.name}_high"] = s.cutoffs.p_m_high
        v, lab = pol.evaluate(grid)
        return Evaluated(head, v, pol.alpha(grid), lab)
    sol = linear_solution(cfg)
    head["regime"] = sol.regime.value
    head.update(sol.cutoffs.as_dict())
    return Evaluated(head, np.asarray(sol.value(grid), float), np.asarray(sol.alpha(grid), float),
                     sol.kinds(grid))


def _oracle_setup(cfg: RunConfig, dt: float):
    par = cfg.params
    if cfg.variant == "gamma":
        return None, None
    if cfg.variant == "multiaction":
        return technology_family(M.Technology.baseline(par.lam), dt, 2), stop_actions(par, _middles(cfg))
    tech = linear_solution(cfg).tech
    return technology_family(tech, dt, 2), stop_actions(par)


# --------------------------------------------------------------- commands

def _grid(cfg: RunConfig) -> np.ndarray:
    n = cfg.get("grid", 2001)
    if n < 2:
        raise ValidationError(["grid >= 2"])
    return np.linspace(0.0, 1.0, n)


def _emit(cfg: RunConfig, stem: str, columns, rows, header: dict) -> list:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.format == "json":
        obj = {"header": header, "columns": list(columns), "rows": [list(r) for r in rows]}
        path = cfg.out_dir / f"{stem}.json"
        path.write_text(to_json(obj) + "\n")
    else:
        path = cfg.out_dir / f"{stem}.csv"
        path.write_text(_csv_text(columns, rows, header))
    return [path]


def _config_record(cfg: RunConfig) -> dict:
    return {k: cfg.raw[k] for k in sorted(cfg.raw) if k not in ("out", "format")}


def cmd_solve(cfg: RunConfig) -> list:
    grid = _grid(cfg)
    ev = evaluate(cfg, grid)
    rows = list(zip(grid, ev.value, ev.alpha, ev.branch))
    if cfg.format == "json":
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        obj = {"config": _config_record(cfg), "header": ev.header,
               "columns": ["p", "V", "alpha", "branch"], "rows": [list(r) for r in rows]}
        path = cfg.out_dir / "solve.json"
        path.write_text(to_json(obj) + "\n")
        return [path]
    return _emit(cfg, "solve", ["p", "V", "alpha", "branch"], rows, ev.header)


def cmd_oracle(cfg: RunConfig) -> list:
    dt = cfg.get("dt", 1e-3)
    n = cfg.get("grid", 2001)
    par = cfg.params
    if cfg.variant == "gamma":
        if "horizon" in cfg.command_keys:
            raise ValidationError(["horizon is not supported for the gamma oracle"])
        dp = gamma_oracle(_frontier(cfg), par, dt=dt, n_grid=n)
    else:
        fam, acts = _oracle_setup(cfg, dt)
        if "horizon" in cfg.command_keys:
            dp = solve_finite_horizon(par, dt, cfg.get("horizon"), n, fam, acts)
        else:
            dp = solve_infinite_horizon(par, dt=dt, n_grid=n, family=fam, actions=acts)
    ev = evaluate(cfg, dp.grid)
    gap = np.abs(dp.value - ev.value)
    head = dict(ev.header, dt=dt, iterations=dp.iterations, sup_gap=float(gap.max()))
    rows = list(zip(dp.grid, dp.value, ev.value, gap, dp.labels(), dp.alpha(), ev.alpha))
    return _emit(cfg, "oracle", ["p", "V_oracle", "V", "gap", "oracle_choice", "alpha_oracle", "alpha"],
                 rows, head)


def _flag(cfg, key) -> bool:
    v = str(cfg.get(key, "false")).lower()
    if v not in ("true", "false", "1", "0", "yes", "no"):
        raise ValidationError([f"{key} must be true or false"])
    return v in ("true", "1", "yes")


def _baseline_only(cfg: RunConfig, what: str):
    if cfg.variant != "baseline":
        raise ValidationError([f"{what} supports the baseline variant only"])


def cmd_simulate(cfg: RunConfig) -> list:
    _baseline_only(cfg, "simulate")
    par = cfg.params
    p0 = cfg.get("p0", 0.5)
    if not 0.0 <= p0 <= 1.0:
        raise ValidationError(["p0 must lie in [0, 1]"])
    n, seed = cfg.get("n_paths", 100_000), cfg.get("seed", 0)
    sol = solve(par)
    mc = monte_carlo(par, sol, p0, n, seed)
    an = analytic_outcomes(par, sol, p0)
    summary = {
        "config": _config_record(cfg), "p0": p0, "n_paths": n, "seed": seed,
        "mean_delay": mc.mean_delay, "se_delay": mc.se_delay,
        "mistake_rate": mc.mistake_rate, "se_mistake": mc.se_mistake,
        "value_estimate": mc.value_estimate, "se_value": mc.se_value,
        "V_env": float(sol.value(p0)), "expected_delay": an.expected_delay,
        "mistake_prob": an.mistake_prob,
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "simulate.json"
    path.write_text(to_json(summary) + "\n")
    out = [path]
    if _flag(cfg, "per_path"):
        rows = [(i, "R" if s else "L", t, {1: "r", 0: "l"}.get(int(a), "none"), bool(b), v)
                for i, (s, t, a, b, v) in enumerate(zip(mc.states, mc.times, mc.actions,
                                                        mc.breakthrough, mc.payoffs))]
        p = cfg.out_dir / "paths.csv"
        p.write_text(_csv_text(["path", "state", "time", "action", "breakthrough", "payoff"], rows))
        out.append(p)
    return out


def _times(cfg: RunConfig) -> list:
    t_end = cfg.get("t_end", 50.0 / cfg.params.lam)
    if "snapshots" in cfg.command_keys:
        try:
            ts = [float(x) for x in cfg.get("snapshots").split(",")]
        except ValueError:
            raise ParseError("snapshots must be comma-separated times", key="snapshots") from None
    else:
        ts = [0.0, 0.4, 1.5, t_end]
    if any(t < 0 for t in ts):
        raise ValidationError(["snapshot times must be nonnegative"])
    return sorted(set(ts))


def cmd_population(cfg: RunConfig) -> list:
    _baseline_only(cfg, "population")
    prior = cfg.get("prior", "uniform")
    if prior == "uniform":
        spec = "uniform"
    elif prior == "truncated_normal":
        spec = {"kind": prior, "mean": cfg.get("prior_mean", 0.5), "sd": cfg.get("prior_sd", 0.2)}
    else:
        raise ValidationError(["prior must be uniform or truncated_normal"])
    state = cfg.get("true_state", "L")
    if state not in ("L", "R"):
        raise ValidationError(["true_state must be L or R"])
    snaps = evolve(solve(cfg.params), init_population(spec), state, times=_times(cfg))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "population.csv"
    path.write_text(snapshots_to_csv(snaps, fmt))
    rows = []
    for s in snaps:
        sh = s.media_share
        rows.append((s.time, s.measure.total_mass, s.polarization,
                     sh.get("L-outlet", 0.0), sh.get("R-outlet", 0.0),
                     sh.get("multi-home", 0.0), sh.get("none", 0.0)))
    cols = ["time", "total_mass", "polarization", "L_outlet", "R_outlet", "multi_home", "none"]
    return [path] + _emit(cfg, "population_summary", cols, rows, {"true_state": state})


SWEEP_COLUMNS = ["value", "regime", "c_bar", "c_underbar", "p_low_star", "p_high_star",
                 "p_star", "p_check", "p_low", "p_high"]


def _sweep_values(cfg: RunConfig) -> list:
    spec = cfg.get("sweep_values")
    if spec is None:
        raise ParseError("sweep needs this key", key="sweep_values")
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]
        return [float(x) for x in spec.split(",")]
    except ValueError:
        raise ParseError("use lo:hi:n or a comma-separated list", key="sweep_values") from None


def cmd_sweep(cfg: RunConfig) -> list:
    key = cfg.get("sweep_key")
    if key is None:
        raise ParseError("sweep needs this key", key="sweep_key")
    if key not in MODEL_KEYS:
        raise ValidationError([f"sweep_key must be one of {', '.join(MODEL_KEYS)}"])
    if cfg.variant not in ("baseline", "nonexclusive", "asymmetric"):
        raise ValidationError(["sweep supports the linear-technology variants"])
    rows = []
    for x in _sweep_values(cfg):
        sub = RunConfig(cfg.params.replace(**{MODEL_KEYS[key]: x}), cfg.variant, cfg.variant_keys,
                        cfg.command_keys, cfg.out, cfg.format, cfg.raw)
        M.check_params(sub.params)
        sol = linear_solution(sub)
        cs = sol.cutoffs
        rows.append((x, sol.regime.value, cs.c_bar, cs.c_underbar, cs.p_low_star, cs.p_high_star,
                     cs.p_star, cs.p_check, cs.p_low, cs.p_high))
    rows = [tuple(v if v is not None else math.nan for v in r) for r in rows]
    return _emit(cfg, "sweep", SWEEP_COLUMNS, rows, {"variant": cfg.variant, "sweep_key": key})


def cmd_diagnose(cfg: RunConfig) -> list:
    _baseline_only(cfg, "diagnose")
    sol = solve(cfg.params)
    kinks = sol.kinks
    rows = []
    for p in _grid(cfg):
        if p <= 0.0 or p >= 1.0 or any(abs(p - k) <= 1e-12 for k in kinks):
            continue
        r = hjb_diagnostics(cfg.params, float(p), sol)
        rows.append((p, r.value, r.slope, r.residual, r.crossing_gap, r.dF_identity_gap))
    head = {"regime": sol.regime.value, "smooth_paste_gap": smooth_paste_gap(sol),
            "max_residual": max(r[3] for r in rows)}
    for i, k in enumerate(kink_check(sol)):
        head[f"kink{i}"] = f"p={fmt(k.p)} left={fmt(k.left)} right={fmt(k.right)} convex={k.convex}"
    cols = ["p", "V", "slope", "hjb_residual", "crossing_gap", "dF_identity_gap"]
    return _emit(cfg, "diagnose", cols, rows, head)


def cmd_twoperiod(cfg: RunConfig) -> list:
    _baseline_only(cfg, "twoperiod")
    dt = cfg.get("dt", 1.0)
    tab = two_period_thresholds(cfg.params, dt, cfg.get("grid", 20001))
    rows = [("experiment_low", tab.experiment_lo), ("own_low_upper", tab.own_lo_hi),
            ("own_high_lower", tab.own_hi_lo), ("experiment_high", tab.experiment_hi)]
    return _emit(cfg, "twoperiod", ["threshold", "belief"], rows, {"dt": dt})


HANDLERS = {"solve": cmd_solve, "oracle": cmd_oracle, "simulate": cmd_simulate,
            "population": cmd_population, "sweep": cmd_sweep, "diagnose": cmd_diagnose,
            "twoperiod": cmd_twoperiod}

INPUT_ERRORS = (ParseError, ValidationError, InvalidSpec, OrderingViolation, AssumptionViolated)


def execute_command(cfg: RunConfig, command: str) -> list:
    """Run one command and return the artifact paths it wrote."""
    if command not in HANDLERS:
        raise ParseError(f"unknown command {command!r}")
    with np.errstate(all="ignore"):
        return HANDLERS[command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    command = next((a for a in argv if a in COMMANDS), "attnalloc")
    try:
        command, cfg = parse_config(argv)
        paths = execute_command(cfg, command)
    except SystemExit as e:  # argparse usage errors and --help
        return 0 if e.code in (0, None) else 2
    except INPUT_ERRORS as e:
        print(f"{command}: invalid input: {e}", file=sys.stderr)
        return 2
    except (AttnAllocError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as e:
        print(f"{command}: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
