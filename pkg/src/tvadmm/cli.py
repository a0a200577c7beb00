"""Batch runner: scenario file in, trajectory/oracle CSVs and a JSON report out.

Scenario file (JSON)::

    {
      "id": "name",                       # optional, defaults to the file stem
      "snapshots": [ {...}, ... ]         # explicit problem snapshots, or
      "generator": {"type": "drifting" | "opf" | "toy", ...config fields},
      "params": {"beta": 0.5, "gamma": 1.0, "alpha1": "auto", "alpha2": "auto", "delta": "auto"},
      "iters_per_step": 1,
      "iterations": 1000,                 # repetitions of a single (static) snapshot
      "seed": 0,                          # overrides the generator seed
      "divergence_expected": false,
      "oracle": {"method": "auto", "tol": null, "max_iter": 1000000, "with_opt": false},
      "tolerances": {"contraction": 1e-9, "recursion": 1e-9, "g_err_floor": 1e-10,
                     "steady_window": 200, "divergence_growth": 10.0}
    }

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid scenario file,
3 divergence, 4 reference-solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import jsonschema
import numpy as np

from .oracles import (OracleError, akkt_residual, measure_drifts, oracle_trajectory, solve_akkt,
                      tracking_bound)
from .scenarios import (DriftingQpConfig, OpfConfig, ToyConfig, build_opf_model, gen_drifting_qp, gen_opf,
                        measurement_residual, opf_metrics, toy_run)
from .solver import (DivergenceError, InadmissibleParams, ProblemSnapshot, SolverParams, Trajectory,
                     bounds_from_snapshots, check_step_conditions, constraint_residual,
                     lagrangian_value, run_online, select_params)

__all__ = ["main", "run_scenario", "sweep", "load_config", "RunReport", "ConfigError", "RunFailure",
           "EXIT_OK", "EXIT_CHECK_FAILED", "EXIT_SCHEMA", "EXIT_DIVERGED", "EXIT_ORACLE",
           "OUT_ENV", "SWEEP_AXES", "TRAJECTORY_COLUMNS", "ORACLE_COLUMNS"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_DIVERGED = 3
EXIT_ORACLE = 4

OUT_ENV = "TVADMM_OUT"
DEFAULT_OUT = "tvadmm_out"
SWEEP_AXES = ("gamma", "beta", "drift_amplitude", "seed")

TRAJECTORY_COLUMNS = ("k", "g_err", "primal_res", "akkt_res", "lambda_norm", "lagrangian",
                      "contraction_ratio", "bound_rhs")
ORACLE_COLUMNS = ("k", "x_star_norm", "y_star_norm", "lambda_star_norm", "akkt_res",
                  "drift_x", "drift_y", "drift_lambda")
TOY_COLUMNS = ("k", "x_norm", "lambda_norm", "objective", "norm")
OPF_COLUMNS = ("k", "voltage_violation", "power_violation", "consensus_violation")

DEFAULT_TOLERANCES = {
    "contraction": 1e-9,
    "recursion": 1e-9,
    "g_err_floor": 1e-10,
    "steady_window": 200,
    "divergence_growth": 10.0,
}
DEFAULT_STATIC_ITERATIONS = 1000

_NUM_OR_AUTO = {"anyOf": [{"type": "number"}, {"const": "auto"}]}
SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "snapshots": {"type": "array", "minItems": 1, "items": {"type": "object"}},
        "generator": {
            "type": "object",
            "properties": {"type": {"enum": ["drifting", "opf", "toy"]}},
            "required": ["type"],
        },
        "params": {
            "type": "object",
            "properties": {
                "beta": {"type": "number"},
                "gamma": {"type": "number"},
                "alpha1": _NUM_OR_AUTO,
                "alpha2": _NUM_OR_AUTO,
                "delta": _NUM_OR_AUTO,
            },
            "additionalProperties": False,
        },
        "iters_per_step": {"type": "integer", "minimum": 1},
        "iterations": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "divergence_expected": {"type": "boolean"},
        "oracle": {
            "type": "object",
            "properties": {
                "method": {"enum": ["auto", "LinearSolve", "FixedPointIteration"]},
                "tol": {"type": ["number", "null"]},
                "max_iter": {"type": "integer", "minimum": 1},
                "with_opt": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number"} for k in DEFAULT_TOLERANCES},
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["snapshots"]}, {"required": ["generator"]}],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """The scenario file is malformed or inconsistent."""


class RunFailure(RuntimeError):
    """A run ended with a non-zero exit code; ``report`` may be attached."""

    def __init__(self, message, code, report=None):
        super().__init__(message)
        self.code = code
        self.report = report


@dataclass
class RunReport:
    scenario_id: str
    params: dict
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    duration: float = 0.0
    status: str = "ok"
    exit_code: int = EXIT_OK

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


# ----------------------------------------------------------------------------- io helpers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    """Comma-separated, header row, floats with 17 significant digits; atomic."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    _atomic_write(Path(path), buf.getvalue())


def write_json(path: Path, obj) -> None:
    _atomic_write(Path(path), json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------- config

def load_config(path, seed: Optional[int] = None) -> dict:
    """Parse and validate a scenario file; raise ``ConfigError`` on any problem."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    cfg.setdefault("id", path.stem)
    return validate_config(cfg, seed)


def validate_config(cfg: dict, seed: Optional[int] = None) -> dict:
    try:
        jsonschema.validate(cfg, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from exc
    cfg = json.loads(json.dumps(cfg))  # private copy
    cfg.setdefault("id", "scenario")
    if seed is not None:
        cfg["seed"] = int(seed)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    cfg["tolerances"] = tol
    # build eagerly so that inconsistent fields surface as schema errors
    kind, snaps, _ = _build(cfg)
    if kind != "toy":
        _resolve_params(cfg, snaps)
    return cfg


def _generator_config(gen: dict, seed: Optional[int]):
    kind = gen["type"]
    fields = {k: v for k, v in gen.items() if k not in ("type", "measurement_feedback", "perturbed")}
    if seed is not None:
        fields["seed"] = seed
    cls = {"drifting": DriftingQpConfig, "opf": OpfConfig, "toy": ToyConfig}[kind]
    if kind == "opf" and fields.get("p_available") is not None:
        fields["p_available"] = np.asarray(fields["p_available"], dtype=float)
    if kind == "toy":
        for key in ("A", "x0", "lam0"):
            if fields.get(key) is not None:
                fields[key] = np.asarray(fields[key], dtype=float)
    try:
        return cls(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad {kind} generator fields: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid {kind} generator: {exc}") from exc


def _build(cfg: dict):
    """Return ``(kind, snapshots, extras)`` for a validated scenario dict."""
    seed = cfg.get("seed")
    if "snapshots" in cfg:
        try:
            snaps = [ProblemSnapshot.from_dict(d) for d in cfg["snapshots"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid snapshot: {exc}") from exc
        if len({s.dims for s in snaps}) != 1:
            raise ConfigError("snapshots have inconsistent dimensions")
        return "snapshots", snaps, {}
    gen = cfg["generator"]
    gcfg = _generator_config(gen, seed)
    if gen["type"] == "toy":
        return "toy", [], {"toy": gcfg, "perturbed": bool(gen.get("perturbed", False))}
    if gen["type"] == "drifting":
        return "drifting", gen_drifting_qp(gcfg), {}
    model = build_opf_model(gcfg)
    extras = {"opf": gcfg, "model": model}
    if gen.get("measurement_feedback", False):
        extras["residual_fn"] = measurement_residual(model)
    return "opf", gen_opf(gcfg, model), extras


def _resolve_params(cfg: dict, snaps) -> tuple[SolverParams, SolverParams, dict]:
    """Run parameters, the automatic (admissible) parameters, and diagnostics.

    The reference solver always iterates with the automatic steps: the AKKT
    point depends on ``gamma`` only, and user-chosen steps may not converge.
    """
    pc = {"beta": 0.5, "gamma": 1.0, "alpha1": "auto", "alpha2": "auto", "delta": "auto"}
    pc.update(cfg.get("params", {}))
    bounds = bounds_from_snapshots(snaps)
    try:
        auto = select_params(bounds, beta=float(pc["beta"]), gamma=float(pc["gamma"]))
    except InadmissibleParams as exc:
        raise ConfigError(str(exc)) from exc
    a1 = auto.alpha1 if pc["alpha1"] == "auto" else float(pc["alpha1"])
    a2 = auto.alpha2 if pc["alpha2"] == "auto" else float(pc["alpha2"])
    if pc["delta"] == "auto":
        # margin implied by the chosen primal steps, capped like the automatic choice
        delta = min(bounds.v_f * a1,
                    bounds.v_g**2 / (4.0 * auto.beta**2 * bounds.sB**4 + 2.0 * bounds.L_g**2),
                    auto.beta * auto.gamma)
    else:
        delta = float(pc["delta"])
    try:
        p = SolverParams(alpha1=a1, alpha2=a2, beta=auto.beta, gamma=auto.gamma, delta=delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    conditions = check_step_conditions(p, bounds)
    return p, auto, {"bounds": asdict(bounds), "admissible": conditions}


# ----------------------------------------------------------------------------- runs

def resolve_out_dir(out: Optional[str]) -> Path:
    if out:
        return Path(out)
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _run_toy(cfg, extras, out_dir: Path, started: float) -> RunReport:
    tcfg, perturbed = extras["toy"], extras["perturbed"]
    trace = toy_run(tcfg, perturbed)
    rows = [{"k": k, "x_norm": float(np.linalg.norm(trace.x[k])),
             "lambda_norm": float(np.linalg.norm(trace.lam[k])),
             "objective": float(trace.objective[k]), "norm": float(trace.norm[k])}
            for k in range(len(trace.norm))]
    write_csv(out_dir / "toy.csv", TOY_COLUMNS, rows)
    growth_limit = cfg["tolerances"]["divergence_growth"]
    diverged = trace.diverged or trace.growth >= growth_limit
    expected = bool(cfg.get("divergence_expected", False))
    summary = {"perturbed": perturbed, "growth": trace.growth, "diverged": diverged,
               "divergence_expected": expected, "steps": len(trace.norm) - 1}
    params = {"alpha": tcfg.alpha, "beta": tcfg.beta, "gamma": tcfg.gamma}
    report = RunReport(cfg["id"], params, rows, summary, time.perf_counter() - started)
    if diverged and not expected:
        report.status, report.exit_code = "diverged", EXIT_DIVERGED
    elif expected and not diverged:
        summary["pass_divergence_expected"] = False
        report.status, report.exit_code = "check_failed", EXIT_CHECK_FAILED
    else:
        summary["pass_divergence_expected"] = expected or None
    return report


def _trajectory_rows(snaps, states, oracle, p: SolverParams, iters_per_step: int, floor: float):
    metric = p.metric
    r = p.contraction**iters_per_step
    rows = []
    prev_err = None
    prev_ref = None
    for k, (snap, s) in enumerate(zip(snaps, states)):
        ref = oracle[k].w_star if oracle is not None else None
        g_err = metric.dist(s, ref) if ref is not None else None
        ratio = bound = None
        if g_err is not None and prev_err is not None:
            drift = metric.dist(prev_ref, ref)
            bound = r * (prev_err + drift)
            if prev_err > floor:
                ratio = g_err / prev_err
        rows.append({
            "k": k,
            "g_err": g_err,
            "primal_res": float(np.linalg.norm(constraint_residual(snap, s.x, s.y))),
            "akkt_res": akkt_residual(snap, s, p.gamma, p),
            "lambda_norm": float(np.linalg.norm(s.lam)),
            "lagrangian": lagrangian_value(snap, s, p),
            "contraction_ratio": ratio,
            "bound_rhs": bound,
        })
        prev_err, prev_ref = g_err, ref
    return rows


def _oracle_rows(oracle):
    rows = []
    for k, sol in enumerate(oracle):
        w = sol.w_star
        if k == 0:
            dx = dy = dl = 0.0
        else:
            u = oracle[k - 1].w_star
            dx = float(np.linalg.norm(w.x - u.x))
            dy = float(np.linalg.norm(w.y - u.y))
            dl = float(np.linalg.norm(w.lam - u.lam))
        rows.append({"k": k, "x_star_norm": float(np.linalg.norm(w.x)),
                     "y_star_norm": float(np.linalg.norm(w.y)),
                     "lambda_star_norm": float(np.linalg.norm(w.lam)),
                     "akkt_res": sol.akkt_residual, "drift_x": dx, "drift_y": dy, "drift_lambda": dl})
    return rows


def run_scenario(config, out_dir=None, seed: Optional[int] = None) -> RunReport:
    """Run one scenario and write its artifacts into ``out_dir``.

    ``config`` is a path or an already-parsed scenario dict.  Returns the
    report; raises ``RunFailure`` (with the report attached where one was
    written) for exit codes 3 and 4 and ``ConfigError`` for code 2.  Failed
    inequality checks are reported through ``report.exit_code == 1``.
    """
    started = time.perf_counter()
    if isinstance(config, (str, os.PathLike)):
        cfg = load_config(config, seed)
    else:
        cfg = validate_config(dict(config), seed)
    out_dir = resolve_out_dir(None if out_dir is None else str(out_dir))
    kind, snaps, extras = _build(cfg)
    tol = cfg["tolerances"]

    if kind == "toy":
        report = _run_toy(cfg, extras, out_dir, started)
        write_json(out_dir / "report.json", report.to_dict())
        if report.exit_code == EXIT_DIVERGED:
            raise RunFailure("toy iteration diverged", EXIT_DIVERGED, report)
        return report

    p, p_ref, param_info = _resolve_params(cfg, snaps)
    static = len(snaps) == 1
    if static:
        snaps = snaps * int(cfg.get("iterations", DEFAULT_STATIC_ITERATIONS))
    ips = int(cfg.get("iters_per_step", 1))
    expected = bool(cfg.get("divergence_expected", False))
    params = dict(p.to_dict(), iters_per_step=ips, **param_info)

    ocfg = dict(cfg.get("oracle", {}))
    with_opt = bool(ocfg.pop("with_opt", False))
    okw = {k: v for k, v in ocfg.items() if v is not None}
    try:
        if static:
            oracle = [solve_akkt(snaps[0], p.gamma, p_ref, with_opt=with_opt, **okw)] * len(snaps)
        else:
            oracle = oracle_trajectory(snaps, p_ref, **okw)
            if with_opt:
                oracle[0] = solve_akkt(snaps[0], p.gamma, p_ref, with_opt=True, w0=oracle[0].w_star, **okw)
    except OracleError as exc:
        report = RunReport(cfg["id"], params, status="oracle_failed", exit_code=EXIT_ORACLE,
                           duration=time.perf_counter() - started, summary={"error": str(exc)})
        write_json(out_dir / "report.json", report.to_dict())
        raise RunFailure(str(exc), EXIT_ORACLE, report) from exc
    write_csv(out_dir / "oracle.csv", ORACLE_COLUMNS, _oracle_rows(oracle[:1] if static else oracle))

    diverged_at = None
    try:
        traj = run_online(snaps, p, iters_per_step=ips, residual_fn=extras.get("residual_fn"))
        states = traj.states
    except DivergenceError as exc:
        diverged_at = exc.index
        states = exc.trajectory.states if exc.trajectory is not None else []

    with np.errstate(over="ignore", invalid="ignore"):
        rows = _trajectory_rows(snaps, states, oracle, p, ips, tol["g_err_floor"])
    write_csv(out_dir / "trajectory.csv", TRAJECTORY_COLUMNS, rows)

    if kind == "opf" and states:
        met = opf_metrics(Trajectory(states[0], states, p, ips), extras["opf"], extras["model"],
                          snapshot_index=[0 if static else k for k in range(len(states))])
        cols = met.as_columns()
        write_csv(out_dir / "opf_metrics.csv", OPF_COLUMNS,
                  [{"k": k, **{c: cols[c][k] for c in cols}} for k in range(len(states))])

    summary = _summarize(rows, oracle, p, static, tol, diverged_at)
    report = RunReport(cfg["id"], params, rows, summary, time.perf_counter() - started)
    if diverged_at is not None:
        summary["divergence_expected"] = expected
        if expected:
            report.status = "diverged_as_expected"
        else:
            report.status, report.exit_code = "diverged", EXIT_DIVERGED
            write_json(out_dir / "report.json", report.to_dict())
            raise RunFailure(f"iterate diverged at snapshot {diverged_at}", EXIT_DIVERGED, report)
    elif expected:
        summary["pass_divergence_expected"] = False
    flags = [v for k, v in summary.items() if k.startswith("pass_") and v is not None]
    if not all(flags):
        report.status, report.exit_code = "check_failed", EXIT_CHECK_FAILED
    write_json(out_dir / "report.json", report.to_dict())
    return report


def _summarize(rows, oracle, p: SolverParams, static: bool, tol: dict, diverged_at) -> dict:
    g = np.array([r["g_err"] for r in rows], dtype=float)
    ratios = [r["contraction_ratio"] for r in rows if r["contraction_ratio"] is not None]
    bounds = [(r["g_err"], r["bound_rhs"]) for r in rows if r["bound_rhs"] is not None]
    rate = p.contraction
    summary: dict[str, Any] = {
        "steps": len(rows),
        "contraction_rate": rate,
        "final_g_err": float(g[-1]) if g.size else None,
        "max_contraction_ratio": max(ratios) if ratios else None,
        "max_recursion_slack": max((e - b for e, b in bounds), default=None),
        "final_akkt_res": rows[-1]["akkt_res"] if rows else None,
        "diverged_at": diverged_at,
    }
    summary["pass_recursion"] = (all(e <= b + tol["recursion"] for e, b in bounds)
                                 if bounds else None)
    if static:
        summary["pass_contraction"] = (summary["max_contraction_ratio"] <= rate + tol["contraction"]
                                       if ratios else None)
        summary["steady_state_g_err"] = summary["final_g_err"]
        summary["tracking_bound"] = None
        summary["pass_tracking"] = None
    else:
        window = int(min(tol["steady_window"], max(1, len(g) // 2)))
        summary["steady_state_g_err"] = float(np.max(g[-window:])) if g.size else None
        drifts = measure_drifts(oracle[: len(rows)]) if len(rows) >= 2 else None
        if drifts is not None and p.delta > 0 and g.size:
            tb = tracking_bound(p, drifts)
            summary["tracking_bound"] = tb.bound
            summary["tracking_bound_recursion"] = tb.recursion_bound
            summary["drift_x"], summary["drift_y"], summary["drift_lambda"] = drifts
            summary["pass_tracking"] = summary["steady_state_g_err"] <= tb.bound
        else:
            summary["tracking_bound"] = None
            summary["pass_tracking"] = None
        summary["pass_contraction"] = None
    if oracle and oracle[0].w_opt is not None:
        w, o = oracle[0].w_star, oracle[0].w_opt
        summary["v_star_dist_opt"] = float(np.linalg.norm(np.concatenate([w.x - o.x, w.y - o.y])))
        summary["lambda_star_norm"] = float(np.linalg.norm(w.lam))
        summary["lambda_opt_norm"] = float(np.linalg.norm(o.lam))
    return summary


# ----------------------------------------------------------------------------- sweeps

SWEEP_COLUMNS = ("value", "exit_code", "status", "steps", "final_g_err", "steady_state_g_err",
                 "max_contraction_ratio", "contraction_rate", "tracking_bound", "final_akkt_res",
                 "v_star_dist_opt", "lambda_star_norm", "lambda_opt_norm",
                 "pass_contraction", "pass_recursion", "pass_tracking")


def _apply_axis(cfg: dict, axis: str, value) -> dict:
    cfg = json.loads(json.dumps(cfg))
    if axis in ("gamma", "beta"):
        cfg.setdefault("params", {})[axis] = float(value)
        if axis == "gamma":
            cfg.setdefault("oracle", {})["with_opt"] = True
    elif axis == "drift_amplitude":
        gen = cfg.get("generator")
        if gen is None or gen.get("type") != "drifting":
            raise ConfigError("drift_amplitude sweeps need a drifting generator")
        gen["drift_amplitude"] = float(value)
    elif axis == "seed":
        cfg["seed"] = int(value)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    return cfg


def _sweep_point(cfg: dict, axis: str, value, out_dir: str) -> dict:
    row = {"value": value}
    try:
        report = run_scenario(_apply_axis(cfg, axis, value), out_dir)
        row.update(exit_code=report.exit_code, status=report.status)
        row.update({k: report.summary.get(k) for k in SWEEP_COLUMNS if k in report.summary})
    except RunFailure as exc:
        row.update(exit_code=exc.code, status=exc.report.status if exc.report else "failed")
    except ConfigError as exc:
        row.update(exit_code=EXIT_SCHEMA, status=f"invalid: {exc}")
    return row


def _parse_value(axis: str, text: str):
    try:
        return int(text) if axis == "seed" else float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for axis {axis}") from exc


def sweep(config, axis: str, values: Sequence, out_dir=None, workers: int = 1,
          seed: Optional[int] = None) -> list[dict]:
    """Run one scenario per axis value; write ``sweep_<axis>.csv`` and return its rows.

    Points are independent (each writes into ``<out>/<axis>=<value>/``) and
    may run in a process pool; rows keep the order of ``values``.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    cfg = load_config(config, seed) if isinstance(config, (str, os.PathLike)) else validate_config(config, seed)
    values = [_parse_value(axis, v) if isinstance(v, str) else v for v in values]
    if not values:
        raise ConfigError("no sweep values given")
    for v in values:
        _apply_axis(cfg, axis, v)  # reject bad axes before launching anything
    root = resolve_out_dir(None if out_dir is None else str(out_dir))
    dirs = [str(root / f"{axis}={_fmt(v)}") for v in values]
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_point, cfg, axis, v, d) for v, d in zip(values, dirs)]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_point(cfg, axis, v, d) for v, d in zip(values, dirs)]
    write_csv(root / f"sweep_{axis}.csv", SWEEP_COLUMNS, rows)
    return rows


# ----------------------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tvadmm", description="Online perturbed proximal ADMM runs.")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("config")
    run.add_argument("--out", default=None, help=f"output directory (else ${OUT_ENV}, else ./{DEFAULT_OUT})")
    sw = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    sw.add_argument("config")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", default=None)
    for p in (run, sw):
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the scenario seed")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_scenario(args.config, args.out, seed=args.seed)
            if "growth" in report.summary:
                detail = f"growth {_fmt(report.summary['growth'])}"
            else:
                detail = f"final g_err {_fmt(report.summary.get('final_g_err'))}"
            print(f"{report.scenario_id}: {report.status} ({detail})")
            return report.exit_code
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        rows = sweep(args.config, args.axis, values, args.out, max(1, args.workers), seed=args.seed)
        for row in rows:
            print(f"{args.axis}={_fmt(row['value'])}: {row['status']}")
        codes = [row["exit_code"] for row in rows]
        return max(codes) if codes else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except RunFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
