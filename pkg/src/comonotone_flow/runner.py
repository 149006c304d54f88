"""Config-driven experiment runs: validate, integrate, diagnose, write files.

Every run writes four files into its output directory:

``trajectory.csv``
    ``t, x_1..x_n, xdot_1..xdot_n, norm_x_minus_xstar, norm_xdot, norm_Ax``
``diagnostics.csv``
    DS runs: ``t, eps, energy, dist_viscosity_sq, operator_residual_sq,
    residual_position, residual_velocity, residual_operator``.
    TDS runs: ``t, dist_reference_sq, norm_xdot_sq, norm_Ax_sq``.
``summary.json``
    rate fits, bound and certificate verdicts, final norms.
``hypotheses.json``
    the hypothesis report for the schedule, parameters and operator.

Numbers are written with 17 significant digits, so reruns of the same
config are byte-identical.
"""

import copy
import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, override, parse_config
from .diagnostics import (decay_certificate, energy_series, fit_rate, rate_exponents)
from .dynamics import SystemKind, simulate
from .errors import FlowError, InsufficientData
from .operators import yosida
from .schedules import check_hypotheses, default_grid, eval_schedule

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "COMONOTONE_FLOW_OUTPUT_ROOT"
BOUND_TOL = 1e-6
RATE_TOL = 0.15
SWEEP_PARAMETERS = ("q", "gamma", "delta", "eta", "tf")


@dataclass
class RunArtifacts:
    trajectory_csv: Path
    diagnostics_csv: Path
    summary_json: Path
    hypotheses_json: Path
    summary: dict = None


def fmt(value):
    """17-significant-digit text for CSV cells."""
    return format(float(value), ".17g")


def atomic_write(path, text):
    path = Path(path)
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


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    atomic_write(path, buf.getvalue())


def write_json(path, payload):
    atomic_write(path, json.dumps(_jsonable(payload), indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def resolve_output_dir(directory):
    root = os.environ.get(OUTPUT_ROOT_ENV)
    path = Path(directory)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _fit_or_error(t, values, window, quantity, theory):
    try:
        fit = fit_rate(t, values, window, quantity)
    except FlowError as exc:
        return {"quantity": quantity, "error": f"{type(exc).__name__}: {exc}"}
    out = {"quantity": quantity, "slope": fit.slope, "r_squared": fit.r_squared,
           "window": list(fit.window), "points": fit.points}
    for reading, exps in theory.items():
        exp = exps.get(quantity)
        if exp is not None:
            out[f"theory_{reading}"] = exp
            out[f"within_tolerance_{reading}"] = bool(abs(fit.slope - exp) <= RATE_TOL)
            # an O(t^p) bound predicts a slope no larger than p
            out[f"consistent_with_bound_{reading}"] = bool(fit.slope <= exp + RATE_TOL)
    return out


def _distance_summary(t, dist, window):
    out = {"initial": float(dist[0]), "final": float(dist[-1]),
           "decreased": bool(dist[-1] < dist[0])}
    fit = _fit_or_error(t, dist, window, "distance_to_reference", {})
    if "slope" in fit:
        out["trend_slope"] = fit["slope"]
    return out


def execute(cfg):
    """Run one experiment in memory. Returns (trajectory, rows, summary, report)."""
    op, s, p = cfg.operator, cfg.schedule, cfg.params
    grid = default_grid(s.t0, max(cfg.tf, 10 * s.t0), cfg.hypothesis_points)
    report = check_hypotheses(s, p, op, grid)
    warnings = [f"hypothesis {name} failed" for name in report.failed()]
    for w in warnings:
        log.warning(w)

    traj = simulate(cfg.system, cfg.x0, cfg.v0, cfg.tf, p, s, op, cfg.integrator)
    ax = np.array([yosida(op, x) for x in traj.x])
    n = op.dim
    norm_xdot = np.linalg.norm(traj.xdot, axis=1)
    norm_ax = np.linalg.norm(ax, axis=1)
    if cfg.x_star is not None:
        dist = np.linalg.norm(traj.x - cfg.x_star, axis=1)
    else:
        dist = np.full(traj.t.size, np.nan)
    traj_rows = [[t, *x, *v, d, nv, na] for t, x, v, d, nv, na
                 in zip(traj.t, traj.x, traj.xdot, dist, norm_xdot, norm_ax)]
    traj_header = (["t"] + [f"x_{i + 1}" for i in range(n)] + [f"xdot_{i + 1}" for i in range(n)]
                   + ["norm_x_minus_xstar", "norm_xdot", "norm_Ax"])

    summary = {
        "version": __version__,
        "system": cfg.system.value,
        "parameters": {"gamma": p.gamma, "delta": p.delta, "alpha": p.alpha, "beta": p.beta,
                       "rho": op.rho, "eta": op.eta, "q": s.q, "t0": s.t0, "tf": cfg.tf},
        "final": {"t": float(traj.t[-1]), "x": traj.x[-1], "xdot": traj.xdot[-1],
                  "norm_x": float(np.linalg.norm(traj.x[-1])), "norm_xdot": float(norm_xdot[-1]),
                  "norm_Ax": float(norm_ax[-1])},
        "hypotheses_ok": report.ok(),
        "warnings": warnings,
        "integrator": {"rel_tol": cfg.integrator.rel_tol, "abs_tol": cfg.integrator.abs_tol,
                       "accepted_steps": traj.stats.accepted,
                       "rejected_steps": traj.stats.rejected,
                       "field_evaluations": traj.stats.evaluations,
                       "min_step": traj.stats.min_step, "max_step": traj.stats.max_step},
    }
    if cfg.x_star is not None:
        summary["final"]["norm_x_minus_xstar"] = float(dist[-1])
        summary["distance_to_reference"] = _distance_summary(traj.t, dist, cfg.rate_window)

    if cfg.system is SystemKind.TDS:
        diag_header = ["t", "dist_reference_sq", "norm_xdot_sq", "norm_Ax_sq"]
        diag_rows = [[t, d * d, v * v, a * a] for t, d, v, a in zip(traj.t, dist, norm_xdot, norm_ax)]
        return traj, (traj_header, traj_rows, diag_header, diag_rows), summary, report

    records = energy_series(traj, p, s, op)
    eps = np.array([eval_schedule(s, t)[0] for t in traj.t])
    en = np.array([r.energy for r in records])
    res = np.array([r.bound_residuals for r in records])
    xe = np.array([r.x_eps for r in records])
    dvis = np.sum((traj.x - xe) ** 2, axis=1)
    opres = np.sum((ax + eps[:, None] * xe) ** 2, axis=1)
    diag_header = ["t", "eps", "energy", "dist_viscosity_sq", "operator_residual_sq",
                   "residual_position", "residual_velocity", "residual_operator"]
    diag_rows = [[t, e, E, dv, o, *r] for t, e, E, dv, o, r in zip(traj.t, eps, en, dvis, opres, res)]

    normalized = res / (1.0 + en[:, None])
    summary["energy_bounds"] = {
        "min_normalized_residual": float(normalized.min()),
        "min_energy": float(en.min()),
        "tolerance": BOUND_TOL,
        "passed": bool(normalized.min() >= -BOUND_TOL and en.min() >= -BOUND_TOL),
    }

    theory = rate_exponents(s.q)
    w = cfg.rate_window
    summary["rates"] = [
        _fit_or_error(traj.t, dvis, w, "position", theory),
        _fit_or_error(traj.t, norm_xdot ** 2, w, "velocity", theory),
        _fit_or_error(traj.t, opres, w, "operator", theory),
        _fit_or_error(traj.t, en, w, "energy", theory),
    ]

    t1 = report["second_derivative_bound"].t1_estimate
    if cfg.x_star is None:
        summary["decay_certificate"] = {"status": "skipped", "reason": "no reference x_star"}
    elif t1 is None or not report.ok(["eps_vanishing", "eta_admissible", "delta_window",
                                      "inv_sqrt_eps_rate_vanishing"]):
        summary["decay_certificate"] = {"status": "skipped", "reason": "premises not met"}
    else:
        try:
            cert = decay_certificate(traj, p, s, op, t1, cfg.x_star, energies=en)
            summary["decay_certificate"] = {
                "status": "checked", "satisfied": cert.satisfied, "t1": cert.t1,
                "a": cert.a_choice, "worst_energy_to_bound_ratio": cert.worst_ratio,
                "omega_closed_form_rel_err": cert.omega_closed_form_rel_err,
            }
        except InsufficientData as exc:
            summary["decay_certificate"] = {"status": "skipped", "reason": str(exc)}
    return traj, (traj_header, traj_rows, diag_header, diag_rows), summary, report


def _write_error(out_dir, exc):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "key", None):
        payload["key"] = exc.key
    if out_dir is not None:
        try:
            write_json(Path(out_dir) / "error.json", payload)
        except OSError:
            pass
    return payload


def run_config(cfg, out_dir=None, source=None):
    """Execute a parsed config and write its artifacts."""
    out = Path(out_dir) if out_dir is not None else resolve_output_dir(cfg.output_dir)
    _, (th, tr, dh, dr), summary, report = execute(cfg)
    if source is not None:
        summary = {"config": str(source), **summary}
    arts = RunArtifacts(out / "trajectory.csv", out / "diagnostics.csv",
                        out / "summary.json", out / "hypotheses.json", summary)
    write_csv(arts.trajectory_csv, th, tr)
    write_csv(arts.diagnostics_csv, dh, dr)
    write_json(arts.summary_json, summary)
    write_json(arts.hypotheses_json, report.to_dict())
    log.info("wrote %s", out)
    return arts


def run_experiment(config_path, out_dir=None):
    """Load ``config_path``, run it and return the written :class:`RunArtifacts`."""
    cfg = load_config(config_path)
    return run_config(cfg, out_dir, source=Path(config_path).name)


def check_config(config_path):
    """Hypothesis report only; no integration."""
    cfg = load_config(config_path)
    grid = default_grid(cfg.schedule.t0, max(cfg.tf, 10 * cfg.schedule.t0), cfg.hypothesis_points)
    return check_hypotheses(cfg.schedule, cfg.params, cfg.operator, grid)


def _value_label(value):
    return str(value).replace("/", "_over_").replace(" ", "")


def _sweep_one(args):
    data, parameter, value, out = args
    try:
        cfg = parse_config(override(data, parameter, value))
        arts = run_config(cfg, out)
        return value, arts, None
    except FlowError as exc:
        _write_error(out, exc)
        return value, None, f"{type(exc).__name__}: {exc}"


SWEEP_COLUMNS = ["value", "status", "position_slope", "position_r_squared", "position_theory",
                 "velocity_slope", "velocity_theory_proof", "velocity_theory_statement",
                 "operator_slope", "energy_slope", "energy_theory", "final_distance", "error"]


def sweep(config_path, parameter, values, jobs=1, out_dir=None):
    """One run per value of ``parameter``; writes an aggregated ``rates.csv``.

    Failed runs are recorded in ``rates.csv`` and do not stop the sweep.
    """
    import yaml

    if parameter not in SWEEP_PARAMETERS:
        raise InsufficientData(f"parameter must be one of {SWEEP_PARAMETERS}")
    values = list(values)
    if not values:
        raise InsufficientData("sweep needs at least one value")
    with open(config_path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    base = parse_config(data)
    root = Path(out_dir) if out_dir is not None else resolve_output_dir(base.output_dir)
    tasks = [(copy.deepcopy(data), parameter, v, root / f"{parameter}-{_value_label(v)}")
             for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]

    rows = []
    for value, arts, err in results:
        if arts is None:
            rows.append([str(value), "failed"] + [""] * 10 + [err])
            continue
        rates = {r["quantity"]: r for r in arts.summary.get("rates", [])}

        def cell(q, key):
            v = rates.get(q, {}).get(key)
            return "" if v is None else v

        rows.append([str(value), "ok",
                     cell("position", "slope"), cell("position", "r_squared"),
                     cell("position", "theory_proof"),
                     cell("velocity", "slope"), cell("velocity", "theory_proof"),
                     cell("velocity", "theory_statement"),
                     cell("operator", "slope"),
                     cell("energy", "slope"), cell("energy", "theory_proof"),
                     arts.summary["final"].get("norm_x_minus_xstar", ""), ""])
    write_csv(root / "rates.csv", SWEEP_COLUMNS, rows)
    return [arts for _, arts, _ in results]
