"""Execute one experiment config and write its artifacts."""

from __future__ import annotations

import dataclasses
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import certificates as cert
from ..analysis import asymptotic_ball, classify_convergence
from ..errors import MonoflowError
from ..operators import is_infinite, is_subdifferential, objective_value, project_to_solutions
from ..schemes import (
    Perturbation,
    Trajectory,
    crandall_liggett_point,
    classify_schedule,
    make_schedule,
    reference_flow,
    run_euler,
    run_perturbed_proximal,
    run_proximal,
    run_tikhonov_flow,
    run_yosida_flow,
)
from .config import ExperimentConfig, weight_function
from .plotting import Series, emit_plot
from .serialize import dumps, write_csv

SERIES_FILE = "series.csv"
REPORT_FILE = "report.json"
TIMING_FILE = "timing.json"


@dataclass
class RunArtifacts:
    ok: bool
    series_path: Optional[str]
    report_path: Optional[str]
    plot_paths: list
    timing_path: Optional[str]
    report: dict = field(default_factory=dict)
    trajectory: Optional[Trajectory] = None


# ---------------------------------------------------------------------------
# scheme dispatch


def run_scheme(cfg: ExperimentConfig, op, x0) -> Trajectory:
    p = cfg.params
    if cfg.discrete:
        sched = cfg.build_schedule()
        n = cfg.horizon["n_steps"]
        stride = int(p.get("stride", 1))
        if cfg.scheme == "proximal":
            return run_proximal(op, x0, sched, n, stride)
        if cfg.scheme == "euler":
            return run_euler(op, x0, sched, n, stride)
        pert = p["perturbation"]
        if pert["kind"] == "tikhonov":
            w = weight_function(pert.get("eps", {"kind": "zero"}))
            perturbation = Perturbation("tikhonov", np.array([w(k) for k in range(1, n + 1)]))
        else:
            rng = np.random.default_rng(cfg.seed)
            k = np.arange(1, n + 1, dtype=float)
            scale = float(pert.get("scale", 0.0)) * k ** (-float(pert.get("p", 2.0)))
            perturbation = Perturbation("additive", scale[:, None] * rng.standard_normal((n, op.dim)))
        return run_perturbed_proximal(op, x0, sched, perturbation, n, stride)
    t_end = float(cfg.horizon["t_end"])
    if cfg.scheme == "reference_flow":
        return reference_flow(op, x0, t_end, tol=float(p.get("tol", 1e-3)), n_samples=int(p.get("n_samples", 101)))
    if cfg.scheme == "yosida_flow":
        lam = float(p["lam"])
        return run_yosida_flow(op, x0, lam, t_end, float(p.get("dt", lam / 4)))
    if cfg.scheme == "tikhonov_flow":
        eps = weight_function(p.get("eps", {"kind": "zero"}))
        dt = p.get("dt")
        return run_tikhonov_flow(op, x0, eps, t_end, None if dt is None else float(dt), int(p.get("stride", 1)))
    m = int(p.get("m", 64))
    times = np.linspace(0.0, t_end, int(p.get("n_samples", 101)))
    pts = np.array([crandall_liggett_point(op, x0, t, m) for t in times])
    prov = {"scheme": "crandall_liggett", "operator": op.id, "m": m}
    return Trajectory("crandall_liggett", np.arange(len(times)), times, pts, provenance=prov, operator=op)


# ---------------------------------------------------------------------------
# certificates


def _default_u(cfg, op, params):
    if "u" in params:
        return np.asarray(params["u"], dtype=float)
    return np.random.default_rng(cfg.seed + 7).standard_normal(op.dim)


def run_certificate(name: str, params: dict, cfg: ExperimentConfig, op, traj: Trajectory) -> list:
    x0 = traj.points[0]
    if name == "fejer":
        p = params.get("p")
        p = project_to_solutions(op, x0) if p is None else p
        return [cert.certify_fejer(traj, p, form=params.get("form", "auto"))]
    if name == "velocity":
        return [cert.certify_velocity(traj)]
    if name == "velocity_rate":
        return [cert.certify_velocity_rate(traj)]
    if name == "value_rates":
        return cert.certify_value_rates(op, traj, params.get("u"))
    if name in ("kobayashi", "euler_kobayashi"):
        sched = make_schedule(params.get("schedule", {"kind": "constant", "c": 0.1}))
        n = int(params.get("n_steps", cfg.horizon["n_steps"]))
        start = np.asarray(params.get("start", x0), dtype=float)
        u = _default_u(cfg, op, params)
        if name == "kobayashi":
            other = run_proximal(op, start, sched, n)
            return [cert.certify_kobayashi(traj, other, u, grid=int(params.get("grid", 10)))]
        other = run_euler(op, start, sched, n)
        return [cert.certify_euler_kobayashi(traj, other, u, grid=int(params.get("grid", 10)))]
    if name == "chernoff":
        return [cert.certify_chernoff(op, float(params.get("lam", 1.0)), params.get("x", x0),
                                      params.get("t", [0.5, 1.0, 2.0, 4.0, 8.0]),
                                      params.get("n", [1, 2, 4, 8, 16]), float(params.get("tol", 1e-6)))]
    if name == "exponential_formula":
        t = float(params.get("t", cfg.horizon.get("t_end", 1.0)))
        return [cert.certify_exponential_formula(op, params.get("x", x0), t, params.get("m_list", [4, 16, 64, 256]))]
    if name == "flow_vs_prox":
        return [cert.certify_flow_vs_prox(traj, params.get("z", x0), float(params.get("tol", 1e-4)))]
    if name == "integral_solution":
        return [cert.certify_integral_solution(op, traj, n_pairs=int(params.get("n_pairs", 10)), seed=cfg.seed)]
    if name == "path_length":
        if "center" in params:
            center, radius = params["center"], float(params["radius"])
        else:
            ball = None if op.solutions is None or op.solutions.empty else op.solutions.set.interior_ball()
            if ball is None:
                raise ValueError("path_length needs a ball inside S; pass center and radius")
            center, radius = ball
        return [cert.certify_path_length(traj, center, radius)]
    if name == "strong_decay":
        return [cert.certify_strong_decay(traj, params.get("alpha"))]
    raise ValueError(f"unknown certificate {name!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# series


def series_rows(op, traj: Trajectory):
    d = traj.dim
    header = ["index", "time"] + [f"x{i}" for i in range(d)] + ["vel_norm", "dist_S", "f_value", "sigma", "tau"]
    n = len(traj)
    vel = np.linalg.norm(traj.velocities, axis=1) if traj.velocities is not None else np.full(n, np.nan)
    if op.solutions is not None and not op.solutions.empty:
        dist = op.solutions.set.distance(traj.points)
    else:
        dist = [None] * n
    if is_subdifferential(op):
        fvals = []
        for x in traj.points:
            v = objective_value(op, x)
            fvals.append(float("inf") if is_infinite(v) else v)
    else:
        fvals = [None] * n
    sigma = traj.sigma if traj.sigma is not None else [None] * n
    tau = traj.tau if traj.tau is not None else [None] * n
    rows = []
    for i in range(n):
        rows.append([int(traj.index[i]), float(traj.times[i]), *traj.points[i].tolist(), vel[i],
                     None if dist[i] is None else float(dist[i]), fvals[i],
                     None if sigma[i] is None else float(sigma[i]), None if tau[i] is None else float(tau[i])])
    return header, rows


# ---------------------------------------------------------------------------
# orchestration


def _analysis(op, traj):
    out = {}
    if len(traj) >= 100:
        out["convergence"] = classify_convergence(traj, op.solutions).to_dict()
    else:
        out["convergence"] = None
    if len(traj) >= 10:
        ball = asymptotic_ball(traj, 0.5)
        out["asymptotic_center"] = {"center": ball.center.tolist(), "radius": ball.radius, "tail_fraction": 0.5}
    return out


def run_experiment(cfg: ExperimentConfig, out_dir, seed: Optional[int] = None) -> RunArtifacts:
    """Run one config; writes series.csv, report.json, timing.json and plots into out_dir.

    Module errors are caught and recorded in a report with ``status: error``.
    Wall-clock time goes to timing.json so the report itself is reproducible.
    """
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=int(seed))
    os.makedirs(out_dir, exist_ok=True)
    t_start = time.perf_counter()
    report = {"name": cfg.name, "status": "ok", "config": cfg.to_dict()}
    series_path = report_path = None
    plots = []
    traj = None
    try:
        op = cfg.build_operator()
        x0 = cfg.start_point(op.dim)
        report["operator"] = {"id": op.id, "kind": op.kind, "dim": op.dim, "flags": op.flags.to_dict(),
                              "solutions": None if op.solutions is None else op.solutions.to_spec()}
        if cfg.discrete:
            sched = cfg.build_schedule()
            report["schedule"] = {"id": sched.id, "summability": classify_schedule(sched).to_dict()}
        traj = run_scheme(cfg, op, x0)
        report["n_samples"] = len(traj)
        report["final_point"] = traj.final.tolist()
        report.update(_analysis(op, traj))
        results = []
        for entry in cfg.certificates:
            try:
                certs = run_certificate(entry["name"], entry["params"], cfg, op, traj)
                results.append({"name": entry["name"], "passed": all(c.passed for c in certs),
                                "results": [c.to_dict() for c in certs]})
            except (MonoflowError, ValueError) as exc:
                results.append({"name": entry["name"], "passed": False,
                                "error": {"type": type(exc).__name__, "message": str(exc)}})
        report["certificates"] = results
        report["all_certificates_passed"] = all(r["passed"] for r in results)
        header, rows = series_rows(op, traj)
        files = {}
        if cfg.outputs.get("csv", True):
            series_path = os.path.join(out_dir, SERIES_FILE)
            write_csv(series_path, header, rows)
            files["series"] = SERIES_FILE
        for k, plot in enumerate(cfg.outputs.get("plots") or []):
            spec = plot if isinstance(plot, dict) else {"x": plot[0], "y": plot[1]}
            fname = f"plot_{k}_{spec['x']}_{spec['y']}.svg"
            columns = {name: np.array([np.nan if r[j] is None else float(r[j]) for r in rows])
                       for j, name in enumerate(header)}
            emit_plot(Series(columns), (spec["x"], spec["y"]), os.path.join(out_dir, fname),
                      log_x=bool(spec.get("log_x", False)), log_y=bool(spec.get("log_y", False)), title=cfg.name)
            plots.append(os.path.join(out_dir, fname))
            files.setdefault("plots", []).append(fname)
        report["files"] = files
        ok = True
    except (MonoflowError, ValueError) as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        ok = False
    if cfg.outputs.get("report", True) or not ok:
        report_path = os.path.join(out_dir, REPORT_FILE)
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(report))
    timing_path = os.path.join(out_dir, TIMING_FILE)
    with open(timing_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps({"wall_clock_seconds": time.perf_counter() - t_start}))
    return RunArtifacts(ok, series_path, report_path, plots, timing_path, report, traj)
