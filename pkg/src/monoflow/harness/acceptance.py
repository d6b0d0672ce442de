"""The acceptance criteria as executable checks.

Each ``criterion_*`` function returns a list of :class:`CriterionResult`
(criterion 7 reports its sub-checks separately).  Failures are reported,
never raised; :func:`suite_run` collects everything into a summary.
"""

from __future__ import annotations

import filecmp
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.optimize

from .. import certificates as cert
from ..analysis import asymptotic_center, classify_convergence, min_enclosing_ball
from ..operators import (
    Composition,
    Projection,
    ResolventMap,
    Rotation,
    catalog,
    dist_squared,
    minimal_section_norm,
    normal_cone,
    project_to_solutions,
    quadratic,
    residual,
    resolvent,
    shifted,
    skew,
    soft_abs,
)
from ..schemes import (
    ReferenceFlowSystem,
    TikhonovSystem,
    average,
    make_schedule,
    reference_flow,
    run_euler,
    run_proximal,
    run_tikhonov_flow,
    run_yosida_flow,
)
from ..sets import Ball, Halfspace
from .presets import load_preset, preset_names
from .runner import run_experiment

SUITES = ("fast", "full")

ROT = [[0.0, 1.0], [-1.0, 0.0]]


@dataclass
class CriterionResult:
    cid: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.cid:>4} {self.title}: {vals}"

    def to_dict(self):
        return {"id": self.cid, "title": self.title, "passed": self.passed,
                "measured": self.measured, "seconds": self.seconds}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _result(cid, title, passed, **measured):
    return CriterionResult(cid, title, bool(passed), measured)


def _unit_ball(d=2):
    return Ball(np.zeros(d), 1.0)


def _sample_ops():
    return [
        quadratic(np.diag([1.0, 0.5])),
        skew(ROT),
        normal_cone(_unit_ball()),
        dist_squared(_unit_ball()),
    ]


def _sample_schedules():
    return [make_schedule("constant", c=1.0), make_schedule("power", c=2.0, p=1.0),
            make_schedule("power", c=1.0, p=0.5)]


# ---------------------------------------------------------------------------
# criteria


def criterion_1(resolvent_fn: Callable = resolvent, n_pairs: int = 1000) -> list:
    """Nonexpansive resolvents over the catalog."""
    worst = -math.inf
    for dim in (2, 5):
        for op in catalog(dim, seed=dim):
            rng = np.random.default_rng(100 + dim)
            for lam in (0.01, 0.1, 1.0, 10.0):
                x = 3 * rng.standard_normal((n_pairs, dim))
                y = 3 * rng.standard_normal((n_pairs, dim))
                gap = (np.linalg.norm(resolvent_fn(op, lam, x) - resolvent_fn(op, lam, y), axis=1)
                       - np.linalg.norm(x - y, axis=1))
                worst = max(worst, float(gap.max()))
    return [_result("1", "resolvent nonexpansive", worst <= 1e-10, max_excess=worst)]


def criterion_2(n: int = 500) -> list:
    worst = math.inf
    rng = np.random.default_rng(2)
    for op in _sample_ops():
        for sched in _sample_schedules():
            x0 = 2.5 * rng.standard_normal(2)
            traj = run_proximal(op, x0, sched, n)
            c = cert.certify_fejer(traj, project_to_solutions(op, x0), form="fejer")
            worst = min(worst, c.min_margin)
    return [_result("2", "stepwise proximal inequality", worst >= -1e-9, min_margin=worst)]


def criterion_3(n: int = 500) -> list:
    worst = math.inf
    rng = np.random.default_rng(2)
    for op in _sample_ops():
        for sched in _sample_schedules():
            traj = run_proximal(op, 2.5 * rng.standard_normal(2), sched, n)
            speed = np.linalg.norm(traj.velocities[1:], axis=1)
            worst = min(worst, float(np.min(speed[:-1] - speed[1:])))
    flow_ok = True
    flow_worst = math.inf
    for op in (quadratic(np.diag([1.0, 0.5])), skew(ROT)):
        c = cert.certify_velocity(reference_flow(op, [1.0, 1.0], 2.0, tol=1e-6, n_samples=41))
        flow_ok &= c.passed
        flow_worst = min(flow_worst, c.min_margin)
    return [_result("3", "velocity monotone", worst >= -1e-10 and flow_ok,
                    proximal_min_margin=worst, flow_min_margin=flow_worst)]


def criterion_4(n_configs: int = 100, n_euler: int = 20, n: int = 200) -> list:
    rng = np.random.default_rng(4)
    ops = [op for op in catalog(2, seed=4)]
    worst = math.inf
    for k in range(n_configs):
        op = ops[k % len(ops)]
        sa = make_schedule("power", c=float(rng.uniform(0.2, 2.0)), p=float(rng.uniform(0.0, 1.0)))
        sb = make_schedule("power", c=float(rng.uniform(0.2, 2.0)), p=float(rng.uniform(0.0, 1.0)))
        a = run_proximal(op, 2 * rng.standard_normal(2), sa, n)
        b = run_proximal(op, 2 * rng.standard_normal(2), sb, n)
        u = resolvent(op, 1.0, 2 * rng.standard_normal(2))
        worst = min(worst, cert.certify_kobayashi(a, b, u).min_margin)
    res = [
        residual(Rotation(math.pi / 3)),
        residual(Composition((Projection(_unit_ball()), Projection(Halfspace(np.array([1.0, 1.0]), 0.5))))),
        residual(ResolventMap(quadratic(np.diag([1.0, 0.2])), 1.0)),
        residual(Projection(Halfspace(np.array([0.0, 1.0]), -0.5))),
    ]
    worst_e = math.inf
    for k in range(n_euler):
        op = res[k % len(res)]
        sa = make_schedule("power", c=float(rng.uniform(0.1, 1.0)), p=float(rng.uniform(0.0, 1.0)))
        sb = make_schedule("power", c=float(rng.uniform(0.1, 1.0)), p=float(rng.uniform(0.0, 1.0)))
        a = run_euler(op, 2 * rng.standard_normal(2), sa, n)
        b = run_euler(op, 2 * rng.standard_normal(2), sb, n)
        worst_e = min(worst_e, cert.certify_euler_kobayashi(a, b, rng.standard_normal(2)).min_margin)
    return [_result("4", "Kobayashi inequality", worst >= -1e-9 and worst_e >= -1e-9,
                    proximal_min_margin=worst, euler_min_margin=worst_e)]


def criterion_5() -> list:
    ok = True
    worst = math.inf
    for op in (quadratic(np.diag([1.0, 0.5])), skew(ROT)):
        for t in (0.5, 1.0, 2.0):
            c = cert.certify_exponential_formula(op, [1.0, -0.5], t, [4, 16, 64, 256])
            ok &= c.passed and c.details["error_decreasing_in_m"]
            worst = min(worst, c.min_margin)
    return [_result("5", "exponential formula bound", ok, min_margin=worst)]


def criterion_6() -> list:
    ok = True
    worst = math.inf
    x0 = np.array([1.0, -0.5])
    for op in (quadratic(np.diag([1.0, 0.5])), skew(ROT)):
        speed = minimal_section_norm(op, x0)
        for lam in (0.1, 0.01):
            dt = lam / 4
            traj = run_yosida_flow(op, x0, lam, 2.0, dt)
            pick = np.unique(np.linspace(0, len(traj) - 1, 21).astype(int))
            tol = 1e-6
            ref = reference_flow(op, x0, tol=tol, times=traj.times[pick])
            err = np.linalg.norm(traj.points[pick] - ref.points, axis=1)
            bound = 2 * speed * np.sqrt(lam * traj.times[pick]) + 10 * dt + tol
            ok &= bool(np.all(err <= bound))
            worst = min(worst, float(np.min(bound - err)))
    return [_result("6", "Yosida-flow estimate", ok, min_margin=worst)]


def criterion_7(n: int = 10_000) -> list:
    rot = skew(ROT)
    r0 = 1.0
    x0 = np.array([r0, 0.0])
    # (a) harmonic steps: not square summable, not summable
    traj = run_proximal(rot, x0, make_schedule("power", c=1.0, p=1.0), n)
    k = np.arange(1, n + 1, dtype=float)
    expect = r0 * np.exp(np.concatenate([[0.0], np.cumsum(-0.5 * np.log1p(1 / k**2))]))
    norms = traj.norms()
    err_a = float(np.max(np.abs(norms - expect)))
    avg_norm = float(np.linalg.norm(average(traj).points[-1]))
    out = [
        _result("7a", "rotation 1/n: norms match and stay >= r0/2", err_a <= 1e-12 and norms.min() >= 0.5 * r0,
                max_abs_err=err_a, min_norm=float(norms.min())),
        _result("7a'", "rotation 1/n: average norm <= 0.05 r0", avg_norm <= 0.05 * r0,
                average_norm=avg_norm, threshold=0.05 * r0),
    ]
    # (b) steps 1/sqrt(n)
    traj = run_proximal(rot, x0, make_schedule("power", c=1.0, p=0.5), n)
    err_b = float(np.max(np.abs(traj.norms() - r0 / np.sqrt(np.arange(n + 1) + 1.0))))
    rate = cert.certify_velocity_rate(traj)
    out.append(_result("7b", "rotation 1/sqrt(n): norms and velocity rate", err_b <= 1e-12 and rate.passed,
                       max_abs_err=err_b, rate_min_margin=rate.min_margin))
    # (c) Euler with unit steps
    m = 200
    traj = run_euler(rot, x0, make_schedule("constant", c=1.0), m)
    expect = r0 * 2.0 ** (np.arange(m + 1) / 2)
    rel = float(np.max(np.abs(traj.norms() - expect) / expect))
    verdict = classify_convergence(traj).verdict.kind
    out.append(_result("7c", "Euler unit steps diverge", rel <= 1e-9 and verdict == "norm_divergent",
                       max_rel_err=rel, verdict=verdict))
    return out


def criterion_8(n: int = 1000) -> list:
    ok = True
    names = {}
    runs = [
        (quadratic(np.diag([1.0, 0.5])), [2.0, -1.0]),
        (soft_abs(2), [2.0, -1.0]),
        (dist_squared(_unit_ball()), [3.0, 1.0]),
    ]
    for op, x0 in runs:
        for sched in (make_schedule("constant", c=1.0), make_schedule("power", c=1.0, p=0.5)):
            for c in cert.certify_value_rates(op, run_proximal(op, x0, sched, n)):
                ok &= c.passed
                names[c.name] = min(names.get(c.name, math.inf), c.min_margin)
        flow = reference_flow(op, x0, 3.0, tol=1e-6, n_samples=31)
        for c in cert.certify_value_rates(op, flow):
            ok &= c.passed
            names[c.name] = min(names.get(c.name, math.inf), c.min_margin)
    return [_result("8", "value rates", ok, **{f"{k}_min_margin": v for k, v in names.items()})]


def criterion_9(n: int = 10_000) -> list:
    op = dist_squared(_unit_ball())
    traj = run_euler(op, [3.0, 4.0], make_schedule("power", c=1.0, p=1.0), n)
    c = [c for c in cert.certify_value_rates(op, traj) if c.name == "euler_value"][0]
    fmin = c.details["final_running_min_gap"]
    dist = float(op.solutions.set.distance(traj.final))
    return [_result("9", "Euler liminf on compact S", c.passed and fmin <= 1e-4 and dist <= 1e-2,
                    running_min_f=fmin, final_dist=dist)]


def criterion_10(n: int = 1000) -> list:
    op = shifted(quadratic(np.zeros((2, 2))), 1.0)
    x0 = np.array([1.5, -2.0])
    err = 0.0
    for sched in (make_schedule("constant", c=0.5), make_schedule("power", c=1.0, p=0.5)):
        traj = run_proximal(op, x0, sched, n)
        lam = sched.steps(n)
        expect = np.linalg.norm(x0) * np.exp(np.concatenate([[0.0], np.cumsum(-np.log1p(lam))]))
        err = max(err, float(np.max(np.abs(traj.norms() - expect))))
    decay = cert.certify_strong_decay(reference_flow(op, x0, 5.0, tol=1e-6, n_samples=51), alpha=1.0)
    return [_result("10", "strong monotonicity decay", err <= 1e-12 and decay.passed,
                    max_abs_err=err, decay_min_margin=decay.min_margin)]


def criterion_11(n: int = 1000) -> list:
    ball = _unit_ball()
    sched = make_schedule("power", c=0.5, p=0.75)
    runs = [
        ("proximal normal_cone", run_proximal(normal_cone(ball), [2.0, 1.0], sched, n)),
        ("proximal dist_squared", run_proximal(dist_squared(ball), [2.0, 1.0], sched, n)),
        ("euler dist_squared", run_euler(dist_squared(ball), [2.0, 1.0], sched, n)),
    ]
    ok = True
    verdicts = []
    worst = math.inf
    for _, traj in runs:
        v = classify_convergence(traj).verdict.kind
        verdicts.append(v)
        c = cert.certify_path_length(traj, [0.0, 0.0], 1.0)
        ok &= v == "converges" and c.passed
        worst = min(worst, c.min_margin)
    return [_result("11", "interior solution set", ok, verdicts="/".join(verdicts), path_min_margin=worst)]


def criterion_12() -> list:
    op = quadratic(np.diag([1.0, 0.0]))
    x0 = [1.0, 1.0]
    tik = run_tikhonov_flow(op, x0, lambda t: 1.0 / (1.0 + t), 1000.0)
    plain = run_tikhonov_flow(op, x0, lambda t: 0.0, 1000.0, dt=0.1)
    d_tik = float(np.linalg.norm(tik.final))
    d_plain = float(np.linalg.norm(plain.final - np.array([0.0, 1.0])))
    return [_result("12", "Tikhonov least-norm limit", d_tik <= 1e-2 and d_plain <= 1e-6,
                    tikhonov_dist_to_0=d_tik, plain_dist_to_01=d_plain)]


def criterion_13() -> list:
    op = quadratic(np.diag([1.0, 0.0]))
    dt = 0.1
    traj = run_tikhonov_flow(op, [1.0, 1.0], lambda t: (1.0 + t) ** -2, 1000.0, dt=dt)
    system = TikhonovSystem(op, lambda t: 0.0, dt)
    hs = np.concatenate([[0.0], np.geomspace(0.1, 900.0, 40)])
    gap = cert.almost_orbit_gap(traj, system, [1.0, 50.0], hs)
    g1, g50 = gap.at(1.0), gap.at(50.0)
    out = [_result("13a", "Tikhonov L1 weight is an almost-orbit", g50 <= 0.1 * g1, gap_t1=g1, gap_t50=g50)]

    rot = skew(ROT)
    sched = make_schedule("power", c=1.0, p=0.75)
    traj = run_proximal(rot, [1.0, 0.0], sched, 50_000, stride=5)
    horizon = float(traj.times[-1])
    hs = np.concatenate([[0.0], np.geomspace(0.05, horizon - 50.0 - 1e-6, 25)])
    gap = cert.almost_orbit_gap(traj, ReferenceFlowSystem(rot, tol=1e-5), [1.0, 50.0], hs)
    g1, g50 = gap.at(1.0), gap.at(50.0)
    out.append(_result("13b", "proximal n^-0.75 is an almost-orbit", g50 <= 0.1 * g1, gap_t1=g1, gap_t50=g50))
    return out


def criterion_14() -> list:
    ts = [0.5, 1.0, 2.0, 4.0, 8.0]
    ns = [1, 2, 4, 8, 16]
    x = np.array([2.0, -1.0])
    ok = True
    worst = math.inf
    for T in (ResolventMap(quadratic(np.diag([1.0, 0.5])), 1.0),
              Composition((Projection(_unit_ball()), Projection(Halfspace(np.array([1.0, 1.0]), 0.5))))):
        op = residual(T)
        for lam in (0.5, 1.0):
            c = cert.certify_chernoff(op, lam, x, ts, ns)
            ok &= c.passed
            worst = min(worst, c.min_margin)
    return [_result("14", "Chernoff estimate", ok, min_margin=worst)]


def _meb_oracle(pts):
    # minimize r2 subject to |p_i - c|^2 <= r2, a smooth convex program
    c0 = pts.mean(axis=0)
    r0 = float(np.max(np.sum((pts - c0) ** 2, axis=1)))
    d = pts.shape[1]
    res = scipy.optimize.minimize(
        lambda z: z[-1], np.append(c0, r0), method="SLSQP",
        jac=lambda z: np.append(np.zeros(d), 1.0),
        constraints=[{"type": "ineq",
                      "fun": lambda z: z[-1] - np.sum((pts - z[:-1]) ** 2, axis=1),
                      "jac": lambda z: np.column_stack([2 * (pts - z[:-1]), np.ones(len(pts))])}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return res.x[:-1], math.sqrt(max(res.x[-1], 0.0))


def criterion_15() -> list:
    rng = np.random.default_rng(15)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 4))
        pts = rng.standard_normal((int(rng.integers(2, 30)), d))
        ball = min_enclosing_ball(pts)
        _, r = _meb_oracle(pts)
        worst = max(worst, abs(ball.radius - r))
    rot = skew(ROT)
    tail = run_proximal(rot, [1.0, 0.0], make_schedule("power", c=1.0, p=0.75), 10_000)
    ac = float(np.linalg.norm(asymptotic_center(tail)))
    conv_worst = 0.0
    runs = [
        run_proximal(quadratic(np.diag([1.0, 0.5])), [1.0, 1.0], make_schedule("constant", c=1.0), 200),
        run_proximal(normal_cone(_unit_ball()), [2.0, 1.0], make_schedule("constant", c=1.0), 200),
        run_tikhonov_flow(quadratic(np.diag([1.0, 0.0])), [1.0, 1.0], lambda t: 1.0 / (1.0 + t), 1000.0),
        run_euler(dist_squared(_unit_ball()), [3.0, 4.0], make_schedule("power", c=0.5, p=0.75), 1000),
    ]
    n_conv = 0
    half_worst = 0.0
    for traj in runs:
        report = classify_convergence(traj)
        v = report.verdict
        if v.kind == "converges":
            n_conv += 1
            # same tail window as the classifier that produced the limit
            window = report.tolerances["tail_fraction"]
            conv_worst = max(conv_worst, float(np.linalg.norm(asymptotic_center(traj, window) - v.limit)))
            half_worst = max(half_worst, float(np.linalg.norm(asymptotic_center(traj) - v.limit)))
    ok = worst <= 1e-6 and ac <= 0.05 and conv_worst <= 1e-4 and n_conv == len(runs)
    return [_result("15", "asymptotic center", ok, meb_max_radius_err=worst, rotation_ac_norm=ac,
                    convergent_runs=n_conv, convergent_max_err=conv_worst, half_tail_max_err=half_worst)]


def criterion_16() -> list:
    ok = True
    worst = math.inf
    for op in (quadratic(np.diag([1.0, 0.5])), skew(ROT)):
        traj = reference_flow(op, [1.0, -0.5], 2.0, tol=1e-6, n_samples=201)
        c = cert.certify_integral_solution(op, traj, n_pairs=10, seed=16)
        ok &= c.passed and c.details["n_probes"] == 5
        worst = min(worst, float(np.min(c.margins + c.slack)))
    return [_result("16", "Benilan integral inequality", ok, min_margin_plus_slack=worst)]


def criterion_17(n: int = 10_000) -> list:
    quad = quadratic(np.diag([1.0, 0.25]))
    v = classify_convergence(run_proximal(quad, [1.0, 1.0], make_schedule("power", c=1.0, p=0.5), 2000)).verdict
    sched = make_schedule("power", c=1.0, p=0.75)
    traj = run_euler(skew(ROT), [1.0, 0.0], sched, n)
    norms = traj.norms()
    lam = sched.steps(n)
    bound = float(np.exp(0.5 * np.sum(np.log1p(lam**2))))
    mono = float(np.min(np.diff(norms)))
    ok = v.kind == "converges" and mono >= -1e-9 and norms.max() <= bound + 1e-9
    return [_result("17", "odd operators", ok, proximal_verdict=v.kind, euler_min_norm_increment=mono,
                    euler_final_norm=float(norms[-1]), euler_norm_bound=bound)]


def criterion_18() -> list:
    mismatched = []
    with tempfile.TemporaryDirectory() as root:
        for name in preset_names():
            a, b = os.path.join(root, name, "a"), os.path.join(root, name, "b")
            run_experiment(load_preset(name), a)
            run_experiment(load_preset(name), b)
            for f in ("series.csv", "report.json"):
                if not filecmp.cmp(os.path.join(a, f), os.path.join(b, f), shallow=False):
                    mismatched.append(f"{name}/{f}")
    return [_result("18", "harness determinism", not mismatched, presets=len(preset_names()),
                    mismatched=",".join(mismatched) or "none")]


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
    13: criterion_13, 14: criterion_14, 15: criterion_15, 16: criterion_16, 17: criterion_17, 18: criterion_18,
}

# the fast suite skips the preset reruns
FAST = tuple(k for k in CRITERIA if k != 18)


def run_criterion(number: int, **kwargs) -> list:
    t0 = time.perf_counter()
    try:
        results = CRITERIA[number](**kwargs)
    except Exception as exc:  # failures are reported, not raised
        results = [CriterionResult(str(number), "error", False, {"error": f"{type(exc).__name__}: {exc}"})]
    dt = time.perf_counter() - t0
    for r in results:
        r.seconds = dt
    return results


def suite_run(suite_name: str, echo: Callable = None) -> dict:
    """Run a suite and return ``{"suite", "passed", "seconds", "criteria": [...]}``."""
    if suite_name not in SUITES:
        raise ValueError(f"unknown suite {suite_name!r}; expected one of {', '.join(SUITES)}")
    numbers = FAST if suite_name == "fast" else tuple(CRITERIA)
    t0 = time.perf_counter()
    results = []
    for k in numbers:
        for r in run_criterion(k):
            results.append(r)
            if echo is not None:
                echo(r.line())
    return {"suite": suite_name, "passed": all(r.passed for r in results),
            "seconds": time.perf_counter() - t0, "criteria": [r.to_dict() for r in results]}
