import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monoflow.analysis import (
    asymptotic_ball,
    asymptotic_center,
    classify_convergence,
    min_enclosing_ball,
)
from monoflow.errors import EmptyInput, TooShort
from monoflow.operators import quadratic, skew
from monoflow.schemes import Trajectory, make_schedule, run_euler, run_proximal

ROT = [[0.0, 1.0], [-1.0, 0.0]]


def _traj(points):
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    return Trajectory("synthetic", np.arange(n), np.arange(n, dtype=float), pts)


def _meb_oracle(pts):
    # minimize r subject to |p - c| <= r, from several starts
    def solve(c0):
        z0 = np.append(c0, np.max(np.linalg.norm(pts - c0, axis=1)))
        cons = {"type": "ineq", "fun": lambda z: z[-1] ** 2 - np.sum((pts - z[:-1]) ** 2, axis=1)}
        res = scipy.optimize.minimize(lambda z: z[-1], z0, constraints=[cons], method="SLSQP",
                                      options={"ftol": 1e-14, "maxiter": 500})
        return res.x[-1], res.x[:-1]

    starts = [pts.mean(axis=0), 0.5 * (pts.min(axis=0) + pts.max(axis=0))]
    return min((solve(c) for c in starts), key=lambda rc: rc[0])


# --- minimum enclosing ball --------------------------------------------------------


def test_meb_two_points():
    b = min_enclosing_ball([[0.0, 0.0], [2.0, 0.0]])
    assert np.allclose(b.center, [1.0, 0.0]) and b.radius == pytest.approx(1.0)


def test_meb_single_point():
    b = min_enclosing_ball([[3.0, -1.0]])
    assert np.allclose(b.center, [3.0, -1.0]) and b.radius == 0.0


def test_meb_equilateral_triangle():
    ang = 2 * np.pi * np.arange(3) / 3
    b = min_enclosing_ball(np.column_stack([np.cos(ang), np.sin(ang)]))
    assert np.allclose(b.center, 0.0, atol=1e-12) and b.radius == pytest.approx(1.0)


def test_meb_obtuse_triangle_uses_long_side():
    b = min_enclosing_ball([[0.0, 0.0], [4.0, 0.0], [2.0, 0.5]])
    assert np.allclose(b.center, [2.0, 0.0]) and b.radius == pytest.approx(2.0)


def test_meb_empty_raises():
    with pytest.raises(EmptyInput):
        min_enclosing_ball(np.zeros((0, 2)))


@pytest.mark.parametrize("dim", [2, 3])
def test_meb_matches_optimizer(dim):
    rng = np.random.default_rng(dim)
    for _ in range(10):
        pts = rng.standard_normal((int(rng.integers(3, 40)), dim))
        b = min_enclosing_ball(pts)
        r, _ = _meb_oracle(pts)
        assert b.contains(pts)
        assert b.radius == pytest.approx(r, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(pts=arrays(np.float64, st.tuples(st.integers(1, 25), st.just(2)),
                  elements=st.floats(-10, 10, allow_nan=False)))
def test_meb_encloses_and_is_tight(pts):
    b = min_enclosing_ball(pts)
    assert b.contains(pts, tol=1e-9 * (1 + b.radius))
    # no ball is smaller than half the diameter
    diam = max(np.linalg.norm(p - q) for p in pts for q in pts)
    assert b.radius >= diam / 2 - 1e-9
    # and the optimum is never worse than the bounding box ball
    half = 0.5 * np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
    assert b.radius <= half + 1e-9


# --- asymptotic center ----------------------------------------------------------


def test_asymptotic_center_two_point_tail():
    pts = np.array([[1.0, 0.0] if k % 2 else [-1.0, 2.0] for k in range(200)])
    assert np.allclose(asymptotic_center(_traj(pts)), [0.0, 1.0])
    assert asymptotic_ball(_traj(pts)).radius == pytest.approx(math.sqrt(2))


def test_asymptotic_center_of_convergent_run():
    traj = run_proximal(quadratic(np.diag([1.0, 0.5])), [1.0, 1.0], make_schedule("constant", c=1), 200)
    assert np.linalg.norm(asymptotic_center(traj)) < 1e-12


def test_asymptotic_center_needs_samples():
    with pytest.raises(EmptyInput):
        asymptotic_center(_traj(np.zeros((5, 2))))
    with pytest.raises(ValueError):
        asymptotic_center(_traj(np.zeros((50, 2))), tail_fraction=0.0)


# --- classification ---------------------------------------------------------------


def test_classify_quadratic_converges_to_zero():
    traj = run_proximal(quadratic(np.diag([1.0, 0.5])), [1.0, 1.0], make_schedule("constant", c=1), 200)
    rep = classify_convergence(traj)
    assert rep.verdict.kind == "converges"
    assert np.linalg.norm(rep.verdict.limit) < 1e-10


def test_classify_rotation_harmonic_is_bounded_nonconvergent():
    op = skew(ROT)
    traj = run_proximal(op, [1.0, 0.0], make_schedule("power", c=1, p=1), 10_000)
    rep = classify_convergence(traj, op.solutions)
    assert rep.verdict.kind == "bounded_nonconvergent"
    assert rep.verdict.limit is None and rep.limit_distance_to_S is None


def test_classify_euler_constant_step_diverges():
    traj = run_euler(skew(ROT), [1.0, 0.0], make_schedule("constant", c=1), 200)
    assert classify_convergence(traj).verdict.kind == "norm_divergent"


def test_classify_reports_distance_to_solutions():
    op = quadratic(np.diag([1.0, 0.5]))
    traj = run_proximal(op, [1.0, 1.0], make_schedule("constant", c=1), 200)
    rep = classify_convergence(traj, op.solutions)
    assert rep.limit_distance_to_S < 1e-10
    assert rep.tolerances["tol_conv"] == pytest.approx(1e-4 * math.sqrt(2))


def test_classify_too_short():
    with pytest.raises(TooShort):
        classify_convergence(_traj(np.zeros((99, 2))))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(["decay", "cycle", "grow", "noise"]))
def test_classify_verdicts_are_sound(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(100, 400))
    k = np.arange(n)[:, None]
    x0 = rng.standard_normal(2) + 0.1
    if kind == "decay":
        pts = x0 * rng.uniform(0.5, 0.95) ** k
    elif kind == "cycle":
        ang = rng.uniform(0.1, 3.0) * k[:, 0]
        pts = np.linalg.norm(x0) * np.column_stack([np.cos(ang), np.sin(ang)])
    elif kind == "grow":
        pts = x0 * rng.uniform(1.05, 1.3) ** k
    else:
        pts = x0 + rng.standard_normal((n, 2)) * 10.0 ** rng.uniform(-8, 1)
    pts[0] = x0
    rep = classify_convergence(_traj(pts))
    tail = rep.tolerances["tail_samples"]
    tol = rep.tolerances["tol_conv"]
    tail_pts = pts[-tail:]
    diam = max(np.linalg.norm(p - q) for p in tail_pts for q in tail_pts)
    norms = np.linalg.norm(pts, axis=1)
    v = rep.verdict.kind
    if v == "converges":
        assert diam < tol
        assert np.allclose(rep.verdict.limit, tail_pts.mean(axis=0))
    elif v == "norm_divergent":
        assert norms[-1] > 1e3 * norms[0] and np.all(np.diff(norms[-tail:]) >= 0)
    elif v == "bounded_nonconvergent":
        assert diam > 10 * tol and norms.max() <= 1e3 * norms[0]
    if kind == "decay" and n * math.log(0.95) * 0.9 < math.log(1e-6):
        assert v == "converges"
