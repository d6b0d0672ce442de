import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monoflow import certificates as cert
from monoflow.errors import (
    InvalidProbe,
    NoVelocities,
    NotASolution,
    OperatorMismatch,
    OutOfRange,
    WrongOperatorKind,
)
from monoflow.operators import (
    ResolventMap,
    Rotation,
    dist_squared,
    normal_cone,
    quadratic,
    residual,
    shifted,
    skew,
    soft_abs,
)
from monoflow.schemes import (
    ReferenceFlowSystem,
    TikhonovSystem,
    make_schedule,
    reference_flow,
    run_euler,
    run_proximal,
    run_tikhonov_flow,
)
from monoflow.sets import Ball

ROT = [[0.0, 1.0], [-1.0, 0.0]]
ONE_D = quadratic(np.eye(1))


# --- Kobayashi ------------------------------------------------------------------


def test_kobayashi_identical_runs_from_solution():
    op = quadratic(np.eye(2))
    a = run_proximal(op, [0.0, 0.0], make_schedule("constant", c=1), 20)
    c = cert.certify_kobayashi(a, a, [0.0, 0.0], full=True)
    assert c.passed and np.all(c.lhs == 0)


def test_kobayashi_rhs_collapses_on_solution():
    op = quadratic(np.diag([1.0, 0.3]))
    a = run_proximal(op, [1.0, 2.0], make_schedule("constant", c=1), 30)
    b = run_proximal(op, [-1.0, 0.5], make_schedule("power", c=1, p=1), 30)
    c = cert.certify_kobayashi(a, b, [0.0, 0.0])
    assert np.allclose(c.rhs, np.linalg.norm([1.0, 2.0]) + np.linalg.norm([-1.0, 0.5]))
    assert c.passed


def test_kobayashi_rotation_example():
    op = skew(ROT)
    a = run_proximal(op, [1.0, 0.0], make_schedule("power", c=1, p=1), 300)
    b = run_proximal(op, [1.0, 0.0], make_schedule("constant", c=0.1), 300)
    c = cert.certify_kobayashi(a, b, [0.3, 0.2], full=True)
    assert c.min_margin >= 0
    rng = np.random.default_rng(0)
    idx = rng.integers(0, len(c.lhs), 100)
    assert np.all(c.margins[idx] >= 0)


@settings(max_examples=25, deadline=None)
@given(ca=st.floats(0.05, 3), pa=st.floats(0, 1), cb=st.floats(0.05, 3), pb=st.floats(0, 1),
       seed=st.integers(0, 1000))
def test_kobayashi_property(ca, pa, cb, pb, seed):
    rng = np.random.default_rng(seed)
    op = [skew(ROT), quadratic(np.diag([1.0, 0.1])), soft_abs(2), dist_squared(Ball([0, 0], 1))][seed % 4]
    a = run_proximal(op, 2 * rng.standard_normal(2), make_schedule("power", c=ca, p=pa), 60)
    b = run_proximal(op, 2 * rng.standard_normal(2), make_schedule("power", c=cb, p=pb), 60)
    u = rng.standard_normal(2)
    assert cert.certify_kobayashi(a, b, u).passed


def test_kobayashi_operator_mismatch():
    a = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("constant", c=1), 5)
    b = run_proximal(quadratic(np.eye(2)), [1.0, 0.0], make_schedule("constant", c=1), 5)
    with pytest.raises(OperatorMismatch):
        cert.certify_kobayashi(a, b, [0.0, 0.0])


def test_euler_kobayashi_examples():
    op = residual(Rotation(math.pi / 2))
    a = run_euler(op, [1.0, 0.0], make_schedule("constant", c=0.5), 200)
    b = run_euler(op, [0.5, 1.0], make_schedule("power", c=1, p=1), 200)
    c = cert.certify_euler_kobayashi(a, b, [0.0, 0.0])
    assert np.allclose(c.rhs, 1.0 + np.linalg.norm([0.5, 1.0]))
    c = cert.certify_euler_kobayashi(a, b, [0.3, -0.2], full=True)
    assert c.min_margin >= 0
    same = cert.certify_euler_kobayashi(a, a, [0.3, -0.2], full=True)
    diag = [i for i, (k, l) in enumerate(same.labels) if k == l]
    assert np.all(same.lhs[diag] == 0)
    with pytest.raises(WrongOperatorKind):
        t = run_euler(skew(ROT), [1.0, 0.0], make_schedule("constant", c=0.5), 5)
        cert.certify_euler_kobayashi(t, t, [0.0, 0.0])


# --- Chernoff and exponential formula -------------------------------------------


def test_chernoff_example():
    op = residual(ResolventMap(ONE_D, 1.0))
    c = cert.certify_chernoff(op, 1.0, [1.0], 2.0, 2)
    assert c.lhs[0] == pytest.approx(abs(math.exp(-1) - 0.25), abs=1e-6)
    assert c.rhs[0] == pytest.approx(0.5 * math.sqrt(2))
    assert c.passed


def test_chernoff_fixed_point_and_diagonal():
    op = residual(ResolventMap(quadratic(np.diag([1.0, 0.5])), 1.0))
    c = cert.certify_chernoff(op, 1.0, [0.0, 0.0], [1.0, 2.0], [1, 3])
    assert np.all(c.lhs == 0)
    for lam in (0.5, 1.0):
        ts = [lam * n for n in (1, 2, 4)]
        c = cert.certify_chernoff(op, lam, [1.0, -1.0], ts, [1, 2, 4])
        assert c.passed
    with pytest.raises(WrongOperatorKind):
        cert.certify_chernoff(skew(ROT), 1.0, [1.0, 0.0], 1.0, 1)


def test_exponential_formula_examples():
    c = cert.certify_exponential_formula(ONE_D, [1.0], 1.0, [1])
    # the reference flow is only as good as its tolerance (a tenth of the bound)
    assert c.lhs[0] == pytest.approx(abs(0.5 - math.exp(-1)), abs=c.details["reference_tol"])
    assert c.rhs[0] == pytest.approx(3.0)
    c = cert.certify_exponential_formula(ONE_D, [0.0], 1.0, [1, 4])
    assert np.all(c.lhs == 0)
    c = cert.certify_exponential_formula(skew(ROT), [1.0, 0.0], 1.0, [4, 16, 64, 256])
    assert c.passed and c.details["error_decreasing_in_m"]


# --- flow vs proximal -------------------------------------------------------------


def test_flow_vs_prox_examples():
    c = cert.certify_flow_vs_prox(run_proximal(ONE_D, [1.0], make_schedule("constant", c=0.1), 100), [1.0])
    assert c.passed
    traj = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("power", c=1, p=1), 100)
    c = cert.certify_flow_vs_prox(traj, [0.0, 0.0])
    assert np.allclose(c.rhs, 2.0)
    assert c.passed


# --- Fejer and velocities ---------------------------------------------------------


def test_fejer_constant_trajectory():
    traj = run_proximal(skew(ROT), [0.0, 0.0], make_schedule("constant", c=1), 10)
    c = cert.certify_fejer(traj, [0.0, 0.0])
    assert c.passed and np.all(c.margins == 0)


def test_fejer_rotation_strict():
    traj = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("power", c=1, p=1), 200)
    d = traj.norms()
    assert np.all(np.diff(d) < 0)
    assert cert.certify_fejer(traj, [0.0, 0.0]).passed


def test_fejer_euler_rotation():
    traj = run_euler(skew(ROT), [1.0, 0.0], make_schedule("power", c=1, p=1), 200)
    assert not cert.certify_fejer(traj, [0.0, 0.0], form="fejer").passed
    c = cert.certify_fejer(traj, [0.0, 0.0])
    assert c.name == "fejer_euler" and c.passed


def test_fejer_rejects_non_solution():
    traj = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("constant", c=1), 10)
    with pytest.raises(NotASolution):
        cert.certify_fejer(traj, [0.5, 0.0])


def test_fejer_on_flow():
    traj = reference_flow(quadratic(np.diag([1.0, 0.2])), [1.0, 1.0], 3.0, tol=1e-6)
    assert cert.certify_fejer(traj, [0.0, 0.0]).passed


def test_velocity_examples():
    traj = run_proximal(ONE_D, [1.0], make_schedule("constant", c=1), 10)
    speed = np.abs(traj.velocities[1:, 0])
    assert np.allclose(speed, 2.0 ** -np.arange(1, 11))
    assert cert.certify_velocity(traj).passed
    still = run_proximal(ONE_D, [0.0], make_schedule("constant", c=1), 10)
    assert np.all(cert.certify_velocity(still).lhs == 0)
    rot = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("power", c=1, p=1), 500)
    assert cert.certify_velocity(rot).passed
    with pytest.raises(NoVelocities):
        cert.certify_velocity(run_euler(skew(ROT), [1.0, 0.0], make_schedule("constant", c=1), 5))


def test_velocity_rate_rotation():
    traj = run_proximal(skew(ROT), [1.0, 0.0], make_schedule("power", c=1, p=0.5), 2000)
    assert cert.certify_velocity_rate(traj).passed


# --- value rates ------------------------------------------------------------------


def test_guler_and_proxspeed_example():
    traj = run_proximal(ONE_D, [1.0], make_schedule("constant", c=1), 1)
    certs = {c.name: c for c in cert.certify_value_rates(ONE_D, traj, u=[0.0])}
    assert certs["guler"].lhs[0] == pytest.approx(1 / 8)
    assert certs["guler"].rhs[0] == pytest.approx(1 / 4)
    assert certs["proxspeed"].lhs[0] == pytest.approx(0.5)
    assert certs["proxspeed"].rhs[0] == pytest.approx(1.0)
    assert all(c.passed for c in certs.values())


def test_value_rates_from_minimizer():
    traj = run_proximal(ONE_D, [0.0], make_schedule("constant", c=1), 5)
    for c in cert.certify_value_rates(ONE_D, traj):
        assert c.passed
        assert np.allclose(c.lhs, 0)


@pytest.mark.parametrize("op", [quadratic(np.diag([2.0, 0.1])), soft_abs(2), dist_squared(Ball([0, 0], 1)),
                                normal_cone(Ball([0, 0], 1))], ids=lambda o: o.kind)
def test_value_rates_on_runs(op):
    traj = run_proximal(op, [2.5, -1.5], make_schedule("power", c=1, p=0.5), 300)
    assert all(c.passed for c in cert.certify_value_rates(op, traj))


def test_value_rates_on_flows_and_euler():
    op = quadratic(np.diag([1.0, 0.3]))
    flow = reference_flow(op, [1.0, 2.0], 3.0, tol=1e-6, n_samples=31)
    names = {c.name: c.passed for c in cert.certify_value_rates(op, flow)}
    assert names == {"continuous_value": True, "value_decrease": True}
    eul = run_euler(op, [1.0, 2.0], make_schedule("power", c=1, p=1), 300)
    certs = cert.certify_value_rates(op, eul)
    assert [c.name for c in certs] == ["euler_value"] and certs[0].passed


# --- integral solutions -----------------------------------------------------------


def test_integral_solution_example():
    traj = reference_flow(ONE_D, [1.0], 1.0, tol=1e-6, n_samples=1001)
    c = cert.certify_integral_solution(ONE_D, traj, probes=[([0.5], [0.5])], n_pairs=1)
    assert c.passed
    # the (0, 1) pair against closed-form integrals of e^{-s}
    d = cert.certify_integral_solution(ONE_D, traj, probes=[([0.5], [0.5])], pairs=[(0.0, 1.0)])
    k = 0
    exact_lhs = 0.5 * ((math.exp(-1) - 0.5) ** 2 - 0.25)
    exact_rhs = 0.5 * (0.5 - (1 - math.exp(-1)))
    assert d.lhs[k] == pytest.approx(exact_lhs, abs=1e-5)
    assert d.rhs[k] == pytest.approx(exact_rhs, abs=1e-5)
    assert d.margins[k] >= -1e-3


def test_integral_solution_auto_probes():
    for op in (quadratic(np.diag([1.0, 0.5])), skew(ROT), soft_abs(2)):
        traj = reference_flow(op, [1.0, -0.5], 2.0, tol=1e-6, n_samples=201)
        assert cert.certify_integral_solution(op, traj).passed


def test_integral_solution_rejects_bad_probe():
    traj = reference_flow(ONE_D, [1.0], 1.0, tol=1e-4, n_samples=11)
    with pytest.raises(InvalidProbe):
        cert.certify_integral_solution(ONE_D, traj, probes=[([0.5], [1.0])])


# --- path length and strong decay ---------------------------------------------------


def test_path_length_ball_in_solution_set():
    op = dist_squared(Ball([0, 0], 1))
    traj = run_proximal(op, [3.0, 1.0], make_schedule("power", c=0.5, p=0.75), 500)
    c = cert.certify_path_length(traj, [0.0, 0.0], 1.0)
    assert c.passed
    # the iterates move radially toward the ball
    left = float(op.solutions.set.distance(traj.final))
    assert c.lhs[-1] + left == pytest.approx(math.hypot(3, 1) - 1, rel=1e-9)


def test_strong_decay():
    op = shifted(quadratic(np.zeros((2, 2))), 1.0)
    traj = reference_flow(op, [1.0, -2.0], 4.0, tol=1e-6)
    c = cert.certify_strong_decay(traj)
    assert c.passed
    assert np.allclose(c.lhs, c.rhs, atol=1e-6)
    # the faster exponent 2 alpha does not hold on A = I
    assert not cert.certify_strong_decay(traj, alpha=2.0).passed


# --- almost orbits ------------------------------------------------------------------


def test_gap_of_own_orbit_is_small():
    op = quadratic(np.diag([1.0, 0.2]))
    traj = reference_flow(op, [1.0, 1.0], 4.0, tol=1e-7, n_samples=401)
    gap = cert.almost_orbit_gap(traj, ReferenceFlowSystem(op, tol=1e-7), [0.5, 1.0, 2.0], [0.0, 0.5, 1.0, 2.0])
    assert np.max(gap.gaps) <= 1e-4


def test_gap_tikhonov_l1_decreases():
    op = quadratic(np.diag([1.0, 0.0]))
    traj = run_tikhonov_flow(op, [1.0, 1.0], lambda t: (1 + t) ** -2, 400.0, dt=0.1)
    gap = cert.almost_orbit_gap(traj, TikhonovSystem(op, lambda t: 0.0, 0.1), [1.0, 20.0, 100.0],
                                np.geomspace(0.1, 290.0, 20))
    assert gap.gaps[0] > gap.gaps[1] > gap.gaps[2]


def test_gap_out_of_range():
    op = quadratic(np.eye(1))
    traj = reference_flow(op, [1.0], 1.0, tol=1e-4, n_samples=11)
    with pytest.raises(OutOfRange):
        cert.almost_orbit_gap(traj, ReferenceFlowSystem(op), [0.5], [1.0])


# --- certificate object -------------------------------------------------------------


def test_certificate_summary():
    c = cert.Certificate("demo", [1, 2, 3], [1.0, 2.0, 3.5], [1.5, 2.0, 3.0], 0.1)
    assert not c.passed
    assert c.worst() == 2
    assert c.min_margin == pytest.approx(-0.5)
    d = c.to_dict()
    assert d["worst"]["label"] == 3 and d["passed"] is False
