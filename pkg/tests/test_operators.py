import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monoflow.errors import MalformedSpec, NoObjective, NotForwardCapable, NotInDomain, NotMonotone
from monoflow.operators import (
    Composition,
    Projection,
    ResolventMap,
    Rotation,
    build_operator,
    catalog,
    dist_squared,
    distance_to_solutions,
    forward_eval,
    has_fast_power,
    is_infinite,
    minimal_section_norm,
    moreau_value,
    normal_cone,
    objective_value,
    quadratic,
    residual,
    resolvent,
    resolvent_power,
    shifted,
    skew,
    soft_abs,
    solve_resolvent_iteratively,
    yosida,
    yosida_eval,
)
from monoflow.sets import AffineSubspace, Ball, Box, Singleton

ROT = [[0.0, 1.0], [-1.0, 0.0]]
UNIT = Ball([0.0, 0.0], 1.0)
CATALOG = catalog(2, seed=0) + catalog(3, seed=1)
finite = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
lams = st.sampled_from([0.01, 0.1, 1.0, 10.0])


# --- construction and flags -------------------------------------------------


def test_quadratic_identity_flags():
    op = quadratic(np.eye(2))
    assert op.flags.forward_capable
    assert np.allclose(op.solutions.set.project([5.0, -1.0]), 0)


def test_skew_rotation_flags():
    op = skew(ROT)
    assert op.flags.odd
    assert np.allclose(op.solutions.set.project([1.0, 2.0]), 0)


def test_normal_cone_ball_flags():
    op = normal_cone(UNIT)
    assert op.flags.interior_solutions
    assert not op.flags.forward_capable
    assert op.solutions.set.contains([0.5, 0.5])


def test_non_psd_quadratic_rejected():
    with pytest.raises(NotMonotone):
        quadratic([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NotMonotone):
        quadratic([[1.0, 2.0], [0.0, 1.0]])


def test_shifted_strong_modulus_and_solution():
    op = shifted(skew(ROT), 1.0)
    assert op.flags.strongly_monotone_modulus == pytest.approx(1.0)
    assert np.allclose(op.solutions.set.project([3.0, 3.0]), 0)


def test_yosida_modulus():
    op = yosida(quadratic(2 * np.eye(2)), 0.5)
    # a / (1 + a lam) = 2 / 2
    assert op.flags.strongly_monotone_modulus == pytest.approx(1.0)


def test_build_operator_round_trip():
    for op in CATALOG:
        again = build_operator(op.to_spec())
        assert again.id == op.id
        y = np.array([0.3, -1.2, 0.7][: op.dim])
        assert np.allclose(resolvent(again, 0.7, y), resolvent(op, 0.7, y))


def test_build_operator_rejects_bad_specs():
    with pytest.raises(MalformedSpec):
        build_operator({"kind": "nope"})
    with pytest.raises(MalformedSpec):
        build_operator({"kind": "skew", "M": ROT, "extra": 1})
    with pytest.raises(MalformedSpec):
        build_operator({"kind": "quadratic"})
    assert build_operator({"kind": "yosida", "lambda": 0.5, "base": {"kind": "soft_abs", "dim": 2}}).kind == "yosida"


# --- resolvent values -------------------------------------------------------


def test_resolvent_examples():
    assert np.allclose(resolvent(quadratic(np.eye(2)), 1.0, [2.0, 0.0]), [1.0, 0.0])
    for lam in (0.1, 1.0, 7.0):
        assert np.allclose(resolvent(normal_cone(UNIT), lam, [0.0, 3.0]), [0.0, 1.0])
    assert np.allclose(resolvent(skew(ROT), 1.0, [1.0, 0.0]), [0.5, 0.5])
    assert np.allclose(resolvent(shifted(skew(ROT), 1.0), 1.0, [1.0, 0.0]), [0.4, 0.2])


def test_resolvent_matches_direct_solve_for_affine_kinds():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((3, 3))
    Q, b = B @ B.T, rng.standard_normal(3)
    W = rng.standard_normal((3, 3))
    M = W - W.T
    for op, mat, rhs in ((quadratic(Q, b), Q, b), (skew(M), M, np.zeros(3))):
        for lam in (0.01, 1.0, 10.0):
            y = rng.standard_normal(3)
            direct = np.linalg.solve(np.eye(3) + lam * mat, y + lam * rhs)
            assert np.allclose(resolvent(op, lam, y), direct, atol=1e-12)


@pytest.mark.parametrize("op", [op for op in CATALOG if op.flags.forward_capable and op.kind != "normal_cone"],
                         ids=lambda o: o.kind)
def test_resolvent_matches_damped_iteration(op):
    rng = np.random.default_rng(5)
    if op.kind in ("quadratic", "skew"):
        lipschitz = float(np.linalg.norm(op.params["Q" if op.kind == "quadratic" else "M"], 2))
    elif op.kind == "shifted":
        lipschitz = float(np.linalg.norm(op.params["base"].params["M"], 2)) + op.params["alpha"]
    elif op.kind == "yosida":
        lipschitz = 1.0 / op.params["lam"]
    else:
        lipschitz = 2.0
    for lam in (0.1, 1.0):
        y = 2 * rng.standard_normal(op.dim)
        assert np.allclose(resolvent(op, lam, y), solve_resolvent_iteratively(op, lam, y, lipschitz), atol=1e-8)


def test_resolvent_definition_holds():
    # x = J y  iff  (y - x)/lam in A x, checked through the forward map where single-valued
    rng = np.random.default_rng(7)
    for op in CATALOG:
        if not op.flags.forward_capable or op.kind == "soft_abs":
            continue
        for lam in (0.1, 2.0):
            y = rng.standard_normal(op.dim)
            x = resolvent(op, lam, y)
            assert np.allclose((y - x) / lam, forward_eval(op, x), atol=1e-8)


@pytest.mark.parametrize("op", CATALOG, ids=lambda o: f"{o.kind}-{o.dim}")
@settings(max_examples=40, deadline=None)
@given(data=st.data(), lam=lams)
def test_resolvent_firmly_nonexpansive(op, data, lam):
    x = data.draw(arrays(np.float64, op.dim, elements=finite))
    y = data.draw(arrays(np.float64, op.dim, elements=finite))
    jx, jy = resolvent(op, lam, x), resolvent(op, lam, y)
    scale = 1 + np.sum((x - y) ** 2)
    assert np.sum((jx - jy) ** 2) <= (jx - jy) @ (x - y) + 1e-9 * scale


@pytest.mark.parametrize("op", CATALOG, ids=lambda o: f"{o.kind}-{o.dim}")
@settings(max_examples=30, deadline=None)
@given(data=st.data(), lam=lams)
def test_yosida_is_monotone_and_lipschitz(op, data, lam):
    x = data.draw(arrays(np.float64, op.dim, elements=finite))
    y = data.draw(arrays(np.float64, op.dim, elements=finite))
    ax, ay = yosida_eval(op, lam, x), yosida_eval(op, lam, y)
    scale = 1 + np.sum((x - y) ** 2)
    assert (ax - ay) @ (x - y) >= -1e-8 * scale / lam
    assert np.linalg.norm(ax - ay) <= np.linalg.norm(x - y) / lam + 1e-8 * scale / lam


@pytest.mark.parametrize("op", CATALOG, ids=lambda o: f"{o.kind}-{o.dim}")
def test_resolvent_fixes_solutions(op):
    if op.solutions is None or op.solutions.empty:
        pytest.skip("solution set not known")
    rng = np.random.default_rng(9)
    p = op.solutions.set.project(3 * rng.standard_normal(op.dim))
    for lam in (0.1, 1.0, 10.0):
        assert np.allclose(resolvent(op, lam, p), p, atol=1e-9)
        assert np.allclose(yosida_eval(op, lam, p), 0, atol=1e-8)


def test_resolvent_is_batched():
    ys = np.random.default_rng(0).standard_normal((11, 2))
    for op in catalog(2, seed=0):
        assert np.allclose(resolvent(op, 0.3, ys), np.array([resolvent(op, 0.3, y) for y in ys]))


def test_resolvent_rejects_bad_input():
    with pytest.raises(ValueError):
        resolvent(skew(ROT), 0.0, [1.0, 0.0])
    with pytest.raises(MalformedSpec):
        resolvent(skew(ROT), 1.0, [1.0, 0.0, 0.0])


# --- Yosida, forward map, minimal section ------------------------------------


def test_yosida_examples():
    assert np.allclose(yosida_eval(quadratic(np.eye(2)), 1.0, [2.0, 0.0]), [1.0, 0.0])
    assert np.allclose(yosida_eval(skew(ROT), 1.0, [1.0, 0.0]), [0.5, -0.5])


def test_forward_examples():
    assert np.allclose(forward_eval(quadratic(np.eye(2)), [3.0, 4.0]), [3.0, 4.0])
    assert np.allclose(forward_eval(normal_cone(UNIT), [0.5, 0.0]), [0.0, 0.0])
    with pytest.raises(NotForwardCapable):
        forward_eval(normal_cone(UNIT), [1.0, 0.0])


def test_minimal_section_examples():
    assert minimal_section_norm(quadratic(np.eye(2)), [3.0, 4.0]) == pytest.approx(5.0)
    assert minimal_section_norm(normal_cone(UNIT), [1.0, 0.0]) == 0.0
    assert minimal_section_norm(residual(Rotation(math.pi / 2)), [1.0, 0.0]) == pytest.approx(math.sqrt(2))
    with pytest.raises(NotInDomain):
        minimal_section_norm(normal_cone(UNIT), [2.0, 0.0])


def test_minimal_section_is_yosida_limit():
    # for shifted normal cone the closed forms do not apply; the limit is |alpha x| at interior points
    op = shifted(normal_cone(UNIT), 2.0)
    assert minimal_section_norm(op, [0.3, 0.4]) == pytest.approx(1.0, abs=1e-6)
    # on the sphere N_C(x) + 2x = {(2 + t) x : t >= 0}, least norm 2
    assert minimal_section_norm(op, [1.0, 0.0]) == pytest.approx(2.0, abs=1e-6)


def test_distance_examples():
    assert distance_to_solutions(quadratic(np.eye(2)), [3.0, 4.0]) == pytest.approx(5.0)
    assert distance_to_solutions(normal_cone(UNIT), [0.0, 3.0]) == pytest.approx(2.0)
    op = normal_cone(AffineSubspace([0.0, 0.0], [[0.0, 1.0]]))
    assert distance_to_solutions(op, [3.0, 7.0]) == pytest.approx(3.0)


def test_objective_examples():
    assert objective_value(quadratic(np.eye(2)), [1.0, 0.0]) == pytest.approx(0.5)
    assert objective_value(dist_squared(UNIT), [0.0, 3.0]) == pytest.approx(2.0)
    assert is_infinite(objective_value(normal_cone(UNIT), [0.0, 3.0]))
    with pytest.raises(NoObjective):
        objective_value(skew(ROT), [1.0, 0.0])


def test_moreau_examples():
    assert moreau_value(quadratic(np.eye(2)), 1.0, [2.0, 0.0]) == pytest.approx(1.0)
    assert moreau_value(normal_cone(UNIT), 1.0, [0.0, 3.0]) == pytest.approx(2.0)
    assert moreau_value(soft_abs(2), 0.5, [0.0, 0.0]) == 0.0


def test_moreau_matches_numerical_minimum():
    import scipy.optimize

    rng = np.random.default_rng(11)
    for op in (quadratic(np.diag([2.0, 0.5])), soft_abs(2), dist_squared(Box([-1.0, -1.0], [1.0, 0.0]))):
        for _ in range(5):
            y = 2 * rng.standard_normal(2)
            lam = 0.7
            fun = lambda x: objective_value(op, x) + np.sum((x - y) ** 2) / (2 * lam)  # noqa: E731
            best = scipy.optimize.minimize(fun, y, method="Nelder-Mead",
                                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000}).fun
            assert moreau_value(op, lam, y) == pytest.approx(best, abs=1e-7)


# --- nonexpansive maps and residuals ----------------------------------------


def test_residual_fixed_sets():
    op = residual(Composition((Projection(UNIT), Projection(Box([0.5, -2.0], [3.0, 2.0])))))
    assert op.solutions is None or op.solutions.empty is False
    rot = residual(Rotation(math.pi / 2))
    assert np.allclose(rot.solutions.set.project([2.0, 1.0]), 0)
    single = residual(ResolventMap(quadratic(np.eye(2), [1.0, 1.0]), 1.0))
    assert isinstance(single.solutions.set, (Singleton, AffineSubspace))
    assert np.allclose(single.solutions.set.project([0.0, 0.0]), [1.0, 1.0])


def test_residual_nonaffine_resolvent_solves_equation():
    T = Composition((Projection(UNIT), Projection(Box([0.5, -2.0], [3.0, 2.0]))))
    op = residual(T)
    y = np.array([3.0, -1.0])
    for lam in (0.1, 1.0, 10.0):
        x = resolvent(op, lam, y)
        assert np.allclose(x + lam * (x - T.apply(x)), y, atol=1e-9)


# --- resolvent powers --------------------------------------------------------


@pytest.mark.parametrize("op", [op for op in CATALOG if has_fast_power(op)], ids=lambda o: f"{o.kind}-{o.dim}")
@pytest.mark.parametrize("m", [1, 7, 64, 300])
def test_fast_power_matches_loop(op, m):
    y = np.linspace(-1.5, 2.0, op.dim)
    h = 0.37 / m
    x = y
    for _ in range(m):
        x = resolvent(op, h, x)
    assert np.allclose(resolvent_power(op, h, m, y), x, atol=1e-10)


def test_fast_power_large_m_quadratic():
    # (1 + t/m)^{-m} -> e^{-t} for A = I
    op = quadratic(np.eye(1))
    for m in (10**3, 10**6, 2**40):
        exact = math.exp(-m * math.log1p(1.0 / m))
        assert resolvent_power(op, 1.0 / m, m, [1.0])[0] == pytest.approx(exact, rel=1e-9)
