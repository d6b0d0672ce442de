"""Catalog of maximal monotone operators on R^d.

An :class:`OperatorHandle` is an immutable description of one operator
``A``: its kind, parameters, analytic property flags and (when known) its
zero set ``S = A^{-1}(0)``.  All evaluations are free functions of the
handle, e.g. ``resolvent(op, lam, y)`` computes ``J_lam y = (I + lam A)^{-1} y``.

Resolvents accept one point ``(d,)`` or a batch ``(n, d)``.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
import scipy.linalg

from .errors import (
    MalformedSpec,
    NoObjective,
    NonConvergedLimit,
    NonConvergedSolve,
    NotForwardCapable,
    NotInDomain,
    NotMonotone,
    UnknownSolutionSet,
)
from .sets import AffineSubspace, ConvexSet, Singleton, as_point, set_from_spec

MAX_DIM = 64
MATRIX_TOL = 1e-9
SOLVE_TOL = 1e-12
SOLVE_BUDGET = 10_000
LIMIT_TOL = 1e-8
LIMIT_BUDGET = 60

OPERATOR_KINDS = (
    "quadratic",
    "normal_cone",
    "skew",
    "residual",
    "dist_squared",
    "shifted",
    "yosida",
    "soft_abs",
)
SUBDIFFERENTIAL_KINDS = ("quadratic", "normal_cone", "dist_squared", "soft_abs")


class _Infinite:
    """Marker for the value +inf of an indicator function."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()


def is_infinite(value) -> bool:
    return value is INFINITE


@dataclass(frozen=True)
class Flags:
    forward_capable: bool
    demipositive: Optional[bool]
    strongly_monotone_modulus: float
    odd: bool
    interior_solutions: bool
    nr_condition: Optional[bool]

    def to_dict(self):
        return {
            "forward_capable": self.forward_capable,
            "demipositive": self.demipositive,
            "strongly_monotone_modulus": self.strongly_monotone_modulus,
            "odd": self.odd,
            "interior_solutions": self.interior_solutions,
            "nr_condition": self.nr_condition,
        }


@dataclass(frozen=True)
class SolutionSet:
    """Exact description of S = A^{-1}(0); ``set is None`` means S is empty."""

    set: Optional[ConvexSet]

    @property
    def empty(self) -> bool:
        return self.set is None

    def to_spec(self):
        return None if self.set is None else self.set.to_spec()


# ---------------------------------------------------------------------------
# linear-algebra helpers


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _solve(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if rhs.ndim == 1:
        return np.linalg.solve(K, rhs)
    shape = rhs.shape
    flat = rhs.reshape(-1, shape[-1])
    return np.linalg.solve(K, flat.T).T.reshape(shape)


def _null_space(M: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (rows) of ker M."""
    if M.size == 0:
        return np.zeros((0, M.shape[1]))
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > tol))
    return vt[rank:]


def _affine_zero_set(M: np.ndarray, v: np.ndarray) -> SolutionSet:
    """Zeros of x -> M x + v for a monotone matrix M."""
    d = M.shape[0]
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    null = _null_space(M, MATRIX_TOL * scale)
    p, *_ = np.linalg.lstsq(M, -v, rcond=None)
    if np.linalg.norm(M @ p + v) > MATRIX_TOL * max(1.0, float(np.linalg.norm(v))) * scale:
        return SolutionSet(None)
    if null.shape[0] == 0:
        return SolutionSet(Singleton(p))
    # anchor at the least-norm zero
    p = p - (p @ null.T) @ null
    return SolutionSet(AffineSubspace(p, null) if null.shape[0] < d else AffineSubspace.whole_space(d))


def _linear_nr(M: np.ndarray) -> bool:
    """Finite-dimensional NR condition for x -> M x + v (S assumed nonempty)."""
    d = M.shape[0]
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    null = _null_space(M, MATRIX_TOL * scale)
    if null.shape[0] == d:
        return True
    comp = _null_space(null, 0.5) if null.shape[0] else np.eye(d)
    sym = (M + M.T) / 2
    return bool(np.linalg.eigvalsh(comp @ sym @ comp.T).min() > MATRIX_TOL * scale)


def _sym_min_eig(M: np.ndarray) -> float:
    return max(0.0, float(np.linalg.eigvalsh((M + M.T) / 2).min()))


# ---------------------------------------------------------------------------
# nonexpansive maps (used by the residual kind A = I - T)


class NonexpansiveMap:
    kind = "abstract"

    @property
    def dim(self) -> int:  # pragma: no cover
        raise NotImplementedError

    def apply(self, x):  # pragma: no cover
        raise NotImplementedError

    __call__ = apply

    def affine(self):
        """``(L, c)`` with T x = L x + c when T is affine, else None."""
        return None

    @property
    def odd(self) -> bool:
        return False

    def fixed_set(self) -> Optional[SolutionSet]:
        """Fix T as a :class:`SolutionSet`, or None when not analytically known."""
        aff = self.affine()
        if aff is None:
            return None
        L, c = aff
        return _affine_zero_set(np.eye(self.dim) - L, -c)

    def to_spec(self) -> dict:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class Rotation(NonexpansiveMap):
    """Counterclockwise rotation of the first two coordinates; the rest is fixed."""

    angle: float
    dimension: int = 2
    kind: str = field(default="rotation", init=False)

    def __post_init__(self):
        if int(self.dimension) < 2:
            raise MalformedSpec("rotation needs dimension >= 2")
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "dimension", int(self.dimension))

    @property
    def dim(self):
        return self.dimension

    @functools.cached_property
    def matrix(self):
        R = np.eye(self.dimension)
        c, s = math.cos(self.angle), math.sin(self.angle)
        R[:2, :2] = [[c, -s], [s, c]]
        return _frozen(R)

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def affine(self):
        return self.matrix, np.zeros(self.dimension)

    @property
    def odd(self):
        return True

    def to_spec(self):
        return {"kind": "rotation", "angle": self.angle, "dim": self.dimension}


@dataclass(frozen=True)
class Projection(NonexpansiveMap):
    set: ConvexSet
    kind: str = field(default="projection", init=False)

    @property
    def dim(self):
        return self.set.dim

    def apply(self, x):
        return self.set.project(x)

    def affine(self):
        return self.set.affine_projection()

    @property
    def odd(self):
        return self.set.symmetric

    def fixed_set(self):
        return SolutionSet(self.set)

    def to_spec(self):
        return {"kind": "projection", "set": self.set.to_spec()}


@dataclass(frozen=True)
class ResolventMap(NonexpansiveMap):
    operator: "OperatorHandle"
    lam: float
    kind: str = field(default="resolvent_of", init=False)

    def __post_init__(self):
        if not float(self.lam) > 0:
            raise MalformedSpec("resolvent_of needs lambda > 0")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self):
        return self.operator.dim

    def apply(self, x):
        return resolvent(self.operator, self.lam, x)

    def affine(self):
        return affine_resolvent(self.operator, self.lam)

    @property
    def odd(self):
        return self.operator.flags.odd

    def fixed_set(self):
        return self.operator.solutions

    def to_spec(self):
        return {"kind": "resolvent_of", "operator": self.operator.to_spec(), "lambda": self.lam}


@dataclass(frozen=True)
class Composition(NonexpansiveMap):
    """``maps[0] o maps[1] o ...``: the last map is applied first."""

    maps: tuple
    kind: str = field(default="composition", init=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise MalformedSpec("composition needs at least one map")
        if len({m.dim for m in maps}) != 1:
            raise MalformedSpec("composed maps must share one dimension")
        object.__setattr__(self, "maps", maps)

    @property
    def dim(self):
        return self.maps[0].dim

    def apply(self, x):
        for m in reversed(self.maps):
            x = m.apply(x)
        return x

    def affine(self):
        L, c = np.eye(self.dim), np.zeros(self.dim)
        for m in reversed(self.maps):
            aff = m.affine()
            if aff is None:
                return None
            Lm, cm = aff
            L, c = Lm @ L, Lm @ c + cm
        return L, c

    @property
    def odd(self):
        return all(m.odd for m in self.maps)

    def to_spec(self):
        return {"kind": "composition", "maps": [m.to_spec() for m in self.maps]}


def map_from_spec(spec: dict) -> NonexpansiveMap:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MalformedSpec("map spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "rotation":
            return Rotation(spec["angle"], int(spec.get("dim", 2)))
        if kind == "projection":
            return Projection(set_from_spec(spec["set"]))
        if kind == "resolvent_of":
            return ResolventMap(build_operator(spec["operator"]), spec["lambda"])
        if kind == "composition":
            return Composition(tuple(map_from_spec(m) for m in spec["maps"]))
    except KeyError as exc:
        raise MalformedSpec(f"map kind {kind!r} is missing key {exc}") from exc
    raise MalformedSpec(f"unknown map kind {kind!r}")


# ---------------------------------------------------------------------------
# handles


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    kind: str
    dim: int
    params: Mapping
    flags: Flags
    solutions: Optional[SolutionSet]
    id: str

    def __repr__(self):
        return f"OperatorHandle({self.id}, dim={self.dim})"

    def to_spec(self) -> dict:
        return _params_to_spec(self.kind, self.dim, self.params)

    def __getattr__(self, name):
        # read-only access to kind parameters: op.Q, op.set, op.base, ...
        params = object.__getattribute__(self, "params")
        if name in params:
            return params[name]
        raise AttributeError(name)


def _params_to_spec(kind, dim, params) -> dict:
    spec = {"kind": kind}
    for key, value in params.items():
        if isinstance(value, np.ndarray):
            spec[key] = value.tolist()
        elif isinstance(value, (ConvexSet, NonexpansiveMap, OperatorHandle)):
            spec[key] = value.to_spec()
        else:
            spec[key] = value
    if kind == "soft_abs":
        spec["dim"] = dim
    return spec


def _make(kind, dim, params, flags, solutions) -> OperatorHandle:
    if dim < 1 or dim > MAX_DIM:
        raise MalformedSpec(f"dimension must be in 1..{MAX_DIM}, got {dim}")
    spec = _params_to_spec(kind, dim, params)
    digest = hashlib.sha1(json.dumps(spec, sort_keys=True).encode()).hexdigest()[:10]
    return OperatorHandle(kind, dim, MappingProxyType(dict(params)), flags, solutions, f"{kind}-{digest}")


def _square(M, name):
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise MalformedSpec(f"{name} must be a nonempty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise MalformedSpec(f"{name} has non-finite entries")
    return M


def _linear_flags(M, solutions, *, forward=True, odd):
    """Flags of an affine operator x -> M x + v with monotone M."""
    nonempty = solutions is not None and not solutions.empty
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    null_dim = _null_space(M, MATRIX_TOL * scale).shape[0]
    return dict(
        forward_capable=forward,
        strongly_monotone_modulus=_sym_min_eig(M),
        odd=odd,
        interior_solutions=nonempty and null_dim == M.shape[0],
        nr_condition=(_linear_nr(M) if nonempty else False),
    )


def quadratic(Q, b=None) -> OperatorHandle:
    """Gradient of f(x) = x'Qx/2 - b'x, i.e. A x = Q x - b."""
    Q = _square(Q, "Q")
    d = Q.shape[0]
    b = np.zeros(d) if b is None else as_point(b, dim=d, name="b")
    scale = max(1.0, float(np.max(np.abs(Q))))
    if np.max(np.abs(Q - Q.T)) > MATRIX_TOL * scale:
        raise NotMonotone("Q is not symmetric")
    Q = (Q + Q.T) / 2
    if np.linalg.eigvalsh(Q).min() < -MATRIX_TOL * scale:
        raise NotMonotone("Q is not positive semidefinite")
    sol = _affine_zero_set(Q, -b)
    flags = Flags(demipositive=not sol.empty, **_linear_flags(Q, sol, odd=bool(not np.any(b))))
    return _make("quadratic", d, {"Q": _frozen(Q), "b": _frozen(b)}, flags, sol)


def skew(M) -> OperatorHandle:
    """Linear operator A x = M x with M skew-symmetric."""
    M = _square(M, "M")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M + M.T)) > MATRIX_TOL * scale:
        raise NotMonotone("M is not skew-symmetric")
    M = (M - M.T) / 2
    d = M.shape[0]
    sol = _affine_zero_set(M, np.zeros(d))
    zero = not np.any(M)
    flags = Flags(demipositive=zero, **_linear_flags(M, sol, odd=True))
    return _make("skew", d, {"M": _frozen(M)}, flags, sol)


def normal_cone(C: ConvexSet) -> OperatorHandle:
    """Subdifferential of the indicator of C; its resolvent is P_C."""
    if not isinstance(C, ConvexSet):
        C = set_from_spec(C)
    flags = Flags(
        forward_capable=False,
        demipositive=True,
        strongly_monotone_modulus=0.0,
        odd=C.symmetric,
        interior_solutions=C.interior_ball() is not None,
        nr_condition=True,
    )
    return _make("normal_cone", C.dim, {"set": C}, flags, SolutionSet(C))


def dist_squared(C: ConvexSet) -> OperatorHandle:
    """Gradient of d_C(x)^2 / 2, i.e. A = I - P_C."""
    if not isinstance(C, ConvexSet):
        C = set_from_spec(C)
    flags = Flags(
        forward_capable=True,
        demipositive=True,
        strongly_monotone_modulus=1.0 if isinstance(C, Singleton) else 0.0,
        odd=C.symmetric,
        interior_solutions=C.interior_ball() is not None,
        nr_condition=True,
    )
    return _make("dist_squared", C.dim, {"set": C}, flags, SolutionSet(C))


def residual(T: NonexpansiveMap) -> OperatorHandle:
    """A = I - T for a nonexpansive map T."""
    if not isinstance(T, NonexpansiveMap):
        T = map_from_spec(T)
    d = T.dim
    fixed = T.fixed_set()
    aff = T.affine()
    if aff is not None:
        M = np.eye(d) - aff[0]
        lin = _linear_flags(M, fixed, odd=T.odd)
    else:
        nonempty = fixed is not None and not fixed.empty
        lin = dict(
            forward_capable=True,
            strongly_monotone_modulus=0.0,
            odd=T.odd,
            interior_solutions=bool(nonempty and fixed.set.interior_ball() is not None),
            nr_condition=None,
        )
    demi = None if fixed is None else (not fixed.empty)
    return _make("residual", d, {"T": T}, Flags(demipositive=demi, **lin), fixed)


def soft_abs(dim: int) -> OperatorHandle:
    """Subdifferential of the l1 norm; the resolvent is soft thresholding."""
    dim = int(dim)
    flags = Flags(
        forward_capable=False,
        demipositive=True,
        strongly_monotone_modulus=0.0,
        odd=True,
        interior_solutions=False,
        nr_condition=True,
    )
    if dim < 1 or dim > MAX_DIM:
        raise MalformedSpec(f"dimension must be in 1..{MAX_DIM}, got {dim}")
    return _make("soft_abs", dim, {}, flags, SolutionSet(Singleton(np.zeros(dim))))


def shifted(base: OperatorHandle, alpha: float) -> OperatorHandle:
    """A + alpha I."""
    alpha = float(alpha)
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise MalformedSpec("shift alpha must be finite and >= 0")
    bf = base.flags
    if alpha > 0:
        sol = SolutionSet(Singleton(resolvent(base, 1.0 / alpha, np.zeros(base.dim))))
        flags = Flags(
            forward_capable=bf.forward_capable,
            demipositive=True,
            strongly_monotone_modulus=bf.strongly_monotone_modulus + alpha,
            odd=bf.odd,
            interior_solutions=False,
            nr_condition=True,
        )
    else:
        sol, flags = base.solutions, bf
    return _make("shifted", base.dim, {"base": base, "alpha": alpha}, flags, sol)


def yosida(base: OperatorHandle, lam: float) -> OperatorHandle:
    """Yosida approximation A_lam = (I - J_lam) / lam of ``base``."""
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise MalformedSpec("Yosida parameter must be finite and > 0")
    bf = base.flags
    sol = base.solutions
    demi = None if sol is None else (not sol.empty)
    aff = affine_resolvent(base, lam)
    if aff is not None:
        M = (np.eye(base.dim) - aff[0]) / lam
        nr = _linear_nr(M) if demi else False
    else:
        nr = True if bf.strongly_monotone_modulus > 0 else None
    a = bf.strongly_monotone_modulus
    flags = Flags(
        forward_capable=True,
        demipositive=demi,
        strongly_monotone_modulus=a / (1 + a * lam),
        odd=bf.odd,
        interior_solutions=bf.interior_solutions,
        nr_condition=nr,
    )
    return _make("yosida", base.dim, {"base": base, "lam": lam}, flags, sol)


def build_operator(spec) -> OperatorHandle:
    """Build a handle from a declarative description (a mapping with 'kind')."""
    if isinstance(spec, OperatorHandle):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MalformedSpec("operator spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    allowed = {
        "quadratic": {"Q", "b"},
        "skew": {"M"},
        "normal_cone": {"set"},
        "dist_squared": {"set"},
        "residual": {"T"},
        "soft_abs": {"dim"},
        "shifted": {"base", "alpha"},
        "yosida": {"base", "lam", "lambda"},
    }
    if kind not in allowed:
        raise MalformedSpec(f"unknown operator kind {kind!r}")
    extra = set(spec) - allowed[kind] - {"kind"}
    if extra:
        raise MalformedSpec(f"operator kind {kind!r} does not accept keys {sorted(extra)}")
    try:
        if kind == "quadratic":
            return quadratic(spec["Q"], spec.get("b"))
        if kind == "skew":
            return skew(spec["M"])
        if kind == "normal_cone":
            return normal_cone(set_from_spec(spec["set"]))
        if kind == "dist_squared":
            return dist_squared(set_from_spec(spec["set"]))
        if kind == "residual":
            return residual(map_from_spec(spec["T"]))
        if kind == "soft_abs":
            return soft_abs(spec["dim"])
        if kind == "shifted":
            return shifted(build_operator(spec["base"]), spec["alpha"])
        lam = spec["lam"] if "lam" in spec else spec["lambda"]
        return yosida(build_operator(spec["base"]), lam)
    except KeyError as exc:
        raise MalformedSpec(f"operator kind {kind!r} is missing key {exc}") from exc


# ---------------------------------------------------------------------------
# evaluations


def _check_lam(lam):
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"step must be finite and > 0, got {lam}")
    return lam


def _as_input(op, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (op.dim,):
        raise MalformedSpec(f"point has shape {y.shape}, operator dimension is {op.dim}")
    return y


def _soft(y, t):
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def _residual_resolvent(T: NonexpansiveMap, lam: float, y: np.ndarray) -> np.ndarray:
    aff = T.affine()
    d = T.dim
    if aff is not None:
        L, c = aff
        return _solve((1 + lam) * np.eye(d) - lam * L, y + lam * c)
    # x -> (y + lam T x)/(1 + lam) contracts with factor q = lam/(1+lam);
    # the a-posteriori error is q/(1-q) * |step| = lam * |step|.
    scale = max(1.0, float(np.max(np.abs(y))))
    x = y
    for _ in range(SOLVE_BUDGET):
        nxt = (y + lam * T.apply(x)) / (1 + lam)
        step = float(np.max(np.linalg.norm(nxt - x, axis=-1)))
        x = nxt
        if lam * step <= SOLVE_TOL * scale:
            return x
    raise NonConvergedSolve(f"residual resolvent did not reach {SOLVE_TOL} in {SOLVE_BUDGET} iterations")


def resolvent(op: OperatorHandle, lam: float, y):
    """Return J_lam y = (I + lam A)^{-1} y."""
    lam = _check_lam(lam)
    y = _as_input(op, y)
    kind = op.kind
    p = op.params
    if kind == "quadratic":
        return _solve(np.eye(op.dim) + lam * p["Q"], y + lam * p["b"])
    if kind == "skew":
        return _solve(np.eye(op.dim) + lam * p["M"], y)
    if kind == "normal_cone":
        return p["set"].project(y)
    if kind == "dist_squared":
        return y + (lam / (1 + lam)) * (p["set"].project(y) - y)
    if kind == "soft_abs":
        return _soft(y, lam)
    if kind == "residual":
        return _residual_resolvent(p["T"], lam, y)
    if kind == "shifted":
        c = 1 + lam * p["alpha"]
        return resolvent(p["base"], lam / c, y / c)
    if kind == "yosida":
        mu = p["lam"]
        return (mu * y + lam * resolvent(p["base"], lam + mu, y)) / (lam + mu)
    raise MalformedSpec(f"unknown operator kind {kind!r}")  # pragma: no cover


def yosida_eval(op: OperatorHandle, lam: float, x):
    """A_lam x = (x - J_lam x) / lam."""
    lam = _check_lam(lam)
    x = _as_input(op, x)
    return (x - resolvent(op, lam, x)) / lam


def forward_eval(op: OperatorHandle, x) -> np.ndarray:
    """The unique element of A x, where A is single-valued at x."""
    x = _as_input(op, x)
    kind = op.kind
    p = op.params
    if kind == "quadratic":
        return p["Q"] @ x - p["b"]
    if kind == "skew":
        return p["M"] @ x
    if kind == "residual":
        return x - p["T"].apply(x)
    if kind == "dist_squared":
        return x - p["set"].project(x)
    if kind == "yosida":
        return yosida_eval(p["base"], p["lam"], x)
    if kind == "normal_cone":
        if x.ndim == 1 and p["set"].strictly_inside(x):
            return np.zeros(op.dim)
        raise NotForwardCapable("normal cone is single-valued only at interior points")
    if kind == "soft_abs":
        if np.all(x != 0):
            return np.sign(x)
        raise NotForwardCapable("the l1 subdifferential is multivalued where a coordinate vanishes")
    if kind == "shifted":
        return forward_eval(p["base"], x) + p["alpha"] * x
    raise MalformedSpec(f"unknown operator kind {kind!r}")  # pragma: no cover


def in_domain(op: OperatorHandle, x, tol: float = 1e-9) -> bool:
    if op.kind == "normal_cone":
        return op.params["set"].contains(x, tol)
    if op.kind == "shifted":
        return in_domain(op.params["base"], x, tol)
    return True


def minimal_section_norm(op: OperatorHandle, x) -> float:
    """Norm of the least-norm element of A x."""
    x = _as_input(op, x)
    if not in_domain(op, x):
        raise NotInDomain("point is outside D(A)")
    kind = op.kind
    if kind == "normal_cone":
        return 0.0
    if kind == "soft_abs":
        return math.sqrt(float(np.count_nonzero(x)))
    if kind in ("quadratic", "skew", "residual", "dist_squared", "yosida"):
        return float(np.linalg.norm(forward_eval(op, x)))
    if kind == "shifted" and op.params["base"].flags.forward_capable:
        return float(np.linalg.norm(forward_eval(op, x)))
    # |A_lam x| increases to |A0 x| as lam decreases
    prev = None
    for k in range(LIMIT_BUDGET + 1):
        val = float(np.linalg.norm(yosida_eval(op, 2.0**-k, x)))
        if prev is not None and abs(val - prev) < LIMIT_TOL:
            return val
        prev = val
    raise NonConvergedLimit("minimal section limit did not settle")


def distance_to_solutions(op: OperatorHandle, x) -> float:
    x = _as_input(op, x)
    if op.solutions is None or op.solutions.empty:
        raise UnknownSolutionSet(f"{op.id} has no known nonempty solution set")
    return float(op.solutions.set.distance(x))


def project_to_solutions(op: OperatorHandle, x) -> np.ndarray:
    x = _as_input(op, x)
    if op.solutions is None or op.solutions.empty:
        raise UnknownSolutionSet(f"{op.id} has no known nonempty solution set")
    return op.solutions.set.project(x)


def is_subdifferential(op: OperatorHandle) -> bool:
    if op.kind in SUBDIFFERENTIAL_KINDS:
        return True
    if op.kind in ("shifted", "yosida"):
        return is_subdifferential(op.params["base"])
    return False


def objective_value(op: OperatorHandle, x):
    """f(x) for A = grad/subdifferential of f; ``INFINITE`` outside dom f."""
    x = _as_input(op, x)
    if not is_subdifferential(op):
        raise NoObjective(f"{op.kind} operator is not a subdifferential")
    kind = op.kind
    p = op.params
    if kind == "quadratic":
        return float(0.5 * x @ p["Q"] @ x - p["b"] @ x)
    if kind == "normal_cone":
        return 0.0 if p["set"].contains(x) else INFINITE
    if kind == "dist_squared":
        return 0.5 * float(p["set"].distance(x)) ** 2
    if kind == "soft_abs":
        return float(np.sum(np.abs(x)))
    if kind == "shifted":
        base = objective_value(p["base"], x)
        return base if is_infinite(base) else base + 0.5 * p["alpha"] * float(x @ x)
    return moreau_value(p["base"], p["lam"], x)


def moreau_value(op: OperatorHandle, lam: float, y):
    """Moreau envelope f(J y) + |J y - y|^2 / (2 lam)."""
    lam = _check_lam(lam)
    y = _as_input(op, y)
    if not is_subdifferential(op):
        raise NoObjective(f"{op.kind} operator is not a subdifferential")
    x = resolvent(op, lam, y)
    fx = objective_value(op, x)
    if is_infinite(fx):
        return fx
    return fx + float(np.sum((x - y) ** 2)) / (2 * lam)


# ---------------------------------------------------------------------------
# affine structure and resolvent powers


@functools.lru_cache(maxsize=512)
def _augmented_generator(op: OperatorHandle) -> Optional[np.ndarray]:
    """G with A x = G[:d,:d] x + G[:d,d] when A is affine and single-valued.

    The last row of G is zero, so (I + h G)^{-1} acts on (y, 1) exactly as J_h.
    """
    d = op.dim
    G = np.zeros((d + 1, d + 1))
    kind = op.kind
    p = op.params
    if kind == "quadratic":
        G[:d, :d], G[:d, d] = p["Q"], -p["b"]
    elif kind == "skew":
        G[:d, :d] = p["M"]
    elif kind in ("residual", "dist_squared"):
        aff = p["T"].affine() if kind == "residual" else p["set"].affine_projection()
        if aff is None:
            return None
        G[:d, :d], G[:d, d] = np.eye(d) - aff[0], -aff[1]
    elif kind == "shifted":
        base = _augmented_generator(p["base"])
        if base is None:
            return None
        G = base.copy()
        G[:d, :d] += p["alpha"] * np.eye(d)
    elif kind == "yosida":
        aff = affine_resolvent(p["base"], p["lam"])
        if aff is None:
            return None
        G[:d, :d], G[:d, d] = (np.eye(d) - aff[0]) / p["lam"], -aff[1] / p["lam"]
    else:
        return None
    G.setflags(write=False)
    return G


def affine_resolvent(op: OperatorHandle, lam: float):
    """``(L, c)`` with J_lam y = L y + c when the resolvent is affine, else None."""
    lam = _check_lam(lam)
    d = op.dim
    if op.kind == "normal_cone":
        return op.params["set"].affine_projection()
    if op.kind == "shifted":
        c = 1 + lam * op.params["alpha"]
        aff = affine_resolvent(op.params["base"], lam / c)
        if aff is None:
            return None
        return aff[0] / c, aff[1]
    G = _augmented_generator(op)
    if G is None:
        return None
    K = np.linalg.inv(np.eye(d + 1) + lam * G)
    return K[:d, :d], K[:d, d]


def has_fast_power(op: OperatorHandle) -> bool:
    """Whether ``resolvent_power`` runs in time independent of m."""
    return op.kind in ("normal_cone", "dist_squared", "soft_abs") or _augmented_generator(op) is not None


def _log_near_identity(X: np.ndarray) -> np.ndarray:
    """log(I + X) by its power series; requires |X| <= 1/2."""
    out = np.zeros_like(X)
    term = np.eye(X.shape[0])
    for k in range(1, 200):
        term = term @ X
        inc = term / k if k % 2 else -term / k
        out += inc
        if np.max(np.abs(inc)) <= 1e-18 * max(1.0, np.max(np.abs(out))):
            break
    return out


def _affine_power_matrix(G: np.ndarray, h: float, m: int) -> np.ndarray:
    n = G.shape[0]
    X = h * G
    if m <= 64:
        return np.linalg.matrix_power(np.linalg.inv(np.eye(n) + X), m)
    if np.linalg.norm(X, 2) <= 0.5:
        # (I + hG)^{-m} = exp(-m log(I + hG)); forming I + hG first would
        # lose the small part of hG to rounding when m is large.
        return scipy.linalg.expm(-m * _log_near_identity(X))
    return np.real(scipy.linalg.expm(-m * scipy.linalg.logm(np.eye(n) + X)))


def resolvent_power(op: OperatorHandle, h: float, m: int, y):
    """J_h applied m times to y."""
    h = _check_lam(h)
    m = int(m)
    if m < 0:
        raise ValueError("power must be >= 0")
    y = _as_input(op, y)
    if m == 0:
        return y.copy()
    kind = op.kind
    if kind == "normal_cone":
        return op.params["set"].project(y)
    if kind == "dist_squared":
        proj = op.params["set"].project(y)
        return proj + math.exp(-m * math.log1p(h)) * (y - proj)
    if kind == "soft_abs":
        return _soft(y, m * h)
    G = _augmented_generator(op)
    if G is not None:
        P = _affine_power_matrix(G, h, m)
        d = op.dim
        return y @ P[:d, :d].T + P[:d, d]
    for _ in range(m):
        y = resolvent(op, h, y)
    return y


def solve_resolvent_iteratively(op: OperatorHandle, lam: float, y, lipschitz: float,
                                tol: float = SOLVE_TOL, budget: int = SOLVE_BUDGET):
    """Resolvent of a single-valued L-Lipschitz monotone A by damped iteration.

    Iterates x <- x - theta (x + lam A x - y) with theta = 1/(1 + lam L)^2,
    a contraction because I + lam A is 1-strongly monotone.  Used as an
    independent check of the closed-form resolvents.
    """
    lam = _check_lam(lam)
    y = _as_input(op, y)
    K = 1 + lam * lipschitz
    theta = 1.0 / K**2
    q = math.sqrt(max(0.0, 1 - 2 * theta + theta**2 * K**2))
    x = y.copy()
    for _ in range(budget):
        r = x + lam * forward_eval(op, x) - y
        nxt = x - theta * r
        step = float(np.linalg.norm(nxt - x))
        x = nxt
        if q / (1 - q) * step <= tol * max(1.0, float(np.max(np.abs(y)))):
            return x
    raise NonConvergedSolve("damped resolvent iteration did not converge")


def catalog(dim: int = 2, seed: int = 0) -> list:
    """One representative handle of every kind (plus a few set variants)."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((dim, dim))
    Q = B @ B.T / dim
    W = rng.standard_normal((dim, dim))
    M = W - W.T
    from .sets import Ball, Box, Halfspace

    ball = Ball(np.zeros(dim), 1.0)
    box = Box(-np.ones(dim), np.ones(dim))
    half = Halfspace(np.ones(dim), 0.5)
    ops = [
        quadratic(Q, rng.standard_normal(dim)),
        skew(M),
        normal_cone(ball),
        normal_cone(half),
        dist_squared(box),
        soft_abs(dim),
        shifted(skew(M), 0.5),
        yosida(normal_cone(ball), 0.5),
    ]
    if dim >= 2:
        ops.append(residual(Rotation(math.pi / 2, dim)))
        ops.append(residual(Composition((Projection(ball), Projection(half)))))
    return ops
