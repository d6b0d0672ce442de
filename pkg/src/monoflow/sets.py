"""Points and closed convex sets of R^d with exact orthogonal projections.

Every ``project`` accepts a single point of shape ``(d,)`` or a batch of
shape ``(..., d)`` and projects along the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedSpec

_SYM_TOL = 1e-12


def as_point(x, dim: int | None = None, name: str = "point") -> np.ndarray:
    """Return ``x`` as a finite float vector, checking its dimension."""
    arr = np.array(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise MalformedSpec(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise MalformedSpec(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise MalformedSpec(f"{name} has non-finite coordinates")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def norm(x) -> float:
    return float(np.linalg.norm(x))


class ConvexSet:
    """Base class; subclasses are frozen dataclasses."""

    kind: str = "abstract"

    @property
    def dim(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    def project(self, y):  # pragma: no cover - overridden
        raise NotImplementedError

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
        return bool(np.all(self.distance(x) <= tol * scale))

    def strictly_inside(self, x, tol: float = 1e-12) -> bool:
        """True when ``x`` lies in the interior (so the normal cone is {0})."""
        return False

    @property
    def symmetric(self) -> bool:
        """Whether C = -C."""
        raise NotImplementedError

    def interior_ball(self):
        """A ball ``(center, radius)`` contained in C, or None if int C is empty."""
        return None

    def affine_projection(self):
        """``(L, c)`` with P_C(y) = L y + c when the projection is affine, else None."""
        return None

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_point(self.center, name="center")))
        r = float(self.radius)
        if not (r >= 0.0 and math.isfinite(r)):
            raise MalformedSpec("ball radius must be finite and >= 0")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        v = y - self.center
        dist = np.linalg.norm(v, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(dist > self.radius, self.radius / np.where(dist > 0, dist, 1.0), 1.0)
        return self.center + v * scale

    def strictly_inside(self, x, tol=1e-12):
        return norm(np.asarray(x) - self.center) < self.radius - tol

    @property
    def symmetric(self):
        return bool(np.all(np.abs(self.center) <= _SYM_TOL))

    def interior_ball(self):
        if self.radius > 0:
            return self.center.copy(), self.radius
        return None

    def affine_projection(self):
        if self.radius == 0:
            return np.zeros((self.dim, self.dim)), self.center.copy()
        return None

    def sample(self, rng, n):
        d = self.dim
        g = rng.standard_normal((n, d))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / d)
        return self.center + g * r

    def to_spec(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class Box(ConvexSet):
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = as_point(self.lo, name="lo")
        hi = as_point(self.hi, dim=lo.shape[0], name="hi")
        if np.any(lo > hi):
            raise MalformedSpec("box requires lo <= hi coordinatewise")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self):
        return self.lo.shape[0]

    def project(self, y):
        return np.clip(np.asarray(y, dtype=float), self.lo, self.hi)

    def strictly_inside(self, x, tol=1e-12):
        x = np.asarray(x)
        return bool(np.all(x > self.lo + tol) and np.all(x < self.hi - tol))

    @property
    def symmetric(self):
        return bool(np.all(np.abs(self.lo + self.hi) <= _SYM_TOL))

    def interior_ball(self):
        width = self.hi - self.lo
        if np.all(width > 0):
            return (self.lo + self.hi) / 2, float(np.min(width)) / 2
        return None

    def affine_projection(self):
        if np.all(self.lo == self.hi):
            return np.zeros((self.dim, self.dim)), self.lo.copy()
        return None

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.uniform(size=(n, self.dim))

    def to_spec(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class AffineSubspace(ConvexSet):
    """``anchor + span(rows of basis)``; the rows must be orthonormal."""

    anchor: np.ndarray
    basis: np.ndarray
    kind: str = field(default="affine_subspace", init=False)

    def __post_init__(self):
        a = as_point(self.anchor, name="anchor")
        B = np.array(self.basis, dtype=float).reshape(-1, a.shape[0])
        if B.shape[0] > a.shape[0]:
            raise MalformedSpec("affine subspace basis has more vectors than the dimension")
        if not np.allclose(B @ B.T, np.eye(B.shape[0]), atol=1e-9):
            raise MalformedSpec("affine subspace basis rows must be orthonormal")
        object.__setattr__(self, "anchor", _frozen(a))
        object.__setattr__(self, "basis", _frozen(B))

    @classmethod
    def whole_space(cls, dim: int) -> "AffineSubspace":
        return cls(np.zeros(dim), np.eye(dim))

    @property
    def dim(self):
        return self.anchor.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[0]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        return self.anchor + ((y - self.anchor) @ self.basis.T) @ self.basis

    def strictly_inside(self, x, tol=1e-12):
        return self.subspace_dim == self.dim

    @property
    def symmetric(self):
        return bool(np.all(np.abs(self.project(np.zeros(self.dim))) <= _SYM_TOL))

    def interior_ball(self):
        if self.subspace_dim == self.dim:
            return self.anchor.copy(), math.inf
        return None

    def affine_projection(self):
        L = self.basis.T @ self.basis
        return L, self.anchor - L @ self.anchor

    def sample(self, rng, n):
        z = rng.standard_normal((n, self.subspace_dim))
        return self.anchor + z @ self.basis

    def to_spec(self):
        return {"kind": "affine_subspace", "anchor": self.anchor.tolist(), "basis": self.basis.tolist()}


@dataclass(frozen=True)
class Halfspace(ConvexSet):
    """``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float
    kind: str = field(default="halfspace", init=False)

    def __post_init__(self):
        a = as_point(self.normal, name="normal")
        if not np.any(a != 0):
            raise MalformedSpec("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(a))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.shape[0]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        a = self.normal
        excess = np.maximum((y @ a - self.offset) / (a @ a), 0.0)
        return y - np.multiply.outer(excess, a) if np.ndim(excess) else y - excess * a

    def strictly_inside(self, x, tol=1e-12):
        return float(np.asarray(x) @ self.normal) < self.offset - tol

    @property
    def symmetric(self):
        return False

    def interior_ball(self):
        a = self.normal
        na = np.linalg.norm(a)
        return a * (self.offset / na**2 - 1.0 / na), 1.0

    def sample(self, rng, n):
        z = rng.standard_normal((n, self.dim)) * 2.0
        a = self.normal
        excess = np.maximum((z @ a - self.offset) / (a @ a), 0.0)
        return z - 2.0 * np.multiply.outer(excess, a)

    def to_spec(self):
        return {"kind": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class Segment(ConvexSet):
    a: np.ndarray
    b: np.ndarray
    kind: str = field(default="segment", init=False)

    def __post_init__(self):
        a = as_point(self.a, name="a")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(as_point(self.b, dim=a.shape[0], name="b")))

    @property
    def dim(self):
        return self.a.shape[0]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        u = self.b - self.a
        uu = float(u @ u)
        if uu == 0.0:
            return np.broadcast_to(self.a, y.shape).copy()
        s = np.clip(((y - self.a) @ u) / uu, 0.0, 1.0)
        return self.a + np.multiply.outer(s, u)

    def strictly_inside(self, x, tol=1e-12):
        if self.dim != 1:
            return False
        lo, hi = sorted((float(self.a[0]), float(self.b[0])))
        return lo + tol < float(np.asarray(x)[0]) < hi - tol

    @property
    def symmetric(self):
        return bool(np.all(np.abs(self.a + self.b) <= _SYM_TOL))

    def interior_ball(self):
        if self.dim == 1 and self.a[0] != self.b[0]:
            return (self.a + self.b) / 2, abs(float(self.b[0] - self.a[0])) / 2
        return None

    def affine_projection(self):
        if np.array_equal(self.a, self.b):
            return np.zeros((self.dim, self.dim)), self.a.copy()
        return None

    def sample(self, rng, n):
        s = rng.uniform(size=(n, 1))
        return self.a + s * (self.b - self.a)

    def to_spec(self):
        return {"kind": "segment", "a": self.a.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True)
class Singleton(ConvexSet):
    p: np.ndarray
    kind: str = field(default="singleton", init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(as_point(self.p, name="p")))

    @property
    def dim(self):
        return self.p.shape[0]

    def project(self, y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(self.p, y.shape).copy()

    @property
    def symmetric(self):
        return bool(np.all(np.abs(self.p) <= _SYM_TOL))

    def affine_projection(self):
        return np.zeros((self.dim, self.dim)), self.p.copy()

    def sample(self, rng, n):
        return np.tile(self.p, (n, 1))

    def to_spec(self):
        return {"kind": "singleton", "p": self.p.tolist()}


def set_from_spec(spec: dict) -> ConvexSet:
    """Build a convex set from its declarative description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MalformedSpec("set spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    builders = {
        "ball": (Ball, ("center", "radius")),
        "box": (Box, ("lo", "hi")),
        "affine_subspace": (AffineSubspace, ("anchor", "basis")),
        "halfspace": (Halfspace, ("normal", "offset")),
        "segment": (Segment, ("a", "b")),
        "singleton": (Singleton, ("p",)),
    }
    if kind not in builders:
        raise MalformedSpec(f"unknown set kind {kind!r}")
    cls, keys = builders[kind]
    if set(params) != set(keys):
        raise MalformedSpec(f"set kind {kind!r} expects keys {sorted(keys)}, got {sorted(params)}")
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MalformedSpec):
            raise
        raise MalformedSpec(f"bad {kind} spec: {exc}") from exc
