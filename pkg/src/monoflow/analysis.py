"""Convergence classification, minimum enclosing balls and the rotation oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .errors import EmptyInput, TooShort
from .operators import SolutionSet
from .schemes import StepSchedule, Trajectory, average, running_sum

# ---------------------------------------------------------------------------
# minimum enclosing ball


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, pts, tol: float = 1e-9) -> bool:
        pts = np.atleast_2d(pts)
        return bool(np.all(np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol))

    def to_dict(self):
        return {"center": self.center.tolist(), "radius": self.radius}


def _circumball(support: list) -> tuple:
    """Smallest ball with every support point on its boundary."""
    p0 = support[0]
    if len(support) == 1:
        return p0.copy(), 0.0
    V = np.array(support[1:]) - p0
    G = V @ V.T
    alpha, *_ = np.linalg.lstsq(2 * G, np.diag(G), rcond=None)
    c = p0 + alpha @ V
    r = max(float(np.linalg.norm(s - c)) for s in support)
    return c, r


def _move_to_front(P: np.ndarray, n: int, support: list, dim: int) -> tuple:
    """Ball of P[:n] with ``support`` on the boundary; reorders P in place."""
    if support:
        c, r = _circumball(support)
        if len(support) == dim + 1:
            return c, r
        i = 0
    else:
        c, r = P[0].copy(), 0.0
        i = 1
    while i < n:
        dist = np.linalg.norm(P[i:n] - c, axis=1)
        out = dist > r * (1 + 1e-12) + 1e-15
        if not out.any():
            break
        j = i + int(np.argmax(out))
        p = P[j].copy()
        c, r = _move_to_front(P, j, support + [p], dim)
        P[1 : j + 1] = P[0:j].copy()
        P[0] = p
        i = j + 1
    return c, r


def min_enclosing_ball(points, seed: int = 0) -> Ball:
    """Exact smallest enclosing ball (move-to-front Welzl recursion).

    The recursion depth is bounded by d + 1; points are shuffled with a fixed
    seed so results are deterministic.
    """
    P = np.array(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None] if P.size else P.reshape(0, 1)
    if len(P) == 0:
        raise EmptyInput("no points")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must be finite")
    P = np.unique(P, axis=0)
    rng = np.random.default_rng(seed)
    P = P[rng.permutation(len(P))]
    c, r = _move_to_front(P, len(P), [], P.shape[1])
    # final radius against all points guards against rounding in the circumcenter
    r = float(np.max(np.linalg.norm(P - c, axis=1)))
    return Ball(c, r)


def asymptotic_center(traj: Trajectory, tail_fraction: float = 0.5) -> np.ndarray:
    """Chebyshev center of the last ceil(tail_fraction * N) samples."""
    return asymptotic_ball(traj, tail_fraction).center


def asymptotic_ball(traj: Trajectory, tail_fraction: float = 0.5) -> Ball:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    n = len(traj)
    if n < 10:
        raise EmptyInput(f"asymptotic center needs at least 10 samples, got {n}")
    k = int(math.ceil(tail_fraction * n))
    return min_enclosing_ball(traj.points[n - k :])


# ---------------------------------------------------------------------------
# convergence classification


@dataclass(frozen=True)
class Verdict:
    kind: str
    limit: Optional[np.ndarray] = None

    def to_dict(self):
        return {"kind": self.kind, "limit": None if self.limit is None else self.limit.tolist()}

    def __str__(self):
        if self.limit is None:
            return self.kind
        return f"{self.kind}({', '.join(f'{v:.6g}' for v in self.limit)})"


@dataclass(frozen=True)
class ConvergenceReport:
    verdict: Verdict
    average_verdict: Verdict
    asymptotic_regularity: float
    tail_diameter: float
    average_tail_diameter: float
    tolerances: dict
    limit_distance_to_S: Optional[float] = None
    average_limit_distance_to_S: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict.to_dict(),
            "average_verdict": self.average_verdict.to_dict(),
            "asymptotic_regularity": self.asymptotic_regularity,
            "tail_diameter": self.tail_diameter,
            "average_tail_diameter": self.average_tail_diameter,
            "limit_distance_to_S": self.limit_distance_to_S,
            "average_limit_distance_to_S": self.average_limit_distance_to_S,
            "tolerances": self.tolerances,
        }


def _diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    if len(pts) <= 4000:
        return float(pdist(pts).max())
    # too many pairs: twice the enclosing radius bounds the diameter from above
    return 2.0 * min_enclosing_ball(pts).radius


def _verdict(pts: np.ndarray, tail: int, tol_conv: float, growth: float) -> tuple:
    norms = np.linalg.norm(pts, axis=1)
    start = max(norms[0], 1e-300)
    tail_pts = pts[-tail:]
    diam = _diameter(tail_pts) if np.all(np.isfinite(tail_pts)) else math.inf
    if diam < tol_conv:
        return Verdict("converges", tail_pts.mean(axis=0)), diam
    tail_norms = norms[-tail:]
    if norms[-1] > growth * start and np.all(np.diff(tail_norms) >= 0):
        return Verdict("norm_divergent"), diam
    if diam > 10 * tol_conv and norms.max() <= growth * start:
        return Verdict("bounded_nonconvergent"), diam
    return Verdict("undetermined"), diam


def classify_convergence(traj: Trajectory, solutions: Optional[SolutionSet] = None,
                         tol_conv: Optional[float] = None, tail_fraction: float = 0.1,
                         growth: float = 1e3, window: int = 10) -> ConvergenceReport:
    """Classify a trajectory and its running average.

    Rules, applied to the last ``tail_fraction`` of the samples:

    * ``converges``: tail diameter < tol_conv; the limit is the tail mean.
    * ``norm_divergent``: final norm > growth * initial norm and norms
      nondecreasing across the tail.
    * ``bounded_nonconvergent``: tail diameter > 10 tol_conv and every norm
      at most growth * initial norm.
    * ``undetermined`` otherwise.

    tol_conv defaults to 1e-4 * |x_0| (1e-4 when x_0 = 0).
    """
    n = len(traj)
    if n < 100:
        raise TooShort(f"classification needs at least 100 samples, got {n}")
    scale = float(np.linalg.norm(traj.points[0]))
    if tol_conv is None:
        tol_conv = 1e-4 * (scale if scale > 0 else 1.0)
    tail = int(math.ceil(tail_fraction * n))
    verdict, diam = _verdict(traj.points, tail, tol_conv, growth)
    avg = average(traj)
    avg_verdict, avg_diam = _verdict(avg.points, tail, tol_conv, growth)
    tail_pts = traj.points[-tail:]
    reg = 0.0
    for m in range(1, min(window, tail - 1) + 1):
        reg = max(reg, float(np.max(np.linalg.norm(tail_pts[m:] - tail_pts[:-m], axis=1))))

    def dist(v):
        if solutions is None or solutions.empty or v.limit is None:
            return None
        return float(solutions.set.distance(v.limit))

    tolerances = {"tol_conv": tol_conv, "tail_fraction": tail_fraction, "growth": growth,
                  "tail_samples": tail, "regularity_window": window}
    return ConvergenceReport(verdict, avg_verdict, reg, diam, avg_diam, tolerances,
                             dist(verdict), dist(avg_verdict))


# ---------------------------------------------------------------------------
# rotation oracle


def rotation_closed_form(r0: float, theta0: float, schedule: StepSchedule, n: int,
                         scheme: str = "proximal") -> Trajectory:
    """Exact iterates for A = -R, R the counterclockwise quarter turn of the plane.

    proximal: r_n = r_{n-1} (1 + lam_n^2)^{-1/2}, theta_n = theta_{n-1} + arctan(lam_n)
    euler:    rho_n = rho_{n-1} (1 + lam_n^2)^{1/2},  phi_n = phi_{n-1} + arctan(lam_n)

    Sums of logs and angles are compensated so the oracle stays accurate
    over long runs.
    """
    if scheme not in ("proximal", "euler"):
        raise ValueError("scheme must be 'proximal' or 'euler'")
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    lam = schedule.steps(n)
    sign = -0.5 if scheme == "proximal" else 0.5
    logr = np.concatenate([[0.0], running_sum(np.log1p(lam * lam))]) * sign
    theta = theta0 + np.concatenate([[0.0], running_sum(np.arctan(lam))])
    r = r0 * np.exp(logr)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    vel = np.full_like(pts, np.nan)
    if scheme == "proximal":
        vel[1:] = np.diff(pts, axis=0) / lam[:, None]
    else:
        vel[:-1] = np.diff(pts, axis=0) / lam[:, None]
    steps = np.concatenate([[np.nan], lam])
    sigma = np.concatenate([[0.0], running_sum(lam)])
    tau = np.concatenate([[0.0], running_sum(lam * lam)])
    prov = {"scheme": f"closed_form_{scheme}", "operator": "rotation", "schedule": schedule.id}
    return Trajectory(f"closed_form_{scheme}", np.arange(n + 1), sigma, pts, vel, steps, sigma, tau, prov)
