"""Numerical certificates for the quantitative inequalities of monotone flows.

Each ``certify_*`` function evaluates both sides of one inequality on a
trajectory (or grid of trajectory samples) and returns a
:class:`Certificate` with per-sample margins ``rhs - lhs``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    InvalidProbe,
    NotASolution,
    NoVelocities,
    OperatorMismatch,
    UnknownSolutionSet,
    WrongOperatorKind,
)
from .operators import (
    OperatorHandle,
    forward_eval,
    is_infinite,
    minimal_section_norm,
    objective_value,
    project_to_solutions,
    resolvent,
)
from .schemes import (
    Trajectory,
    crandall_liggett_point,
    flow_point,
    interpolate,
    reference_flow,
)
from .sets import as_point

EXACT_SLACK = 1e-9
PROXIMAL_KINDS = ("proximal", "perturbed_proximal", "closed_form_proximal")
EULER_KINDS = ("euler", "closed_form_euler")


@dataclass(frozen=True, eq=False)
class Certificate:
    """Both sides of one inequality, sample by sample.

    ``slack`` is a scalar or one value per sample; the certificate passes
    when every margin ``rhs - lhs`` is at least ``-slack``.
    """

    name: str
    labels: list
    lhs: np.ndarray
    rhs: np.ndarray
    slack: Union[float, np.ndarray] = EXACT_SLACK
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lhs", np.asarray(self.lhs, dtype=float))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float))

    @property
    def margins(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if len(self.lhs) == 0:
            return True
        return bool(np.all(self.margins >= -np.asarray(self.slack)))

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if len(self.lhs) else math.inf

    @property
    def max_slack(self) -> float:
        return float(np.max(self.slack)) if np.ndim(self.slack) else float(self.slack)

    def worst(self) -> Optional[int]:
        if not len(self.lhs):
            return None
        return int(np.argmin(self.margins + np.asarray(self.slack)))

    def to_dict(self) -> dict:
        w = self.worst()
        return {
            "name": self.name,
            "passed": self.passed,
            "n_samples": len(self.lhs),
            "min_margin": self.min_margin if len(self.lhs) else None,
            "slack": self.max_slack,
            "worst": None if w is None else {
                "label": self.labels[w],
                "lhs": float(self.lhs[w]),
                "rhs": float(self.rhs[w]),
            },
            "details": self.details,
        }


def _sq(v):
    return float(np.dot(v, v))


def _require_discrete(traj: Trajectory, kinds, what):
    if traj.kind not in kinds:
        raise ValueError(f"{what} needs a {'/'.join(kinds)} trajectory, got {traj.kind}")


def log_grid(n: int, size: int = 10) -> np.ndarray:
    """About ``size`` log-spaced positions in 0..n-1, always with both ends."""
    if n <= size:
        return np.arange(n)
    pos = np.unique(np.round(np.geomspace(1, n, size - 1)).astype(int) - 1)
    return np.unique(np.concatenate([[0], pos, [n - 1]]))


# ---------------------------------------------------------------------------
# Kobayashi-type bounds


def _kobayashi(name, a: Trajectory, b: Trajectory, u, speed, grid, full, slack, extra):
    ia = np.arange(len(a)) if full else log_grid(len(a), grid)
    ib = np.arange(len(b)) if full else log_grid(len(b), grid)
    base = float(np.linalg.norm(a.points[0] - u) + np.linalg.norm(b.points[0] - u))
    K, L = np.meshgrid(ia, ib, indexing="ij")
    K, L = K.ravel(), L.ravel()
    lhs = np.linalg.norm(a.points[K] - b.points[L], axis=1)
    rhs = base + speed * np.sqrt((a.sigma[K] - b.sigma[L]) ** 2 + a.tau[K] + b.tau[L])
    labels = [(int(a.index[k]), int(b.index[l])) for k, l in zip(K, L)]
    scale = max(1.0, float(np.max(rhs)))
    return Certificate(name, labels, lhs, rhs, slack * scale, dict(extra, speed_at_u=speed))


def certify_kobayashi(traj_a: Trajectory, traj_b: Trajectory, u, grid: int = 10, full: bool = False,
                      slack: float = EXACT_SLACK) -> Certificate:
    """Distance between two proximal runs of one operator with different schedules.

    |x_k - x'_l| <= |x_0 - u| + |x'_0 - u| + |A0 u| sqrt((s_k - s'_l)^2 + t_k + t'_l)
    where s, t are the running sums of steps and squared steps.
    """
    for t in (traj_a, traj_b):
        _require_discrete(t, PROXIMAL_KINDS, "Kobayashi bound")
    op = traj_a.operator
    if op is None or traj_b.operator is None or op.id != traj_b.operator.id:
        raise OperatorMismatch("both proximal runs must use the same operator")
    u = as_point(u, dim=op.dim, name="u")
    speed = minimal_section_norm(op, u)
    return _kobayashi("kobayashi", traj_a, traj_b, u, speed, grid, full, slack, {})


def certify_euler_kobayashi(traj_a: Trajectory, traj_b: Trajectory, u, grid: int = 10, full: bool = False,
                            slack: float = EXACT_SLACK) -> Certificate:
    """Kobayashi-type bound for Euler runs of A = I - T, with |u - T u| as the speed."""
    for t in (traj_a, traj_b):
        _require_discrete(t, EULER_KINDS, "Euler Kobayashi bound")
    op = traj_a.operator
    if op is None or traj_b.operator is None or op.id != traj_b.operator.id:
        raise OperatorMismatch("both Euler runs must use the same operator")
    if op.kind != "residual":
        raise WrongOperatorKind(f"Euler Kobayashi bound needs A = I - T, got {op.kind}")
    u = as_point(u, dim=op.dim, name="u")
    speed = float(np.linalg.norm(u - op.params["T"].apply(u)))
    return _kobayashi("euler_kobayashi", traj_a, traj_b, u, speed, grid, full, slack, {})


def certify_chernoff(op: OperatorHandle, lam: float, x, t, n, tol: float = 1e-6) -> Certificate:
    """|v(t) - T^n x| <= |v'(0)| sqrt(lam t + (n lam - t)^2) for v' = -(I - T) v / lam.

    ``t`` and ``n`` may be scalars or sequences (all pairs are checked).
    v(t) is the flow of I - T at time t/lam, computed to accuracy ``tol``.
    """
    if op.kind != "residual":
        raise WrongOperatorKind(f"Chernoff estimate needs A = I - T, got {op.kind}")
    lam = float(lam)
    x = as_point(x, dim=op.dim, name="x")
    T = op.params["T"]
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    ns = np.atleast_1d(np.asarray(n, dtype=int))
    speed = float(np.linalg.norm(x - T.apply(x))) / lam
    flows = {float(tt): flow_point(op, x, tt / lam, tol) for tt in ts}
    powers = {}
    y = x.copy()
    for k in range(int(ns.max()) + 1):
        powers[k] = y
        y = T.apply(y)
    labels, lhs, rhs = [], [], []
    for tt in ts:
        for nn in ns:
            labels.append((float(tt), int(nn)))
            lhs.append(np.linalg.norm(flows[float(tt)] - powers[int(nn)]))
            rhs.append(speed * math.sqrt(lam * tt + (nn * lam - tt) ** 2))
    return Certificate("chernoff", labels, lhs, rhs, tol + EXACT_SLACK, {"lambda": lam, "flow_tol": tol})


def certify_exponential_formula(op: OperatorHandle, x, t: float, m_list: Sequence[int]) -> Certificate:
    """|(I + t/m A)^{-m} x - u(t)| <= 3 |A0 x| t / sqrt(m) for each m."""
    x = as_point(x, dim=op.dim, name="x")
    t = float(t)
    ms = [int(m) for m in m_list]
    speed = minimal_section_norm(op, x)
    rhs = np.array([3 * speed * t / math.sqrt(m) for m in ms])
    if speed == 0 or t == 0:
        ref, tol = x.copy(), 0.0
    else:
        tol = float(rhs.min()) / 10
        ref = flow_point(op, x, t, tol, speed=speed)
    lhs = np.array([np.linalg.norm(crandall_liggett_point(op, x, t, m) - ref) for m in ms])
    order = np.argsort(ms)
    decreasing = bool(np.all(np.diff(lhs[order]) <= tol))
    details = {"t": t, "reference_tol": tol, "error_decreasing_in_m": decreasing}
    return Certificate("exponential_formula", [("m", m) for m in ms], lhs, rhs, tol + EXACT_SLACK, details)


def certify_flow_vs_prox(traj: Trajectory, z, tol: float = 1e-4) -> Certificate:
    """|x_n - u(s_n)| <= 2 |x_0 - z| + |A0 z| sqrt(t_n), u the flow from x_0."""
    _require_discrete(traj, PROXIMAL_KINDS, "flow comparison")
    op = traj.operator
    z = as_point(z, dim=op.dim, name="z")
    flow = reference_flow(op, traj.points[0], tol=tol, times=traj.sigma)
    speed = minimal_section_norm(op, z)
    lhs = np.linalg.norm(traj.points - flow.points, axis=1)
    rhs = 2 * np.linalg.norm(traj.points[0] - z) + speed * np.sqrt(traj.tau)
    return Certificate("flow_vs_prox", [int(i) for i in traj.index], lhs, rhs, tol + EXACT_SLACK,
                       {"flow_tol": tol})


# ---------------------------------------------------------------------------
# Fejer monotonicity and velocities


def check_solution(op: OperatorHandle, p, tol: float = 1e-8) -> np.ndarray:
    """Validate p in S through the fixed-point test |J_1 p - p| <= tol."""
    p = as_point(p, dim=op.dim, name="p")
    if np.linalg.norm(resolvent(op, 1.0, p) - p) > tol * max(1.0, float(np.linalg.norm(p))):
        raise NotASolution("p is not a zero of the operator")
    return p


def _flow_square_slack(traj: Trajectory, radius: float) -> float:
    # each sample is within tol of the flow, so |u - p|^2 moves by < tol (2R + tol)
    return 2 * traj.tol * (2 * radius + traj.tol) + EXACT_SLACK


def certify_fejer(traj: Trajectory, p, form: str = "auto", slack: float = EXACT_SLACK) -> Certificate:
    """Distances to a zero p.

    ``form="fejer"``: |x_n - p|^2 <= |x_{n-1} - p|^2, with the proximal
    refinement |x_n - p|^2 + lam_n^2 |y_n|^2 <= |x_{n-1} - p|^2 when
    velocities are stored.  ``form="euler"``: |z_{n+1} - p|^2 <=
    |z_n - p|^2 + lam^2 |w_n|^2.  ``auto`` picks by trajectory kind.
    """
    op = traj.operator
    p = check_solution(op, p)
    if form == "auto":
        form = "euler" if traj.kind in EULER_KINDS else "fejer"
    d2 = np.sum((traj.points - p) ** 2, axis=1)
    labels = [int(i) for i in traj.index[1:]]
    if form == "euler":
        if not traj.contiguous or traj.steps is None:
            raise ValueError("the Euler form needs a contiguous Euler trajectory")
        w2 = np.sum(traj.velocities[:-1] ** 2, axis=1)
        lhs = d2[1:]
        rhs = d2[:-1] + traj.steps[1:] ** 2 * w2
        name = "fejer_euler"
    elif form == "fejer":
        lhs = d2[1:].copy()
        rhs = d2[:-1]
        name = "fejer"
        if traj.kind in PROXIMAL_KINDS and traj.contiguous and traj.velocities is not None:
            lhs = lhs + traj.steps[1:] ** 2 * np.sum(traj.velocities[1:] ** 2, axis=1)
            name = "fejer_proximal"
    else:
        raise ValueError(f"unknown Fejer form {form!r}")
    scale = max(1.0, float(np.max(rhs))) if len(rhs) else 1.0
    if traj.tol:
        s = _flow_square_slack(traj, math.sqrt(float(d2.max())))
    else:
        s = slack * scale
    return Certificate(name, labels, lhs, rhs, s, {"form": form})


def certify_velocity(traj: Trajectory, slack: float = 1e-10) -> Certificate:
    """Speeds are nonincreasing: proximal |y_n|, or flow difference quotients.

    Flow quotients are taken between consecutive samples, so the sampling
    should be uniform.
    """
    if traj.kind in EULER_KINDS:
        raise NoVelocities("Euler velocities carry no monotonicity guarantee")
    if traj.kind in PROXIMAL_KINDS:
        speed = np.linalg.norm(traj.velocities[1:], axis=1)
        labels = [int(i) for i in traj.index[2:]]
        lhs, rhs = speed[1:], speed[:-1]
        s = slack * max(1.0, float(speed.max()) if len(speed) else 1.0)
        return Certificate("velocity_monotone", labels, lhs, rhs, s, {"source": "velocities"})
    if len(traj) < 3:
        raise NoVelocities("flow needs at least three samples for difference quotients")
    h = np.diff(traj.times)
    q = np.linalg.norm(np.diff(traj.points, axis=0), axis=1) / h
    labels = [float(t) for t in traj.times[2:]]
    s = slack + 4 * traj.tol / h[1:]
    return Certificate("velocity_monotone", labels, q[1:], q[:-1], s, {"source": "difference_quotients"})


def certify_velocity_rate(traj: Trajectory, slack: float = EXACT_SLACK) -> Certificate:
    """|y_n| <= d(x_0, S) / sqrt(t_n) with t_n the running sum of squared steps."""
    _require_discrete(traj, PROXIMAL_KINDS, "velocity rate")
    d0 = _distance(traj.operator, traj.points[0])
    speed = np.linalg.norm(traj.velocities[1:], axis=1)
    rhs = d0 / np.sqrt(traj.tau[1:])
    return Certificate("velocity_rate", [int(i) for i in traj.index[1:]], speed, rhs, slack, {"dist_x0_S": d0})


def _distance(op, x):
    if op.solutions is None or op.solutions.empty:
        raise UnknownSolutionSet(f"{op.id} has no known nonempty solution set")
    return float(op.solutions.set.distance(x))


def certify_path_length(traj: Trajectory, center, radius: float, rel_slack: float = 0.1) -> Certificate:
    """Total path length <= |x_0 - p|^2 / r when the ball B(p, r) lies in S.

    The label of each sample is its index; lhs is the path length so far.
    """
    p = as_point(center, dim=traj.dim, name="center")
    if not radius > 0:
        raise ValueError("radius must be > 0")
    lengths = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(traj.points, axis=0), axis=1))])
    bound = float(np.sum((traj.points[0] - p) ** 2)) / radius
    rhs = np.full(len(lengths), bound)
    return Certificate("path_length", [int(i) for i in traj.index], lengths, rhs, rel_slack * bound,
                       {"center": p.tolist(), "radius": float(radius)})


def certify_strong_decay(traj: Trajectory, alpha: Optional[float] = None, p=None) -> Certificate:
    """|u(t) - p| <= exp(-alpha t) |u(0) - p| for an alpha-strongly monotone operator."""
    op = traj.operator
    alpha = op.flags.strongly_monotone_modulus if alpha is None else float(alpha)
    if p is None:
        p = project_to_solutions(op, traj.points[0])
    p = as_point(p, dim=traj.dim, name="p")
    dist = np.linalg.norm(traj.points - p, axis=1)
    rhs = np.exp(-alpha * traj.times) * dist[0]
    return Certificate("strong_decay", [float(t) for t in traj.times], dist, rhs, traj.tol + EXACT_SLACK,
                       {"alpha": alpha})


# ---------------------------------------------------------------------------
# objective values


def _values(op, pts):
    out = []
    for x in pts:
        v = objective_value(op, x)
        out.append(math.inf if is_infinite(v) else v)
    return np.array(out)


def certify_value_rates(op: OperatorHandle, traj: Trajectory, u=None) -> list:
    """Value-rate certificates for A = subdifferential of f.

    Proximal runs: ``guler`` (f(x_n) - f(u) <= (|u - x_0|^2 - |u - x_n|^2)/(2 s_n)
    - s_n |y_n|^2 / 2), ``proxspeed`` (|y_n| s_n <= d(x_0, S)) and
    ``value_decrease`` (f(x_n) + lam_n |y_n|^2 <= f(x_{n-1})).
    Flows: ``continuous_value`` (f(u(t)) + |u(t) - z|^2/(2t) <= f(z) + |u(0) - z|^2/(2t))
    and ``value_decrease``.  Euler runs: ``euler_value``, the one-step
    inequality behind the liminf result, with the running minimum of f
    reported in the details.

    ``u`` (the comparison point) defaults to P_S x_0.
    """
    if op.solutions is None or op.solutions.empty:
        raise UnknownSolutionSet(f"{op.id} has no known nonempty solution set")
    x0 = traj.points[0]
    if u is None:
        u = project_to_solutions(op, x0)
    u = as_point(u, dim=op.dim, name="u")
    fu = objective_value(op, u)
    if is_infinite(fu):
        raise ValueError("comparison point must lie in dom f")
    f = _values(op, traj.points)
    d0 = float(np.linalg.norm(x0 - project_to_solutions(op, x0)))
    f_star = objective_value(op, project_to_solutions(op, x0))
    certs = []
    if traj.kind in PROXIMAL_KINDS:
        sig = traj.sigma[1:]
        y2 = np.sum(traj.velocities[1:] ** 2, axis=1)
        labels = [int(i) for i in traj.index[1:]]
        lhs = f[1:] - fu
        rhs = (_sq(u - x0) - np.sum((traj.points[1:] - u) ** 2, axis=1)) / (2 * sig) - sig * y2 / 2
        scale = max(1.0, float(np.max(np.abs(rhs))), abs(fu))
        certs.append(Certificate("guler", labels, lhs, rhs, EXACT_SLACK * scale, {"u": u.tolist()}))
        certs.append(Certificate("proxspeed", labels, np.sqrt(y2) * sig, np.full(len(sig), d0), 1e-8,
                                 {"dist_x0_S": d0}))
        if traj.contiguous:
            finite = np.isfinite(f[:-1])
            lhs = (f[1:] + traj.steps[1:] * y2)[finite]
            rhs = f[:-1][finite]
            lab = [l for l, keep in zip(labels, finite) if keep]
            scale = max(1.0, float(np.max(np.abs(rhs)))) if len(rhs) else 1.0
            certs.append(Certificate("value_decrease", lab, lhs, rhs, EXACT_SLACK * scale, {}))
        return certs
    if traj.kind in EULER_KINDS:
        if not traj.contiguous:
            raise ValueError("Euler value certificate needs every sample")
        d2 = np.sum((traj.points - u) ** 2, axis=1)
        lam = traj.steps[1:]
        w2 = np.sum(traj.velocities[:-1] ** 2, axis=1)
        lhs = d2[1:]
        rhs = d2[:-1] - 2 * lam * (fu - f[:-1]) + lam**2 * w2
        running = np.minimum.accumulate(f)
        scale = max(1.0, float(np.max(np.abs(rhs))))
        details = {
            "f_star": f_star,
            "final_running_min_gap": float(running[-1] - f_star),
            "final_gap": float(f[-1] - f_star),
        }
        certs.append(Certificate("euler_value", [int(i) for i in traj.index[1:]], lhs, rhs,
                                 EXACT_SLACK * scale, details))
        return certs
    # flows
    t = traj.times
    pos = t > 0
    tol = traj.tol
    speed0 = minimal_section_norm(op, x0)
    fslack = 2 * tol * (speed0 + tol)
    dist = np.linalg.norm(traj.points - u, axis=1)
    lhs = f[pos] + dist[pos] ** 2 / (2 * t[pos])
    rhs = fu + _sq(x0 - u) / (2 * t[pos])
    s = fslack + tol * (2 * dist[pos] + tol) / (2 * t[pos]) + EXACT_SLACK * max(1.0, abs(fu))
    certs.append(Certificate("continuous_value", [float(v) for v in t[pos]], lhs, rhs, s, {"z": u.tolist()}))
    certs.append(Certificate("value_decrease", [float(v) for v in t[1:]], f[1:], f[:-1],
                             fslack + EXACT_SLACK * max(1.0, float(np.max(np.abs(f[np.isfinite(f)]))) ),
                             {}))
    return certs


# ---------------------------------------------------------------------------
# integral solutions


def validate_probe(op: OperatorHandle, x, y, tol: float = 1e-8):
    """Check that (x, y) lies on the graph of A."""
    x = as_point(x, dim=op.dim, name="probe x")
    y = as_point(y, dim=op.dim, name="probe y")
    scale = max(1.0, float(np.linalg.norm(x)), float(np.linalg.norm(y)))
    if np.linalg.norm(resolvent(op, 1.0, x + y) - x) <= tol * scale:
        return x, y
    if op.flags.forward_capable:
        try:
            if np.linalg.norm(forward_eval(op, x) - y) <= tol * scale:
                return x, y
        except Exception:
            pass
    raise InvalidProbe("probe pair is not on the graph of the operator")


def auto_probes(op: OperatorHandle, traj: Trajectory, count: int = 5, seed: int = 0) -> list:
    """Graph points (J_1 z, z - J_1 z) for random z near the trajectory."""
    rng = np.random.default_rng(seed)
    lo = traj.points.min(axis=0)
    hi = traj.points.max(axis=0)
    pad = 0.25 * max(1e-3, float(np.max(hi - lo)))
    zs = rng.uniform(lo - pad, hi + pad, size=(count, op.dim))
    xs = resolvent(op, 1.0, zs)
    return [(x, z - x) for x, z in zip(xs, zs)]


def certify_integral_solution(op: OperatorHandle, traj: Trajectory, probes=None, n_pairs: int = 10,
                              seed: int = 0, pairs=None) -> Certificate:
    """Integral-solution inequality for each graph probe (x, y):

    (|u(t) - x|^2 - |u(s) - x|^2) / 2 <= integral_s^t <y, x - u>.

    The integral uses the trapezoid rule on the stored samples; the slack
    combines the trapezoid error (estimated from second differences) and
    the flow tolerance.  ``pairs`` lists (s, t) sample times explicitly;
    otherwise ``n_pairs`` random sample pairs are drawn.
    """
    if len(traj) < 3:
        raise ValueError("need at least three flow samples")
    if probes is None:
        probes = auto_probes(op, traj, seed=seed)
    probes = [validate_probe(op, x, y) for x, y in probes]
    n = len(traj)
    if pairs is not None:
        pairs = [tuple(int(np.argmin(np.abs(traj.times - v))) for v in pair) for pair in pairs]
        if any(i >= j for i, j in pairs):
            raise ValueError("each pair needs s < t at distinct samples")
    else:
        rng = np.random.default_rng(seed + 1)
        chosen = set()
        while len(chosen) < min(n_pairs, n * (n - 1) // 2):
            i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
            chosen.add((i, j))
        pairs = sorted(chosen)
    t = traj.times
    u = traj.points
    h = np.diff(t)
    # second-derivative estimate from uniform-ish second differences
    acc = np.linalg.norm(np.diff(u, 2, axis=0), axis=1) / (h[1:] * h[:-1])
    acc_max = 2.0 * float(acc.max()) if len(acc) else 0.0
    tol = traj.tol
    labels, lhs, rhs, slack = [], [], [], []
    for k, (x, y) in enumerate(probes):
        g = (x - u) @ y
        integral = np.concatenate([[0.0], np.cumsum(0.5 * h * (g[1:] + g[:-1]))])
        d2 = np.sum((u - x) ** 2, axis=1)
        ny = float(np.linalg.norm(y))
        for i, j in pairs:
            labels.append((k, float(t[i]), float(t[j])))
            lhs.append(0.5 * (d2[j] - d2[i]))
            rhs.append(integral[j] - integral[i])
            span = t[j] - t[i]
            hmax = float(h[i:j].max())
            trap = span * hmax**2 / 12 * ny * acc_max
            flow = tol * (math.sqrt(d2[i]) + math.sqrt(d2[j]) + tol) + span * ny * tol
            slack.append(trap + flow + EXACT_SLACK)
    return Certificate("integral_solution", labels, lhs, rhs, np.array(slack),
                       {"n_probes": len(probes), "n_pairs": len(pairs)})


# ---------------------------------------------------------------------------
# almost-orbits


@dataclass(frozen=True)
class GapSeries:
    times: np.ndarray
    gaps: np.ndarray
    worst_shift: np.ndarray

    def at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.times - t)))
        return float(self.gaps[i])

    def to_dict(self):
        return {"times": self.times.tolist(), "gaps": self.gaps.tolist()}


def almost_orbit_gap(traj_u: Trajectory, system, t_grid: Sequence[float], h_grid: Sequence[float]) -> GapSeries:
    """gap(t) = max over h of |u(t + h) - V(t + h, t) u(t)|.

    ``system`` is an evolution system with ``evolve(x, s, t)`` (see
    :mod:`monoflow.schemes`).  Evolution-system restarts are chained across
    the sorted shifts, except for the reference flow, which is evaluated
    from u(t) directly for every shift.
    """
    hs = np.sort(np.asarray(h_grid, dtype=float))
    if np.any(hs < 0):
        raise ValueError("shifts must be >= 0")
    chained = getattr(system, "kind", "") != "reference_flow"
    times = np.asarray(t_grid, dtype=float)
    gaps = np.empty(len(times))
    worst = np.empty(len(times))
    for a, t in enumerate(times):
        targets = [interpolate(traj_u, t + h) for h in hs]  # raises OutOfRange past the horizon
        x = interpolate(traj_u, t)
        cur, s = x, t
        best, arg = 0.0, 0.0
        for h, target in zip(hs, targets):
            if chained:
                cur = system.evolve(cur, s, t + h)
                s = t + h
            else:
                cur = system.evolve(x, t, t + h)
            g = float(np.linalg.norm(target - cur))
            if g > best:
                best, arg = g, h
        gaps[a] = best
        worst[a] = arg
    return GapSeries(times, gaps, worst)


CERTIFICATE_NAMES = (
    "kobayashi",
    "euler_kobayashi",
    "chernoff",
    "exponential_formula",
    "flow_vs_prox",
    "fejer",
    "velocity",
    "velocity_rate",
    "value_rates",
    "integral_solution",
    "path_length",
    "strong_decay",
)

__all__ = [
    "Certificate",
    "GapSeries",
    "CERTIFICATE_NAMES",
    "almost_orbit_gap",
    "auto_probes",
    "check_solution",
    "certify_chernoff",
    "certify_euler_kobayashi",
    "certify_exponential_formula",
    "certify_fejer",
    "certify_flow_vs_prox",
    "certify_integral_solution",
    "certify_kobayashi",
    "certify_path_length",
    "certify_strong_decay",
    "certify_value_rates",
    "certify_velocity",
    "certify_velocity_rate",
    "log_grid",
    "validate_probe",
]
