"""Evolution schemes for u' in -A u and their discretizations.

Every runner returns a :class:`Trajectory`.  Discrete schemes store the
partial sums ``sigma_n = sum lambda_k`` as sample times and
``tau_n = sum lambda_k^2`` alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.integrate

from .errors import (
    BudgetExceeded,
    MalformedSchedule,
    MalformedSpec,
    NotForwardCapable,
    OutOfRange,
    StepTooLarge,
)
from .operators import (
    OperatorHandle,
    forward_eval,
    has_fast_power,
    minimal_section_norm,
    resolvent,
    resolvent_power,
    yosida_eval,
)
from .sets import as_point

FAST_POWER_CAP = 2**60
LOOP_POWER_CAP = 2**20
MAX_SAMPLES = 10**6

DISCRETE_KINDS = ("proximal", "euler", "perturbed_proximal", "closed_form_proximal", "closed_form_euler")

# ---------------------------------------------------------------------------
# step schedules


@dataclass(frozen=True)
class SummabilityFlags:
    in_l1: str
    in_l2: str

    def to_dict(self):
        return {"in_l1": self.in_l1, "in_l2": self.in_l2}


_FLAG_VALUES = ("yes", "no", "unknown")


@dataclass(frozen=True)
class StepSchedule:
    """Positive step sizes lambda_1, lambda_2, ... (1-indexed).

    kinds: ``constant`` (c), ``power`` (c * n**-p), ``custom`` (finite list).
    """

    kind: str
    c: float = 1.0
    p: float = 0.0
    values: tuple = ()
    declared: Optional[SummabilityFlags] = None

    def __post_init__(self):
        if self.kind in ("constant", "power"):
            if not (math.isfinite(self.c) and self.c > 0):
                raise MalformedSchedule(f"step scale must be finite and > 0, got {self.c}")
            if not (math.isfinite(self.p) and self.p >= 0):
                raise MalformedSchedule(f"power exponent must be finite and >= 0, got {self.p}")
        elif self.kind == "custom":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise MalformedSchedule("custom schedule needs at least one step")
            if not all(math.isfinite(v) and v > 0 for v in vals):
                raise MalformedSchedule("custom steps must be finite and > 0")
            object.__setattr__(self, "values", vals)
            if self.declared is not None:
                d = self.declared
                if d.in_l1 not in _FLAG_VALUES or d.in_l2 not in _FLAG_VALUES:
                    raise MalformedSchedule(f"summability flags must be one of {_FLAG_VALUES}")
                if d.in_l1 == "yes" and d.in_l2 == "no":
                    raise MalformedSchedule("an l1 schedule is always in l2")
        else:
            raise MalformedSchedule(f"unknown schedule kind {self.kind!r}")

    @property
    def length(self) -> Optional[int]:
        return len(self.values) if self.kind == "custom" else None

    def step(self, n: int) -> float:
        """lambda_n for n >= 1."""
        n = int(n)
        if n < 1:
            raise MalformedSchedule(f"step index must be >= 1, got {n}")
        if self.kind == "constant":
            return float(self.c)
        if self.kind == "power":
            return float(self.c * n ** (-self.p))
        if n > len(self.values):
            raise MalformedSchedule(f"custom schedule has {len(self.values)} steps, step {n} requested")
        return self.values[n - 1]

    def steps(self, n: int) -> np.ndarray:
        """lambda_1..lambda_n as an array."""
        n = int(n)
        if n < 0:
            raise MalformedSchedule("number of steps must be >= 0")
        if self.kind == "constant":
            return np.full(n, float(self.c))
        if self.kind == "power":
            k = np.arange(1, n + 1, dtype=float)
            return self.c * k ** (-self.p) if self.p else np.full(n, float(self.c))
        if n > len(self.values):
            raise MalformedSchedule(f"custom schedule has {len(self.values)} steps, {n} requested")
        return np.array(self.values[:n])

    @property
    def id(self) -> str:
        if self.kind == "constant":
            return f"constant({self.c:g})"
        if self.kind == "power":
            return f"power({self.c:g},{self.p:g})"
        return f"custom[{len(self.values)}]"

    def to_spec(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "power":
            return {"kind": "power", "c": self.c, "p": self.p}
        spec = {"kind": "custom", "values": list(self.values)}
        if self.declared is not None:
            spec["flags"] = self.declared.to_dict()
        return spec


def make_schedule(kind: Union[str, dict], params: Optional[dict] = None, **kwargs) -> StepSchedule:
    """Build a schedule from a kind name and parameters, or from one spec mapping.

    >>> make_schedule("power", c=1, p=1).step(4)
    0.25
    """
    if isinstance(kind, StepSchedule):
        return kind
    if isinstance(kind, dict):
        params = dict(kind)
        kind = params.pop("kind", None)
    params = {**(params or {}), **kwargs}
    try:
        if kind == "constant":
            _only(params, {"c"})
            return StepSchedule("constant", c=float(params["c"]))
        if kind == "power":
            _only(params, {"c", "p"})
            return StepSchedule("power", c=float(params.get("c", 1.0)), p=float(params["p"]))
        if kind == "custom":
            _only(params, {"values", "flags"})
            flags = params.get("flags")
            declared = SummabilityFlags(**flags) if flags is not None else None
            return StepSchedule("custom", values=tuple(params["values"]), declared=declared)
    except KeyError as exc:
        raise MalformedSchedule(f"schedule {kind!r} is missing parameter {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MalformedSchedule):
            raise
        raise MalformedSchedule(f"bad schedule parameters: {exc}") from exc
    raise MalformedSchedule(f"unknown schedule kind {kind!r}")


def _only(params, allowed):
    extra = set(params) - allowed
    if extra:
        raise MalformedSchedule(f"unexpected schedule parameters {sorted(extra)}")


def running_sum(values: np.ndarray) -> np.ndarray:
    """Cumulative sum with Neumaier compensation."""
    out = np.empty(len(values))
    s = 0.0
    comp = 0.0
    for i, v in enumerate(values.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out


def cumulative(schedule: StepSchedule, n: int) -> tuple:
    """(sigma_n, tau_n): exactly rounded sums of the first n steps and their squares."""
    if int(n) < 1:
        raise MalformedSchedule("cumulative sums need n >= 1")
    lam = schedule.steps(int(n))
    return math.fsum(lam), math.fsum(lam * lam)


def classify_schedule(schedule: StepSchedule) -> SummabilityFlags:
    if schedule.kind == "constant":
        return SummabilityFlags("no", "no")
    if schedule.kind == "power":
        return SummabilityFlags("yes" if schedule.p > 1 else "no", "yes" if schedule.p > 0.5 else "no")
    return schedule.declared or SummabilityFlags("unknown", "unknown")


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered samples of one scheme run.

    ``velocities`` rows are NaN where no velocity is defined.  For discrete
    runs ``steps[i]`` is the step that produced sample i (NaN at the start)
    and ``sigma``/``tau`` are the partial sums at each sample.
    """

    kind: str
    index: np.ndarray
    times: np.ndarray
    points: np.ndarray
    velocities: Optional[np.ndarray] = None
    steps: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    provenance: dict = field(default_factory=dict)
    operator: Optional[OperatorHandle] = None
    tol: float = 0.0

    def __post_init__(self):
        for name in ("index", "times", "points", "velocities", "steps", "sigma", "tau"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def discrete(self) -> bool:
        return self.kind in DISCRETE_KINDS

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    @property
    def contiguous(self) -> bool:
        return bool(np.all(np.diff(self.index) == 1))

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)


def _provenance(scheme, op, schedule=None, **extra):
    prov = {"scheme": scheme, "operator": op.id if op is not None else None}
    if schedule is not None:
        prov["schedule"] = schedule.id
    prov.update(extra)
    return prov


def _check_count(n_steps, stride):
    n_steps, stride = int(n_steps), int(stride)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if n_steps // stride + 1 > MAX_SAMPLES:
        raise BudgetExceeded(f"{n_steps // stride + 1} samples exceed the memory budget; raise the stride")
    return n_steps, stride


def _discrete_trajectory(kind, xs, vel, lam, stride, op, prov):
    n = len(lam)
    keep = np.arange(0, n + 1, stride)
    steps = np.concatenate([[np.nan], lam])
    sigma = np.concatenate([[0.0], running_sum(lam)])
    tau = np.concatenate([[0.0], running_sum(lam * lam)])
    return Trajectory(
        kind=kind,
        index=keep,
        times=sigma[keep],
        points=xs,
        velocities=vel,
        steps=steps[keep],
        sigma=sigma[keep],
        tau=tau[keep],
        provenance=prov,
        operator=op,
    )


def _proximal_loop(op, x0, lam, stride, shift=None, scale=None):
    """Shared loop; ``shift``/``scale`` implement the perturbed variants."""
    n = len(lam)
    d = op.dim
    rows = n // stride + 1
    xs = np.empty((rows, d))
    vel = np.full((rows, d), np.nan)
    xs[0] = x0
    vel[0] = np.nan
    x = x0
    for k in range(1, n + 1):
        lk = lam[k - 1]
        y = x
        if shift is not None:
            y = y - shift[k - 1]
        if scale is not None and scale[k - 1] != 0:
            c = 1.0 + scale[k - 1]
            x_new = resolvent(op, lk / c, y / c)
        else:
            x_new = resolvent(op, lk, y)
        if k % stride == 0:
            xs[k // stride] = x_new
            vel[k // stride] = (x_new - x) / lk
        x = x_new
    return xs, vel


def run_proximal(op: OperatorHandle, x0, schedule: StepSchedule, n_steps: int, stride: int = 1) -> Trajectory:
    """x_n = J_{lambda_n} x_{n-1}; velocity y_n = (x_n - x_{n-1}) / lambda_n.

    The start may lie outside D(A); the first step lands in D(A).
    """
    x0 = as_point(x0, dim=op.dim, name="x0")
    n_steps, stride = _check_count(n_steps, stride)
    lam = schedule.steps(n_steps)
    xs, vel = _proximal_loop(op, x0, lam, stride)
    prov = _provenance("proximal", op, schedule, n_steps=n_steps, stride=stride)
    return _discrete_trajectory("proximal", xs, vel, lam, stride, op, prov)


def run_euler(op: OperatorHandle, z0, schedule: StepSchedule, n_steps: int, stride: int = 1) -> Trajectory:
    """z_n = z_{n-1} - lambda_n A z_{n-1}.

    The velocity stored with sample n is w_n = (z_{n+1} - z_n) / lambda_{n+1};
    the last sample has none.
    """
    if not op.flags.forward_capable:
        raise NotForwardCapable(f"Euler steps need a forward-capable operator, {op.kind} is not")
    z0 = as_point(z0, dim=op.dim, name="z0")
    n_steps, stride = _check_count(n_steps, stride)
    lam = schedule.steps(n_steps)
    d = op.dim
    rows = n_steps // stride + 1
    zs = np.empty((rows, d))
    vel = np.full((rows, d), np.nan)
    zs[0] = z0
    z = z0
    for k in range(1, n_steps + 1):
        a = forward_eval(op, z)
        if (k - 1) % stride == 0:
            vel[(k - 1) // stride] = -a
        z = z - lam[k - 1] * a
        if k % stride == 0:
            zs[k // stride] = z
    prov = _provenance("euler", op, schedule, n_steps=n_steps, stride=stride)
    return _discrete_trajectory("euler", zs, vel, lam, stride, op, prov)


def crandall_liggett_point(op: OperatorHandle, x, t: float, m: int) -> np.ndarray:
    """u_m(t) = (I + (t/m) A)^{-m} x."""
    x = as_point(x, dim=op.dim, name="x")
    t = float(t)
    m = int(m)
    if t < 0 or m < 1:
        raise ValueError("need t >= 0 and m >= 1")
    if t == 0:
        return x.copy()
    return resolvent_power(op, t / m, m, x)


def exponential_formula_steps(speed: float, t: float, tol: float) -> int:
    """Smallest m = 64 * 2^k with 3 * speed * t / sqrt(m) <= tol."""
    m = 64
    if speed == 0 or t == 0:
        return m
    need = (3 * speed * t / tol) ** 2
    while m < need:
        m *= 2
        if m > FAST_POWER_CAP:
            break
    return m


def power_cap(op: OperatorHandle) -> int:
    return FAST_POWER_CAP if has_fast_power(op) else LOOP_POWER_CAP


def flow_point(op: OperatorHandle, x, t: float, tol: float, speed: Optional[float] = None) -> np.ndarray:
    """S_t x through the exponential formula with an a-priori error <= tol."""
    x = as_point(x, dim=op.dim, name="x")
    if speed is None:
        speed = minimal_section_norm(op, x)
    m = exponential_formula_steps(speed, t, tol)
    if m > power_cap(op):
        if op.flags.forward_capable:
            return integrate_flow(op, x, t, tol)
        raise BudgetExceeded(f"exponential formula needs m = {m} > {power_cap(op)} for t = {t}")
    return crandall_liggett_point(op, x, t, m)


def integrate_flow(op: OperatorHandle, x, t: float, tol: float) -> np.ndarray:
    """S_t x for a single-valued operator by adaptive DOP853 integration.

    Fallback when the exponential formula would need more resolvent steps
    than the loop budget allows.  The accuracy is the integrator's
    tolerance (absolute ``tol / 100``), not an a-priori bound.
    """
    x = as_point(x, dim=op.dim, name="x")
    if t == 0:
        return x.copy()
    sol = scipy.integrate.solve_ivp(lambda _, u: -forward_eval(op, u), (0.0, float(t)), x,
                                    method="DOP853", rtol=1e-12, atol=tol / 100)
    if not sol.success:
        raise BudgetExceeded(f"flow integration failed: {sol.message}")
    return sol.y[:, -1]


def reference_flow(op: OperatorHandle, x0, t_end: Optional[float] = None, tol: float = 1e-3,
                   times: Optional[Sequence[float]] = None, n_samples: int = 101) -> Trajectory:
    """Oracle samples of the flow S_t x0.

    Each sample is an independent exponential-formula evaluation whose
    a-priori error is at most ``tol``.  Pass explicit ``times`` or a horizon
    ``t_end`` (sampled uniformly at ``n_samples`` points).
    """
    x0 = as_point(x0, dim=op.dim, name="x0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if times is None:
        if t_end is None or not t_end > 0:
            raise ValueError("give t_end > 0 or explicit times")
        times = np.linspace(0.0, float(t_end), int(n_samples))
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("sample times must be nonnegative and strictly increasing")
    speed = minimal_section_norm(op, x0)
    cap = power_cap(op)
    m_max = exponential_formula_steps(speed, float(times[-1]), tol)
    if m_max > cap and not op.flags.forward_capable:
        raise BudgetExceeded(f"exponential formula needs m = {m_max} > {cap} at t = {times[-1]}")
    pts = np.array([flow_point(op, x0, t, tol, speed=speed) for t in times])
    prov = _provenance("reference_flow", op, tol=tol, max_m=m_max, integrated=bool(m_max > cap))
    return Trajectory("reference_flow", np.arange(len(times)), times, pts, provenance=prov, operator=op, tol=tol)


def run_yosida_flow(op: OperatorHandle, x0, lam: float, t_end: float, dt: float) -> Trajectory:
    """RK4 integration of u' = -A_lam u with a step of at most dt."""
    x0 = as_point(x0, dim=op.dim, name="x0")
    lam, t_end, dt = float(lam), float(t_end), float(dt)
    if not (lam > 0 and dt > 0 and t_end > 0):
        raise ValueError("lam, dt and t_end must be > 0")
    if dt * 2.0 / lam > 1.0:
        raise StepTooLarge(f"dt = {dt} exceeds lam/2 = {lam / 2}")
    n = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    if n + 1 > MAX_SAMPLES:
        raise BudgetExceeded("too many RK4 samples")

    def f(u):
        return -yosida_eval(op, lam, u)

    us = np.empty((n + 1, op.dim))
    us[0] = u = x0
    for k in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        us[k + 1] = u
    times = h * np.arange(n + 1)
    prov = _provenance("yosida_flow", op, lam=lam, dt=h)
    return Trajectory("yosida_flow", np.arange(n + 1), times, us, provenance=prov, operator=op)


# ---------------------------------------------------------------------------
# perturbed schemes


@dataclass(frozen=True)
class Perturbation:
    """Additive errors phi_n or Tikhonov weights eps_n of a proximal run.

    ``values`` is an array (one entry per step, 1-indexed by position) or a
    callable n -> value.
    """

    kind: str
    values: Union[np.ndarray, Callable]

    def __post_init__(self):
        if self.kind not in ("additive", "tikhonov"):
            raise MalformedSpec(f"unknown perturbation kind {self.kind!r}")
        if not callable(self.values):
            arr = np.array(self.values, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, "values", arr)

    def sequence(self, n: int, dim: int) -> np.ndarray:
        if callable(self.values):
            seq = np.array([self.values(k) for k in range(1, n + 1)], dtype=float)
        else:
            if len(self.values) < n:
                raise MalformedSpec(f"perturbation has {len(self.values)} entries, {n} steps requested")
            seq = np.array(self.values[:n], dtype=float)
        if self.kind == "additive":
            seq = seq.reshape(n, dim)
        else:
            seq = seq.reshape(n)
            if np.any(seq < 0):
                raise MalformedSpec("Tikhonov weights must be >= 0")
        if not np.all(np.isfinite(seq)):
            raise MalformedSpec("perturbation values must be finite")
        return seq


def run_perturbed_proximal(op: OperatorHandle, x0, schedule: StepSchedule, perturbation: Perturbation,
                           n_steps: int, stride: int = 1) -> Trajectory:
    """Additive: y_n = J_{lam_n}(y_{n-1} - phi_n).
    Tikhonov: y_n = J_{lam_n/(1+eps_n)}(y_{n-1}/(1+eps_n)).
    """
    x0 = as_point(x0, dim=op.dim, name="x0")
    n_steps, stride = _check_count(n_steps, stride)
    lam = schedule.steps(n_steps)
    seq = perturbation.sequence(n_steps, op.dim)
    if perturbation.kind == "additive":
        xs, vel = _proximal_loop(op, x0, lam, stride, shift=seq)
    else:
        xs, vel = _proximal_loop(op, x0, lam, stride, scale=seq)
    prov = _provenance("perturbed_proximal", op, schedule, perturbation=perturbation.kind,
                       n_steps=n_steps, stride=stride)
    return _discrete_trajectory("perturbed_proximal", xs, vel, lam, stride, op, prov)


def _tikhonov_grid(t_end, dt, eps):
    if dt is None:
        e0 = float(eps(0.0))
        dt = 0.1 if e0 <= 0 else min(0.1, 1.0 / (10.0 * e0))
    dt = float(dt)
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be > 0")
    n = int(math.ceil(t_end / dt - 1e-9))
    return n, t_end / n


def tikhonov_step(op, v, h, e):
    c = 1.0 + h * e
    return resolvent(op, h / c, v / c)


def run_tikhonov_flow(op: OperatorHandle, x0, eps: Callable[[float], float], t_end: float,
                      dt: Optional[float] = None, stride: int = 1) -> Trajectory:
    """Implicit steps for -v' in A v + eps(t) v, eps sampled at step midpoints.

    The default step is min(0.1, 1/(10 eps(0))).
    """
    x0 = as_point(x0, dim=op.dim, name="x0")
    t_end = float(t_end)
    n, h = _tikhonov_grid(t_end, dt, eps)
    n, stride = _check_count(n, stride)
    rows = n // stride + 1
    vs = np.empty((rows, op.dim))
    vs[0] = v = x0
    for k in range(n):
        e = float(eps((k + 0.5) * h))
        if e < 0 or not math.isfinite(e):
            raise MalformedSpec("Tikhonov weights must be finite and >= 0")
        v = tikhonov_step(op, v, h, e)
        if (k + 1) % stride == 0:
            vs[(k + 1) // stride] = v
    idx = np.arange(0, n + 1, stride)
    prov = _provenance("tikhonov_flow", op, dt=h, stride=stride)
    return Trajectory("tikhonov_flow", idx, h * idx, vs, provenance=prov, operator=op)


# ---------------------------------------------------------------------------
# averages and interpolation


def average_discrete(traj: Trajectory) -> Trajectory:
    """Step-weighted running averages sigma_n^{-1} sum lambda_k x_k.

    Proximal samples are weighted by the step that produced them, Euler
    samples by the step that leaves them (the piecewise-constant
    interpolation of each scheme).
    """
    if traj.steps is None:
        raise ValueError("averages need a discrete trajectory with steps")
    if not traj.contiguous:
        raise ValueError("averages need every sample (stride 1)")
    pts = traj.points
    lam = traj.steps
    avg = np.empty_like(pts)
    avg[0] = pts[0]
    if traj.kind in ("euler", "closed_form_euler"):
        weighted = lam[1:, None] * pts[:-1]
    else:
        weighted = lam[1:, None] * pts[1:]
    csum = np.cumsum(weighted, axis=0)
    sig = np.cumsum(lam[1:])
    avg[1:] = csum / sig[:, None]
    prov = dict(traj.provenance, averaged=True)
    return Trajectory(traj.kind, traj.index, traj.times, avg, steps=traj.steps, sigma=traj.sigma,
                      tau=traj.tau, provenance=prov, operator=traj.operator, tol=traj.tol)


def average_continuous(traj: Trajectory) -> Trajectory:
    """Running time averages (t - t0)^{-1} integral u, trapezoid rule."""
    if len(traj) < 2:
        raise ValueError("continuous averages need at least two samples")
    t = traj.times
    pts = traj.points
    dt = np.diff(t)
    inc = 0.5 * dt[:, None] * (pts[1:] + pts[:-1])
    avg = np.empty_like(pts)
    avg[0] = pts[0]
    avg[1:] = np.cumsum(inc, axis=0) / (t[1:] - t[0])[:, None]
    prov = dict(traj.provenance, averaged=True)
    return Trajectory(traj.kind, traj.index, t, avg, provenance=prov, operator=traj.operator, tol=traj.tol)


def average(traj: Trajectory) -> Trajectory:
    return average_discrete(traj) if traj.steps is not None else average_continuous(traj)


def interpolate(traj: Trajectory, t: float) -> np.ndarray:
    """Piecewise-linear value at time t."""
    times = traj.times
    t = float(t)
    slack = 1e-12 * max(1.0, abs(times[-1]))
    if t < times[0] - slack or t > times[-1] + slack:
        raise OutOfRange(f"t = {t} outside [{times[0]}, {times[-1]}]")
    t = min(max(t, times[0]), times[-1])
    j = int(np.searchsorted(times, t, side="right"))
    if j >= len(times):
        return traj.points[-1].copy()
    i = j - 1
    if times[i] == t:
        return traj.points[i].copy()
    w = (t - times[i]) / (times[j] - times[i])
    return (1 - w) * traj.points[i] + w * traj.points[j]


# ---------------------------------------------------------------------------
# evolution systems V(t, s), restartable from any state


@dataclass(frozen=True)
class ReferenceFlowSystem:
    """The semigroup S_{t-s}, evaluated by the exponential formula."""

    op: OperatorHandle
    tol: float = 1e-3
    kind: str = field(default="reference_flow", init=False)

    def evolve(self, x, s: float, t: float) -> np.ndarray:
        if t < s:
            raise OutOfRange("evolution runs forward in time only")
        return flow_point(self.op, x, t - s, self.tol)


@dataclass(frozen=True)
class ProximalSystem:
    """V(t, s) = product of J_{lam_n} for nu(s) < n <= nu(t), nu(t) = max{n : sigma_n <= t}."""

    op: OperatorHandle
    schedule: StepSchedule
    horizon: float
    kind: str = field(default="proximal", init=False)

    def __post_init__(self):
        n = 1024
        while True:
            lam = self.schedule.steps(n)
            sig = running_sum(lam)
            if sig[-1] > self.horizon or n >= MAX_SAMPLES:
                break
            n *= 2
        object.__setattr__(self, "_lam", lam)
        object.__setattr__(self, "_sigma", np.concatenate([[0.0], sig]))

    def counter(self, t: float) -> int:
        sig = self._sigma
        if t > sig[-1]:
            raise OutOfRange(f"t = {t} beyond the precomputed horizon")
        return int(np.searchsorted(sig, t, side="right")) - 1

    def evolve(self, x, s: float, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for n in range(self.counter(s) + 1, self.counter(t) + 1):
            x = resolvent(self.op, self._lam[n - 1], x)
        return x


@dataclass(frozen=True)
class TikhonovSystem:
    """Implicit Tikhonov steps of width dt on the absolute grid k*dt."""

    op: OperatorHandle
    eps: Callable[[float], float]
    dt: float
    kind: str = field(default="tikhonov", init=False)

    def evolve(self, x, s: float, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k0 = int(round(s / self.dt))
        k1 = int(round(t / self.dt))
        for k in range(k0, k1):
            x = tikhonov_step(self.op, x, self.dt, float(self.eps((k + 0.5) * self.dt)))
        return x
