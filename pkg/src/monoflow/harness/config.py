"""Experiment configuration: JSON schema, parsing and validation.

A config is a JSON object with exactly these top-level keys (all but
``operator``, ``scheme`` and ``horizon`` are optional)::

    operator      operator description, e.g. {"kind": "skew", "M": [[0, 1], [-1, 0]]}
    scheme        {"kind": <scheme>, "params": {...}}
    schedule      step schedule, e.g. {"kind": "power", "c": 1, "p": 1}; discrete schemes only
    horizon       {"n_steps": N} for discrete schemes, {"t_end": T} for continuous ones
    start         list of coordinates or {"preset": "e1"|"ones"|"zeros"|"random", "scale": s}
    certificates  list of names or {"name": ..., "params": {...}}
    outputs       {"csv": bool, "report": bool, "plots": [[x, y], ...], "name": str}
    seed          unsigned integer (default 0)

Scheme parameters:

    proximal, euler        stride (default 1)
    perturbed_proximal     stride, perturbation {"kind": "tikhonov", "eps": <weight>}
                           or {"kind": "additive", "scale": s, "p": p}
    crandall_liggett       m (default 64), n_samples (default 101)
    yosida_flow            lam, dt
    reference_flow         tol (default 1e-3), n_samples (default 101)
    tikhonov_flow          eps <weight>, dt (optional), stride

A <weight> is {"kind": "zero"}, {"kind": "constant", "c": c} or
{"kind": "power", "c": c, "shift": s, "p": p}, meaning c * (s + x) ** -p.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import MonoflowError, ParseError, ValidationError
from ..operators import build_operator, is_subdifferential
from ..schemes import make_schedule

TOP_LEVEL_KEYS = ("operator", "scheme", "schedule", "horizon", "start", "certificates", "outputs", "seed")
REQUIRED_KEYS = ("operator", "scheme", "horizon")
DISCRETE_SCHEMES = ("proximal", "euler", "perturbed_proximal")
CONTINUOUS_SCHEMES = ("crandall_liggett", "yosida_flow", "reference_flow", "tikhonov_flow")
SCHEME_PARAMS = {
    "proximal": {"stride"},
    "euler": {"stride"},
    "perturbed_proximal": {"stride", "perturbation"},
    "crandall_liggett": {"m", "n_samples"},
    "yosida_flow": {"lam", "dt"},
    "reference_flow": {"tol", "n_samples"},
    "tikhonov_flow": {"eps", "dt", "stride"},
}
OUTPUT_KEYS = {"csv", "report", "plots", "name"}
FLOW_SCHEMES = ("yosida_flow", "reference_flow", "tikhonov_flow", "crandall_liggett")

# certificate name -> schemes it applies to (None: any)
CERTIFICATE_SCHEMES = {
    "fejer": None,
    "velocity": ("proximal", "perturbed_proximal") + FLOW_SCHEMES,
    "velocity_rate": ("proximal",),
    "value_rates": ("proximal", "euler") + FLOW_SCHEMES,
    "kobayashi": ("proximal",),
    "euler_kobayashi": ("euler",),
    "chernoff": None,
    "exponential_formula": None,
    "flow_vs_prox": ("proximal",),
    "integral_solution": FLOW_SCHEMES,
    "path_length": None,
    "strong_decay": None,
}


@dataclass
class ExperimentConfig:
    operator: dict
    scheme: str
    params: dict
    schedule: Optional[dict]
    horizon: dict
    start: object
    certificates: list
    outputs: dict
    seed: int
    source: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.outputs.get("name") or f"{self.operator['kind']}-{self.scheme}"

    @property
    def discrete(self) -> bool:
        return self.scheme in DISCRETE_SCHEMES

    def build_operator(self):
        return build_operator(self.operator)

    def build_schedule(self):
        return make_schedule(self.schedule) if self.schedule is not None else None

    def start_point(self, dim: int) -> np.ndarray:
        return resolve_start(self.start, dim, self.seed)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "scheme": {"kind": self.scheme, "params": self.params},
            "schedule": self.schedule,
            "horizon": self.horizon,
            "start": self.start,
            "certificates": self.certificates,
            "outputs": self.outputs,
            "seed": self.seed,
        }


def weight_function(spec) -> Callable[[float], float]:
    """Callable x -> weight from a <weight> spec (see module docstring)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("weight spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    if kind == "zero":
        return lambda x: 0.0
    if kind == "constant":
        c = float(spec["c"])
        return lambda x: c
    if kind == "power":
        c, s, p = float(spec.get("c", 1.0)), float(spec.get("shift", 1.0)), float(spec["p"])
        return lambda x: c * (s + x) ** (-p)
    raise ValidationError(f"unknown weight kind {kind!r}")


def resolve_start(start, dim: int, seed: int) -> np.ndarray:
    if isinstance(start, dict):
        preset = start.get("preset")
        scale = float(start.get("scale", 1.0))
        if preset == "e1":
            x = np.zeros(dim)
            x[0] = 1.0
        elif preset == "ones":
            x = np.ones(dim)
        elif preset == "zeros":
            x = np.zeros(dim)
        elif preset == "random":
            x = np.random.default_rng(seed).standard_normal(dim)
        else:
            raise ValidationError(f"unknown start preset {preset!r}")
        return scale * x
    x = np.asarray(start, dtype=float)
    if x.shape != (dim,):
        raise ValidationError(f"start has shape {x.shape}, operator dimension is {dim}")
    return x


def _position(text: Optional[str], key: str):
    if not text:
        return None, None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if m is None:
        return None, None
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def _reject_unknown(obj: dict, allowed, where: str, text: Optional[str]):
    for key in obj:
        if key not in allowed:
            line, col = _position(text, key)
            raise ParseError(f"unknown key {key!r} in {where}", line, col)


def load_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    return config_from_dict(data, text)


def config_from_dict(data, text: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object", 1, 1)
    _reject_unknown(data, TOP_LEVEL_KEYS, "config", text)
    for key in REQUIRED_KEYS:
        if key not in data:
            raise ParseError(f"missing required key {key!r}")

    scheme = data["scheme"]
    if isinstance(scheme, str):
        scheme = {"kind": scheme}
    if not isinstance(scheme, dict) or "kind" not in scheme:
        raise ParseError("scheme must be a mapping with a 'kind' key", *_position(text, "scheme"))
    _reject_unknown(scheme, {"kind", "params"}, "scheme", text)
    kind = scheme["kind"]
    if kind not in SCHEME_PARAMS:
        raise ValidationError(f"unknown scheme {kind!r}; expected one of {sorted(SCHEME_PARAMS)}")
    params = dict(scheme.get("params") or {})
    _reject_unknown(params, SCHEME_PARAMS[kind], f"{kind} parameters", text)

    horizon = data["horizon"]
    if not isinstance(horizon, dict):
        raise ParseError("horizon must be a mapping", *_position(text, "horizon"))
    _reject_unknown(horizon, {"n_steps", "t_end"}, "horizon", text)

    outputs = {"csv": True, "report": True, "plots": [], "name": None}
    user_out = data.get("outputs") or {}
    if not isinstance(user_out, dict):
        raise ParseError("outputs must be a mapping", *_position(text, "outputs"))
    _reject_unknown(user_out, OUTPUT_KEYS, "outputs", text)
    outputs.update(user_out)

    certs = []
    for entry in data.get("certificates") or []:
        if isinstance(entry, str):
            entry = {"name": entry, "params": {}}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ParseError("certificate entries must be names or mappings with 'name'")
        _reject_unknown(entry, {"name", "params"}, "certificate entry", text)
        certs.append({"name": entry["name"], "params": dict(entry.get("params") or {})})

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError("seed must be an unsigned integer")

    cfg = ExperimentConfig(
        operator=data["operator"],
        scheme=kind,
        params=params,
        schedule=data.get("schedule"),
        horizon=dict(horizon),
        start=data.get("start", {"preset": "e1"}),
        certificates=certs,
        outputs=outputs,
        seed=seed,
        source=data,
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Capability and consistency checks that do not run the experiment."""
    try:
        op = cfg.build_operator()
    except MonoflowError as exc:
        raise ValidationError(f"bad operator: {exc}") from exc
    if cfg.discrete:
        n = cfg.horizon.get("n_steps")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"{cfg.scheme} needs horizon.n_steps >= 1, got {n!r}")
        if cfg.schedule is None:
            raise ValidationError(f"{cfg.scheme} needs a step schedule")
        try:
            sched = cfg.build_schedule()
        except MonoflowError as exc:
            raise ValidationError(f"bad schedule: {exc}") from exc
        if sched.length is not None and sched.length < n:
            raise ValidationError("custom schedule is shorter than the horizon")
    else:
        t_end = cfg.horizon.get("t_end")
        if not isinstance(t_end, (int, float)) or isinstance(t_end, bool) or not t_end > 0:
            raise ValidationError(f"{cfg.scheme} needs horizon.t_end > 0, got {t_end!r}")
    if cfg.scheme == "euler" and not op.flags.forward_capable:
        raise ValidationError(f"euler scheme requires forward-capable operator; {op.kind} is not")
    if cfg.scheme == "yosida_flow" and "lam" not in cfg.params:
        raise ValidationError("yosida_flow needs params.lam")
    if cfg.scheme == "tikhonov_flow":
        weight_function(cfg.params.get("eps", {"kind": "zero"}))
    if cfg.scheme == "perturbed_proximal":
        pert = cfg.params.get("perturbation")
        if not isinstance(pert, dict) or pert.get("kind") not in ("tikhonov", "additive"):
            raise ValidationError("perturbed_proximal needs params.perturbation of kind tikhonov or additive")
    try:
        cfg.start_point(op.dim)
    except MonoflowError as exc:
        raise ValidationError(str(exc)) from exc
    seen = set()
    for entry in cfg.certificates:
        name = entry["name"]
        if name not in CERTIFICATE_SCHEMES:
            raise ValidationError(f"unknown certificate {name!r}; expected one of {sorted(CERTIFICATE_SCHEMES)}")
        if name in seen:
            raise ValidationError(f"certificate {name!r} listed twice")
        seen.add(name)
        allowed = CERTIFICATE_SCHEMES[name]
        if allowed is not None and cfg.scheme not in allowed:
            raise ValidationError(f"certificate {name!r} does not apply to the {cfg.scheme} scheme")
        if name in ("euler_kobayashi", "chernoff") and op.kind != "residual":
            raise ValidationError(f"certificate {name!r} requires a residual operator")
        if name == "value_rates" and not is_subdifferential(op):
            raise ValidationError("value_rates requires a subdifferential operator")
        if name == "velocity" and cfg.scheme == "euler":
            raise ValidationError("velocity monotonicity is not defined for Euler runs")
    for plot in cfg.outputs.get("plots") or []:
        if isinstance(plot, dict):
            if "x" not in plot or "y" not in plot:
                raise ValidationError("plot entries need 'x' and 'y'")
        elif not (isinstance(plot, (list, tuple)) and len(plot) == 2):
            raise ValidationError("plot entries must be [x, y] column pairs")
