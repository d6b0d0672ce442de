"""Shipped experiment configs, one per acceptance experiment."""

from __future__ import annotations

import copy

from ..errors import ValidationError
from .config import ExperimentConfig, config_from_dict

# A x = -R x with R the counterclockwise quarter turn
ROTATION = {"kind": "skew", "M": [[0.0, 1.0], [-1.0, 0.0]]}
UNIT_BALL = {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}

PRESETS = {
    "rotation-average": {
        "operator": ROTATION,
        "scheme": {"kind": "proximal"},
        "schedule": {"kind": "power", "c": 1.0, "p": 1.0},
        "horizon": {"n_steps": 10000},
        "start": [1.0, 0.0],
        "certificates": ["fejer", "velocity"],
        "outputs": {"plots": [["x0", "x1"], ["time", "vel_norm"]], "name": "rotation-average"},
        "seed": 0,
    },
    "rotation-l2-decay": {
        "operator": ROTATION,
        "scheme": {"kind": "proximal"},
        "schedule": {"kind": "power", "c": 1.0, "p": 0.5},
        "horizon": {"n_steps": 10000},
        "start": [1.0, 0.0],
        "certificates": ["fejer", "velocity", "velocity_rate"],
        "outputs": {"plots": [{"x": "index", "y": "dist_S", "log_x": True, "log_y": True}],
                    "name": "rotation-l2-decay"},
        "seed": 0,
    },
    "quadratic-prox": {
        "operator": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 0.5]], "b": [0.0, 0.0]},
        "scheme": {"kind": "proximal"},
        "schedule": {"kind": "constant", "c": 1.0},
        "horizon": {"n_steps": 200},
        "start": [1.0, 1.0],
        "certificates": ["fejer", "velocity", "value_rates", "flow_vs_prox"],
        "outputs": {"plots": [{"x": "time", "y": "dist_S", "log_y": True}], "name": "quadratic-prox"},
        "seed": 0,
    },
    "tikhonov-leastnorm": {
        "operator": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 0.0]], "b": [0.0, 0.0]},
        "scheme": {"kind": "tikhonov_flow",
                   "params": {"eps": {"kind": "power", "c": 1.0, "shift": 1.0, "p": 1.0}, "dt": 0.1,
                              "stride": 10}},
        "horizon": {"t_end": 1000.0},
        "start": [1.0, 1.0],
        "certificates": [],
        "outputs": {"plots": [["x0", "x1"], {"x": "time", "y": "x1", "log_x": True}], "name": "tikhonov-leastnorm"},
        "seed": 0,
    },
    "kobayashi-random": {
        "operator": ROTATION,
        "scheme": {"kind": "proximal"},
        "schedule": {"kind": "power", "c": 1.0, "p": 1.0},
        "horizon": {"n_steps": 500},
        "start": {"preset": "random"},
        "certificates": [{"name": "kobayashi",
                          "params": {"schedule": {"kind": "constant", "c": 0.1}, "grid": 10}},
                         "fejer"],
        "outputs": {"plots": [["x0", "x1"]], "name": "kobayashi-random"},
        "seed": 3,
    },
    "cl-convergence": {
        "operator": ROTATION,
        "scheme": {"kind": "reference_flow", "params": {"tol": 1e-4, "n_samples": 201}},
        "horizon": {"t_end": 2.0},
        "start": [1.0, 0.0],
        "certificates": [{"name": "exponential_formula", "params": {"t": 1.0, "m_list": [4, 16, 64, 256]}},
                         "integral_solution", "fejer", "velocity"],
        "outputs": {"plots": [["x0", "x1"]], "name": "cl-convergence"},
        "seed": 0,
    },
    "chernoff-demo": {
        "operator": {"kind": "residual",
                     "T": {"kind": "resolvent_of", "lambda": 1.0,
                           "operator": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 1.0]]}}},
        "scheme": {"kind": "euler"},
        "schedule": {"kind": "constant", "c": 1.0},
        "horizon": {"n_steps": 100},
        "start": [1.0, -0.5],
        "certificates": [{"name": "chernoff", "params": {"lam": 1.0}},
                         {"name": "euler_kobayashi", "params": {"schedule": {"kind": "power", "c": 1.0, "p": 1.0}}},
                         "fejer"],
        "outputs": {"plots": [{"x": "index", "y": "dist_S", "log_y": True}], "name": "chernoff-demo"},
        "seed": 0,
    },
    "euler-odd": {
        "operator": ROTATION,
        "scheme": {"kind": "euler"},
        "schedule": {"kind": "power", "c": 1.0, "p": 1.0},
        "horizon": {"n_steps": 10000},
        "start": [1.0, 0.0],
        "certificates": ["fejer"],
        "outputs": {"plots": [["x0", "x1"]], "name": "euler-odd"},
        "seed": 0,
    },
}


def preset_names() -> list:
    return list(PRESETS)


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def load_preset(name: str) -> ExperimentConfig:
    return config_from_dict(preset_dict(name))
