"""Experiment configuration: YAML schema, validation, defaults.

Top-level keys of an experiment file:

    manifold:  model, grid, period, potential.{family,params,samples}
    solver:    t0, x0, times, local_error
    checks:    list of {name, m, K, ...}; K is a number, "admissible",
               or "fitted" (flow checks only)
    flow:      family, params, horizon (optional section)
    out:       output directory (optional; CLI flag overrides)

Validation failures raise :class:`ConfigError` naming the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

CHECK_NAMES = (
    "curvature",
    "ball_ratio",
    "operators_selftest",
    "mass",
    "li_yau",
    "hamilton",
    "sup_bound",
    "integrated",
    "kernel_bounds",
    "entropy",
    "tilde_identity",
    "flow_margin",
    "flow_entropy",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class CheckSpec:
    name: str
    m_values: tuple
    K_mode: str  # "explicit" | "admissible" | "fitted"
    K_value: float | None
    options: dict = field(default_factory=dict)


@dataclass
class SolverParams:
    t0: float
    x0: tuple
    times: tuple
    local_error: float


@dataclass
class ExperimentConfig:
    manifold: dict
    solver: SolverParams
    checks: list
    flow: dict | None
    out_dir: str


def load_config(path):
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def _parse_K(raw, check_name):
    if raw is None:
        return "admissible", None
    if isinstance(raw, str):
        if raw not in ("admissible", "fitted"):
            raise ConfigError(
                f"checks.{check_name}.K must be a number, 'admissible' or 'fitted'"
            )
        return raw, None
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"checks.{check_name}.K is not a number: {raw!r}") from None
    if value < 0.0 or not math.isfinite(value):
        raise ConfigError(f"checks.{check_name}.K must be finite and nonnegative")
    return "explicit", value


def validate_experiment(data, out_override=None, grid_scale=1):
    """Turn a raw config mapping into an :class:`ExperimentConfig`."""
    if "manifold" not in data:
        raise ConfigError("missing section: manifold")
    manifold = dict(data["manifold"])
    if grid_scale != 1:
        grid = manifold.get("grid")
        if isinstance(grid, int):
            manifold["grid"] = grid * grid_scale
        elif isinstance(grid, (list, tuple)):
            manifold["grid"] = [g * grid_scale for g in grid]
        else:
            raise ConfigError("manifold.grid must be an int or a list")

    solver_raw = data.get("solver", {}) or {}
    t0 = float(solver_raw.get("t0", 0.05))
    if t0 <= 0:
        raise ConfigError("solver.t0 must be positive")
    x0_raw = solver_raw.get("x0", 0)
    x0 = tuple(x0_raw) if isinstance(x0_raw, (list, tuple)) else (int(x0_raw),)
    times = tuple(float(t) for t in solver_raw.get("times", (0.1, 0.5, 1.0)))
    if not times:
        raise ConfigError("solver.times must not be empty")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("solver.times must be strictly ascending")
    if times[0] < t0 - 1e-15:
        raise ConfigError("solver.times must start at or after solver.t0")
    local_error = float(solver_raw.get("local_error", 1e-8))
    if not (0 < local_error < 1):
        raise ConfigError("solver.local_error must be in (0, 1)")
    solver = SolverParams(t0=t0, x0=x0, times=times, local_error=local_error)

    checks_raw = data.get("checks")
    if not checks_raw:
        raise ConfigError("at least one check must be selected")
    checks = []
    for item in checks_raw:
        if isinstance(item, str):
            item = {"name": item}
        name = item.get("name")
        if name not in CHECK_NAMES:
            raise ConfigError(f"unknown check name: {name!r}")
        m_raw = item.get("m", [])
        if isinstance(m_raw, (int, float)):
            m_raw = [m_raw]
        m_values = tuple(float(m) for m in m_raw)
        for m in m_values:
            if m <= 0 or not math.isfinite(m):
                raise ConfigError(f"checks.{name}.m must be positive and finite")
        K_mode, K_value = _parse_K(item.get("K"), name)
        options = {
            k: v for k, v in item.items() if k not in ("name", "m", "K")
        }
        checks.append(
            CheckSpec(
                name=name,
                m_values=m_values,
                K_mode=K_mode,
                K_value=K_value,
                options=options,
            )
        )

    flow = data.get("flow")
    if flow is not None:
        flow = dict(flow)
        if "family" not in flow:
            raise ConfigError("flow.family is required when a flow is given")

    needs_flow = {"flow_margin", "flow_entropy"}
    if flow is None and any(c.name in needs_flow for c in checks):
        raise ConfigError("flow checks selected but no flow section given")

    out_dir = out_override or data.get("out", "wittenlab_out")
    return ExperimentConfig(
        manifold=manifold, solver=solver, checks=checks, flow=flow, out_dir=str(out_dir)
    )
