"""Scenario configuration: one TOML file describes one reproducible experiment.

A config names a system, a target tube, grids for both solve modes, and
solver options. Missing sections fall back to the two-vehicle detection
scenario defaults (L = 1, v_max = 0.05, s_max = 1, radius = 0.5, half-angle
15 degrees, horizon 10, 51x51x51 reduced grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .grids import BOUNDARY_POLICIES, AxisSpec, Grid
from .solver import ReachabilitySolver, ReducedReachabilitySolver
from .symmetry import (
    C4TorusFrame,
    MovingFrame,
    Se2RelativePoseFrame,
    SymmetrySampler,
    TransformationGroup,
    dubins_symmetry_sampler,
)
from .systems import (
    TWO_PI,
    DubinsParams,
    SystemModel,
    gridworld_grid,
    gridworld_reduced_grid,
    torus_gridworld,
    two_vehicle_game,
)
from .tubes import (
    DetectionParams,
    TargetTube,
    detection_tube,
    expanding_ring_tube,
    static_ring_tube,
)

__all__ = ["ConfigError", "Scenario", "load_config", "scenario_from_dict", "default_config_toml"]

MODES = ("full", "reduced")


class ConfigError(ValueError):
    """A scenario config could not be parsed or validated."""


@dataclass
class Scenario:
    """A fully constructed experiment: system, tube, symmetry, grids, options."""

    name: str
    mode: str
    horizon: int
    workers: int
    output: str
    system: SystemModel
    tube_factory: object
    group: TransformationGroup
    frame: MovingFrame
    reduced_grid: Grid
    full_grid: Grid
    reduced_boundary: str
    full_boundary: str
    saturating: bool
    membership_threshold: float
    node_ceiling: int
    sampler: SymmetrySampler | None
    exhaustive_elements: list | None
    exhaustive_states: np.ndarray | None
    raw: dict = field(default_factory=dict)

    @property
    def tube(self) -> TargetTube:
        return self.tube_factory(self.horizon)

    def grid_for(self, mode: str, points_per_dim: int | None = None) -> Grid:
        grid = self.reduced_grid if mode == "reduced" else self.full_grid
        if points_per_dim is None:
            return grid
        return Grid(
            tuple(
                AxisSpec(ax.lower, ax.upper, points_per_dim, ax.periodic) for ax in grid.axes
            )
        )

    def build_solver(self, mode: str | None = None, horizon: int | None = None,
                     workers: int | None = None, time_limit: float | None = None,
                     points_per_dim: int | None = None):
        mode = mode or self.mode
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        horizon = self.horizon if horizon is None else int(horizon)
        common = dict(
            system=self.system,
            tube=self.tube_factory(horizon),
            grid=self.grid_for(mode, points_per_dim),
            horizon=horizon,
            saturating=self.saturating,
            membership_threshold=self.membership_threshold,
            n_workers=self.workers if workers is None else int(workers),
            time_limit=time_limit,
        )
        if mode == "reduced":
            return ReducedReachabilitySolver(
                frame=self.frame, boundary_policy=self.reduced_boundary, **common
            )
        return ReachabilitySolver(boundary_policy=self.full_boundary, **common)


def _section(data: dict, key: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{key}] must be a table")
    return value


def _get(section: dict, key: str, kind, default, where: str):
    value = section.get(key, default)
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {value!r}") from None


def _axes_from_config(entries, where: str) -> tuple:
    axes = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}.axes[{i}] must be a table")
        try:
            axes.append(
                AxisSpec(
                    lower=float(entry["lower"]),
                    upper=float(entry["upper"]),
                    points=int(entry["points"]),
                    periodic=bool(entry.get("periodic", False)),
                )
            )
        except KeyError as missing:
            raise ConfigError(f"{where}.axes[{i}] is missing {missing}") from None
        except ValueError as bad:
            raise ConfigError(f"{where}.axes[{i}]: {bad}") from None
    return tuple(axes)


def _default_reduced_axes(points: int = 51) -> tuple:
    return (
        AxisSpec(-1.2, 1.2, points),
        AxisSpec(-1.2, 1.2, points),
        AxisSpec(0.0, TWO_PI, points, periodic=True),
    )


def _default_full_axes(points: int = 7, extent: float = 0.75) -> tuple:
    return (
        AxisSpec(-extent, extent, points),
        AxisSpec(-extent, extent, points),
        AxisSpec(0.0, TWO_PI, points, periodic=True),
        AxisSpec(-extent, extent, points),
        AxisSpec(-extent, extent, points),
        AxisSpec(0.0, TWO_PI, points, periodic=True),
    )


def _dubins_scenario(data: dict) -> Scenario:
    sys_cfg = _section(data, "system")
    params = DubinsParams(
        L=_get(sys_cfg, "turn_parameter", float, 1.0, "system"),
        v_max=_get(sys_cfg, "v_max", float, 0.05, "system"),
        s_max=_get(sys_cfg, "s_max", float, 1.0, "system"),
    )
    system = two_vehicle_game(params)

    tube_cfg = _section(data, "tube")
    kind = tube_cfg.get("kind", "detection")
    if kind != "detection":
        raise ConfigError(f"tube kind {kind!r} is not valid for the two-vehicle system")
    det = DetectionParams(
        radius=_get(tube_cfg, "radius", float, 0.5, "tube"),
        half_angle=math.radians(_get(tube_cfg, "half_angle_deg", float, 15.0, "tube")),
    )
    uniform = _get(tube_cfg, "uniform", bool, True, "tube")
    tube_factory = partial(_make_detection_tube, params=det, uniform=uniform)

    red_cfg = _section(data, "reduced_grid")
    red_axes = (
        _axes_from_config(red_cfg["axes"], "reduced_grid")
        if "axes" in red_cfg
        else _default_reduced_axes()
    )
    if len(red_axes) != 3:
        raise ConfigError("reduced_grid needs exactly 3 axes for the two-vehicle system")
    full_cfg = _section(data, "full_grid")
    full_axes = (
        _axes_from_config(full_cfg["axes"], "full_grid")
        if "axes" in full_cfg
        else _default_full_axes()
    )
    if len(full_axes) != 6:
        raise ConfigError("full_grid needs exactly 6 axes for the two-vehicle system")

    frame = Se2RelativePoseFrame()
    return _assemble(
        data,
        system=system,
        tube_factory=tube_factory,
        group=frame.group,
        frame=frame,
        reduced_grid=Grid(red_axes),
        full_grid=Grid(full_axes),
        reduced_boundary=_boundary(red_cfg, "constant_safe", "reduced_grid"),
        full_boundary=_boundary(full_cfg, "clamp", "full_grid"),
        sampler=dubins_symmetry_sampler(system),
        exhaustive_elements=None,
        exhaustive_states=None,
        default_horizon=10,
    )


def _make_detection_tube(horizon: int, params: DetectionParams, uniform: bool) -> TargetTube:
    return detection_tube(params, horizon=horizon, uniform=uniform)


def _make_ring_tube(horizon: int, size: int, static: bool, radius: int) -> TargetTube:
    if static:
        return static_ring_tube(size=size, horizon=horizon, radius=radius)
    return expanding_ring_tube(size=size, horizon=horizon)


def _gridworld_scenario(data: dict) -> Scenario:
    sys_cfg = _section(data, "system")
    size = _get(sys_cfg, "size", int, 7, "system")
    system = torus_gridworld(size)

    tube_cfg = _section(data, "tube")
    kind = tube_cfg.get("kind", "expanding_ring")
    if kind not in ("expanding_ring", "static_ring"):
        raise ConfigError(f"tube kind {kind!r} is not valid for the gridworld system")
    radius = _get(tube_cfg, "radius", int, 2, "tube")
    tube_factory = partial(_make_ring_tube, size=size, static=kind == "static_ring", radius=radius)

    frame = C4TorusFrame(size)
    states = np.array(
        [[i, j, h] for i in range(size) for j in range(size) for h in range(4)], dtype=float
    )
    return _assemble(
        data,
        system=system,
        tube_factory=tube_factory,
        group=frame.group,
        frame=frame,
        reduced_grid=gridworld_reduced_grid(size),
        full_grid=gridworld_grid(size),
        reduced_boundary="clamp",
        full_boundary="clamp",
        sampler=None,
        exhaustive_elements=[0, 1, 2, 3],
        exhaustive_states=states,
        default_horizon=3,
    )


def _boundary(section: dict, default: str, where: str) -> str:
    policy = section.get("boundary", default)
    if policy not in BOUNDARY_POLICIES:
        raise ConfigError(f"{where}.boundary must be one of {BOUNDARY_POLICIES}, got {policy!r}")
    return policy


def _assemble(data: dict, *, system, tube_factory, group, frame, reduced_grid, full_grid,
              reduced_boundary, full_boundary, sampler, exhaustive_elements,
              exhaustive_states, default_horizon) -> Scenario:
    solver_cfg = _section(data, "solver")
    mode = data.get("mode", "reduced")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    horizon = _get(data, "horizon", int, default_horizon, "top level")
    if horizon < 1:
        raise ConfigError(f"horizon must be at least 1, got {horizon}")
    threshold = _get(solver_cfg, "membership_threshold", float, 0.5, "solver")
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"solver.membership_threshold must lie in (0, 1), got {threshold}")
    return Scenario(
        name=str(data.get("name", "scenario")),
        mode=mode,
        horizon=horizon,
        workers=_get(data, "workers", int, 1, "top level"),
        output=str(data.get("output", "runs/out")),
        system=system,
        tube_factory=tube_factory,
        group=group,
        frame=frame,
        reduced_grid=reduced_grid,
        full_grid=full_grid,
        reduced_boundary=reduced_boundary,
        full_boundary=full_boundary,
        saturating=_get(solver_cfg, "saturating", bool, True, "solver"),
        membership_threshold=threshold,
        node_ceiling=_get(solver_cfg, "node_ceiling", int, 20_000_000, "solver"),
        sampler=sampler,
        exhaustive_elements=exhaustive_elements,
        exhaustive_states=exhaustive_states,
        raw=data,
    )


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from a parsed config mapping."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    kind = _section(data, "system").get("kind", "two_vehicle_dubins")
    if kind == "two_vehicle_dubins":
        return _dubins_scenario(data)
    if kind == "gridworld":
        return _gridworld_scenario(data)
    raise ConfigError(
        f"system kind {kind!r} is not known (expected 'two_vehicle_dubins' or 'gridworld')"
    )


def load_config(path) -> Scenario:
    """Parse a TOML scenario file; parse errors carry line/column positions."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"config parse error in {path}: {err}") from None
    return scenario_from_dict(data)


def default_config_toml() -> str:
    """The default two-vehicle scenario as a TOML document."""
    axis_lines = []
    for ax in _default_reduced_axes():
        axis_lines.append(
            "[[reduced_grid.axes]]\n"
            f"lower = {ax.lower}\nupper = {ax.upper}\npoints = {ax.points}\n"
            f"periodic = {'true' if ax.periodic else 'false'}\n"
        )
    for ax in _default_full_axes():
        axis_lines.append(
            "[[full_grid.axes]]\n"
            f"lower = {ax.lower}\nupper = {ax.upper}\npoints = {ax.points}\n"
            f"periodic = {'true' if ax.periodic else 'false'}\n"
        )
    return (
        'name = "dubins-detection"\n'
        'mode = "reduced"\n'
        "horizon = 10\n"
        "workers = 1\n"
        'output = "runs/dubins"\n\n'
        "[system]\n"
        'kind = "two_vehicle_dubins"\n'
        "turn_parameter = 1.0\n"
        "v_max = 0.05\n"
        "s_max = 1.0\n\n"
        "[tube]\n"
        'kind = "detection"\n'
        "radius = 0.5\n"
        "half_angle_deg = 15.0\n"
        "uniform = true\n\n"
        "[solver]\n"
        "saturating = true\n"
        "membership_threshold = 0.5\n"
        "node_ceiling = 20000000\n\n"
        '[reduced_grid]\nboundary = "constant_safe"\n'
        + axis_lines[0]
        + axis_lines[1]
        + axis_lines[2]
        + '\n[full_grid]\nboundary = "clamp"\n'
        + "".join(axis_lines[3:])
    )
