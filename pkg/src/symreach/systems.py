"""Discrete-time game dynamics: Dubins vehicles and a finite torus gridworld.

All step maps are pure functions, broadcast over a leading batch axis, and
wrap angular state components to ``[0, 2*pi)`` on output so periodic grid
axes always receive canonical coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .grids import AxisSpec, Grid

__all__ = [
    "TWO_PI",
    "wrap_angle",
    "InputSet",
    "SystemModel",
    "DubinsParams",
    "dubins_step",
    "two_vehicle_step",
    "two_vehicle_game",
    "single_dubins_vehicle",
    "speed_steering_inputs",
    "GRIDWORLD_MOVES",
    "gridworld_step",
    "torus_gridworld",
    "gridworld_grid",
    "gridworld_reduced_grid",
]

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles to ``[0, 2*pi)`` (elementwise)."""
    wrapped = np.mod(theta, TWO_PI)
    # fp guard: mod can return the modulus itself for tiny negatives
    return np.where(wrapped >= TWO_PI, wrapped - TWO_PI, wrapped)


@dataclass(frozen=True)
class InputSet:
    """A finite, ordered set of input vectors.

    Element order is significant: solvers break minimizer ties toward the
    lowest index, and policies store indices into this ordering.
    """

    elements: tuple

    def __post_init__(self):
        elems = tuple(tuple(float(c) for c in np.atleast_1d(e)) for e in self.elements)
        if not elems:
            raise ValueError("input set must be non-empty")
        dims = {len(e) for e in elems}
        if len(dims) != 1:
            raise ValueError(f"input set elements must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return len(self.elements[0])

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i) -> np.ndarray:
        return np.asarray(self.elements[i], dtype=float)

    def __iter__(self):
        return (np.asarray(e, dtype=float) for e in self.elements)


@dataclass(frozen=True)
class SystemModel:
    """A discrete-time system x' = step(x, u, w) with finite input sets.

    ``step`` must be a pure function accepting a single state ``(state_dim,)``
    or a batch ``(m, state_dim)`` and broadcasting inputs accordingly.
    ``angular_dims`` lists state indices that live on the circle and get
    wrapped to ``[0, 2*pi)``.
    """

    state_dim: int
    step: object
    control_set: InputSet
    disturbance_set: InputSet
    angular_dims: frozenset = frozenset()

    def __post_init__(self):
        if self.state_dim < 1:
            raise ValueError("state_dim must be positive")
        object.__setattr__(self, "angular_dims", frozenset(int(i) for i in self.angular_dims))


@dataclass(frozen=True)
class DubinsParams:
    """Dubins vehicle parameters: turning-radius parameter L and input bounds."""

    L: float = 1.0
    v_max: float = 0.05
    s_max: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.v_max > 0 and self.s_max > 0):
            raise ValueError(f"Dubins parameters must be strictly positive, got {self}")


def dubins_step(state, v, s, params: DubinsParams):
    """One Dubins step: drive distance v along the heading, then steer by s.

    ``state`` is ``(z, y, theta)`` or a batch of such rows; ``v`` and ``s``
    broadcast against the batch. The output heading is wrapped.
    """
    state = np.asarray(state, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    z, y, theta = state[..., 0], state[..., 1], state[..., 2]
    out = np.empty(np.broadcast(state[..., 0], v).shape + (3,), dtype=float)
    out[..., 0] = z + v * np.cos(theta)
    out[..., 1] = y + v * np.sin(theta)
    out[..., 2] = wrap_angle(theta + (v / params.L) * np.sin(s))
    return out


def two_vehicle_step(x, u, w, params: DubinsParams):
    """Joint step of the two-vehicle game state.

    Components 0-2 (vehicle 1, the disturbance player) advance under ``w``;
    components 3-5 (vehicle 2, the control player) advance under ``u``.
    Each input is a ``(v, s)`` pair.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    p1 = dubins_step(x[..., 0:3], w[..., 0], w[..., 1], params)
    p2 = dubins_step(x[..., 3:6], u[..., 0], u[..., 1], params)
    return np.concatenate([p1, p2], axis=-1)


def speed_steering_inputs(params: DubinsParams) -> InputSet:
    """The finite (v, s) input grid: v in {0, v_max}, s in {-s_max, 0, s_max}."""
    return InputSet(
        tuple(
            (v, s)
            for v in (0.0, params.v_max)
            for s in (-params.s_max, 0.0, params.s_max)
        )
    )


def two_vehicle_game(params: DubinsParams | None = None) -> SystemModel:
    """The six-dimensional two-vehicle pursuit game (control = vehicle 2)."""
    params = params or DubinsParams()
    inputs = speed_steering_inputs(params)
    return SystemModel(
        state_dim=6,
        step=partial(two_vehicle_step, params=params),
        control_set=inputs,
        disturbance_set=inputs,
        angular_dims=frozenset({2, 5}),
    )


def _single_dubins_step(x, u, w, params: DubinsParams):
    # disturbance is a zero-length placeholder; only u drives the vehicle
    u = np.asarray(u, dtype=float)
    return dubins_step(x, u[..., 0], u[..., 1], params)


def single_dubins_vehicle(params: DubinsParams | None = None) -> SystemModel:
    """A single Dubins vehicle with no adversary (singleton disturbance)."""
    params = params or DubinsParams()
    return SystemModel(
        state_dim=3,
        step=partial(_single_dubins_step, params=params),
        control_set=speed_steering_inputs(params),
        disturbance_set=InputSet(((),)),
        angular_dims=frozenset({2}),
    )


GRIDWORLD_MOVES = ("forward", "turn_left", "turn_right")

# headings 0..3 = east, north, west, south
_HEADING_DI = np.array([1, 0, -1, 0])
_HEADING_DJ = np.array([0, 1, 0, -1])


def gridworld_step(state, move, size: int):
    """One gridworld move on the ``size x size`` torus.

    ``state`` is ``(i, j, h)`` (or a batch): torus cell plus heading in
    {0,1,2,3} = east/north/west/south. ``forward`` advances one cell along
    the heading with wrap-around; turns change the heading only.
    """
    if move not in GRIDWORLD_MOVES:
        raise ValueError(f"unknown gridworld move {move!r}; expected one of {GRIDWORLD_MOVES}")
    state = np.asarray(state)
    ints = np.rint(state).astype(np.int64)
    i, j, h = ints[..., 0] % size, ints[..., 1] % size, ints[..., 2] % 4
    if move == "forward":
        i = (i + _HEADING_DI[h]) % size
        j = (j + _HEADING_DJ[h]) % size
    elif move == "turn_left":
        h = (h + 1) % 4
    else:
        h = (h - 1) % 4
    return np.stack([i, j, h], axis=-1).astype(float)


def _gridworld_coded_step(x, u, w, size: int):
    # u is a 1-vector move code (possibly one per batch row); w is unused
    codes = np.rint(np.asarray(u, dtype=float)[..., 0]).astype(np.int64)
    if codes.ndim == 0:
        return gridworld_step(x, GRIDWORLD_MOVES[int(codes)], size)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for code in np.unique(codes):
        mask = codes == code
        out[mask] = gridworld_step(x[mask], GRIDWORLD_MOVES[int(code)], size)
    return out


def torus_gridworld(size: int = 7) -> SystemModel:
    """The gridworld as a SystemModel (moves coded 0/1/2, no-op disturbance)."""
    if size < 2:
        raise ValueError("gridworld size must be at least 2")
    return SystemModel(
        state_dim=3,
        step=partial(_gridworld_coded_step, size=size),
        control_set=InputSet(((0.0,), (1.0,), (2.0,))),
        disturbance_set=InputSet(((),)),
        angular_dims=frozenset(),
    )


def gridworld_grid(size: int = 7) -> Grid:
    """Exact node grid for the full gridworld state space (i, j, h)."""
    return Grid(
        (
            AxisSpec(0.0, float(size), size, periodic=True),
            AxisSpec(0.0, float(size), size, periodic=True),
            AxisSpec(0.0, 4.0, 4, periodic=True),
        )
    )


def gridworld_reduced_grid(size: int = 7) -> Grid:
    """Exact node grid for the heading-quotiented gridworld (i, j)."""
    return Grid(
        (
            AxisSpec(0.0, float(size), size, periodic=True),
            AxisSpec(0.0, float(size), size, periodic=True),
        )
    )
