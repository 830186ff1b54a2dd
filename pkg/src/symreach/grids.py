"""Rectilinear grids with periodic axes, node value fields, and multilinear interpolation.

Grids are uniform per axis. A periodic axis covers ``[lower, upper)`` with
wrap-around (spacing ``(upper - lower) / points``), so an angle axis needs no
duplicated sample at the period. A non-periodic axis places nodes on both
endpoints (spacing ``(upper - lower) / (points - 1)``).

Node enumeration is row-major with the last axis fastest; this flat ordering
is the canonical one everywhere in the package, including file exports.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .validation import check_points, check_values

__all__ = [
    "AxisSpec",
    "Grid",
    "ValueField",
    "BOUNDARY_POLICIES",
    "write_field_csv",
    "write_membership_csv",
    "write_field_raster",
    "read_field_raster",
]

#: Out-of-range handling for non-periodic axes during interpolation:
#: ``clamp`` projects the query onto the axis range, ``constant_safe``
#: returns 0 for any out-of-range query, ``constant_unsafe`` returns 1.
BOUNDARY_POLICIES = ("clamp", "constant_safe", "constant_unsafe")


@dataclass(frozen=True)
class AxisSpec:
    """One uniform grid axis."""

    lower: float
    upper: float
    points: int
    periodic: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"axis needs lower < upper, got [{self.lower}, {self.upper}]")
        if self.points < 2:
            raise ValueError(f"axis needs at least 2 points, got {self.points}")

    @property
    def spacing(self) -> float:
        if self.periodic:
            return (self.upper - self.lower) / self.points
        return (self.upper - self.lower) / (self.points - 1)

    def coordinates(self) -> np.ndarray:
        return self.lower + self.spacing * np.arange(self.points)


@dataclass(frozen=True)
class Grid:
    """An n-dimensional rectilinear grid (ordered axes)."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if len(self.axes) < 1:
            raise ValueError("grid needs at least one axis")
        for ax in self.axes:
            if not isinstance(ax, AxisSpec):
                raise TypeError(f"grid axes must be AxisSpec, got {type(ax).__name__}")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(ax.points for ax in self.axes)

    @property
    def n_nodes(self) -> int:
        n = 1
        for ax in self.axes:
            n *= ax.points
        return n

    def node_point(self, multi_index) -> np.ndarray:
        """Coordinates of the node at ``multi_index`` (one index per axis)."""
        idx = tuple(int(i) for i in np.atleast_1d(multi_index))
        if len(idx) != self.ndim:
            raise ValueError(f"multi_index needs {self.ndim} components, got {len(idx)}")
        for i, ax in zip(idx, self.axes):
            if not 0 <= i < ax.points:
                raise IndexError(f"index {i} out of range [0, {ax.points}) on axis {ax}")
        return np.array([ax.lower + i * ax.spacing for i, ax in zip(idx, self.axes)])

    def node_points(self) -> np.ndarray:
        """All node coordinates, shape ``(n_nodes, ndim)``, row-major order."""
        coords = [ax.coordinates() for ax in self.axes]
        mesh = np.meshgrid(*coords, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def flat_index(self, multi_index) -> int:
        return int(np.ravel_multi_index(tuple(int(i) for i in multi_index), self.shape))

    def multi_index(self, flat) -> tuple:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.shape))

    def multi_indices(self) -> np.ndarray:
        """All node multi-indices, shape ``(n_nodes, ndim)``, row-major order."""
        return np.stack(
            [m.reshape(-1) for m in np.unravel_index(np.arange(self.n_nodes), self.shape)],
            axis=1,
        )

    def nearest_node(self, points):
        """Flat index of the node nearest each point (per axis, wrap-aware).

        Periodic axes round modulo the axis period; non-periodic axes clip
        to the axis range. Accepts a single point or a batch.
        """
        pts, single = check_points(points, self.ndim)
        flat = np.zeros(pts.shape[0], dtype=np.intp)
        stride = 1
        for j in range(self.ndim - 1, -1, -1):
            ax = self.axes[j]
            t = (pts[:, j] - ax.lower) / ax.spacing
            idx = np.rint(t).astype(np.intp)
            if ax.periodic:
                idx %= ax.points
            else:
                np.clip(idx, 0, ax.points - 1, out=idx)
            flat += idx * stride
            stride *= ax.points
        if single:
            return int(flat[0])
        return flat


# Strides for row-major flat indexing (last axis fastest).
def _strides(shape) -> np.ndarray:
    s = np.ones(len(shape), dtype=np.intp)
    for j in range(len(shape) - 2, -1, -1):
        s[j] = s[j + 1] * shape[j + 1]
    return s


@dataclass
class ValueField:
    """A scalar field sampled on the nodes of a grid.

    ``values`` is the flat row-major node array. ``boundary_policy`` controls
    what interpolation does outside the range of non-periodic axes (see
    :data:`BOUNDARY_POLICIES`).
    """

    grid: Grid
    values: np.ndarray
    boundary_policy: str = "clamp"

    def __post_init__(self):
        self.values = check_values(self.values, self.grid.n_nodes)
        if self.boundary_policy not in BOUNDARY_POLICIES:
            raise ValueError(
                f"boundary_policy must be one of {BOUNDARY_POLICIES}, got {self.boundary_policy!r}"
            )

    def interpolate(self, points):
        """Multilinear interpolation at one point or a batch of points.

        Periodic axes wrap (the cell between the last and first node is
        valid). Non-periodic axes apply ``boundary_policy``. Returns a float
        for a single point, an array for a batch.
        """
        pts, single = check_points(points, self.grid.ndim)
        m = pts.shape[0]
        n = self.grid.ndim
        lo_idx = np.empty((n, m), dtype=np.intp)
        hi_idx = np.empty((n, m), dtype=np.intp)
        frac = np.empty((n, m))
        out_of_range = None

        for j, ax in enumerate(self.grid.axes):
            t = (pts[:, j] - ax.lower) / ax.spacing
            if ax.periodic:
                t = np.mod(t, ax.points)
                # fp guard: mod can return the modulus itself for tiny negatives
                t[t >= ax.points] -= ax.points
                i0 = np.floor(t).astype(np.intp)
                np.minimum(i0, ax.points - 1, out=i0)
                lo_idx[j] = i0
                hi_idx[j] = (i0 + 1) % ax.points
                frac[j] = t - i0
            else:
                if self.boundary_policy != "clamp":
                    oob = (t < 0.0) | (t > ax.points - 1.0)
                    out_of_range = oob if out_of_range is None else (out_of_range | oob)
                t = np.clip(t, 0.0, float(ax.points - 1))
                i0 = np.floor(t).astype(np.intp)
                np.minimum(i0, ax.points - 2, out=i0)
                lo_idx[j] = i0
                hi_idx[j] = i0 + 1
                frac[j] = t - i0

        strides = _strides(self.grid.shape)
        result = np.zeros(m)
        for corner in itertools.product((0, 1), repeat=n):
            flat = np.zeros(m, dtype=np.intp)
            weight = np.ones(m)
            for j, hi in enumerate(corner):
                flat += (hi_idx[j] if hi else lo_idx[j]) * strides[j]
                weight *= frac[j] if hi else (1.0 - frac[j])
            result += self.values[flat] * weight

        if out_of_range is not None and out_of_range.any():
            result[out_of_range] = 0.0 if self.boundary_policy == "constant_safe" else 1.0
        if single:
            return float(result[0])
        return result


def _fmt(value: float) -> str:
    return repr(float(value))


def _csv_header(ndim: int) -> str:
    cols = [f"i{j}" for j in range(ndim)] + [f"x{j}" for j in range(ndim)]
    return ",".join(cols)


def write_field_csv(fieldobj: ValueField, path) -> None:
    """Write one CSV line per node: indices, coordinates, value (row-major)."""
    _write_node_csv(fieldobj.grid, fieldobj.values, "value", _fmt, path)


def write_membership_csv(fieldobj: ValueField, threshold: float, path) -> None:
    """Write the node membership set (value < threshold) as 0/1 per node."""
    member = (fieldobj.values < threshold).astype(int)
    _write_node_csv(fieldobj.grid, member, "member", lambda v: str(int(v)), path)


def _write_node_csv(grid: Grid, column, column_name, fmt, path) -> None:
    indices = grid.multi_indices()
    points = grid.node_points()
    lines = [f"{_csv_header(grid.ndim)},{column_name}"]
    for row_i, row_x, v in zip(indices, points, column):
        parts = [str(int(i)) for i in row_i] + [_fmt(x) for x in row_x] + [fmt(v)]
        lines.append(",".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_field_raster(fieldobj: ValueField, path) -> None:
    """Binary raster: one JSON header line (axes, policy), then raw <f8 values."""
    header = {
        "axes": [
            {"lower": ax.lower, "upper": ax.upper, "points": ax.points, "periodic": ax.periodic}
            for ax in fieldobj.grid.axes
        ],
        "boundary_policy": fieldobj.boundary_policy,
        "dtype": "<f8",
        "order": "row-major",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(fieldobj.values, dtype="<f8").tobytes())


def read_field_raster(path) -> ValueField:
    """Read a field written by :func:`write_field_raster`."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    axes = tuple(
        AxisSpec(a["lower"], a["upper"], a["points"], a["periodic"]) for a in header["axes"]
    )
    grid = Grid(axes)
    values = np.frombuffer(raw, dtype="<f8", count=grid.n_nodes).astype(float)
    return ValueField(grid, values, header["boundary_policy"])
