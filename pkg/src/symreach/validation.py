"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = ["check_points", "check_state", "check_values"]


def check_points(points, dim, name="points"):
    """Coerce ``points`` to a float array of shape (m, dim).

    Accepts a single point (shape ``(dim,)``) or a batch (``(m, dim)``).
    Returns ``(array, was_single)`` so callers can squeeze results back to
    the caller's shape. Rejects wrong widths and non-finite coordinates.
    """
    arr = np.asarray(points, dtype=float)
    was_single = arr.ndim == 1
    if was_single:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(
            f"{name} must have {dim} coordinates per point, got shape {np.shape(points)}"
        )
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr, was_single


def check_state(x, dim, name="state"):
    """Coerce a single state to a float vector of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (dim,):
        raise ValueError(f"{name} must be a vector of length {dim}, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def check_values(values, n_nodes, name="values"):
    """Coerce a flat node-value array and check its length."""
    arr = np.ascontiguousarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_nodes:
        raise ValueError(f"{name} must be a flat array of {n_nodes} entries, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr
