"""Target tubes: per-step binary stage costs marking the states to avoid.

A stage cost of 0 means the state is inside the step's target set (safe);
1 means it has left it. The Dubins game uses the forward camera cone of
vehicle 1: vehicle 2 is detected when it sits within range ``radius`` and
within ``half_angle`` of vehicle 1's heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .symmetry import SymmetrySampler, TransformationGroup, VerificationReport, _membership_violations, CheckResult

__all__ = [
    "DetectionParams",
    "detection_cost",
    "detection_tube",
    "TargetTube",
    "ring_distance",
    "expanding_ring_tube",
    "static_ring_tube",
    "tube_is_invariant",
]


@dataclass(frozen=True)
class DetectionParams:
    """Forward camera cone: range ``radius``, half-angle ``half_angle`` (radians)."""

    radius: float = 0.5
    half_angle: float = math.radians(15.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("detection radius must be positive")
        if not 0.0 < self.half_angle < math.pi:
            raise ValueError("detection half-angle must lie in (0, pi)")


def detection_cost(x, params: DetectionParams):
    """1 where vehicle 1's camera sees vehicle 2, else 0 (elementwise).

    Inequalities are non-strict on both the range and the cone boundary.
    Coincident vehicles count as detected.
    """
    x = np.asarray(x, dtype=float)
    d0 = x[..., 3] - x[..., 0]
    d1 = x[..., 4] - x[..., 1]
    dist_sq = d0 * d0 + d1 * d1
    dot = d0 * np.cos(x[..., 2]) + d1 * np.sin(x[..., 2])
    # multiplying through by |d| avoids dividing at d = 0, where 0 >= 0
    # makes the coincident case detected
    in_cone = dot >= math.cos(params.half_angle) * np.sqrt(dist_sq)
    return ((dist_sq <= params.radius**2) & in_cone).astype(float)


@dataclass(frozen=True)
class TargetTube:
    """Per-step binary stage costs g_k for k = 0..horizon.

    ``cost_at(k, states)`` must return 0/1 floats elementwise over state
    rows. ``time_invariant`` marks tubes whose cost ignores k.
    """

    horizon: int
    cost_at: object
    time_invariant: bool = True

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("tube horizon must be non-negative")


def _detection_cost_at(k, x, params, terminal_step):
    if terminal_step is not None and k != terminal_step:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1], dtype=float)
    return detection_cost(x, params)


def detection_tube(params: DetectionParams | None = None, horizon: int = 10,
                   uniform: bool = True) -> TargetTube:
    """Tube for the Dubins game: stay undetected at every step.

    With ``uniform`` (default) the detection region applies to all steps,
    so the zero set of the value function is the set of states from which
    vehicle 2 stays undetected throughout. With ``uniform=False`` only the
    terminal step is constrained.
    """
    params = params or DetectionParams()
    terminal_step = None if uniform else horizon
    return TargetTube(
        horizon=horizon,
        cost_at=partial(_detection_cost_at, params=params, terminal_step=terminal_step),
        time_invariant=uniform,
    )


def ring_distance(i, j, size: int):
    """Torus Chebyshev distance of cell (i, j) from node (0, 0) (elementwise)."""
    i = np.asarray(i, dtype=np.int64) % size
    j = np.asarray(j, dtype=np.int64) % size
    di = np.minimum(i, size - i)
    dj = np.minimum(j, size - j)
    return np.maximum(di, dj)


def _ring_cost_at(k, x, size, radius_at):
    x = np.asarray(x, dtype=float)
    ints = np.rint(x).astype(np.int64)
    dist = ring_distance(ints[..., 0], ints[..., 1], size)
    return (dist == radius_at(k)).astype(float)


def _expanding_radius(k, size):
    return min(k + 1, size // 2)


def _static_radius(k, radius):
    return radius


def expanding_ring_tube(size: int = 7, horizon: int = 3) -> TargetTube:
    """Gridworld tube whose unsafe ring moves outward one cell per step.

    The ring at step k sits at torus distance ``min(k + 1, size // 2)`` from
    node (0, 0), so slow-turning agents caught on the ring's path lose:
    values genuinely depend on heading and time.
    """
    return TargetTube(
        horizon=horizon,
        cost_at=partial(_ring_cost_at, size=size, radius_at=partial(_expanding_radius, size=size)),
        time_invariant=False,
    )


def static_ring_tube(size: int = 7, horizon: int = 3, radius: int = 2) -> TargetTube:
    """Gridworld tube with a fixed unsafe ring at the given torus distance."""
    return TargetTube(
        horizon=horizon,
        cost_at=partial(_ring_cost_at, size=size, radius_at=partial(_static_radius, radius=radius)),
        time_invariant=True,
    )


def tube_is_invariant(tube: TargetTube, group: TransformationGroup,
                      sampler: SymmetrySampler, trials: int = 1000,
                      seed: int = 0) -> VerificationReport:
    """Randomized check that the group's state action preserves the tube.

    Samples (element, state, step) triples and counts stage-cost changes
    under the action; any change is a violation.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    a = sampler.element(rng, trials)
    x = sampler.state(rng, trials)
    ks = rng.integers(0, tube.horizon + 1, size=trials)
    triples = []
    for k in np.unique(ks):
        mask = ks == k
        triples.append((int(k), a[mask], x[mask]))
    violations, total = _membership_violations(tube, group, triples)
    report = VerificationReport("tube invariance")
    report.checks.append(
        CheckResult("tube_membership_invariance", total, float(violations > 0), 0.0, violations)
    )
    return report
