"""Minimax dynamic-programming solvers for target-tube reachability.

Both solvers sweep a grid backward from the terminal step: at every node the
control input minimizes, the disturbance maximizes, and the next-step value
is read off the previous field by multilinear interpolation. The full-space
solver grids the system's own state space; the reduced solver grids the
invariant coordinates of a moving frame and evaluates the dynamics through
the frame's embed/project maps, which is equivalent for invariant problems
but exponentially cheaper.

Solvers follow the estimator API: configure in the constructor, ``fit()``
runs the backward sweep, ``predict(X)`` answers membership queries against
the fitted value fields.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .grids import Grid, ValueField
from .symmetry import MovingFrame
from .systems import InputSet, SystemModel
from .tubes import TargetTube
from .validation import check_state

__all__ = [
    "SolveError",
    "SolveTimeout",
    "ReachabilitySolver",
    "ReducedReachabilitySolver",
    "GridPolicy",
    "RolloutResult",
    "rollout",
    "fixed_adversary",
    "random_adversary",
    "greedy_adversary",
]


class SolveError(RuntimeError):
    """A backward sweep failed."""


class SolveTimeout(SolveError):
    """A backward sweep exceeded its time limit."""


def _chunk_slices(n: int, n_chunks: int):
    n_chunks = max(1, min(n_chunks, n))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _sweep(embedded, g, system, frame, next_field, saturating, deadline=None):
    """One backward step over a block of nodes.

    Returns the new values and the minimizing control index per node (ties
    broken toward the lowest index). Node results depend only on that node's
    inputs, so any partition of the block yields bit-identical results.
    """
    best = None
    best_idx = None
    for ui, u in enumerate(system.control_set):
        worst = None
        for w in system.disturbance_set:
            if deadline is not None and time.monotonic() > deadline:
                raise SolveTimeout("time limit exceeded during backward sweep")
            nxt = system.step(embedded, u, w)
            if frame is not None:
                nxt = frame.transform(nxt)
            q = next_field.interpolate(nxt)
            worst = q if worst is None else np.maximum(worst, q)
        if best is None:
            best = worst
            best_idx = np.zeros(embedded.shape[0], dtype=np.int64)
        else:
            better = worst < best
            best = np.where(better, worst, best)
            best_idx = np.where(better, ui, best_idx)
    if saturating:
        return np.clip(g + best, 0.0, 1.0), best_idx
    return g + best, best_idx


class _BaseReachabilitySolver(BaseEstimator):
    """Shared fitting and query logic for both solvers."""

    def _frame(self) -> MovingFrame | None:
        return None

    def _grid_state_dim(self) -> int:
        return self.system.state_dim

    def _embed(self, points: np.ndarray) -> np.ndarray:
        return points

    def _validate(self):
        if not isinstance(self.system, SystemModel):
            raise ValueError("system must be a SystemModel")
        if not isinstance(self.tube, TargetTube):
            raise ValueError("tube must be a TargetTube")
        if not isinstance(self.grid, Grid):
            raise ValueError("grid must be a Grid")
        horizon = self.tube.horizon if self.horizon is None else int(self.horizon)
        if horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {horizon}")
        if horizon != self.tube.horizon:
            raise ValueError(
                f"horizon {horizon} does not match tube horizon {self.tube.horizon}"
            )
        if not 0.0 < self.membership_threshold < 1.0:
            raise ValueError("membership_threshold must lie in (0, 1)")
        expected = self._grid_state_dim()
        if self.grid.ndim != expected:
            raise ValueError(
                f"grid dimension {self.grid.ndim} does not match expected state dimension {expected}"
            )
        return horizon

    def _sample_cost(self, k: int, embedded: np.ndarray) -> np.ndarray:
        g = np.asarray(self.tube.cost_at(k, embedded), dtype=float)
        if g.shape != (embedded.shape[0],):
            raise SolveError(f"stage cost at step {k} returned shape {g.shape}")
        if not np.isin(g, (0.0, 1.0)).all():
            bad = int(np.flatnonzero(~np.isin(g, (0.0, 1.0)))[0])
            raise SolveError(f"stage cost at step {k} is not binary at node {bad}")
        return g

    def fit(self, X=None, y=None):
        """Run the backward sweep; ignores X and y (configuration is in params)."""
        horizon = self._validate()
        grid = self.grid
        points = grid.node_points()
        embedded = self._embed(points)
        frame = self._frame()

        g_terminal = self._sample_cost(horizon, embedded)
        fields = [None] * (horizon + 1)
        fields[horizon] = ValueField(grid, g_terminal, self.boundary_policy)
        policy = np.zeros((horizon, grid.n_nodes), dtype=np.int64)
        seconds = np.zeros(horizon + 1)
        deadline = None
        if self.time_limit is not None:
            deadline = time.monotonic() + float(self.time_limit)

        n_workers = max(1, int(self.n_workers))
        pool = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
        try:
            for k in range(horizon - 1, -1, -1):
                t0 = time.perf_counter()
                g_k = g_terminal if self.tube.time_invariant else self._sample_cost(k, embedded)
                try:
                    if pool is None:
                        values, argmin = _sweep(
                            embedded, g_k, self.system, frame, fields[k + 1],
                            self.saturating, deadline,
                        )
                    else:
                        slices = _chunk_slices(embedded.shape[0], n_workers)
                        futures = [
                            pool.submit(
                                _sweep, embedded[sl], g_k[sl], self.system, frame,
                                fields[k + 1], self.saturating, deadline,
                            )
                            for sl in slices
                        ]
                        parts = [f.result() for f in futures]
                        values = np.concatenate([p[0] for p in parts])
                        argmin = np.concatenate([p[1] for p in parts])
                except ValueError as err:
                    # typically non-finite successor coordinates from the step map
                    raise SolveError(f"backward sweep failed at step {k}: {err}") from err
                bad = ~np.isfinite(values)
                if bad.any():
                    node = int(np.flatnonzero(bad)[0])
                    raise SolveError(f"non-finite value at step {k}, node {node}")
                fields[k] = ValueField(grid, values, self.boundary_policy)
                policy[k] = argmin
                seconds[k] = time.perf_counter() - t0
        finally:
            if pool is not None:
                pool.shutdown()

        self.horizon_ = horizon
        self.values_ = fields
        self.policy_ = policy
        self.step_seconds_ = seconds
        return self

    def _check_fitted(self):
        if not hasattr(self, "values_"):
            raise NotFittedError("solver is not fitted; call fit() first")

    def _query_points(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float)

    def decision_function(self, X, k: int = 0):
        """Interpolated value of field k at the given state(s)."""
        self._check_fitted()
        if not 0 <= k <= self.horizon_:
            raise ValueError(f"step {k} outside [0, {self.horizon_}]")
        return self.values_[k].interpolate(self._query_points(X))

    def predict(self, X, k: int = 0):
        """Membership at step k: interpolated value below the threshold."""
        value = self.decision_function(X, k=k)
        if np.isscalar(value):
            return bool(value < self.membership_threshold)
        return value < self.membership_threshold

    def node_membership(self, k: int = 0) -> np.ndarray:
        """Membership of every grid node at step k (no interpolation)."""
        self._check_fitted()
        return self.values_[k].values < self.membership_threshold

    @property
    def dp_seconds_(self) -> float:
        """Total wall time spent in backward steps (the DP loop only)."""
        self._check_fitted()
        return float(np.sum(self.step_seconds_))


class ReachabilitySolver(_BaseReachabilitySolver):
    """Backward minimax sweep over the system's own state space."""

    def __init__(self, system=None, tube=None, grid=None, horizon=None,
                 saturating=True, membership_threshold=0.5, boundary_policy="clamp",
                 n_workers=1, time_limit=None):
        self.system = system
        self.tube = tube
        self.grid = grid
        self.horizon = horizon
        self.saturating = saturating
        self.membership_threshold = membership_threshold
        self.boundary_policy = boundary_policy
        self.n_workers = n_workers
        self.time_limit = time_limit

    def extract_policy(self) -> "GridPolicy":
        """The fitted minimizing control at the nearest grid node."""
        self._check_fitted()
        return GridPolicy(self.policy_, self.grid, self.system.control_set)


class ReducedReachabilitySolver(_BaseReachabilitySolver):
    """Backward minimax sweep over a moving frame's invariant coordinates.

    The stage cost is sampled at the cross-section embedding of each reduced
    node; successors are stepped in full coordinates and projected back. Full
    states passed to ``predict``/``decision_function`` are projected through
    the frame automatically.

    Checking that the problem actually has the symmetry is the caller's job
    (see :func:`symreach.symmetry.verify_invariance`); the CLI runs that
    check before solving by default.
    """

    def __init__(self, system=None, tube=None, frame=None, grid=None, horizon=None,
                 saturating=True, membership_threshold=0.5, boundary_policy="clamp",
                 n_workers=1, time_limit=None):
        self.system = system
        self.tube = tube
        self.frame = frame
        self.grid = grid
        self.horizon = horizon
        self.saturating = saturating
        self.membership_threshold = membership_threshold
        self.boundary_policy = boundary_policy
        self.n_workers = n_workers
        self.time_limit = time_limit

    def _frame(self):
        return self.frame

    def _grid_state_dim(self):
        return self.frame.reduced_dim

    def _embed(self, points):
        return np.atleast_2d(self.frame.inverse_transform(points))

    def _validate(self):
        if not isinstance(self.frame, MovingFrame):
            raise ValueError("frame must be a MovingFrame")
        return super()._validate()

    def _query_points(self, X):
        arr = np.asarray(X, dtype=float)
        if arr.shape[-1] == self.system.state_dim and self.system.state_dim != self.frame.reduced_dim:
            arr = self.frame.transform(arr)
        return np.asarray(arr, dtype=float)

    def lift_policy(self) -> "GridPolicy":
        """The fitted reduced policy as a feedback law on full states."""
        self._check_fitted()
        return GridPolicy(self.policy_, self.grid, self.system.control_set, frame=self.frame)


@dataclass
class GridPolicy:
    """Feedback policy: the stored control at the nearest grid node.

    With a frame, full states are projected to reduced coordinates first, so
    all states on one group orbit receive the same control.
    """

    table: np.ndarray
    grid: Grid
    control_set: InputSet
    frame: MovingFrame | None = None

    def control_index(self, k: int, x) -> int:
        if not 0 <= k < self.table.shape[0]:
            raise ValueError(f"policy step {k} outside [0, {self.table.shape[0]})")
        p = np.asarray(x, dtype=float)
        if self.frame is not None and p.shape[-1] != self.grid.ndim:
            p = self.frame.transform(p)
        node = self.grid.nearest_node(p)
        return int(self.table[k, node])

    def __call__(self, k: int, x) -> np.ndarray:
        return self.control_set[self.control_index(k, x)]


@dataclass
class RolloutResult:
    """A played-out trajectory with the stage costs along it."""

    states: np.ndarray
    control_indices: np.ndarray
    disturbance_indices: np.ndarray
    stage_costs: np.ndarray

    @property
    def stayed_safe(self) -> bool:
        return not self.stage_costs.any()


def rollout(system: SystemModel, tube: TargetTube, policy: GridPolicy, adversary,
            x0, n_steps: int | None = None) -> RolloutResult:
    """Play the game from ``x0``: policy picks u, ``adversary(k, x)`` picks w.

    Steps beyond the tube horizon reuse the last policy row and stage cost.
    """
    n_steps = tube.horizon if n_steps is None else int(n_steps)
    x = check_state(x0, system.state_dim)
    states = np.zeros((n_steps + 1, system.state_dim))
    costs = np.zeros(n_steps + 1)
    u_idx = np.zeros(n_steps, dtype=np.int64)
    w_idx = np.zeros(n_steps, dtype=np.int64)
    states[0] = x
    last_policy_step = policy.table.shape[0] - 1
    for k in range(n_steps):
        costs[k] = float(np.asarray(tube.cost_at(min(k, tube.horizon), x[np.newaxis]))[0])
        ui = policy.control_index(min(k, last_policy_step), x)
        wi = int(adversary(k, x))
        x = np.asarray(system.step(x, system.control_set[ui], system.disturbance_set[wi]), dtype=float)
        states[k + 1] = x
        u_idx[k] = ui
        w_idx[k] = wi
    costs[n_steps] = float(np.asarray(tube.cost_at(min(n_steps, tube.horizon), x[np.newaxis]))[0])
    return RolloutResult(states, u_idx, w_idx, costs)


def fixed_adversary(index: int = 0):
    """Always plays the disturbance element at ``index``."""

    def adversary(k, x):
        return index

    return adversary


def random_adversary(n_options: int, seed: int = 0):
    """Plays a uniformly random disturbance index (seeded, reproducible)."""
    rng = np.random.default_rng(seed)

    def adversary(k, x):
        return int(rng.integers(0, n_options))

    return adversary


def greedy_adversary(solver: _BaseReachabilitySolver, policy: GridPolicy):
    """Plays the disturbance maximizing the next-step interpolated value.

    The adversary anticipates the control the policy will commit at the
    current state (control commits first, disturbance responds).
    """
    system = solver.system

    def adversary(k, x):
        k_next = min(k + 1, solver.horizon_)
        ui = policy.control_index(min(k, policy.table.shape[0] - 1), x)
        u = system.control_set[ui]
        best_w, best_v = 0, -np.inf
        for wi, w in enumerate(system.disturbance_set):
            value = float(solver.decision_function(system.step(x, u, w), k=k_next))
            if value > best_v:
                best_v, best_w = value, wi
        return best_w

    return adversary
