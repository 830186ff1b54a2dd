"""Transformation groups, Cartan moving frames, and symmetry verification.

A transformation group acts jointly on states, controls, and disturbances
through parametrized bijections. A moving frame sends every state to a chosen
cross-section by a unique group element; the remaining coordinates are
group-invariant and define the reduced space the solvers sweep over.

Frames follow the transformer API: ``transform`` maps full states to reduced
coordinates, ``inverse_transform`` re-embeds reduced coordinates on the
cross-section.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .systems import TWO_PI, SystemModel, wrap_angle
from .validation import check_points

__all__ = [
    "TransformationGroup",
    "Se2PoseGroup",
    "C4TorusGroup",
    "MovingFrame",
    "Se2RelativePoseFrame",
    "C4TorusFrame",
    "CheckResult",
    "VerificationReport",
    "SymmetrySampler",
    "dubins_symmetry_sampler",
    "verify_group",
    "verify_group_exhaustive",
    "verify_invariance",
    "verify_invariance_exhaustive",
]


class TransformationGroup(ABC):
    """Group-parametrized bijections on states, controls, and disturbances."""

    @abstractmethod
    def identity(self):
        """The identity element."""

    @abstractmethod
    def compose(self, a, b):
        """The element acting as 'apply b, then a'."""

    @abstractmethod
    def inverse(self, a):
        """The inverse element of ``a``."""

    @abstractmethod
    def act_on_state(self, a, x):
        """Apply the state action of ``a`` (broadcasts over batch rows)."""

    def act_on_control(self, a, u):
        """Control action; trivial unless overridden."""
        return np.asarray(u, dtype=float)

    def act_on_disturbance(self, a, w):
        """Disturbance action; trivial unless overridden."""
        return np.asarray(w, dtype=float)


class Se2PoseGroup(TransformationGroup):
    """Planar rigid motions acting jointly on a stack of planar poses.

    The state is ``n_poses`` blocks of ``(z, y, theta)``. An element
    ``(dz, dy, dtheta)`` rotates every planar position by ``dtheta`` about
    the origin, translates it by ``(dz, dy)``, and shifts every heading by
    ``dtheta``. Control and disturbance actions are trivial.
    """

    def __init__(self, n_poses: int = 2):
        self.n_poses = int(n_poses)

    def identity(self):
        return np.zeros(3)

    def compose(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
        return np.stack(
            np.broadcast_arrays(
                c * b[..., 0] - s * b[..., 1] + a[..., 0],
                s * b[..., 0] + c * b[..., 1] + a[..., 1],
                wrap_angle(a[..., 2] + b[..., 2]),
            ),
            axis=-1,
        )

    def inverse(self, a):
        a = np.asarray(a, dtype=float)
        c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
        return np.stack(
            np.broadcast_arrays(
                -c * a[..., 0] - s * a[..., 1],
                s * a[..., 0] - c * a[..., 1],
                wrap_angle(-a[..., 2]),
            ),
            axis=-1,
        )

    def act_on_state(self, a, x):
        a = np.asarray(a, dtype=float)
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 3 * self.n_poses:
            raise ValueError(
                f"state needs {3 * self.n_poses} components for {self.n_poses} poses, "
                f"got {x.shape[-1]}"
            )
        c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
        cols = []
        for b in range(0, 3 * self.n_poses, 3):
            cols.extend(
                [
                    c * x[..., b] - s * x[..., b + 1] + a[..., 0],
                    s * x[..., b] + c * x[..., b + 1] + a[..., 1],
                    wrap_angle(x[..., b + 2] + a[..., 2]),
                ]
            )
        return np.stack(np.broadcast_arrays(*cols), axis=-1)


class C4TorusGroup(TransformationGroup):
    """Quarter-turn rotations of the gridworld torus about node (0, 0).

    Elements are integers mod 4. One turn maps position ``(i, j)`` to
    ``(-j mod size, i)`` and advances the heading by one, so headings and
    positions rotate together.
    """

    def __init__(self, size: int):
        self.size = int(size)

    def identity(self):
        return 0

    def compose(self, a, b):
        return (np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64)) % 4

    def inverse(self, a):
        return (-np.asarray(a, dtype=np.int64)) % 4

    def rotate_position(self, q, i, j):
        """Rotate torus positions by q quarter turns (elementwise)."""
        m = self.size
        q = np.asarray(q, dtype=np.int64) % 4
        i = np.asarray(i, dtype=np.int64) % m
        j = np.asarray(j, dtype=np.int64) % m
        conds = [q == 0, q == 1, q == 2, q == 3]
        iq = np.select(conds, np.broadcast_arrays(i, (-j) % m, (-i) % m, j))
        jq = np.select(conds, np.broadcast_arrays(j, i, (-j) % m, (-i) % m))
        return iq, jq

    def act_on_state(self, a, x):
        x = np.asarray(x, dtype=float)
        ints = np.rint(x).astype(np.int64)
        q = np.asarray(a, dtype=np.int64) % 4
        iq, jq = self.rotate_position(q, ints[..., 0], ints[..., 1])
        hq = (ints[..., 2] % 4 + q) % 4
        return np.stack(np.broadcast_arrays(iq, jq, hq), axis=-1).astype(float)


class MovingFrame(TransformerMixin, BaseEstimator, ABC):
    """Maps between full and reduced (invariant) coordinates.

    ``frame_element(x)`` is the unique group element carrying ``x`` onto the
    cross-section; ``transform`` returns the invariant coordinates and
    ``inverse_transform`` re-embeds them on the cross-section. Subclasses set
    ``group``, ``full_dim``, ``reduced_dim``, ``section_components`` (state
    indices pinned by the normalization) and ``section_constant``.
    """

    def fit(self, X=None, y=None):
        return self

    @abstractmethod
    def frame_element(self, X):
        """Normalizing group element(s) for one state or a batch."""

    @abstractmethod
    def transform(self, X):
        """Invariant coordinates of one state or a batch."""

    @abstractmethod
    def inverse_transform(self, Xr):
        """Cross-section state(s) for reduced coordinates."""


class Se2RelativePoseFrame(MovingFrame):
    """Closed-form frame for the two-vehicle state under planar rigid motions.

    The cross-section pins vehicle 1 at the origin with heading zero; the
    invariants are the pose of vehicle 2 expressed in vehicle 1's body frame.
    """

    full_dim = 6
    reduced_dim = 3
    section_components = (0, 1, 2)

    def __init__(self):
        self.group = Se2PoseGroup(n_poses=2)

    @property
    def section_constant(self):
        return np.zeros(3)

    def frame_element(self, X):
        pts, single = check_points(X, 6, "states")
        c, s = np.cos(pts[:, 2]), np.sin(pts[:, 2])
        out = np.stack(
            [
                -pts[:, 0] * c - pts[:, 1] * s,
                pts[:, 0] * s - pts[:, 1] * c,
                wrap_angle(-pts[:, 2]),
            ],
            axis=1,
        )
        return out[0] if single else out

    def transform(self, X):
        pts, single = check_points(X, 6, "states")
        c, s = np.cos(pts[:, 2]), np.sin(pts[:, 2])
        d0 = pts[:, 3] - pts[:, 0]
        d1 = pts[:, 4] - pts[:, 1]
        out = np.stack(
            [d0 * c + d1 * s, -d0 * s + d1 * c, wrap_angle(pts[:, 5] - pts[:, 2])],
            axis=1,
        )
        return out[0] if single else out

    def inverse_transform(self, Xr):
        pts, single = check_points(Xr, 3, "reduced coordinates")
        out = np.zeros((pts.shape[0], 6))
        out[:, 3] = pts[:, 0]
        out[:, 4] = pts[:, 1]
        out[:, 5] = wrap_angle(pts[:, 2])
        return out[0] if single else out


class C4TorusFrame(MovingFrame):
    """Discrete frame for the gridworld: rotate each state to heading zero."""

    full_dim = 3
    reduced_dim = 2
    section_components = (2,)

    def __init__(self, size: int = 7):
        self.size = int(size)
        self.group = C4TorusGroup(self.size)

    @property
    def section_constant(self):
        return np.zeros(1)

    def frame_element(self, X):
        pts, single = check_points(X, 3, "states")
        q = (-np.rint(pts[:, 2]).astype(np.int64)) % 4
        return int(q[0]) if single else q

    def transform(self, X):
        pts, single = check_points(X, 3, "states")
        q = (-np.rint(pts[:, 2]).astype(np.int64)) % 4
        ints = np.rint(pts).astype(np.int64)
        iq, jq = self.group.rotate_position(q, ints[:, 0], ints[:, 1])
        out = np.stack([iq, jq], axis=1).astype(float)
        return out[0] if single else out

    def inverse_transform(self, Xr):
        pts, single = check_points(Xr, 2, "reduced coordinates")
        ints = np.rint(pts).astype(np.int64) % self.size
        out = np.concatenate([ints.astype(float), np.zeros((pts.shape[0], 1))], axis=1)
        return out[0] if single else out


def angle_aware_residuals(a, b, angular_dims=()):
    """Row-wise max-abs difference, comparing angular components mod 2*pi."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[-1] == 0:
        return np.zeros(a.shape[0])
    diff = a - b
    for d in angular_dims:
        wrapped = np.mod(diff[:, d] + np.pi, TWO_PI)
        wrapped = np.where(wrapped >= TWO_PI, wrapped - TWO_PI, wrapped)
        diff[:, d] = wrapped - np.pi
    return np.max(np.abs(diff), axis=1)


@dataclass
class CheckResult:
    """Outcome of a single verification check."""

    name: str
    trials: int
    max_residual: float
    tol: float
    violations: int = 0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.violations == 0

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"{self.name}: trials={self.trials} max_residual={self.max_residual:.3e} "
            f"violations={self.violations} -> {status}"
        )


@dataclass
class VerificationReport:
    """A group of verification checks; renders one line per check."""

    title: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        return "\n".join([f"[{self.title}]"] + [c.line() for c in self.checks])


@dataclass
class SymmetrySampler:
    """Batch samplers for the spaces a verification run draws from.

    Each callable takes ``(rng, n)`` and returns ``n`` rows. Angular state
    dimensions are used for wrap-aware residuals.
    """

    element: object
    state: object
    control: object
    disturbance: object
    angular_state_dims: frozenset = frozenset()


def _uniform_rows(rows: np.ndarray):
    def draw(rng, n):
        return rows[rng.integers(0, rows.shape[0], size=n)]

    return draw


def dubins_symmetry_sampler(system: SystemModel | None = None, extent: float = 2.0) -> SymmetrySampler:
    """Sampler for the two-vehicle game: random poses and rigid motions."""
    from .systems import two_vehicle_game

    system = system or two_vehicle_game()
    controls = np.asarray(system.control_set.elements, dtype=float)
    disturbances = np.asarray(system.disturbance_set.elements, dtype=float)

    def element(rng, n):
        return np.column_stack(
            [rng.uniform(-extent, extent, size=(n, 2)), rng.uniform(0.0, TWO_PI, size=n)]
        )

    def state(rng, n):
        x = rng.uniform(-extent, extent, size=(n, 6))
        x[:, 2] = rng.uniform(0.0, TWO_PI, size=n)
        x[:, 5] = rng.uniform(0.0, TWO_PI, size=n)
        return x

    return SymmetrySampler(
        element=element,
        state=state,
        control=_uniform_rows(controls),
        disturbance=_uniform_rows(disturbances),
        angular_state_dims=system.angular_dims,
    )


def verify_group(group: TransformationGroup, sampler: SymmetrySampler, trials: int = 1000,
                 tol: float = 1e-9, seed: int = 0) -> VerificationReport:
    """Randomized check of the group axioms: identity, composition, bijection.

    Failures are reported, not raised.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    a = sampler.element(rng, trials)
    b = sampler.element(rng, trials)
    x = sampler.state(rng, trials)
    u = sampler.control(rng, trials)
    w = sampler.disturbance(rng, trials)
    e = group.identity()
    ang = sampler.angular_state_dims

    def check(name, got, want, angular=()):
        res = float(np.max(angle_aware_residuals(got, want, angular)))
        return CheckResult(name, trials, res, tol)

    report = VerificationReport("group axioms")
    report.checks.append(check("state_identity", group.act_on_state(e, x), x, ang))
    report.checks.append(check("control_identity", group.act_on_control(e, u), u))
    report.checks.append(check("disturbance_identity", group.act_on_disturbance(e, w), w))
    report.checks.append(
        check(
            "state_composition",
            group.act_on_state(group.compose(a, b), x),
            group.act_on_state(a, group.act_on_state(b, x)),
            ang,
        )
    )
    report.checks.append(
        check(
            "control_composition",
            group.act_on_control(group.compose(a, b), u),
            group.act_on_control(a, group.act_on_control(b, u)),
        )
    )
    report.checks.append(
        check(
            "disturbance_composition",
            group.act_on_disturbance(group.compose(a, b), w),
            group.act_on_disturbance(a, group.act_on_disturbance(b, w)),
        )
    )
    report.checks.append(
        check(
            "state_bijection",
            group.act_on_state(group.inverse(a), group.act_on_state(a, x)),
            x,
            ang,
        )
    )
    report.checks.append(
        check(
            "control_bijection",
            group.act_on_control(group.inverse(a), group.act_on_control(a, u)),
            u,
        )
    )
    report.checks.append(
        check(
            "disturbance_bijection",
            group.act_on_disturbance(group.inverse(a), group.act_on_disturbance(a, w)),
            w,
        )
    )
    return report


def verify_group_exhaustive(group: TransformationGroup, elements, states, controls,
                            disturbances, tol: float = 0.0) -> VerificationReport:
    """Exhaustive group-axiom check over explicit finite element/state sets."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    disturbances = np.atleast_2d(np.asarray(disturbances, dtype=float))
    elements = list(elements)
    e = group.identity()

    id_res = max(
        float(np.max(angle_aware_residuals(group.act_on_state(e, states), states))),
        float(np.max(angle_aware_residuals(group.act_on_control(e, controls), controls))),
        float(np.max(angle_aware_residuals(group.act_on_disturbance(e, disturbances), disturbances))),
    )
    comp_res = 0.0
    for a in elements:
        for b in elements:
            ab = group.compose(a, b)
            comp_res = max(
                comp_res,
                float(
                    np.max(
                        angle_aware_residuals(
                            group.act_on_state(ab, states),
                            group.act_on_state(a, group.act_on_state(b, states)),
                        )
                    )
                ),
            )
    bij_res = 0.0
    for a in elements:
        bij_res = max(
            bij_res,
            float(
                np.max(
                    angle_aware_residuals(
                        group.act_on_state(group.inverse(a), group.act_on_state(a, states)),
                        states,
                    )
                )
            ),
        )
    n_states = states.shape[0]
    report = VerificationReport("group axioms (exhaustive)")
    report.checks.append(CheckResult("identity", n_states, id_res, tol))
    report.checks.append(
        CheckResult("composition", len(elements) ** 2 * n_states, comp_res, tol)
    )
    report.checks.append(CheckResult("bijection", len(elements) * n_states, bij_res, tol))
    return report


def _membership_violations(tube, group, elements_and_states):
    """Count |g_k(phi_a(x)) - g_k(x)| != 0 over (k, a, states) triples."""
    violations = 0
    total = 0
    for k, a, states in elements_and_states:
        base = np.asarray(tube.cost_at(k, states), dtype=float)
        moved = np.asarray(tube.cost_at(k, group.act_on_state(a, states)), dtype=float)
        violations += int(np.count_nonzero(base != moved))
        total += states.shape[0]
    return violations, total


def verify_invariance(system: SystemModel, tube, group: TransformationGroup,
                      sampler: SymmetrySampler, trials: int = 1000, tol: float = 1e-9,
                      seed: int = 0) -> VerificationReport:
    """Randomized check that dynamics and target tube commute with the group.

    Dynamics residual compares ``phi_a^{-1}(f(phi_a(x), chi_a(u), psi_a(w)))``
    against ``f(x, u, w)`` with wrap-aware distances; tube membership must be
    unchanged by the state action at every sampled step.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    a = sampler.element(rng, trials)
    x = sampler.state(rng, trials)
    u = sampler.control(rng, trials)
    w = sampler.disturbance(rng, trials)

    base = system.step(x, u, w)
    moved = system.step(
        group.act_on_state(a, x), group.act_on_control(a, u), group.act_on_disturbance(a, w)
    )
    back = group.act_on_state(group.inverse(a), moved)
    dyn_res = float(np.max(angle_aware_residuals(back, base, system.angular_dims)))

    report = VerificationReport("invariance")
    report.checks.append(CheckResult("dynamics_invariance", trials, dyn_res, tol))

    if tube is not None:
        ks = rng.integers(0, tube.horizon + 1, size=trials)
        triples = []
        for k in np.unique(ks):
            mask = ks == k
            triples.append((int(k), a[mask], x[mask]))
        violations, total = _membership_violations(tube, group, triples)
        report.checks.append(
            CheckResult("tube_membership_invariance", total, float(violations > 0), tol, violations)
        )
    return report


def verify_invariance_exhaustive(system: SystemModel, tube, group: TransformationGroup,
                                 elements, states, tol: float = 0.0) -> VerificationReport:
    """Exhaustive invariance check over all (element, state, u, w) combinations."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    elements = list(elements)
    dyn_res = 0.0
    n_dyn = 0
    for a in elements:
        ax = group.act_on_state(a, states)
        ainv = group.inverse(a)
        for u in system.control_set:
            for w in system.disturbance_set:
                base = system.step(states, u, w)
                moved = system.step(ax, group.act_on_control(a, u), group.act_on_disturbance(a, w))
                back = group.act_on_state(ainv, moved)
                dyn_res = max(
                    dyn_res,
                    float(np.max(angle_aware_residuals(back, base, system.angular_dims))),
                )
                n_dyn += states.shape[0]
    report = VerificationReport("invariance (exhaustive)")
    report.checks.append(CheckResult("dynamics_invariance", n_dyn, dyn_res, tol))

    if tube is not None:
        triples = [
            (k, a, states) for k in range(tube.horizon + 1) for a in elements
        ]
        violations, total = _membership_violations(tube, group, triples)
        report.checks.append(
            CheckResult("tube_membership_invariance", total, float(violations > 0), tol, violations)
        )
    return report
