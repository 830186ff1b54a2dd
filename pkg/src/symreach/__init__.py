"""Backward reachable sets for discrete-time dynamic games, with symmetry reduction.

The package computes effective target tubes (the states a controller can keep
inside a target tube against worst-case disturbances) by grid-based minimax
dynamic programming, and accelerates the computation by sweeping the invariant
coordinates of a Cartan moving frame instead of the full state space.
"""

from .grids import AxisSpec, Grid, ValueField
from .solver import (
    GridPolicy,
    ReachabilitySolver,
    ReducedReachabilitySolver,
    RolloutResult,
    SolveError,
    SolveTimeout,
    fixed_adversary,
    greedy_adversary,
    random_adversary,
    rollout,
)
from .symmetry import (
    C4TorusFrame,
    C4TorusGroup,
    MovingFrame,
    Se2RelativePoseFrame,
    Se2PoseGroup,
    SymmetrySampler,
    TransformationGroup,
    VerificationReport,
    dubins_symmetry_sampler,
    verify_group,
    verify_group_exhaustive,
    verify_invariance,
    verify_invariance_exhaustive,
)
from .systems import (
    DubinsParams,
    InputSet,
    SystemModel,
    dubins_step,
    gridworld_step,
    single_dubins_vehicle,
    torus_gridworld,
    two_vehicle_game,
    two_vehicle_step,
)
from .tubes import (
    DetectionParams,
    TargetTube,
    detection_cost,
    detection_tube,
    expanding_ring_tube,
    static_ring_tube,
    tube_is_invariant,
)

__version__ = "0.1.0"

__all__ = [
    "AxisSpec",
    "Grid",
    "ValueField",
    "DubinsParams",
    "InputSet",
    "SystemModel",
    "dubins_step",
    "two_vehicle_step",
    "two_vehicle_game",
    "single_dubins_vehicle",
    "gridworld_step",
    "torus_gridworld",
    "TransformationGroup",
    "Se2PoseGroup",
    "C4TorusGroup",
    "MovingFrame",
    "Se2RelativePoseFrame",
    "C4TorusFrame",
    "SymmetrySampler",
    "VerificationReport",
    "dubins_symmetry_sampler",
    "verify_group",
    "verify_group_exhaustive",
    "verify_invariance",
    "verify_invariance_exhaustive",
    "DetectionParams",
    "TargetTube",
    "detection_cost",
    "detection_tube",
    "expanding_ring_tube",
    "static_ring_tube",
    "tube_is_invariant",
    "ReachabilitySolver",
    "ReducedReachabilitySolver",
    "GridPolicy",
    "RolloutResult",
    "SolveError",
    "SolveTimeout",
    "rollout",
    "fixed_adversary",
    "random_adversary",
    "greedy_adversary",
    "__version__",
]
