import numpy as np

from symreach.symmetry import (
    C4TorusFrame,
    C4TorusGroup,
    Se2PoseGroup,
    Se2RelativePoseFrame,
    angle_aware_residuals,
    dubins_symmetry_sampler,
    verify_group,
    verify_group_exhaustive,
    verify_invariance,
    verify_invariance_exhaustive,
)
from symreach.systems import TWO_PI, torus_gridworld, two_vehicle_game
from symreach.tubes import detection_tube, expanding_ring_tube

GROUP = Se2PoseGroup(n_poses=2)
FRAME = Se2RelativePoseFrame()


def random_states(n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=(n, 6))
    x[:, 2] = rng.uniform(0.0, TWO_PI, n)
    x[:, 5] = rng.uniform(0.0, TWO_PI, n)
    return x


def test_identity_action():
    x = random_states(20)
    np.testing.assert_allclose(GROUP.act_on_state(GROUP.identity(), x), x, atol=1e-15)


def test_pure_translation():
    out = GROUP.act_on_state(np.array([1.0, 2.0, 0.0]), np.zeros(6))
    np.testing.assert_allclose(out, [1.0, 2.0, 0.0, 1.0, 2.0, 0.0])


def test_quarter_turn():
    out = GROUP.act_on_state(
        np.array([0.0, 0.0, np.pi / 2]), np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    )
    np.testing.assert_allclose(out, [0.0, 1.0, np.pi / 2, -1.0, 0.0, np.pi / 2], atol=1e-15)


def test_frame_element_on_section():
    out = FRAME.frame_element(np.array([0.0, 0.0, 0.0, 0.4, -0.7, 1.3]))
    np.testing.assert_allclose(out, [0.0, 0.0, 0.0])


def test_frame_element_hand_value():
    out = FRAME.frame_element(np.array([1.0, 0.0, np.pi / 2, 0.3, 0.3, 0.3]))
    np.testing.assert_allclose(out, [0.0, 1.0, 3 * np.pi / 2], atol=1e-15)


def test_normalization_pins_section():
    x = random_states(500, seed=1)
    moved = GROUP.act_on_state(FRAME.frame_element(x), x)
    res = angle_aware_residuals(moved[:, :3], np.zeros((x.shape[0], 3)), angular_dims=(2,))
    assert res.max() < 1e-12


def test_invariants_on_section():
    x = np.array([0.0, 0.0, 0.0, 0.4, -0.7, 1.3])
    np.testing.assert_allclose(FRAME.transform(x), [0.4, -0.7, 1.3])


def test_invariants_hand_value():
    out = FRAME.transform(np.array([1.0, 0.0, np.pi / 2, 1.0, 1.0, np.pi]))
    np.testing.assert_allclose(out, [1.0, 0.0, np.pi / 2], atol=1e-15)


def test_invariants_constant_on_orbits():
    rng = np.random.default_rng(2)
    x = random_states(500, seed=2)
    alpha = np.column_stack(
        [rng.uniform(-2, 2, size=(500, 2)), rng.uniform(0, TWO_PI, 500)]
    )
    res = angle_aware_residuals(
        FRAME.transform(GROUP.act_on_state(alpha, x)), FRAME.transform(x), angular_dims=(2,)
    )
    assert res.max() < 1e-9


def test_embed_hand_values():
    np.testing.assert_allclose(FRAME.inverse_transform(np.zeros(3)), np.zeros(6))
    np.testing.assert_allclose(
        FRAME.inverse_transform(np.array([1.0, 0.0, np.pi / 2])),
        [0.0, 0.0, 0.0, 1.0, 0.0, np.pi / 2],
    )


def test_section_round_trip():
    rng = np.random.default_rng(3)
    xr = np.column_stack([rng.uniform(-2, 2, size=(300, 2)), rng.uniform(0, TWO_PI, 300)])
    back = FRAME.transform(FRAME.inverse_transform(xr))
    assert angle_aware_residuals(back, xr, angular_dims=(2,)).max() < 1e-12


def test_frame_is_transformer():
    # estimator API: fit returns self, get_params round-trips
    assert FRAME.fit() is FRAME
    assert FRAME.get_params() == {}
    frame = C4TorusFrame(size=5)
    assert frame.get_params() == {"size": 5}


def test_verify_group_passes():
    report = verify_group(GROUP, dubins_symmetry_sampler(), trials=1000, tol=1e-9, seed=0)
    assert report.passed, str(report)


def test_input_actions_are_trivial():
    # rigid motions move the vehicles, not their input commands
    alpha = np.array([0.3, -0.8, 1.1])
    u = np.array([[0.05, 1.0], [0.0, -1.0]])
    np.testing.assert_array_equal(GROUP.act_on_control(alpha, u), u)
    np.testing.assert_array_equal(GROUP.act_on_disturbance(alpha, u), u)


class _BrokenCompose(Se2PoseGroup):
    def compose(self, a, b):
        good = super().compose(a, b)
        good = np.array(good, copy=True)
        good[..., 2] = np.mod(-good[..., 2], TWO_PI)  # sign flip on the rotation
        return good


def test_verify_group_catches_broken_compose():
    report = verify_group(_BrokenCompose(2), dubins_symmetry_sampler(), trials=200, seed=0)
    assert not report.passed
    by_name = {c.name: c for c in report.checks}
    assert by_name["state_composition"].max_residual > 1e-9


def test_verify_group_exhaustive_c4():
    size = 7
    group = C4TorusGroup(size)
    states = np.array(
        [[i, j, h] for i in range(size) for j in range(size) for h in range(4)], dtype=float
    )
    report = verify_group_exhaustive(
        group, [0, 1, 2, 3], states, np.zeros((1, 1)), np.zeros((1, 0))
    )
    assert report.passed
    assert all(c.max_residual == 0.0 for c in report.checks)


def test_verify_invariance_dubins():
    system = two_vehicle_game()
    tube = detection_tube(horizon=10)
    report = verify_invariance(
        system, tube, GROUP, dubins_symmetry_sampler(system), trials=1000, tol=1e-9, seed=0
    )
    assert report.passed, str(report)


def test_verify_invariance_reports_anchored_tube():
    # a target region pinned in world coordinates is not rigid-motion invariant
    from symreach.systems import single_dubins_vehicle
    from symreach.tubes import TargetTube

    system = single_dubins_vehicle()
    group = Se2PoseGroup(n_poses=1)

    def near_origin_cost(k, x):
        x = np.asarray(x, dtype=float)
        return (np.hypot(x[..., 0], x[..., 1]) <= 0.5).astype(float)

    tube = TargetTube(horizon=3, cost_at=near_origin_cost)

    def state(rng, n):
        x = rng.uniform(-2.0, 2.0, size=(n, 3))
        x[:, 2] = rng.uniform(0.0, TWO_PI, n)
        return x

    sampler = dubins_symmetry_sampler(system=two_vehicle_game())
    from symreach.symmetry import SymmetrySampler

    controls = np.asarray(system.control_set.elements, dtype=float)
    sampler = SymmetrySampler(
        element=sampler.element,
        state=state,
        control=lambda rng, n: controls[rng.integers(0, len(controls), n)],
        disturbance=lambda rng, n: np.zeros((n, 0)),
        angular_state_dims=system.angular_dims,
    )
    report = verify_invariance(system, tube, group, sampler, trials=500, seed=0)
    by_name = {c.name: c for c in report.checks}
    assert by_name["dynamics_invariance"].passed
    assert by_name["tube_membership_invariance"].violations > 0
    assert not report.passed


def test_verify_invariance_exhaustive_gridworld():
    size = 7
    system = torus_gridworld(size)
    tube = expanding_ring_tube(size=size, horizon=3)
    group = C4TorusGroup(size)
    states = np.array(
        [[i, j, h] for i in range(size) for j in range(size) for h in range(4)], dtype=float
    )
    report = verify_invariance_exhaustive(system, tube, group, [0, 1, 2, 3], states)
    assert report.passed, str(report)
    by_name = {c.name: c for c in report.checks}
    assert by_name["dynamics_invariance"].max_residual == 0.0
    assert by_name["tube_membership_invariance"].violations == 0


def test_report_renders_one_line_per_check():
    report = verify_group(GROUP, dubins_symmetry_sampler(), trials=10, seed=0)
    lines = str(report).splitlines()
    assert len(lines) == len(report.checks) + 1
    assert all("trials=" in line and "max_residual=" in line for line in lines[1:])
