"""Brute-force game-tree minimax, the independent oracle for solver tests.

No grids, no interpolation, no memoization: the value of a state is computed
by enumerating every control/disturbance sequence to the horizon. Only usable
for tiny finite systems, which is the point.
"""

import numpy as np


def game_tree_value(system, tube, x, k, horizon, saturating=True):
    """Minimax value from state ``x`` at step ``k`` (control first, then disturbance)."""
    x = np.asarray(x, dtype=float)
    g = float(np.asarray(tube.cost_at(k, x[np.newaxis]))[0])
    if k == horizon:
        return g
    best = None
    for u in system.control_set:
        worst = None
        for w in system.disturbance_set:
            nxt = np.asarray(system.step(x, u, w), dtype=float)
            value = game_tree_value(system, tube, nxt, k + 1, horizon, saturating)
            worst = value if worst is None else max(worst, value)
        best = worst if best is None else min(best, worst)
    total = g + best
    if saturating:
        return min(1.0, total)
    return total
