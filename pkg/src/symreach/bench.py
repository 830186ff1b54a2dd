"""Benchmark harness: reduced vs full-space solve times across grid densities.

Only the backward sweep is timed (grid construction and verification are
excluded). Entries that exceed the timeout, or full-space grids over the
node ceiling, render as ``*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import median

from .config import Scenario
from .solver import SolveTimeout

__all__ = ["BenchEntry", "BenchResult", "run_benchmark"]


@dataclass
class BenchEntry:
    mode: str
    points_per_dim: int
    n_nodes: int
    seconds: list = field(default_factory=list)
    timed_out: bool = False
    skipped: bool = False

    @property
    def median_seconds(self) -> float | None:
        if self.timed_out or self.skipped or not self.seconds:
            return None
        return median(self.seconds)

    def cell(self) -> str:
        value = self.median_seconds
        if value is None:
            return "*"
        return f"{value:.4g}"


@dataclass
class BenchResult:
    points: list
    entries: dict
    repetitions: int
    horizon: int
    timeout: float | None

    def entry(self, mode: str, points: int) -> BenchEntry:
        return self.entries[(mode, points)]

    def speedup(self, points: int) -> float | None:
        reduced = self.entry("reduced", points).median_seconds
        baseline = self.entry("full", points).median_seconds
        if reduced is None or baseline is None or reduced <= 0:
            return None
        return baseline / reduced

    def render(self) -> str:
        label_width = 22
        col = max(10, *(len(self.entry(m, p).cell()) + 2 for m in ("reduced", "full") for p in self.points))

        def row(label, cells):
            return label.ljust(label_width) + "".join(c.rjust(col) for c in cells)

        lines = [
            row("points per dimension", [str(p) for p in self.points]),
            row("reduced (s)", [self.entry("reduced", p).cell() for p in self.points]),
            row("baseline (s)", [self.entry("full", p).cell() for p in self.points]),
        ]
        speedups = []
        for p in self.points:
            s = self.speedup(p)
            speedups.append("-" if s is None else f"{s:.1f}x")
        lines.append(row("speedup", speedups))
        lines.append(
            f"(median of {self.repetitions}, horizon {self.horizon}, "
            f"timeout {'none' if self.timeout is None else f'{self.timeout:g} s'}; * = over limit)"
        )
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "points": list(self.points),
            "repetitions": self.repetitions,
            "horizon": self.horizon,
            "timeout": self.timeout,
            "entries": [
                {
                    "mode": e.mode,
                    "points_per_dim": e.points_per_dim,
                    "n_nodes": e.n_nodes,
                    "seconds": list(e.seconds),
                    "median_seconds": e.median_seconds,
                    "timed_out": e.timed_out,
                    "skipped": e.skipped,
                }
                for e in self.entries.values()
            ],
        }


def _time_solves(scenario: Scenario, mode: str, points: int, repetitions: int,
                 horizon: int, timeout: float | None, workers: int) -> BenchEntry:
    grid = scenario.grid_for(mode, points)
    entry = BenchEntry(mode=mode, points_per_dim=points, n_nodes=grid.n_nodes)
    for _ in range(repetitions):
        solver = scenario.build_solver(
            mode=mode, horizon=horizon, workers=workers, time_limit=timeout,
            points_per_dim=points,
        )
        try:
            solver.fit()
        except SolveTimeout:
            entry.timed_out = True
            break
        entry.seconds.append(solver.dp_seconds_)
    return entry


def run_benchmark(scenario: Scenario, points_list, repetitions: int = 3, horizon: int = 1,
                  timeout: float | None = 7200.0, workers: int = 1,
                  include_full: bool = True, force_full: bool = False) -> BenchResult:
    """Time reduced and full-space solves for each per-axis point count."""
    points_list = [int(p) for p in points_list]
    entries = {}
    for points in points_list:
        entries[("reduced", points)] = _time_solves(
            scenario, "reduced", points, repetitions, horizon, timeout, workers
        )
        full_nodes = points ** scenario.full_grid.ndim
        if not include_full or (full_nodes > scenario.node_ceiling and not force_full):
            entries[("full", points)] = BenchEntry(
                mode="full", points_per_dim=points, n_nodes=full_nodes, skipped=True
            )
            continue
        entries[("full", points)] = _time_solves(
            scenario, "full", points, repetitions, horizon, timeout, workers
        )
    return BenchResult(
        points=points_list, entries=entries, repetitions=repetitions,
        horizon=horizon, timeout=timeout,
    )
