"""Command-line front end: solve, verify, bench, rollout, export.

Exit codes: 0 success, 1 solve failure, 2 config error, 3 verification
failure, 4 missing or mismatched solve artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_benchmark
from .config import MODES, ConfigError, Scenario, load_config
from .grids import read_field_raster, write_field_csv, write_field_raster, write_membership_csv
from .solver import (
    SolveError,
    fixed_adversary,
    greedy_adversary,
    random_adversary,
    rollout,
)
from .symmetry import (
    verify_group,
    verify_group_exhaustive,
    verify_invariance,
    verify_invariance_exhaustive,
)

EXIT_OK = 0
EXIT_SOLVE = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_MISSING = 4

VERIFY_TRIALS = 1000
VERIFY_TOL = 1e-9


def _verification_reports(scenario: Scenario):
    system, tube, group = scenario.system, scenario.tube, scenario.group
    if scenario.sampler is not None:
        return [
            verify_group(group, scenario.sampler, trials=VERIFY_TRIALS, tol=VERIFY_TOL),
            verify_invariance(
                system, tube, group, scenario.sampler, trials=VERIFY_TRIALS, tol=VERIFY_TOL
            ),
        ]
    controls = np.asarray(system.control_set.elements, dtype=float)
    disturbances = np.asarray(system.disturbance_set.elements, dtype=float)
    return [
        verify_group_exhaustive(
            group, scenario.exhaustive_elements, scenario.exhaustive_states,
            controls, disturbances,
        ),
        verify_invariance_exhaustive(
            system, tube, group, scenario.exhaustive_elements, scenario.exhaustive_states
        ),
    ]


def _print_reports(reports) -> bool:
    ok = True
    for report in reports:
        print(report)
        ok = ok and report.passed
    return ok


def _field_name(k: int) -> str:
    return f"values_k{k:02d}"


def cmd_solve(args) -> int:
    scenario = load_config(args.config)
    mode = args.mode or scenario.mode
    workers = scenario.workers if args.workers is None else args.workers
    outdir = Path(args.output or scenario.output)

    if not args.skip_verify:
        if not _print_reports(_verification_reports(scenario)):
            print("verification failed; not solving (use --skip-verify to override)", file=sys.stderr)
            return EXIT_VERIFY

    if mode == "full":
        nodes = scenario.full_grid.n_nodes
        if nodes > scenario.node_ceiling and not args.force_full:
            print(
                f"full grid has {nodes} nodes, over the configured ceiling "
                f"{scenario.node_ceiling}; pass --force-full to run anyway",
                file=sys.stderr,
            )
            return EXIT_SOLVE

    solver = scenario.build_solver(mode=mode, workers=workers, time_limit=args.timeout)
    try:
        solver.fit()
    except SolveError as err:
        print(f"solve failed: {err}", file=sys.stderr)
        return EXIT_SOLVE

    outdir.mkdir(parents=True, exist_ok=True)
    files = {}
    for k, field in enumerate(solver.values_):
        csv_path = outdir / f"{_field_name(k)}.csv"
        bin_path = outdir / f"{_field_name(k)}.bin"
        write_field_csv(field, csv_path)
        write_field_raster(field, bin_path)
        files[_field_name(k)] = [csv_path.name, bin_path.name]
    member_path = outdir / "membership_k00.csv"
    write_membership_csv(solver.values_[0], scenario.membership_threshold, member_path)
    files["membership_k00"] = [member_path.name]
    np.save(outdir / "policy.npy", solver.policy_)
    files["policy"] = ["policy.npy"]

    manifest = {
        "tool_version": __version__,
        "config": scenario.raw,
        "resolved": {
            "mode": mode,
            "workers": int(workers),
            "horizon": solver.horizon_,
            "grid_shape": list(solver.grid.shape),
            "n_nodes": solver.grid.n_nodes,
            "membership_threshold": scenario.membership_threshold,
            "saturating": scenario.saturating,
        },
        "step_seconds": [float(s) for s in solver.step_seconds_],
        "dp_seconds": solver.dp_seconds_,
        "files": files,
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    members = int(np.count_nonzero(solver.node_membership(0)))
    print(
        f"solved {scenario.name} [{mode}] on {solver.grid.n_nodes} nodes, "
        f"horizon {solver.horizon_}: {members} member nodes at step 0, "
        f"DP time {solver.dp_seconds_:.3f} s -> {outdir}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = load_config(args.config)
    return EXIT_OK if _print_reports(_verification_reports(scenario)) else EXIT_VERIFY


def cmd_bench(args) -> int:
    scenario = load_config(args.config)
    result = run_benchmark(
        scenario,
        args.points,
        repetitions=args.reps,
        horizon=args.horizon,
        timeout=args.timeout,
        workers=scenario.workers if args.workers is None else args.workers,
        force_full=args.force_full,
    )
    print(result.render())
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "bench.json", "w") as fh:
            json.dump(result.as_dict(), fh, indent=2, sort_keys=True)
        print(f"wrote {outdir / 'bench.json'}")
    return EXIT_OK


def _parse_adversary(name: str, solver, policy, n_disturbances: int):
    kind, _, arg = name.partition(":")
    if kind == "fixed":
        return fixed_adversary(int(arg or 0))
    if kind == "random":
        return random_adversary(n_disturbances, seed=int(arg or 0))
    if kind == "greedy":
        return greedy_adversary(solver, policy)
    raise ConfigError(f"unknown adversary {name!r}; expected fixed[:IDX], random[:SEED], greedy")


def cmd_rollout(args) -> int:
    scenario = load_config(args.config)
    mode = args.mode or scenario.mode
    outdir = Path(args.output or scenario.output)

    solver = scenario.build_solver(mode=mode)
    horizon = scenario.horizon
    needed = [outdir / f"{_field_name(k)}.bin" for k in range(horizon + 1)]
    needed.append(outdir / "policy.npy")
    missing = [str(p) for p in needed if not p.exists()]
    if missing:
        print(f"missing solve artifacts (run 'symreach solve' first): {missing}", file=sys.stderr)
        return EXIT_MISSING

    fields = [read_field_raster(outdir / f"{_field_name(k)}.bin") for k in range(horizon + 1)]
    if fields[0].grid != solver.grid:
        print(
            f"artifacts in {outdir} were produced for a different grid than this config/mode",
            file=sys.stderr,
        )
        return EXIT_MISSING
    solver.values_ = fields
    solver.policy_ = np.load(outdir / "policy.npy")
    solver.horizon_ = horizon

    try:
        x0 = np.array([float(t) for t in args.x0.split(",")])
    except ValueError:
        print(f"could not parse --x0 {args.x0!r} as comma-separated floats", file=sys.stderr)
        return EXIT_CONFIG
    if x0.shape != (scenario.system.state_dim,):
        print(
            f"--x0 needs {scenario.system.state_dim} components, got {x0.shape[0]}",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    policy = solver.lift_policy() if mode == "reduced" else solver.extract_policy()
    adversary = _parse_adversary(args.adversary, solver, policy, len(scenario.system.disturbance_set))
    steps = args.steps or horizon
    result = rollout(scenario.system, scenario.tube, policy, adversary, x0, steps)

    traj_path = outdir / "trajectory.csv"
    dim = scenario.system.state_dim
    lines = ["k," + ",".join(f"x{j}" for j in range(dim)) + ",u_index,w_index,stage_cost"]
    for k in range(steps + 1):
        coords = ",".join(repr(float(c)) for c in result.states[k])
        if k < steps:
            lines.append(
                f"{k},{coords},{int(result.control_indices[k])},"
                f"{int(result.disturbance_indices[k])},{result.stage_costs[k]:g}"
            )
        else:
            lines.append(f"{k},{coords},,,{result.stage_costs[k]:g}")
    traj_path.write_text("\n".join(lines) + "\n")

    verdict = "stayed safe" if result.stayed_safe else (
        f"violated at step {int(np.flatnonzero(result.stage_costs)[0])}"
    )
    print(f"rollout over {steps} steps: {verdict} -> {traj_path}")
    return EXIT_OK


def cmd_export(args) -> int:
    path = Path(args.input)
    if not path.exists():
        print(f"no such raster: {path}", file=sys.stderr)
        return EXIT_MISSING
    field = read_field_raster(path)
    write_field_csv(field, args.output)
    print(f"wrote {args.output} ({field.grid.n_nodes} nodes)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symreach",
        description="Backward reachable sets for discrete-time games, with symmetry reduction.",
    )
    parser.add_argument("--version", action="version", version=f"symreach {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run verification then a backward solve; export fields")
    solve.add_argument("--config", required=True, help="scenario TOML file")
    solve.add_argument("--mode", choices=MODES, default=None, help="override the config mode")
    solve.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
    solve.add_argument("--output", default=None, help="output directory")
    solve.add_argument("--skip-verify", action="store_true", help="skip pre-flight symmetry checks")
    solve.add_argument("--timeout", type=float, default=None, help="abort the sweep after SECONDS")
    solve.add_argument("--force-full", action="store_true", help="ignore the full-grid node ceiling")
    solve.set_defaults(func=cmd_solve)

    verify = sub.add_parser("verify", help="run the symmetry verification reports")
    verify.add_argument("--config", required=True)
    verify.set_defaults(func=cmd_verify)

    bench = sub.add_parser("bench", help="time reduced vs full solves across grid densities")
    bench.add_argument("--config", required=True)
    bench.add_argument("--points", type=int, nargs="+", default=[5], help="points per dimension")
    bench.add_argument("--reps", type=int, default=3, help="repetitions per entry (median)")
    bench.add_argument("--horizon", type=int, default=1, help="benchmark horizon")
    bench.add_argument("--timeout", type=float, default=7200.0, help="per-solve limit in seconds")
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--output", default=None, help="directory for bench.json")
    bench.add_argument("--force-full", action="store_true", help="ignore the full-grid node ceiling")
    bench.set_defaults(func=cmd_bench)

    roll = sub.add_parser("rollout", help="play the game from x0 using a previous solve")
    roll.add_argument("--config", required=True)
    roll.add_argument("--mode", choices=MODES, default=None)
    roll.add_argument("--output", default=None, help="directory holding the solve artifacts")
    roll.add_argument("--x0", required=True, help="comma-separated initial state")
    roll.add_argument(
        "--adversary", default="greedy", help="fixed[:IDX], random[:SEED], or greedy"
    )
    roll.add_argument("--steps", type=int, default=None)
    roll.set_defaults(func=cmd_rollout)

    export = sub.add_parser("export", help="convert a binary raster to CSV")
    export.add_argument("--input", required=True, help="raster .bin file")
    export.add_argument("--output", required=True, help="CSV destination")
    export.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
