"""Command-line pipeline: learn, synth, validate, refine, demo.

Every subcommand is deterministic given the scenario, the flags, and the
seed; all randomness is fanned out from the single `--seed` value.  Exit
codes form a stable contract for scripting: 0 success, 1 usage/IO error,
2 unrealizable specification, 3 validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .cosim import (
    RefineLoopConfig,
    derive_seed,
    execute,
    monitor,
    refine_loop,
    write_trace_csv,
)
from .driver import CognitiveDriver, DriverParams
from .game import (
    ArenaCapExceeded,
    VARIANT_ACTIONS,
    arena_stats_text,
    build_arena,
    extract_strategy,
    parse_strategy,
    realizable,
    serialize_strategy,
    solve,
)
from .lstar import EqOracleConfig, LearningSession, RandomWalkOracle
from .mealy import FormatError, parse, serialize, to_dot
from .scenario import load_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNREALIZABLE = 2
EXIT_VALIDATION = 3

TABLE_HEADER = ("t", "lead_pos", "follow_pos", "thw", "control_mode",
                "driver_acc", "follow_acc", "controller_action")


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_inputs(args):
    scenario = load_scenario(args.scenario)
    params = DriverParams.from_file(args.driver_params) if args.driver_params \
        else DriverParams()
    return scenario, params


def _oracle_config(args, seed_tag="oracle"):
    return EqOracleConfig(
        num_walks=args.oracle_walks,
        max_walk_len=args.oracle_len,
        reset_prob=args.oracle_reset_prob,
        rng_seed=derive_seed(args.seed, seed_tag),
    )


def _ensure_out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_learn(args):
    scenario, params = _load_inputs(args)
    del scenario  # learning depends only on the driver configuration
    out = _ensure_out(args)
    sul = CognitiveDriver(params)
    session = LearningSession(sul, params.levels(),
                              RandomWalkOracle(sul, _oracle_config(args)))
    machine, stats = session.run()
    _write(os.path.join(out, "hm.mealy"), serialize(machine))
    _write(os.path.join(out, "hm.dot"), to_dot(machine, "hm"))
    _write(os.path.join(out, "learn_report.txt"), stats.report_text())
    if not stats.converged:
        print("learning did not converge within the round cap", file=sys.stderr)
        return EXIT_USAGE
    print(f"learned abstraction: {stats.states} states, "
          f"{stats.transitions} transitions ({stats.rounds} rounds)")
    return EXIT_OK


def cmd_synth(args):
    scenario, params = _load_inputs(args)
    out = _ensure_out(args)
    try:
        with open(args.hm, "r", encoding="utf-8") as fh:
            hm = parse(fh.read())
    except (OSError, FormatError) as exc:
        print(f"cannot load abstraction: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        arena = build_arena(hm, scenario, params=params, variant=args.variant)
    except ArenaCapExceeded as exc:
        print(f"arena build failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    region = solve(arena)
    _write(os.path.join(out, "arena_stats.txt"), arena_stats_text(arena, region))
    if not realizable(arena, region):
        print(f"unrealizable for variant {args.variant!r} "
              f"({len(region)}/{arena.n_states} winning states)", file=sys.stderr)
        return EXIT_UNREALIZABLE
    strategy = extract_strategy(arena, region)
    _write(os.path.join(out, "strategy.txt"), serialize_strategy(strategy))
    print(f"synthesized strategy with {len(strategy.actions)} entries "
          f"({arena.n_states} arena states)")
    return EXIT_OK


def cmd_validate(args):
    scenario, params = _load_inputs(args)
    out = _ensure_out(args)
    try:
        with open(args.hm, "r", encoding="utf-8") as fh:
            hm = parse(fh.read())
        with open(args.strategy, "r", encoding="utf-8") as fh:
            strategy = parse_strategy(fh.read())
    except (OSError, FormatError, ValueError) as exc:
        print(f"cannot load inputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = scenario.supervisor_config()
    traces_dir = os.path.join(out, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    if args.runs == 0:
        print("warning: zero runs requested, vacuous pass", file=sys.stderr)
        _write(os.path.join(out, "verdicts.txt"), "no runs\n")
        return EXIT_OK
    lines = []
    all_pass = True
    for r in range(args.runs):
        sul = CognitiveDriver(params)
        trace = execute(strategy, sul, scenario, cfg,
                        derive_seed(args.seed, f"run{r}"), hm, params)
        verdict = monitor(trace, scenario.dest, cfg.thresholds)
        write_trace_csv(trace, os.path.join(traces_dir, f"run_{r:03d}.csv"))
        lines.append(f"run={r} status={verdict.status} "
                     f"witness={verdict.witness} misses={trace.lookup_misses}")
        all_pass = all_pass and verdict.passed
    _write(os.path.join(out, "verdicts.txt"), "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all_pass else EXIT_VALIDATION


def cmd_refine(args):
    scenario, params = _load_inputs(args)
    out = _ensure_out(args)
    cfg = RefineLoopConfig(
        oracle=_oracle_config(args),
        params=params,
        variant=args.variant,
        seed=args.seed,
        runs=args.runs,
        max_iterations=args.max_iter,
        expand_on_unrealizable=args.expand_variants,
    )
    report, artifacts = refine_loop(scenario, cfg)
    _write(os.path.join(out, "refinement_report.txt"), report.text())
    for record, art in zip(report.iterations, artifacts):
        it_dir = os.path.join(out, f"iteration_{record.index:02d}")
        os.makedirs(it_dir, exist_ok=True)
        _write(os.path.join(it_dir, "hm.mealy"), serialize(art.hm))
        if art.strategy is not None:
            _write(os.path.join(it_dir, "strategy.txt"),
                   serialize_strategy(art.strategy))
        for r, (trace, verdict) in enumerate(art.traces):
            write_trace_csv(trace, os.path.join(it_dir, f"trace_{r:03d}.csv"))
    print(report.text(), end="")
    if report.termination_reason == "all-pass":
        return EXIT_OK
    if report.termination_reason == "unrealizable":
        return EXIT_UNREALIZABLE
    return EXIT_VALIDATION


def _format_row(row):
    return (f"{row.t:6.1f} {row.lead_pos:9.2f} {row.follow_pos:11.2f} "
            f"{_fmt_metric(row.thw):>6} {row.mode:<14} {row.driver_acc:10} "
            f"{row.applied_acc:10} {row.action}")


def _fmt_metric(value):
    return "inf" if value == float("inf") else f"{value:.1f}"


def cmd_demo(args):
    scenario, params = _load_inputs(args)
    sul = CognitiveDriver(params)
    session = LearningSession(sul, params.levels(),
                              RandomWalkOracle(sul, _oracle_config(args)))
    hm, stats = session.run()
    print(f"[1/3] learned driver abstraction: {stats.states} states, "
          f"{stats.transitions} transitions")
    try:
        arena = build_arena(hm, scenario, params=params, variant=args.variant)
    except ArenaCapExceeded as exc:
        print(f"arena build failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    region = solve(arena)
    if not realizable(arena, region):
        print(f"[2/3] unrealizable for variant {args.variant!r}")
        return EXIT_UNREALIZABLE
    strategy = extract_strategy(arena, region)
    print(f"[2/3] synthesized strategy: {len(strategy.actions)} entries, "
          f"{len(region)}/{arena.n_states} winning states")
    cfg = scenario.supervisor_config()
    run_sul = CognitiveDriver(params)
    trace = execute(strategy, run_sul, scenario, cfg,
                    derive_seed(args.seed, "demo"), hm, params)
    verdict = monitor(trace, scenario.dest, cfg.thresholds)
    print("[3/3] supervised trace:")
    print(" ".join(TABLE_HEADER))
    for row in trace.rows:
        print(_format_row(row))
    print(f"verdict: {verdict.status}")
    return EXIT_OK if verdict.passed else EXIT_VALIDATION


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sharedctrl",
        description="Learn a driver abstraction, synthesize and validate a "
                    "shared-control strategy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--scenario", default="default",
                       help="builtin name (default, braking) or scenario file path")
        p.add_argument("--driver-params", default=None,
                       help="optional driver parameter file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--variant", default="full", choices=sorted(VARIANT_ACTIONS))
        p.add_argument("--oracle-walks", type=int, default=500)
        p.add_argument("--oracle-len", type=int, default=20)
        p.add_argument("--oracle-reset-prob", type=float, default=0.09)

    p = sub.add_parser("learn", help="learn the driver abstraction")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("synth", help="build the game and extract a strategy")
    common(p)
    p.add_argument("--hm", required=True, help="learned abstraction file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="co-simulate a strategy against the driver")
    common(p)
    p.add_argument("--hm", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--runs", type=int, default=25)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("refine", help="run the full learn/synthesize/validate loop")
    common(p)
    p.add_argument("--runs", type=int, default=25)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--expand-variants", action="store_true",
                   help="grow the controllable action set when unrealizable")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("demo", help="narrated single pass over the pipeline")
    common(p, needs_out=False)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
