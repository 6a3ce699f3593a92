"""Command line interface: run experiments from scenario files, validate scenarios.

Exit codes: 0 success, 1 scenario validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .harness import ScenarioError, emit_results, load_scenario, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsnsim",
        description="Virtualize a sensing task onto a simulated swarm and run "
                    "distributed estimation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run all replications of a scenario")
    run_p.add_argument("--scenario", required=True, help="path to a scenario file")
    run_p.add_argument("--out", required=True, help="output path for results")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario's seed_base")
    run_p.add_argument("--parallel", type=int, default=1,
                       help="number of worker processes for replications")
    run_p.add_argument("--verbose-events", action="store_true",
                       help="emit per-contact gossip events as JSON lines on stderr")
    val_p = sub.add_parser("validate", help="parse and validate a scenario file")
    val_p.add_argument("--scenario", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"scenario '{scenario.scenario_id}' ok: P={scenario.swarm_count} "
              f"V={scenario.v_count} topology={scenario.topology} "
              f"replications={scenario.replications}")
        return 0

    if args.seed is not None:
        scenario = replace(scenario, seed_base=args.seed)
    on_event = None
    if args.verbose_events and args.parallel <= 1:
        def on_event(event: dict) -> None:
            print(json.dumps(event), file=sys.stderr)
    records = run_experiment(scenario, parallel=args.parallel, on_event=on_event)
    try:
        emit_results(records, args.format, args.out)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    accepted = sum(1 for r in records if r.accepted)
    print(f"{len(records)} replications, {accepted} accepted -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
