"""``sim`` command line: headless scenario runs and seeded fuzzing.

Examples::

    sim run scenarios/smoke.json --transport in_process --report out.json
    sim run scenarios/fuzz.json --seed 7
    sim fuzz --clients 4 --events 1000 --seed 3

Exit status is 0 when every replica converged to the relay's state hash
and all invariant checks passed; 1 otherwise (with the failures printed).
"""

from __future__ import annotations

import argparse
import json
import sys

from ..protocol import canonical_json
from .runner import run_scenario
from .scenario import generate_fuzz, load_scenario


def _emit(report: dict, report_path) -> None:
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(report) + "\n")
    status = "ok" if report["ok"] else "FAILED"
    print(f"[sim] {report['scenario']} transport={report['transport']} "
          f"events={report.get('events_sent', 0)} "
          f"applied={report.get('events_applied', '-')} "
          f"live={report['live_replicas']} "
          f"converged={report['converged']} -> {status}")
    if not report["ok"]:
        if not report["converged"]:
            print(f"[sim]   relay hash   {report['relay_hash']}")
            for cid, h in sorted(report["replica_hashes"].items()):
                print(f"[sim]   {cid:12} {h}")
        for name, violations in sorted(report["check_failures"].items()):
            for v in violations:
                print(f"[sim]   {name}: {v}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sim", description="Deterministic shared-workspace simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="path to a scenario JSON file")
    p_run.add_argument("--transport", choices=("in_process", "socket"),
                       default="in_process")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario's seed (fuzz blocks only)")
    p_run.add_argument("--report", default=None,
                       help="write the run report as canonical JSON")

    p_fuzz = sub.add_parser("fuzz", help="generate and run a seeded workload")
    p_fuzz.add_argument("--clients", type=int, default=4)
    p_fuzz.add_argument("--events", type=int, default=1000)
    p_fuzz.add_argument("--seed", type=int, default=0)
    p_fuzz.add_argument("--boards", type=int, default=2)
    p_fuzz.add_argument("--config", default="side_by_side")
    p_fuzz.add_argument("--tick-hz", type=int, default=20)
    p_fuzz.add_argument("--transport", choices=("in_process", "socket"),
                        default="in_process")
    p_fuzz.add_argument("--report", default=None)

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            scenario = load_scenario(args.scenario, seed_override=args.seed)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            print(f"[sim] cannot load scenario: {exc}", file=sys.stderr)
            return 2
    else:
        scenario = generate_fuzz(n_clients=args.clients, n_events=args.events,
                                 seed=args.seed, boards=args.boards,
                                 config=args.config, tick_hz=args.tick_hz)

    report = run_scenario(scenario, transport=args.transport)
    _emit(report, args.report)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
