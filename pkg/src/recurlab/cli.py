"""Command line entry point: ``arena run``, ``arena table``, ``arena replay``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .arena import B
from .environments import ENVIRONMENTS
from .harness import (FAMILIES, MatchConfig, ReplayMismatch, TableConfig,
                      experiment_validity_table, replay_file, run_match)
from .machines import MACHINES


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arena", description="Play and adjudicate recurrence games.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play one match and write its trace")
    run.add_argument("--scheme", required=True,
                     help="short, long, s4, s6 (or short-prod, long-prod, s4-instance, s6-instance)")
    run.add_argument("--bang", required=True, help="p|prec, c|aleph0, u|uncountable")
    run.add_argument("--machine", required=True, choices=sorted(MACHINES))
    run.add_argument("--env", required=True, choices=sorted(ENVIRONMENTS) + ["schedule"])
    run.add_argument("--rounds", type=int, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--universe", type=int, default=3)
    run.add_argument("--family", choices=FAMILIES, default="enumeration")
    run.add_argument("--budget", type=int, default=3)
    run.add_argument("--out", help="trace file (JSON lines); stdout if omitted")

    table = sub.add_parser("table", help="run the validity-table experiments")
    table.add_argument("--config", help="INI-style file with a [table] section")

    rep = sub.add_parser("replay", help="re-check the state digests of a trace file")
    rep.add_argument("trace")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = MatchConfig(args.scheme, args.bang, args.machine, args.env, args.rounds,
                              seed=args.seed, universe=args.universe, family=args.family,
                              budget=args.budget, out=args.out)
            trace = run_match(cfg)
        except ValueError as exc:
            print(f"arena: {exc}", file=sys.stderr)
            return 2
        if args.out is None:
            sys.stdout.write(trace.to_jsonl())
        for name, rep in trace.verdicts:
            print(f"[{name}] " + "; ".join(rep.lines()), file=sys.stderr)
        ok = not trace.drain_exceeded
        if trace.analysis is not None:
            ok = ok and trace.analysis.ok and all(r.winner is B for _, r in trace.verdicts)
        return 0 if ok else 1
    if args.command == "table":
        tc = TableConfig.from_text(Path(args.config).read_text()) if args.config else TableConfig()
        report = experiment_validity_table(tc)
        print(report.render())
        return 0 if report.ok else 1
    try:
        n = replay_file(args.trace)
    except ReplayMismatch as exc:
        print(f"arena: {exc}", file=sys.stderr)
        return 1
    print(f"{n} rounds replayed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
