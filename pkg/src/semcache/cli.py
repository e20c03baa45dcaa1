"""Command-line harness: seed a cache, replay a query log, render reports.

Exit codes: 0 on success, 1 when any record's expected mode (or a report
recount) mismatches, 2 on unusable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .matching import Thresholds
from .prompts import RepositoryFormatError
from .replay import (
    ReplayConfig,
    ReplayInputError,
    ReplayReport,
    aggregate_trace,
    load_fixtures,
    load_trace,
    render_report,
    replay,
    seed_cache,
)
from .store import StoreFormatError

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcache",
        description="Semantic-cache replay harness with deterministic mock agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    seed = sub.add_parser("seed", help="embed and load a reference corpus into a cache file")
    seed.add_argument("--corpus", required=True, help="corpus JSONL (question/plan/code/response)")
    seed.add_argument("--cache", required=True, help="cache store file to create or update")
    seed.add_argument("--schema", required=True, help="schema catalog JSON")
    seed.add_argument("--dim", type=int, default=256, help="embedding dimension")
    seed.add_argument("--embedder-seed", type=int, default=0)

    rep = sub.add_parser("replay", help="replay a query log through the pipeline")
    rep.add_argument("--log", required=True, help="query log JSONL")
    rep.add_argument("--cache", required=True, help="seeded cache store file")
    rep.add_argument("--repo", help="prompt repository JSONL (enables token accounting)")
    rep.add_argument("--schema", help="schema catalog JSON (enables token accounting)")
    rep.add_argument("--fixtures", help="executor fixture scripts JSON")
    rep.add_argument("--theta-return", type=float, default=0.995)
    rep.add_argument("--theta-guide", type=float, default=0.50)
    rep.add_argument("--k", type=int, default=5)
    rep.add_argument("--boost-increment", type=float, default=0.02)
    rep.add_argument("--populate", action="store_true",
                     help="insert successful guide/generate outcomes back into the cache")
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--embedder-seed", type=int, default=0)
    rep.add_argument("--trace", help="write the per-record decision trace JSONL here")
    rep.add_argument("--report", help="write the human-readable report here")
    rep.add_argument("--report-json", help="write the machine-readable report here")

    show = sub.add_parser("report", help="render a saved report, optionally recounting a trace")
    show.add_argument("--json", required=True, dest="report_json",
                      help="machine-readable report file from `replay`")
    show.add_argument("--trace", help="decision trace to recount against the report")
    return parser


def _cmd_seed(args: argparse.Namespace) -> int:
    count = seed_cache(args.corpus, args.cache, args.schema, dim=args.dim,
                       embedder_seed=args.embedder_seed)
    print(f"seeded {count} entries into {args.cache}")
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace) -> int:
    config = ReplayConfig(
        thresholds=Thresholds(theta_return=args.theta_return,
                              theta_guide=args.theta_guide),
        k=args.k,
        boost_increment=args.boost_increment,
        populate=args.populate,
        workers=args.workers,
        embedder_seed=args.embedder_seed,
        fixtures=load_fixtures(args.fixtures) if args.fixtures else {},
    )
    report = replay(args.log, args.cache, args.repo, args.schema, config,
                    trace_path=args.trace, report_path=args.report,
                    report_json_path=args.report_json)
    print(render_report(report), end="")
    if report.mode_mismatches:
        print(f"FAIL: {report.mode_mismatches} record(s) missed their "
              f"expected mode (indices {list(report.mismatch_indices)[:10]}...)",
              file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    report = ReplayReport.from_record(
        json.loads(Path(args.report_json).read_text(encoding="utf-8")))
    print(render_report(report), end="")
    if args.trace:
        recount = aggregate_trace(load_trace(args.trace))
        if recount.to_record() != report.to_record():
            print("FAIL: trace recount disagrees with the saved report",
                  file=sys.stderr)
            return EXIT_MISMATCH
        print("trace recount matches the saved report")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"seed": _cmd_seed, "replay": _cmd_replay, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (ReplayInputError, StoreFormatError, RepositoryFormatError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
