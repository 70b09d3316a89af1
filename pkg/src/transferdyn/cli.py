"""Command line: ``transferdyn run|verify|sweep|summarize``.

Exit status 0 means success, 1 a failed audit check, 2 a bad configuration
or usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import audit, writers
from .config import ScenarioSuite, load, parse_seeds, suite_to_dict
from .engine import run, run_replicas
from .errors import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _suite(args) -> ScenarioSuite:
    suite = load(args.config)
    changes = {}
    if getattr(args, "exact", False):
        changes["exact"] = True
    if getattr(args, "record_every", None):
        changes["record_every"] = args.record_every
    if changes:
        suite = suite.with_config(**changes)
        suite.config.validate()
    if getattr(args, "seeds", None):
        suite = suite.with_seeds(parse_seeds(args.seeds))
    return suite


def _write(suite: ScenarioSuite, trajs, args) -> List[writers.RunInfo]:
    doc = suite_to_dict(suite)
    infos = []
    for tr in trajs:
        paths = writers.write_trajectory(tr, args.out, args.format, f"{suite.name.value}_seed{tr.config.seed}", doc)
        print(f"wrote {paths[0]}")
        infos.append(writers.RunInfo.from_trajectory(tr, suite.name.value, suite.acceptance.rank_tolerance))
    return infos


def cmd_run(args) -> int:
    suite = _suite(args)
    seed = args.seed if args.seed is not None else suite.config.seed
    tr = run(suite.config.with_seed(seed))
    _write(suite, [tr], args)
    print(f"seed {seed}: steps={len(tr.records)} applied={tr.total_applied} "
          f"consensus_time={tr.consensus_time}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    suite = _suite(args)
    trajs = run_replicas(suite.config, suite.seeds, args.workers)
    infos = _write(suite, trajs, args)
    table, series = writers.write_summary(infos, args.out)
    print(writers.format_table(writers.summarize(infos)))
    print(f"wrote {table} and {series}")
    return EXIT_OK


def cmd_verify(args) -> int:
    suite = _suite(args)
    if args.mutate:
        checks = audit.verify_mutant(suite)
        for c in checks.values():
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: worst={c.worst:.3e} violations={c.violations}")
        return EXIT_OK if all(c.passed for c in checks.values()) else EXIT_FAIL
    report = audit.verify(suite, workers=args.workers)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_summarize(args) -> int:
    infos = [writers.load_run(p) for p in args.files]
    if not infos:
        print("summarize: no trajectory files given", file=sys.stderr)
        return EXIT_CONFIG
    print(writers.format_table(writers.summarize(infos)))
    if args.out:
        table, series = writers.write_summary(infos, args.out)
        print(f"wrote {table} and {series}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="transferdyn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario(sp, seeds_required=False):
        sp.add_argument("config", help="scenario YAML path or bundled config name")
        sp.add_argument("--exact", action="store_true", help="exact rational arithmetic")
        sp.add_argument("--record-every", type=int, help="sorted-money snapshot cadence")
        sp.add_argument("--seeds", required=seeds_required, help="a..b (inclusive) or one seed")

    sp = sub.add_parser("run", help="run one seed and write its trajectory")
    scenario(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", default="out")
    sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("verify", help="audit every seed of a suite")
    scenario(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--mutate", action="store_true",
                    help="audit a broken one-sided update instead (expected to fail)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="run a seed range, write trajectories and a summary")
    scenario(sp, seeds_required=True)
    sp.add_argument("--out", default="out")
    sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("summarize", help="summarize trajectory files")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_summarize)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
