"""Command line entry point: ``obstruct {search,certify,testset,predict}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .config import ConfigError, load_config
from .graphcore import from_graph6, to_graph6
from .solvers import MAX_CERTIFY_ORDER, FamilyId, Kind, certify_obstruction
from .search import CheckpointError, predict_fes_next, search
from .testset import load_testset

EXIT_OK, EXIT_INVALID, EXIT_INCOMPLETE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="obstruct", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="search for obstructions")
    s.add_argument("--family", choices=[k.value for k in Kind])
    s.add_argument("--k", type=int)
    s.add_argument("--t", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--budget", type=int, help="stop after this many nodes (0 = no limit)")
    s.add_argument("--checkpoint")
    s.add_argument("--resume")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="key=value file (default: $OBSTRUCT_CONFIG)")
    s.add_argument("--workers", type=int)
    s.add_argument("--random-budget", type=int)
    s.add_argument("--dedupe", choices=["permutation", "labeled", "none"])
    s.add_argument("--plot", action="store_true", help="also write search_stats.png")

    c = sub.add_parser("certify", help="check graphs are obstructions")
    c.add_argument("--family", required=True, choices=[k.value for k in Kind])
    c.add_argument("--k", type=int, required=True)
    c.add_argument("graphs")

    t = sub.add_parser("testset", help="generate a testset")
    t.add_argument("--family", required=True, choices=[k.value for k in Kind])
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--t", type=int, required=True,
                   help="parse parameter; tests have t+1 boundary vertices")
    t.add_argument("--count-only", action="store_true")

    p = sub.add_parser("predict", help="next-family FES candidates")
    p.add_argument("--family", required=True, choices=["fes"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("graphs")
    return ap


def _read_graphs(path: str):
    with open(path) as fh:
        return [from_graph6(line.strip()) for line in fh
                if line.strip() and not line.startswith(">>")]


def _cmd_search(args) -> int:
    flags = {"kind": args.family, "k": args.k, "t": args.t, "seed": args.seed,
             "node_budget": args.budget, "checkpoint": args.checkpoint, "resume": args.resume,
             "out": args.out, "workers": args.workers, "random_budget": args.random_budget,
             "dedupe": args.dedupe}
    cfg = load_config(flags, path=args.config)
    report = search(cfg)
    report.write(args.out)
    if args.plot:
        from .plotting import plot_search_stats
        plot_search_stats(report.stats, os.path.join(args.out, "search_stats.png"),
                          f"{cfg.family}, t={cfg.t}")
    print("graph6\torder\tsize\tconnected")
    for g in report.obstructions:
        print(f"{to_graph6(g)}\t{g.order}\t{g.size}\t{int(g.is_connected())}")
    if not report.complete:
        print("incomplete: checkpoint written; resume with --resume", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def _cmd_certify(args) -> int:
    f = FamilyId(Kind(args.family), args.k)
    print("graph6\tverdict")
    for g in _read_graphs(args.graphs):
        if g.order > MAX_CERTIFY_ORDER:
            verdict = "too-large"
        else:
            verdict = "obstruction" if certify_obstruction(g, f) else "not-obstruction"
        print(f"{to_graph6(g)}\t{verdict}")
    return EXIT_OK


def _cmd_testset(args) -> int:
    if args.t < 1 or args.k < 0:
        raise ConfigError(["t" if args.t < 1 else "k"], "need t >= 1 and k >= 0")
    tests = load_testset(args.t + 1, args.k, args.family)
    if args.count_only:
        print(f"{args.family}\t{args.k}\t{args.t + 1}\t{len(tests)}")
    else:
        for test in tests:
            print(test.to_line())
    return EXIT_OK


def _cmd_predict(args) -> int:
    graphs = _read_graphs(args.graphs)
    out, rules, _failed = predict_fes_next(graphs, with_rules=True)
    print("graph6\torder\tsize\trules")
    for g, names in zip(out, rules):
        print(f"{to_graph6(g)}\t{g.order}\t{g.size}\t{','.join(names)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"search": _cmd_search, "certify": _cmd_certify, "testset": _cmd_testset,
                "predict": _cmd_predict}
    try:
        return handlers[args.command](args)
    except (ConfigError, CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
