"""Command-line front end: ``build``, ``query``, ``bench`` and ``verify``.

Exit codes: 0 ok, 1 usage, 2 I/O or parse error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from .decomp import DecompError
from .graph import GraphParseError, InvalidQueryError
from .harness import ExperimentConfig, build_report, load_graph, run_bench, verify_suites
from .hierarchy import HierarchyError
from .labels import (
    LabelFormatError,
    build_labels,
    decode_label,
    label_stats,
    read_label_buffers,
    read_label_container,
    write_label_file,
)
from .query import answer_labels
from .sketch import SketchError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            for i, x in enumerate(v):
                if isinstance(x, dict):
                    out.update(_flatten(x, f"{key}.{i}."))
                else:
                    out[f"{key}.{i}"] = x
        else:
            out[key] = v
    return out


def _emit(report: dict, path: str | None, csv_path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if csv_path:
        row = _flatten(report)
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)


def _config(args, graph: str) -> ExperimentConfig:
    cfg = ExperimentConfig(graph=graph, f=getattr(args, "f", 1), seed=args.seed,
                           c=getattr(args, "c", 8.0), c_sparse=getattr(args, "c_sparse", 4.0),
                           uid_bits=getattr(args, "uid_bits", 64), queries=getattr(args, "queries", 0),
                           partition=getattr(args, "partition", "derandomized"), out=getattr(args, "out", None))
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def cmd_build(args) -> int:
    cfg = _config(args, args.graph)
    g = load_graph(args.graph, args.graph_seed)
    art = build_labels(g, cfg.f, cfg.seed, cfg.c, cfg.c_sparse, cfg.uid_bits, cfg.partition)
    write_label_file(args.out, art.labels, g.fingerprint())
    _emit(build_report(art, cfg), args.report, args.csv)
    return EXIT_OK


def _parse_ids(text: str) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad vertex list {text!r}") from exc


def cmd_query(args) -> int:
    bufs = read_label_buffers(args.labels)
    n = len(bufs)
    F = _parse_ids(args.fail)
    for v in [args.s, args.t, *F]:
        if not 0 <= v < n:
            raise UsageError(f"unknown vertex id {v}")
    ls = decode_label(*bufs[args.s])
    if len(set(F)) > ls.header.f:
        raise UsageError(f"|F|={len(set(F))} exceeds f={ls.header.f}")
    if args.s in F or args.t in F:
        raise UsageError("s and t must not be in F")
    res = answer_labels(ls, decode_label(*bufs[args.t]), [decode_label(*bufs[x]) for x in F],
                        transcript=args.transcript)
    if args.transcript:
        for line in res.transcript:
            print(line, file=sys.stderr)
    print("connected" if res.connected else "disconnected")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args, args.graph)
    g = load_graph(args.graph, args.graph_seed)
    t0 = time.perf_counter()
    fingerprint, bufs = read_label_container(args.labels)
    if fingerprint and fingerprint != g.fingerprint():
        raise UsageError("graph does not match the one the labels were built from")
    labels = [decode_label(data, nbits) for data, nbits in bufs]
    decode_s = time.perf_counter() - t0
    try:
        bench = run_bench(g, labels, cfg.queries, cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if labels:
        cfg.f = labels[0].header.f
        cfg.c = labels[0].header.c
        cfg.uid_bits = labels[0].header.uid_bits
    report = {
        "config": {**cfg.__dict__, "labels": args.labels},
        "bench": bench,
        "labels": label_stats(labels),
        "timings": {"decode": decode_s, "queries": bench["query_seconds"]},
    }
    _emit(report, args.report, args.csv)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args, args.graph)
    g = load_graph(args.graph, args.graph_seed)
    t0 = time.perf_counter()
    rep = verify_suites(g, cfg.f, cfg.seed, cfg.c, cfg.c_sparse, cfg.partition, cfg.queries)
    rep["config"] = cfg.__dict__
    rep["timings"] = {"total": time.perf_counter() - t0}
    failed = [k for k, v in rep["suites"].items() if not v["passed"]]
    rep["passed"] = not failed
    _emit(rep, args.report, args.csv)
    for k in failed:
        print(f"FAILED {k}: {rep['suites'][k]['failures'][:1]}", file=sys.stderr)
    return EXIT_INTERNAL if failed else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ftconn", description="Fault-tolerant connectivity labels.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("--graph", required=True, help="edge-list file or gen:<model>:<params>")
            sp.add_argument("--graph-seed", type=int, default=0, help="seed for generated graphs")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--report", help="JSON report path (default: stdout)")
        sp.add_argument("--csv", help="also write the report as a one-row CSV table")

    def build_opts(sp):
        sp.add_argument("--f", type=int, required=True)
        sp.add_argument("--c", type=float, default=8.0)
        sp.add_argument("--c-sparse", type=float, default=4.0)
        sp.add_argument("--uid-bits", type=int, default=64)
        sp.add_argument("--partition", choices=["derandomized", "random"], default="derandomized")

    b = sub.add_parser("build", help="build labels for a graph")
    common(b)
    build_opts(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer one query from a label file")
    q.add_argument("--labels", required=True)
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--t", type=int, required=True)
    q.add_argument("--fail", default="", help="comma-separated faulty vertices")
    q.add_argument("--transcript", action="store_true", help="print merges per round to stderr")
    q.set_defaults(func=cmd_query)

    bn = sub.add_parser("bench", help="compare random queries against the oracle")
    common(bn)
    bn.add_argument("--labels", required=True)
    bn.add_argument("--queries", type=int, default=1000)
    bn.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run every property suite on a fresh build")
    common(v)
    build_opts(v)
    v.add_argument("--queries", type=int, default=200)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidQueryError, SketchError) as exc:
        print(f"ftconn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, GraphParseError, LabelFormatError) as exc:
        print(f"ftconn: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HierarchyError, DecompError) as exc:
        print(f"ftconn: internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
