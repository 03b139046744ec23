"""Command-line entry point.

Exit status: 0 success, 1 partial or semantic failure, 2 unreadable input or
bad usage.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import build_backends, load_config
from .meta_eval import ASPECTS, DEFAULT_ASPECT_METRIC, annotator_agreement, correlate_metric
from .metrics import aggregate, compute_all
from .model import JudgmentError, validate_instance
from .pipeline import run_batch
from .records import (
    DatasetRecord,
    InputError,
    JudgmentRecord,
    PairRecord,
    ReportRecord,
    dump_line,
    iter_jsonl,
    load_records,
    write_atomic,
    write_jsonl,
)
from .render import render_correlations, render_report

log = logging.getLogger("ragcheck")

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT = 0, 1, 2


def errors_path(output: Path) -> Path:
    return output.with_name(output.name + ".errors.jsonl")


def meta_path(judgments: Path) -> Path:
    return judgments.with_name(judgments.name + ".meta.json")


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


def _fail(message: str, status: int = EXIT_INPUT) -> int:
    print(f"error: {message}", file=sys.stderr)
    return status


def cmd_judge(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        if args.parallelism is not None:
            cfg.parallelism = args.parallelism
        if args.cache_dir is not None:
            cfg.cache_dir = str(Path(args.cache_dir).resolve())
        records = load_records(args.dataset, DatasetRecord)
        if not records:
            return _fail(f"{args.dataset}: no instances")
        first_line: dict[str, int] = {}
        for lineno, rec in records:
            if rec.query_id in first_line:
                return _fail(f"duplicate query_id {rec.query_id!r} on lines "
                             f"{first_line[rec.query_id]} and {lineno}; run 'ragcheck validate'")
            first_line[rec.query_id] = lineno
        extractor, checker, client = build_backends(cfg)
    except InputError as exc:
        return _fail(str(exc))

    errors: list[dict] = []
    runnable = []
    for index, (lineno, rec) in enumerate(records):
        inst = rec.to_instance()
        problems = validate_instance(inst)
        if problems:
            errors.append({"query_id": inst.query_id, "index": index, "error_type": "ValidationError",
                           "message": "; ".join(problems), "line": lineno})
        else:
            runnable.append((index, inst))

    try:
        result = run_batch([inst for _, inst in runnable], extractor, checker, cfg.parallelism)
    finally:
        if client is not None:
            client.close()
    for err in result.errors:
        doc = err.as_dict()
        doc["index"] = runnable[err.index][0]
        errors.append(doc)
    errors.sort(key=lambda d: d["index"])

    out = Path(args.output)
    write_jsonl(out, [JudgmentRecord.from_judgment(js).model_dump() for js in result.judgments])
    write_jsonl(errors_path(out), errors)
    write_atomic(meta_path(out), json.dumps(cfg.report_metadata(), sort_keys=True, indent=2) + "\n")

    for err in errors:
        print(f"failed: {err['query_id']}: {err['message']}", file=sys.stderr)
    print(f"judged {len(result.judgments)} of {len(records)} instances; "
          f"{len(errors)} failed", file=sys.stderr)
    return EXIT_OK if not errors else EXIT_PARTIAL


def cmd_eval(args: argparse.Namespace) -> int:
    status = EXIT_OK
    metrics = []
    try:
        for lineno, rec in load_records(args.judgments, JudgmentRecord):
            try:
                metrics.append(compute_all(rec.to_judgment()))
            except JudgmentError as exc:
                print(f"warning: line {lineno}: skipped: {exc}", file=sys.stderr)
                status = EXIT_PARTIAL
    except InputError as exc:
        return _fail(str(exc))
    if not metrics:
        return _fail("no usable judgment records", EXIT_PARTIAL)

    agg = aggregate(metrics)
    meta_file = meta_path(Path(args.judgments))
    metadata = json.loads(meta_file.read_text(encoding="utf-8")) if meta_file.exists() else None

    if args.format == "table":
        text = render_report(metrics, agg)
    else:
        lines = [ReportRecord.from_metrics(m).to_line() for m in metrics]
        lines.append(ReportRecord.from_aggregate(agg, metadata).to_line())
        text = "".join(line + "\n" for line in lines)
    _emit(text, args.output)
    return status


def cmd_correlate(args: argparse.Namespace) -> int:
    aspects = args.aspect or list(ASPECTS)
    unknown = [a for a in aspects if a not in ASPECTS]
    if unknown:
        return _fail(f"unknown aspect(s): {', '.join(unknown)}; choose from {', '.join(ASPECTS)}")
    try:
        pairs = [rec.to_pair() for _, rec in load_records(args.pairs, PairRecord)]
    except (InputError, ValueError) as exc:
        return _fail(str(exc))

    if args.metric:
        combos = list(itertools.product(args.metric, aspects))
    else:
        combos = [(DEFAULT_ASPECT_METRIC[a], a) for a in aspects]

    rows = []
    for metric, aspect in combos:
        res = correlate_metric(pairs, metric, aspect)
        rows.append({"metric": metric, "aspect": aspect, "pearson": res.pearson,
                     "spearman": res.spearman, "n": res.n, "excluded": list(res.excluded)})
    if not any(r["n"] for r in rows):
        return _fail("no valid preference pairs", EXIT_PARTIAL)
    for aspect in aspects:
        human = annotator_agreement(pairs, aspect)
        if human is not None:
            corr, agree = human
            rows.append({"metric": "human", "aspect": aspect, "pearson": corr.pearson,
                         "spearman": corr.spearman, "n": corr.n, "agreement": agree})

    if args.format == "jsonl":
        text = "".join(dump_line(r) + "\n" for r in rows)
    else:
        text = render_correlations(rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        records = load_records(args.dataset, DatasetRecord)
    except InputError as exc:
        return _fail(str(exc))
    if not records:
        return _fail("no instances")

    violations: list[str] = []
    first_line: dict[str, int] = {}
    for lineno, rec in records:
        for problem in validate_instance(rec.to_instance()):
            violations.append(f"line {lineno} ({rec.query_id}): {problem}")
        if rec.query_id in first_line:
            violations.append(f"duplicate query_id {rec.query_id!r} on lines {first_line[rec.query_id]} and {lineno}")
        else:
            first_line[rec.query_id] = lineno
    for v in violations:
        print(v)
    print(f"{len(records)} instances, {len(violations)} violations")
    return EXIT_OK if not violations else EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragcheck", description="Claim-level RAG evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("judge", help="extract claims and check entailment for a dataset")
    p.add_argument("dataset")
    p.add_argument("--config", help="run config (JSON or YAML)")
    p.add_argument("--output", required=True, help="judgment file to write")
    p.add_argument("--parallelism", type=int, help="worker count (overrides config)")
    p.add_argument("--cache-dir", help="judge response cache directory (overrides config)")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("eval", help="compute metrics from a judgment file")
    p.add_argument("judgments")
    p.add_argument("--output", help="report file (default: stdout)")
    p.add_argument("--format", choices=("table", "jsonl"), default="jsonl")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("correlate", help="correlate metric differences with human preferences")
    p.add_argument("pairs")
    p.add_argument("--metric", action="append", help="metric name (repeatable)")
    p.add_argument("--aspect", action="append", help="human aspect (repeatable)")
    p.add_argument("--format", choices=("table", "jsonl"), default="table")
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("validate", help="check a dataset file")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "parallelism", None) is not None and args.parallelism < 1:
        parser.error("--parallelism must be >= 1")
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
