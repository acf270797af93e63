"""Command-line surface: build, evaluate, report, verify.

Exit codes: 0 success, 1 fatal error, 2 validation violations — so CI can
gate on `freshbench verify`.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .dates import FuzzyDate
from .diff import TimeInterval, make_intervals
from .errors import ConfigError, FreshbenchError, StageFailure
from .evaluate import (
    FORMAT_GENERATION,
    FORMAT_MULTI_CHOICE,
    ModelClient,
    ModelEndpoint,
    evaluate_benchmark,
    read_eval_records,
    write_eval_records,
)
from .pipeline import run_build
from .report import contamination_report, format_trend_table, write_trend_csv
from .samples import BENCHMARK_FILE, read_records
from .verify import verify_benchmark

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_VIOLATIONS = 2


def _benchmark_file(path: Path) -> Path:
    return path / BENCHMARK_FILE if path.is_dir() else path


def cmd_build(args) -> int:
    config = load_config(args.config)
    if args.offline:
        config.offline = True
    result = run_build(config)
    print("stage counters:", file=sys.stderr)
    for name in sorted(result.counters):
        print(f"  {name} = {result.counters[name]}", file=sys.stderr)
    print(f"benchmark: {result.benchmark_path}")
    print(f"manifest:  {result.manifest_path}")
    print(f"samples:   {result.n_samples}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    records = read_records(_benchmark_file(Path(args.benchmark)))
    defaults = None
    articles = ("a", "an", "the")
    if args.config:
        config = load_config(args.config)
        defaults = config.endpoint
        languages = {r["language"] for r in records}
        if len(languages) == 1:
            articles = tuple(config.articles.get(languages.pop(), []))
    endpoint = ModelEndpoint(
        base_url=args.base_url or (defaults.base_url if defaults else ""),
        model=args.model or (defaults.model if defaults else ""),
        auth_env=args.auth_env or (defaults.auth_env if defaults else None),
        temperature=defaults.temperature if defaults else 0.0,
        max_output_tokens=defaults.max_output_tokens if defaults else 64,
        mode=args.mode,
        transcript_path=Path(args.transcript) if args.transcript else None,
        lenient_replay=args.lenient_replay,
    )
    client = ModelClient(endpoint)
    eval_records = evaluate_benchmark(records, client, args.format, articles)
    write_eval_records(eval_records, args.out)
    n = len(eval_records)
    if args.format == FORMAT_GENERATION:
        em = sum(r.em for r in eval_records) / n if n else 0.0
        f1 = sum(r.f1 for r in eval_records) / n if n else 0.0
        print(f"records: {n}  EM: {em:.4f}  F1: {f1:.4f}  unanswered: {client.unanswered}")
    else:
        acc = sum(r.acc for r in eval_records) / n if n else 0.0
        print(f"records: {n}  Acc: {acc:.4f}  unanswered: {client.unanswered}")
    print(f"eval records: {args.out}")
    return EXIT_OK


def _intervals_for_report(args, eval_records) -> list[TimeInterval]:
    if args.benchmark:
        manifest_path = Path(args.benchmark)
        if manifest_path.is_dir():
            manifest_path = manifest_path / "manifest.json"
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        window = manifest["window"]
        return make_intervals(
            FuzzyDate.parse(window["cutoff"]),
            FuzzyDate.parse(window["current"]),
            manifest["interval_months"],
        )
    seen = {r.interval for r in eval_records if r.interval is not None}
    return sorted(seen, key=lambda iv: iv.begin.earliest())


def cmd_report(args) -> int:
    eval_records = read_eval_records(args.records)
    intervals = _intervals_for_report(args, eval_records)
    if not intervals:
        raise FreshbenchError("no intervals: records carry none and no --benchmark given")
    cutoff = FuzzyDate.parse(args.cutoff) if args.cutoff else None
    report = contamination_report(eval_records, intervals, cutoff)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trend.csv"
    write_trend_csv(report, csv_path)
    print(format_trend_table(report))
    print(f"trend data: {csv_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    violations = verify_benchmark(Path(args.benchmark))
    for violation in violations:
        print(str(violation), file=sys.stderr)
    if violations:
        print(f"FAIL: {len(violations)} violations", file=sys.stderr)
        return EXIT_VIOLATIONS
    print("OK: benchmark passes all checks")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freshbench",
        description="Build and evaluate contamination-free QA benchmarks "
                    "from freshly updated knowledge.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="run the full pipeline: ingest, diff, docs, samples")
    p_build.add_argument("--config", required=True, help="path to the build configuration file")
    p_build.add_argument("--offline", action="store_true",
                         help="forbid network access; any uncached request is fatal")
    p_build.set_defaults(func=cmd_build)

    p_eval = sub.add_parser("evaluate", help="query a model over a benchmark and score outputs")
    p_eval.add_argument("--benchmark", required=True,
                        help="benchmark.jsonl or the directory containing it")
    p_eval.add_argument("--format", choices=(FORMAT_GENERATION, FORMAT_MULTI_CHOICE),
                        required=True)
    p_eval.add_argument("--mode", choices=("live", "record", "replay"), default="live")
    p_eval.add_argument("--transcript", help="transcript path for record/replay modes")
    p_eval.add_argument("--lenient-replay", action="store_true",
                        help="score replay misses as unanswered instead of failing")
    p_eval.add_argument("--base-url", help="chat-completions endpoint base URL")
    p_eval.add_argument("--model", help="model name sent to the endpoint")
    p_eval.add_argument("--auth-env", help="environment variable holding the bearer token")
    p_eval.add_argument("--config", help="build config supplying endpoint defaults and articles")
    p_eval.add_argument("--out", required=True, help="where to write scored records (jsonl)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="per-interval contamination trend report")
    p_report.add_argument("--records", required=True, help="scored eval records (jsonl)")
    p_report.add_argument("--benchmark",
                          help="benchmark dir or manifest for the interval grid")
    p_report.add_argument("--cutoff", help="model knowledge cutoff date to mark (YYYY[-MM[-DD]])")
    p_report.add_argument("--out-dir", required=True)
    p_report.set_defaults(func=cmd_report)

    p_verify = sub.add_parser("verify", help="re-check every assertable benchmark invariant")
    p_verify.add_argument("--benchmark", required=True,
                          help="directory holding benchmark.jsonl and manifest.json")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config: {violation}", file=sys.stderr)
        return EXIT_VIOLATIONS
    except StageFailure as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except FreshbenchError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
