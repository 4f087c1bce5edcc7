"""Operator entry point: run the pipeline, evaluate predictions, analyze errors.

Exit codes are a stable contract for CI: 0 success, 1 evaluation mismatch or
aborted questions, 2 configuration/credential errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import DeterministicBackend, LiveBackend, RecordingBackend, ReplayBackend
from .catalog import load_benchmark
from .errors import AuthError, EvalError, LoadError
from .error_analysis import category_histogram, classify_error, render_histogram
from .pipeline import PipelineConfig, run_batch
from .reporting import aggregate, render_table, to_csv
from .sql_eval import EvalOutcome, evaluate_pair

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2


def _echo_stub_response(request) -> str:
    """Offline stub: emits minimal well-formed output for any stage prompt."""
    prompt = request.prompt
    table = "sqlite_master"
    for line in reversed(prompt.splitlines()):
        if line.startswith("Table ") and ", columns = " in line:
            table = line[len("Table "):].split(", columns = ")[0]
            break
    sql = f"SELECT * FROM {table}"
    if "#### " in prompt:
        return sql
    tail = prompt.rstrip()
    if tail.endswith("SQL:"):
        return " " + sql
    if "classify it as EASY" in prompt:
        return ' The query is simple.\nLabel: "EASY"'
    if "Find the schema_links" in prompt:
        return " Based on the question, So the Schema_links are:\nSchema_links: []"
    return f" Let me think.\nSQL: {sql}"


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tables", required=True, help="table-description JSON file")
    parser.add_argument("--questions", required=True, help="questions JSON file")
    parser.add_argument("--db-root", required=True, help="root directory of SQLite databases")
    parser.add_argument("--flavor", choices=("spider", "bird"), default="spider")


def _build_backend(args) -> object:
    if args.backend == "replay":
        if not args.cassette:
            raise LoadError("--backend replay requires --cassette")
        return ReplayBackend(args.cassette)
    if args.backend == "stub":
        backend = DeterministicBackend(_echo_stub_response)
    else:
        backend = LiveBackend(api_style=args.api_style)
    if args.cassette:
        backend = RecordingBackend(backend, args.cassette)
    return backend


def cmd_run(args) -> int:
    config = PipelineConfig(
        self_correction_style=args.correction,
        benchmark_flavor=args.flavor,
        mode=args.mode,
        worker_count=args.workers,
        model_id=args.model,
        demo_count=args.demos,
        sample_rows=args.sample_rows,
    )
    items, registry = load_benchmark(args.tables, args.questions, args.db_root, args.flavor)
    if args.limit is not None:
        items = items[: args.limit]
    backend = _build_backend(args)
    records = run_batch(
        items,
        registry,
        backend,
        config,
        trace_path=args.trace,
        predictions_path=args.predictions,
        resume=args.resume,
    )
    aborted = [r.question_id for r in records if any(f.startswith("backend:") for f in r.failures)]
    print(f"ran {len(records)} questions; {len(aborted)} aborted", file=sys.stderr)
    if aborted:
        print(f"aborted question ids: {aborted}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _load_predictions(path: Path, expected: int) -> list[str]:
    lines = path.read_text().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != expected:
        raise LoadError(
            f"predictions file has {len(lines)} lines but questions file has {expected}"
        )
    return lines


def cmd_evaluate(args) -> int:
    items, registry = load_benchmark(args.tables, args.questions, args.db_root, args.flavor)
    if args.limit is not None:
        items = items[: args.limit]
    preds = _load_predictions(Path(args.predictions), len(items))
    outcomes: list[EvalOutcome] = []
    for item, pred in zip(items, preds):
        schema = registry[item.db_id]
        outcomes.append(
            evaluate_pair(
                item.question_id,
                pred,
                item.gold_sql,
                schema,
                schema.db_file_path,
                timeout_s=args.timeout,
                ves_reps=args.ves_reps if args.ves else 0,
            )
        )
    report = aggregate(outcomes, with_ves=args.ves)
    print(render_table(report))
    if args.report:
        payload = {
            "questions": [
                {
                    "question_id": o.question_id,
                    "hardness": o.hardness,
                    "exact_match": o.exact_match,
                    "exec_match": o.exec_match,
                    "ves_term": (o.efficiency_ratio ** 0.5) if o.exec_match else 0.0,
                }
                for o in outcomes
            ],
            "aggregate": report.to_dict(),
        }
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n")
    if args.csv:
        Path(args.csv).write_text(to_csv(report))
    return EXIT_OK


def cmd_analyze(args) -> int:
    items, registry = load_benchmark(args.tables, args.questions, args.db_root, args.flavor)
    report = json.loads(Path(args.report).read_text())
    failed = {q["question_id"] for q in report["questions"] if not q["exec_match"]}
    preds = _load_predictions(Path(args.predictions), len(items))
    categories = []
    for item, pred in zip(items, preds):
        if item.question_id not in failed:
            continue
        schema = registry[item.db_id]
        categories.append(classify_error(pred, item.gold_sql, schema, schema.db_file_path))
    histogram = category_histogram(categories)
    print(render_histogram(histogram))
    if args.out:
        Path(args.out).write_text(json.dumps(histogram, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="text2sql")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline over a question set")
    _add_dataset_args(run)
    run.add_argument("--mode", choices=("decomposed", "fewshot"), default="decomposed")
    run.add_argument("--correction", choices=("generic", "gentle", "off"), default="gentle")
    run.add_argument("--backend", choices=("live", "replay", "stub"), default="replay")
    run.add_argument("--api-style", choices=("chat", "completions"), default="chat")
    run.add_argument("--cassette", help="cassette path (replay source or recording sink)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--limit", type=int, default=None, help="question cap")
    run.add_argument("--resume", action="store_true")
    run.add_argument("--model", default="default")
    run.add_argument("--demos", type=int, default=None, help="demonstrations per family")
    run.add_argument("--sample-rows", type=int, default=None, help="sample rows per table")
    run.add_argument("--trace", default="trace.jsonl")
    run.add_argument("--predictions", default="predictions.txt")
    run.set_defaults(fn=cmd_run)

    ev = sub.add_parser("evaluate", help="score a predictions file")
    _add_dataset_args(ev)
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--limit", type=int, default=None)
    ev.add_argument("--ves", action="store_true", help="also time queries for VES")
    ev.add_argument("--ves-reps", type=int, default=5)
    ev.add_argument("--timeout", type=float, default=30.0)
    ev.add_argument("--report", help="write per-question + aggregate JSON report")
    ev.add_argument("--csv", help="write delimiter-separated aggregate export")
    ev.set_defaults(fn=cmd_evaluate)

    an = sub.add_parser("analyze", help="failure-category histogram of a report")
    _add_dataset_args(an)
    an.add_argument("--predictions", required=True)
    an.add_argument("--report", required=True, help="report JSON from evaluate")
    an.add_argument("--out", help="write histogram JSON")
    an.set_defaults(fn=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LoadError, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
