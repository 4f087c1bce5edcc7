"""Four-stage pipeline: linking -> classification -> routed generation -> correction.

Every question always yields a PredictionRecord: parse failures fall back
(empty links; NESTED self-question; generated SQL kept when correction output
is unusable) and backend failures abort only the one question with an error
note. Batch output order equals input order for any worker count, and traces
are written incrementally in question order so interrupted runs resume.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from .backend import Backend, CompletionRequest, request_digest
from .catalog import BenchmarkItem, DatabaseSchema
from .errors import AuthError, BackendExhausted, CassetteMiss, ParseFailure
from .prompts import (
    Decomposition,
    Label,
    PromptOptions,
    RenderedPrompt,
    SchemaLinks,
    Stage,
    build_classification_prompt,
    build_correction_prompt,
    build_fewshot_prompt,
    build_generation_prompt,
    build_linking_prompt,
    extract_sql,
    parse_classification,
    parse_schema_links,
)

CORRECTION_STYLES = ("generic", "gentle", "off")
MODES = ("decomposed", "fewshot")


@dataclass(frozen=True)
class PipelineConfig:
    self_correction_style: str = "gentle"
    benchmark_flavor: str = "spider"
    mode: str = "decomposed"
    max_tokens_generation: int = 600
    max_tokens_correction: int = 350
    worker_count: int = 1
    model_id: str = "default"
    demo_count: int | None = None
    sample_rows: int | None = None

    def __post_init__(self):
        if self.self_correction_style not in CORRECTION_STYLES:
            raise ValueError(f"unknown correction style {self.self_correction_style!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def prompt_options(self) -> PromptOptions:
        return PromptOptions.for_flavor(
            self.benchmark_flavor, self.demo_count, self.sample_rows
        )


@dataclass
class PredictionRecord:
    question_id: int
    db_id: str
    question: str
    gold_sql: str
    links: SchemaLinks = field(default_factory=SchemaLinks)
    decomposition: Decomposition | None = None
    generated_sql: str = ""
    corrected_sql: str = ""
    final_sql: str = ""
    stage_prompts: list[tuple[str, str]] = field(default_factory=list)
    stage_completions: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    config_digest: str = ""

    def to_json(self) -> str:
        decomposition = None
        if self.decomposition is not None:
            decomposition = {
                "label": self.decomposition.label.value,
                "sub_questions": list(self.decomposition.sub_questions),
            }
        payload = {
            "question_id": self.question_id,
            "db_id": self.db_id,
            "question": self.question,
            "gold_sql": self.gold_sql,
            "links": list(self.links.entries),
            "decomposition": decomposition,
            "generated_sql": self.generated_sql,
            "corrected_sql": self.corrected_sql,
            "final_sql": self.final_sql,
            "stage_prompts": [list(p) for p in self.stage_prompts],
            "stage_completions": self.stage_completions,
            "failures": self.failures,
            "config_digest": self.config_digest,
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "PredictionRecord":
        data = json.loads(line)
        decomposition = None
        if data.get("decomposition"):
            decomposition = Decomposition(
                label=Label(data["decomposition"]["label"]),
                sub_questions=tuple(data["decomposition"]["sub_questions"]),
            )
        return cls(
            question_id=data["question_id"],
            db_id=data["db_id"],
            question=data["question"],
            gold_sql=data["gold_sql"],
            links=SchemaLinks(tuple(data.get("links", ()))),
            decomposition=decomposition,
            generated_sql=data.get("generated_sql", ""),
            corrected_sql=data.get("corrected_sql", ""),
            final_sql=data.get("final_sql", ""),
            stage_prompts=[tuple(p) for p in data.get("stage_prompts", [])],
            stage_completions=data.get("stage_completions", []),
            failures=data.get("failures", []),
            config_digest=data.get("config_digest", ""),
        )


_GENERATION_STAGE = {
    Label.EASY: Stage.GENERATION_EASY,
    Label.NON_NESTED: Stage.GENERATION_NONNESTED,
    Label.NESTED: Stage.GENERATION_NESTED,
}


def run_question(
    item: BenchmarkItem,
    schema: DatabaseSchema,
    backend: Backend,
    config: PipelineConfig,
) -> PredictionRecord:
    record = PredictionRecord(
        question_id=item.question_id,
        db_id=item.db_id,
        question=item.question,
        gold_sql=item.gold_sql,
        config_digest=config.digest(),
    )
    options = config.prompt_options()

    def call(prompt: RenderedPrompt) -> str:
        request = CompletionRequest(
            prompt=prompt.text,
            temperature=0.0,
            max_tokens=prompt.max_tokens,
            stop=(prompt.stop_sequence,),
            model_id=config.model_id,
        )
        response = backend.complete(request)
        record.stage_prompts.append((prompt.stage.value, request_digest(request)))
        record.stage_completions.append(response.text)
        return response.text

    try:
        if config.mode == "fewshot":
            prompt = build_fewshot_prompt(schema, item.question, item.evidence, options)
            completion = call(prompt)
            try:
                record.generated_sql = extract_sql(completion, Stage.GENERATION_FEWSHOT)
            except ParseFailure as exc:
                record.failures.append(f"generation: {exc}")
        else:
            completion = call(build_linking_prompt(schema, item.question, item.evidence, options))
            try:
                record.links = parse_schema_links(completion)
            except ParseFailure as exc:
                record.failures.append(f"linking: {exc}")

            completion = call(
                build_classification_prompt(
                    schema, item.question, record.links, item.evidence, options
                )
            )
            try:
                record.decomposition = parse_classification(completion, item.question)
            except ParseFailure as exc:
                record.failures.append(f"classification: {exc}")
                record.decomposition = Decomposition(
                    label=Label.NESTED, sub_questions=(item.question,)
                )

            stage = _GENERATION_STAGE[record.decomposition.label]
            completion = call(
                build_generation_prompt(
                    record.decomposition.label,
                    schema,
                    item.question,
                    record.links,
                    record.decomposition.sub_questions,
                    item.evidence,
                    options,
                )
            )
            try:
                record.generated_sql = extract_sql(completion, stage)
            except ParseFailure as exc:
                record.failures.append(f"generation: {exc}")

        style = config.self_correction_style
        if style != "off" and record.generated_sql:
            stage = Stage.CORRECTION_GENERIC if style == "generic" else Stage.CORRECTION_GENTLE
            completion = call(
                build_correction_prompt(style, schema, item.question,
                                        record.generated_sql, options)
            )
            try:
                record.corrected_sql = extract_sql(completion, stage)
            except ParseFailure as exc:
                record.failures.append(f"correction: {exc}")
        elif style != "off":
            record.failures.append("correction: skipped, no generated SQL")
    except (BackendExhausted, AuthError, CassetteMiss) as exc:
        record.failures.append(f"backend: {exc}")
        record.final_sql = ""
        return record

    record.final_sql = record.corrected_sql or record.generated_sql
    return record


def _collapse(sql: str) -> str:
    return " ".join(sql.split())


def load_trace(trace_path: Path | str) -> list[PredictionRecord]:
    path = Path(trace_path)
    if not path.exists():
        return []
    records = []
    for line in path.read_text().splitlines():
        if line.strip():
            records.append(PredictionRecord.from_json(line))
    return records


def run_batch(
    items: list[BenchmarkItem],
    schemas: dict[str, DatabaseSchema],
    backend: Backend,
    config: PipelineConfig,
    trace_path: Path | str | None = None,
    predictions_path: Path | str | None = None,
    resume: bool = False,
    progress: Callable[[PredictionRecord], None] | None = None,
) -> list[PredictionRecord]:
    done: dict[int, PredictionRecord] = {}
    if resume and trace_path is not None:
        digest = config.digest()
        for record in load_trace(trace_path):
            if record.config_digest == digest:
                done[record.question_id] = record

    trace_file = None
    if trace_path is not None:
        Path(trace_path).parent.mkdir(parents=True, exist_ok=True)
        trace_file = Path(trace_path).open("w")

    results: dict[int, PredictionRecord] = {}
    next_flush = 0

    def flush_ready():
        nonlocal next_flush
        while next_flush < len(items) and items[next_flush].question_id in results:
            record = results[items[next_flush].question_id]
            if trace_file is not None:
                trace_file.write(record.to_json() + "\n")
                trace_file.flush()
            if progress is not None:
                progress(record)
            next_flush += 1

    def work(item: BenchmarkItem) -> PredictionRecord:
        if item.question_id in done:
            return done[item.question_id]
        return run_question(item, schemas[item.db_id], backend, config)

    try:
        if config.worker_count == 1:
            for item in items:
                results[item.question_id] = work(item)
                flush_ready()
        else:
            with ThreadPoolExecutor(max_workers=config.worker_count) as pool:
                for item, record in zip(items, pool.map(work, items)):
                    results[item.question_id] = record
                    flush_ready()
    finally:
        if trace_file is not None:
            trace_file.close()

    ordered = [results[item.question_id] for item in items]
    if predictions_path is not None:
        Path(predictions_path).parent.mkdir(parents=True, exist_ok=True)
        text = "".join(_collapse(r.final_sql) + "\n" for r in ordered)
        Path(predictions_path).write_text(text)
    return ordered
