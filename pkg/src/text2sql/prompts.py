"""Prompt rendering for every stage family, plus parsers for model output.

Demonstration text is pinned in fixtures/ and never synthesized; builders only
append the per-question tail (target schema, question, links, sub-questions).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .catalog import DatabaseSchema, serialize_schema
from .errors import ParseFailure

THINK_CURLY = "A: Let’s think step by step."
THINK_STRAIGHT = "A: Let's think step by step."

STOP_DEFAULT = "Q:"
STOP_CORRECTION = "#;\n\n"
MAX_TOKENS_GENERATION = 600
MAX_TOKENS_CORRECTION = 350


class Stage(str, Enum):
    LINKING = "linking"
    CLASSIFICATION = "classification"
    GENERATION_EASY = "generation_easy"
    GENERATION_NONNESTED = "generation_nonnested"
    GENERATION_NESTED = "generation_nested"
    GENERATION_FEWSHOT = "generation_fewshot"
    CORRECTION_GENERIC = "correction_generic"
    CORRECTION_GENTLE = "correction_gentle"


CORRECTION_STAGES = (Stage.CORRECTION_GENERIC, Stage.CORRECTION_GENTLE)
# Stages whose prompt already ends in an SQL-eliciting marker, so the
# completion head is the query itself.
HEAD_SQL_STAGES = (
    Stage.GENERATION_EASY,
    Stage.GENERATION_FEWSHOT,
    Stage.CORRECTION_GENERIC,
    Stage.CORRECTION_GENTLE,
)


def stop_for(stage: Stage) -> str:
    return STOP_CORRECTION if stage in CORRECTION_STAGES else STOP_DEFAULT


def max_tokens_for(stage: Stage) -> int:
    return MAX_TOKENS_CORRECTION if stage in CORRECTION_STAGES else MAX_TOKENS_GENERATION


class Label(str, Enum):
    EASY = "EASY"
    NON_NESTED = "NON_NESTED"
    NESTED = "NESTED"


@dataclass(frozen=True)
class SchemaLinks:
    """Linking output: entries in model emission order, classified by shape."""

    entries: tuple[str, ...] = ()

    @staticmethod
    def _is_fk(entry: str) -> bool:
        left, sep, right = entry.partition(" = ")
        return bool(sep) and "." in left and "." in right

    @property
    def fk_refs(self) -> tuple[str, ...]:
        return tuple(e for e in self.entries if self._is_fk(e))

    @property
    def column_refs(self) -> tuple[str, ...]:
        return tuple(e for e in self.entries if not self._is_fk(e) and "." in e)

    @property
    def values(self) -> tuple[str, ...]:
        return tuple(e for e in self.entries if not self._is_fk(e) and "." not in e)

    def render(self) -> str:
        return "[" + ",".join(self.entries) + "]"


@dataclass(frozen=True)
class Decomposition:
    label: Label
    sub_questions: tuple[str, ...] = ()

    def __post_init__(self):
        if self.label is Label.NESTED and not self.sub_questions:
            raise ValueError("NESTED decomposition needs at least one sub-question")
        if self.label is not Label.NESTED and self.sub_questions:
            raise ValueError(f"{self.label.value} decomposition carries no sub-questions")


@dataclass(frozen=True)
class Demonstration:
    """One worked example from a fixture file."""

    question: str
    schema_links: str
    sql: str
    intermediate: str | None = None
    sub_pairs: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    stage: Stage
    stop_sequence: str
    max_tokens: int


@dataclass(frozen=True)
class PromptOptions:
    """Per-flavor prompt knobs; demo_count=None keeps the full fixture."""

    demo_count: int | None = None
    sample_rows: int | None = None

    @classmethod
    def for_flavor(cls, flavor: str, demo_count: int | None = None,
                   sample_rows: int | None = None) -> "PromptOptions":
        if flavor == "bird":
            return cls(
                demo_count=3 if demo_count is None else demo_count,
                sample_rows=3 if sample_rows is None else sample_rows,
            )
        return cls(demo_count=demo_count, sample_rows=sample_rows)


DEFAULT_OPTIONS = PromptOptions()


@lru_cache(maxsize=None)
def _fixture_text(name: str) -> str:
    return resources.files(__package__).joinpath(f"fixtures/{name}.txt").read_text()


def _split_blocks(text: str) -> tuple[list[str], list[str]]:
    """Split a fixture into preamble blocks and demonstration blocks."""
    blocks = text.rstrip("\n").split("\n\n")
    preamble: list[str] = []
    demos: list[str] = []
    for block in blocks:
        if demos or any(line.startswith("Q:") for line in block.splitlines()):
            demos.append(block)
        else:
            preamble.append(block)
    return preamble, demos


def _fixture_body(name: str, demo_count: int | None) -> str:
    text = _fixture_text(name)
    if demo_count is None:
        return text.rstrip("\n")
    preamble, demos = _split_blocks(text)
    return "\n\n".join(preamble + demos[:demo_count])


def fixture_demonstrations(name: str) -> list[Demonstration]:
    """Parse fixture demonstration blocks back into structured form."""
    _, demo_blocks = _split_blocks(_fixture_text(name))
    demos = []
    for block in demo_blocks:
        lines = block.splitlines()
        question = ""
        links = ""
        sql = ""
        intermediate = None
        for line in lines:
            if line.startswith("Q: "):
                question = line[3:].strip('"')
            elif line.lower().startswith("schema_links: "):
                links = line.split(": ", 1)[1]
            elif line.startswith("Intermediate_representation:"):
                intermediate = line.split(":", 1)[1].strip()
            elif line.startswith("SQL: "):
                sql = line[5:]
        demos.append(Demonstration(question=question, schema_links=links,
                                   sql=sql, intermediate=intermediate))
    return demos


def _tail(question: str, evidence: str | None, *lines: str) -> str:
    parts = [f'Q: "{question}"']
    if evidence:
        parts.append(f"Hint: {evidence}")
    parts.extend(lines)
    return "\n".join(parts)


def _render(stage: Stage, fixture: str, schema: DatabaseSchema, tail: str,
            include_fk: bool, options: PromptOptions) -> RenderedPrompt:
    schema_text = serialize_schema(
        schema, include_foreign_keys=include_fk, sample_rows=options.sample_rows
    )
    body = _fixture_body(fixture, options.demo_count)
    text = f"{body}\n\n{schema_text}\n{tail}"
    return RenderedPrompt(
        text=text, stage=stage, stop_sequence=stop_for(stage), max_tokens=max_tokens_for(stage)
    )


def build_linking_prompt(
    schema: DatabaseSchema,
    question: str,
    evidence: str | None = None,
    options: PromptOptions = DEFAULT_OPTIONS,
) -> RenderedPrompt:
    tail = _tail(question, evidence, THINK_CURLY)
    return _render(Stage.LINKING, "linking", schema, tail, True, options)


def build_classification_prompt(
    schema: DatabaseSchema,
    question: str,
    links: SchemaLinks,
    evidence: str | None = None,
    options: PromptOptions = DEFAULT_OPTIONS,
) -> RenderedPrompt:
    tail = _tail(question, evidence, f"schema_links: {links.render()}", THINK_CURLY)
    return _render(Stage.CLASSIFICATION, "classification", schema, tail, True, options)


def _nested_tail_sentence(question: str, sub_questions: tuple[str, ...]) -> str:
    quoted = [f'"{q}"' for q in sub_questions]
    if len(quoted) == 1:
        noun, listing = "sub-question", quoted[0]
    else:
        noun = "sub-questions"
        listing = ", ".join(quoted[:-1]) + " and " + quoted[-1]
    return (
        f'{THINK_STRAIGHT} "{question}" can be solved by knowing the answer '
        f"to the following {noun} {listing}."
    )


def build_generation_prompt(
    label: Label,
    schema: DatabaseSchema,
    question: str,
    links: SchemaLinks,
    sub_questions: tuple[str, ...] = (),
    evidence: str | None = None,
    options: PromptOptions = DEFAULT_OPTIONS,
) -> RenderedPrompt:
    links_line = f"Schema_links: {links.render()}"
    if label is Label.EASY:
        tail = _tail(question, evidence, links_line, "SQL:")
        return _render(Stage.GENERATION_EASY, "generation_easy", schema, tail, False, options)
    if label is Label.NON_NESTED:
        tail = _tail(question, evidence, links_line, THINK_CURLY)
        return _render(
            Stage.GENERATION_NONNESTED, "generation_nonnested", schema, tail, True, options
        )
    if not sub_questions:
        raise ValueError("nested generation requires at least one sub-question")
    tail = _tail(question, evidence, links_line,
                 _nested_tail_sentence(question, sub_questions))
    return _render(Stage.GENERATION_NESTED, "generation_nested", schema, tail, True, options)


def build_fewshot_prompt(
    schema: DatabaseSchema,
    question: str,
    evidence: str | None = None,
    options: PromptOptions = DEFAULT_OPTIONS,
) -> RenderedPrompt:
    tail = _tail(question, evidence, "SQL:")
    return _render(Stage.GENERATION_FEWSHOT, "few_shot", schema, tail, False, options)


def build_correction_prompt(
    style: str,
    schema: DatabaseSchema,
    question: str,
    sql: str,
    options: PromptOptions = DEFAULT_OPTIONS,
) -> RenderedPrompt:
    if not sql:
        raise ValueError("correction requires a non-empty SQL query")
    if style not in ("generic", "gentle"):
        raise ValueError(f"unknown correction style: {style}")
    stage = Stage.CORRECTION_GENERIC if style == "generic" else Stage.CORRECTION_GENTLE
    template = _fixture_text(f"correction_{style}")
    schema_text = serialize_schema(
        schema, include_foreign_keys=True, sample_rows=options.sample_rows
    )
    text = (
        template.replace("<<SCHEMA>>", schema_text)
        .replace("<<QUESTION>>", question)
        .replace("<<SQL>>", sql)
    )
    return RenderedPrompt(
        text=text, stage=stage, stop_sequence=stop_for(stage), max_tokens=max_tokens_for(stage)
    )


_LINKS_MARKER = re.compile(r"schema_links\s*:", re.IGNORECASE)


def _split_top_level(text: str) -> list[str]:
    """Split on commas outside quotes, parentheses and brackets."""
    parts: list[str] = []
    buf: list[str] = []
    depth = 0
    quote: str | None = None
    for ch in text:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
            buf.append(ch)
        elif ch in "([":
            depth += 1
            buf.append(ch)
        elif ch in ")]":
            depth -= 1
            buf.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def parse_schema_links(completion: str) -> SchemaLinks:
    """Extract the bracketed list after the last Schema_links marker."""
    matches = list(_LINKS_MARKER.finditer(completion))
    if not matches:
        raise ParseFailure("no Schema_links marker", completion)
    rest = completion[matches[-1].end():]
    start = rest.find("[")
    if start < 0:
        raise ParseFailure("no bracketed list after Schema_links marker", completion)
    depth = 0
    end = -1
    for i, ch in enumerate(rest[start:], start):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                end = i
                break
    if end < 0:
        raise ParseFailure("unbalanced bracket in Schema_links list", completion)
    inner = rest[start + 1:end]
    if not inner.strip():
        return SchemaLinks(())
    entries = tuple(e.strip() for e in _split_top_level(inner) if e.strip())
    return SchemaLinks(entries)


_LABEL_RE = re.compile(r"Label\s*:\s*\"?\s*([A-Za-z][A-Za-z_\- ]*?)\s*\"?\s*$",
                       re.IGNORECASE | re.MULTILINE)
_QUESTIONS_RE = re.compile(r"questions\s*=\s*\[(.*?)\]", re.IGNORECASE | re.DOTALL)
_QUOTED_RE = re.compile(r'"([^"]*)"')


def parse_classification(completion: str, question: str = "") -> Decomposition:
    """Read the final Label line and any decomposed sub-questions."""
    labels = _LABEL_RE.findall(completion)
    if not labels:
        raise ParseFailure("no Label marker", completion)
    raw = labels[-1].strip().upper().replace("-", "_").replace(" ", "_")
    try:
        label = Label(raw)
    except ValueError:
        raise ParseFailure(f"unknown label {labels[-1]!r}", completion) from None

    subs: tuple[str, ...] = ()
    lists = _QUESTIONS_RE.findall(completion)
    if lists:
        subs = tuple(q for q in _QUOTED_RE.findall(lists[-1]) if q.strip())
    if label is not Label.NESTED:
        return Decomposition(label=label)
    if not subs:
        if not question:
            raise ParseFailure("NESTED label without sub-questions", completion)
        subs = (question,)  # self-question fallback
    return Decomposition(label=label, sub_questions=subs)


_SQL_MARKER = re.compile(r"SQL\s*:", re.IGNORECASE)


def extract_sql(completion: str, stage: Stage) -> str:
    """Pull the final SQL query out of a stage completion."""
    text = completion
    stop = stop_for(stage)
    for boundary in (stop, STOP_DEFAULT):
        cut = text.find(boundary)
        if cut >= 0:
            text = text[:cut]
    matches = list(_SQL_MARKER.finditer(text))
    if matches:
        sql = text[matches[-1].end():].strip()
    elif stage in HEAD_SQL_STAGES:
        sql = text.strip()
    else:
        raise ParseFailure(f"no SQL marker in {stage.value} completion", completion)
    sql = sql.strip().rstrip(";").strip().rstrip("#").strip()
    if not sql:
        raise ParseFailure(f"empty SQL extraction at {stage.value}", completion)
    return sql
