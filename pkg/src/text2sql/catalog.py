"""Benchmark dataset loading and prompt-format schema serialization.

Datasets arrive in the standard cross-domain benchmark layout: one JSON file of
table descriptions, one JSON file of questions with gold SQL, and one read-only
SQLite database per db_id under a common root.
"""
from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LoadError

DATA_TYPES = ("text", "number", "time", "boolean", "others")


@dataclass(frozen=True)
class ColumnDef:
    name: str
    table: str
    data_type: str = "text"


@dataclass
class DatabaseSchema:
    db_id: str
    tables: list[tuple[str, list[ColumnDef]]]
    primary_keys: list[str] = field(default_factory=list)
    foreign_keys: list[tuple[str, str]] = field(default_factory=list)
    db_file_path: Path | None = None

    def table_names(self) -> list[str]:
        return [name for name, _ in self.tables]

    def columns_of(self, table: str) -> list[ColumnDef]:
        for name, cols in self.tables:
            if name.lower() == table.lower():
                return cols
        raise KeyError(table)

    def resolve_table(self, name: str) -> str | None:
        for table, _ in self.tables:
            if table.lower() == name.lower():
                return table
        return None

    def has_column(self, table: str, column: str) -> bool:
        try:
            cols = self.columns_of(table)
        except KeyError:
            return False
        return any(c.name.lower() == column.lower() for c in cols)

    def column_keys(self) -> set[str]:
        """All lowercase "table.column" keys in this schema."""
        return {
            f"{table.lower()}.{col.name.lower()}"
            for table, cols in self.tables
            for col in cols
        }

    def validate(self) -> None:
        names = [t.lower() for t in self.table_names()]
        if len(set(names)) != len(names):
            raise LoadError(f"{self.db_id}: duplicate table names")
        seen: set[str] = set()
        for table, cols in self.tables:
            for col in cols:
                if not col.name:
                    raise LoadError(f"{self.db_id}: empty column name in {table}")
                key = f"{table.lower()}.{col.name.lower()}"
                if key in seen:
                    raise LoadError(f"{self.db_id}: duplicate column {key}")
                seen.add(key)
        for a, b in self.foreign_keys:
            for ref in (a, b):
                table, _, column = ref.partition(".")
                if not self.has_column(table, column):
                    raise LoadError(f"{self.db_id}: foreign key endpoint {ref} does not exist")


@dataclass(frozen=True)
class BenchmarkItem:
    question_id: int
    db_id: str
    question: str
    gold_sql: str
    evidence: str | None = None


def _column_ref(tables: list[str], column_names: list, idx: int, record_idx: int) -> str:
    try:
        table_idx, name = column_names[idx]
        return f"{tables[table_idx]}.{name}"
    except (IndexError, TypeError, ValueError) as exc:
        raise LoadError(f"schema record {record_idx}: bad column index {idx}") from exc


def load_schema_file(schema_file: Path | str, db_root: Path | str | None = None) -> dict[str, DatabaseSchema]:
    """Load the table-description file into a registry keyed by db_id."""
    schema_file = Path(schema_file)
    if not schema_file.exists():
        raise LoadError(f"schema file not found: {schema_file}")
    try:
        entries = json.loads(schema_file.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(f"schema file is not valid JSON: {schema_file}") from exc

    registry: dict[str, DatabaseSchema] = {}
    for i, entry in enumerate(entries):
        try:
            db_id = entry["db_id"]
            tables_orig = entry["table_names_original"]
            column_names = entry["column_names_original"]
            column_types = entry["column_types"]
            fk_pairs = entry["foreign_keys"]
            pk_indices = entry["primary_keys"]
        except (KeyError, TypeError) as exc:
            raise LoadError(f"schema record {i}: missing field {exc}") from exc

        columns: dict[str, list[ColumnDef]] = {t: [] for t in tables_orig}
        for (table_idx, name), ctype in zip(column_names, column_types):
            if table_idx < 0:
                continue  # the shared "*" entry
            if table_idx >= len(tables_orig):
                raise LoadError(f"schema record {i}: bad table index for column {name}")
            table = tables_orig[table_idx]
            columns[table].append(ColumnDef(name=name, table=table, data_type=ctype))

        primary = [_column_ref(tables_orig, column_names, pk, i) for pk in pk_indices]
        foreign = [
            (
                _column_ref(tables_orig, column_names, a, i),
                _column_ref(tables_orig, column_names, b, i),
            )
            for a, b in fk_pairs
        ]
        db_path = None
        if db_root is not None:
            db_path = Path(db_root) / db_id / f"{db_id}.sqlite"
        schema = DatabaseSchema(
            db_id=db_id,
            tables=[(t, columns[t]) for t in tables_orig],
            primary_keys=primary,
            foreign_keys=foreign,
            db_file_path=db_path,
        )
        schema.validate()
        registry[db_id] = schema
    return registry


def load_benchmark(
    schema_file: Path | str,
    questions_file: Path | str,
    db_root: Path | str | None = None,
    flavor: str = "spider",
) -> tuple[list[BenchmarkItem], dict[str, DatabaseSchema]]:
    """Load questions plus their schema registry, preserving file order."""
    registry = load_schema_file(schema_file, db_root)

    questions_file = Path(questions_file)
    if not questions_file.exists():
        raise LoadError(f"questions file not found: {questions_file}")
    try:
        records = json.loads(questions_file.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(f"questions file is not valid JSON: {questions_file}") from exc

    items: list[BenchmarkItem] = []
    for i, rec in enumerate(records):
        try:
            db_id = rec["db_id"]
            question = rec["question"]
        except (KeyError, TypeError) as exc:
            raise LoadError(f"question record {i}: missing field {exc}") from exc
        gold = rec.get("query")
        if gold is None and flavor == "bird":
            gold = rec.get("SQL")
        if gold is None:
            raise LoadError(f"question record {i}: missing gold SQL")
        if db_id not in registry:
            raise LoadError(f"question record {i}: unknown db_id {db_id!r}")
        evidence = rec.get("evidence") if flavor == "bird" else None
        items.append(
            BenchmarkItem(
                question_id=i,
                db_id=db_id,
                question=question,
                gold_sql=gold,
                evidence=evidence or None,
            )
        )
    return items, registry


def format_value(value) -> str:
    """Render one cell for prompt text: NULL for missing, shortest-round-trip numbers."""
    if value is None:
        return "NULL"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bytes):
        return value.hex()
    return str(value)


def attach_sample_rows(schema: DatabaseSchema, k: int) -> dict[str, list[tuple]]:
    """First k stored rows per table, straight from the database file."""
    if k <= 0:
        return {table: [] for table in schema.table_names()}
    if schema.db_file_path is None or not Path(schema.db_file_path).exists():
        raise LoadError(f"{schema.db_id}: database file not readable")
    rows: dict[str, list[tuple]] = {}
    uri = f"file:{schema.db_file_path}?mode=ro"
    with sqlite3.connect(uri, uri=True) as conn:
        for table in schema.table_names():
            try:
                cur = conn.execute(f'SELECT * FROM "{table}" LIMIT {int(k)}')
            except sqlite3.Error as exc:
                raise LoadError(f"{schema.db_id}: cannot read table {table}: {exc}") from exc
            rows[table] = [tuple(r) for r in cur.fetchall()]
    return rows


def serialize_schema(
    schema: DatabaseSchema,
    include_foreign_keys: bool = False,
    sample_rows: int | None = None,
) -> str:
    """Render the schema in the prompt listing format.

    One "Table <name>, columns = [*,...]" line per table in schema order,
    optionally followed by up to `sample_rows` value rows per table, and a
    single "Foreign_keys = [...]" line when requested. Byte-deterministic.
    """
    row_data: dict[str, list[tuple]] = {}
    if sample_rows is not None and sample_rows > 0:
        row_data = attach_sample_rows(schema, sample_rows)
    lines: list[str] = []
    for table, cols in schema.tables:
        names = ",".join(c.name for c in cols)
        lines.append(f"Table {table}, columns = [*,{names}]")
        for row in row_data.get(table, []):
            lines.append("(" + ",".join(format_value(v) for v in row) + ")")
    if include_foreign_keys:
        fk = ",".join(f"{a} = {b}" for a, b in schema.foreign_keys)
        lines.append(f"Foreign_keys = [{fk}]")
    return "\n".join(lines)


def parse_serialized_schema(text: str) -> tuple[list[tuple[str, list[str]]], list[tuple[str, str]]]:
    """Recover (table, columns) pairs and foreign-key pairs from serialized text.

    Inverse of serialize_schema for round-trip checks; value rows are skipped.
    """
    tables: list[tuple[str, list[str]]] = []
    fks: list[tuple[str, str]] = []
    for line in text.splitlines():
        if line.startswith("Table "):
            head, _, cols = line.partition(", columns = ")
            name = head[len("Table "):]
            inner = cols.strip()[1:-1]
            parts = inner.split(",")
            if parts[0] != "*":
                raise LoadError(f"table line does not start with *: {line}")
            tables.append((name, parts[1:]))
        elif line.startswith("Foreign_keys = "):
            inner = line[len("Foreign_keys = "):].strip()[1:-1]
            if inner:
                for pair in inner.split(","):
                    a, _, b = pair.partition(" = ")
                    fks.append((a, b))
    return tables, fks
