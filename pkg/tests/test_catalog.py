from __future__ import annotations

import json
import sqlite3

import pytest

from dbfixtures import DEV_JSON, TABLES_JSON
from text2sql.catalog import (
    ColumnDef,
    DatabaseSchema,
    attach_sample_rows,
    format_value,
    load_benchmark,
    parse_serialized_schema,
    serialize_schema,
)
from text2sql.errors import LoadError

FIXTURES = __import__("pathlib").Path(__file__).parents[0] / ".." / "src" / "text2sql" / "fixtures"


def test_load_counts_and_order(items, registry):
    assert len(items) == 118
    assert len(registry) == 6
    assert [i.question_id for i in items] == list(range(118))
    assert all(i.evidence is None for i in items)


def test_two_question_fixture_file(tmp_path, db_root):
    records = [
        {"db_id": "farm", "question": "How many farms?", "query": "SELECT count(*) FROM farm"},
        {"db_id": "farm", "question": "List years.", "query": "SELECT Year FROM farm"},
    ]
    qfile = tmp_path / "two.json"
    qfile.write_text(json.dumps(records))
    loaded, _ = load_benchmark(TABLES_JSON, qfile, db_root)
    assert [(i.question_id, i.question) for i in loaded] == [
        (0, "How many farms?"), (1, "List years."),
    ]


def test_empty_questions_file(tmp_path, db_root):
    qfile = tmp_path / "empty.json"
    qfile.write_text("[]")
    loaded, registry = load_benchmark(TABLES_JSON, qfile, db_root)
    assert loaded == []
    assert len(registry) == 6


def test_missing_db_id_names_the_id(tmp_path, db_root):
    qfile = tmp_path / "bad.json"
    qfile.write_text(json.dumps([{"db_id": "nope_db", "question": "?", "query": "SELECT 1"}]))
    with pytest.raises(LoadError, match="nope_db"):
        load_benchmark(TABLES_JSON, qfile, db_root)


def test_malformed_record_names_the_index(tmp_path, db_root):
    qfile = tmp_path / "bad.json"
    qfile.write_text(json.dumps([
        {"db_id": "farm", "question": "ok", "query": "SELECT 1"},
        {"db_id": "farm", "question": "missing gold"},
    ]))
    with pytest.raises(LoadError, match="record 1"):
        load_benchmark(TABLES_JSON, qfile, db_root)


def test_bird_flavor_reads_evidence_and_sql_key(tmp_path, db_root):
    qfile = tmp_path / "bird.json"
    qfile.write_text(json.dumps([
        {"db_id": "farm", "question": "?", "SQL": "SELECT count(*) FROM farm",
         "evidence": "farms are rows of the farm table"},
    ]))
    loaded, _ = load_benchmark(TABLES_JSON, qfile, db_root, flavor="bird")
    assert loaded[0].gold_sql == "SELECT count(*) FROM farm"
    assert loaded[0].evidence == "farms are rows of the farm table"


def test_classroom_table_line(registry):
    text = serialize_schema(registry["college_2"])
    assert "Table classroom, columns = [*,building,room_number,capacity]" in text.splitlines()


def test_serialized_schema_matches_prompt_fixture_blocks(registry):
    # The fixtures embed these exact schema listings; serialization must agree.
    linking = (FIXTURES / "linking.txt").read_text().splitlines()
    farm_block = "\n".join(linking[2:7])
    assert serialize_schema(registry["farm"], include_foreign_keys=True) == farm_block

    classification = (FIXTURES / "classification.txt").read_text().splitlines()
    college_block = "\n".join(classification[6:18])
    assert serialize_schema(registry["college_2"], include_foreign_keys=True) == college_block


def test_foreign_keys_empty_list():
    schema = DatabaseSchema(
        db_id="solo",
        tables=[("t", [ColumnDef("a", "t", "number")])],
    )
    assert serialize_schema(schema, include_foreign_keys=True).splitlines()[-1] == "Foreign_keys = []"


def test_serialize_is_deterministic(registry):
    a = serialize_schema(registry["college_2"], include_foreign_keys=True)
    b = serialize_schema(registry["college_2"], include_foreign_keys=True)
    assert a == b


def test_serialized_text_round_trips(registry):
    schema = registry["customers_and_invoices"]
    text = serialize_schema(schema, include_foreign_keys=True)
    tables, fks = parse_serialized_schema(text)
    assert tables == [(t, [c.name for c in cols]) for t, cols in schema.tables]
    assert fks == schema.foreign_keys


def test_sample_rows_zero(registry):
    rows = attach_sample_rows(registry["farm"], 0)
    assert all(v == [] for v in rows.values())
    text = serialize_schema(registry["farm"], sample_rows=0)
    assert all(line.startswith(("Table ", "Foreign_keys")) for line in text.splitlines())


def test_sample_rows_clamped_to_available(registry):
    rows = attach_sample_rows(registry["student_assessment"], 3)
    assert len(rows["Student_Course_Attendance"]) == 2


def test_sample_rows_are_first_k_in_storage_order(registry):
    schema = registry["farm"]
    rows = attach_sample_rows(schema, 3)
    with sqlite3.connect(schema.db_file_path) as conn:
        expected = [tuple(r) for r in conn.execute("SELECT * FROM city LIMIT 3")]
    assert rows["city"] == expected


def test_sample_rows_unreadable_db_carries_db_id(registry, tmp_path):
    schema = DatabaseSchema(
        db_id="ghost",
        tables=[("t", [ColumnDef("a", "t")])],
        db_file_path=tmp_path / "missing.sqlite",
    )
    with pytest.raises(LoadError, match="ghost"):
        attach_sample_rows(schema, 2)


def test_literal_formatting():
    assert format_value(None) == "NULL"
    assert format_value(3.0) == "3.0"
    assert format_value(0.1) == "0.1"
    assert format_value(12) == "12"
    assert format_value("plain text") == "plain text"


def test_schema_validation_rejects_bad_foreign_key():
    schema = DatabaseSchema(
        db_id="broken",
        tables=[("t", [ColumnDef("a", "t")])],
        foreign_keys=[("t.a", "t.missing")],
    )
    with pytest.raises(LoadError, match="t.missing"):
        schema.validate()
