from __future__ import annotations

import json

import pytest

from dbfixtures import DEV_JSON, TABLES_JSON, build_fixture_dbs
from text2sql.catalog import load_benchmark


@pytest.fixture(scope="session")
def db_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("dbs")
    return build_fixture_dbs(root)


@pytest.fixture(scope="session")
def benchmark(db_root):
    return load_benchmark(TABLES_JSON, DEV_JSON, db_root)


@pytest.fixture(scope="session")
def items(benchmark):
    return benchmark[0]


@pytest.fixture(scope="session")
def registry(benchmark):
    return benchmark[1]


@pytest.fixture(scope="session")
def kmaps():
    from spider_oracle import build_foreign_key_map

    entries = json.loads(TABLES_JSON.read_text())
    return {e["db_id"]: build_foreign_key_map(e) for e in entries}
