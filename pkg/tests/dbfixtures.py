"""Builds the fixture SQLite databases from tables.json + db_rows.json."""
from __future__ import annotations

import json
import sqlite3
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"
TABLES_JSON = DATA_DIR / "tables.json"
DEV_JSON = DATA_DIR / "dev.json"
ROWS_JSON = DATA_DIR / "db_rows.json"

TYPE_SQL = {"number": "NUMERIC", "text": "TEXT", "time": "TEXT",
            "boolean": "INTEGER", "others": "TEXT"}


def build_fixture_dbs(root: Path) -> Path:
    entries = json.loads(TABLES_JSON.read_text())
    rows = json.loads(ROWS_JSON.read_text())
    for entry in entries:
        db_dir = root / entry["db_id"]
        db_dir.mkdir(parents=True, exist_ok=True)
        db_path = db_dir / f"{entry['db_id']}.sqlite"
        if db_path.exists():
            continue
        conn = sqlite3.connect(db_path)
        tables = entry["table_names_original"]
        cols_by_table: dict[str, list[tuple[str, str]]] = {t: [] for t in tables}
        pk_cols: dict[str, list[str]] = {}
        for i in entry["primary_keys"]:
            t_idx, name = entry["column_names_original"][i]
            pk_cols.setdefault(tables[t_idx], []).append(name)
        for (t_idx, name), ctype in zip(entry["column_names_original"], entry["column_types"]):
            if t_idx >= 0:
                cols_by_table[tables[t_idx]].append((name, TYPE_SQL[ctype]))
        for table in tables:
            if table == "sqlite_sequence":
                continue  # materialized by the AUTOINCREMENT table below
            defs = [f'"{n}" {ty}' for n, ty in cols_by_table[table]]
            if entry["db_id"] == "soccer_1" and table == "Player":
                defs[0] = '"id" INTEGER PRIMARY KEY AUTOINCREMENT'
            elif table in pk_cols:
                defs.append("PRIMARY KEY (" + ", ".join(f'"{c}"' for c in pk_cols[table]) + ")")
            conn.execute(f'CREATE TABLE "{table}" ({", ".join(defs)})')
            for row in rows[entry["db_id"]].get(table, []):
                marks = ", ".join("?" * len(row))
                conn.execute(f'INSERT INTO "{table}" VALUES ({marks})', row)
        conn.commit()
        conn.close()
    return root
