"""Execution accuracy over read-only SQLite databases.

Result comparison treats rows as a multiset (duplicates significant, column
order within rows significant) and becomes order-sensitive when the gold query
orders its top level. Predicted-query failures and timeouts score false; gold
failures raise EvalError because they indicate a corpus problem.
"""
from __future__ import annotations

import re
import sqlite3
import threading
import time
from collections import Counter
from pathlib import Path

from ..errors import EvalError

DEFAULT_TIMEOUT_S = 30.0

_STRING_RE = re.compile(r"'(?:[^']|'')*'|\"[^\"]*\"")


def run_query(db_path: Path | str, sql: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> tuple[list[tuple], float]:
    """Execute read-only and return (rows, elapsed milliseconds)."""
    uri = f"file:{Path(db_path)}?mode=ro"
    conn = sqlite3.connect(uri, uri=True, check_same_thread=False)
    conn.text_factory = lambda raw: raw.decode("utf-8", "replace")
    timer = threading.Timer(timeout_s, conn.interrupt)
    timer.daemon = True
    started = time.perf_counter()
    try:
        timer.start()
        rows = conn.execute(sql).fetchall()
    finally:
        timer.cancel()
        conn.close()
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return [tuple(r) for r in rows], elapsed_ms


def gold_orders_output(gold_sql: str) -> bool:
    """True when the gold query has a top-level ORDER BY (paren-depth zero)."""
    text = _STRING_RE.sub("''", gold_sql.lower())
    depth = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and text.startswith("order", i):
            before_ok = i == 0 or not (text[i - 1].isalnum() or text[i - 1] == "_")
            rest = text[i + 5:].lstrip()
            if before_ok and rest.startswith("by"):
                return True
        i += 1
    return False


def execution_match(
    pred_sql: str,
    gold_sql: str,
    db_path: Path | str,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> tuple[bool, float, float]:
    """Compare result sets; returns (match, gold_ms, pred_ms)."""
    if not Path(db_path).exists():
        raise EvalError(f"database file not readable: {db_path}")
    try:
        gold_rows, gold_ms = run_query(db_path, gold_sql, timeout_s)
    except sqlite3.Error as exc:
        raise EvalError(f"gold SQL failed to execute: {exc}") from exc
    if not pred_sql:
        return False, gold_ms, 0.0
    try:
        pred_rows, pred_ms = run_query(db_path, pred_sql, timeout_s)
    except sqlite3.Error:
        return False, gold_ms, 0.0
    if gold_orders_output(gold_sql):
        return pred_rows == gold_rows, gold_ms, pred_ms
    return Counter(pred_rows) == Counter(gold_rows), gold_ms, pred_ms
