"""Six-way failure taxonomy for predictions that miss on execution accuracy.

Categories are assigned by a priority rule cascade: invalid SQL first, then
schema linking (mismatched semantic column references), join structure, GROUP
BY, nesting/set operations, and a catch-all. Exactly one category per failure.
"""
from __future__ import annotations

import sqlite3
from collections import Counter
from enum import Enum
from pathlib import Path

from .catalog import DatabaseSchema
from .errors import EvalError, SqlSyntaxError, UnknownColumnError
from .sql_eval.parser import ClauseTree, parse_sql


class ErrorCategory(str, Enum):
    SCHEMA_LINKING = "SchemaLinking"
    JOIN = "Join"
    GROUP_BY = "GroupBy"
    NESTING_SET_OPS = "NestingSetOps"
    INVALID_SQL = "InvalidSql"
    MISC = "Misc"


def _engine_rejects(sql: str, db_path: Path | str) -> bool:
    uri = f"file:{Path(db_path)}?mode=ro"
    try:
        conn = sqlite3.connect(uri, uri=True)
        try:
            conn.execute(f"EXPLAIN {sql}")
        finally:
            conn.close()
    except sqlite3.Error:
        return True
    return False


def semantic_column_refs(tree: ClauseTree) -> set[str]:
    """Column references outside join conditions, recursively, lowercased."""
    refs: set[str] = set()

    def add_val(val):
        refs.add(val.left.column.lower())
        if val.right is not None:
            refs.add(val.right.column.lower())

    for item in tree.select:
        add_val(item.val)
    for cond in tree.where_conjuncts + tree.having:
        add_val(cond.left)
        for value in (cond.value1, cond.value2):
            if isinstance(value, ClauseTree):
                refs |= semantic_column_refs(value)
            elif value is not None and hasattr(value, "column"):
                refs.add(value.column.lower())
    for col in tree.group_by:
        refs.add(col.column.lower())
    if tree.order_by is not None:
        for key in tree.order_by.keys:
            add_val(key)
    for sub in tree.subquery_tables():
        refs |= semantic_column_refs(sub)
    for cond in tree.join_conditions:
        for value in (cond.value1, cond.value2):
            if isinstance(value, ClauseTree):
                refs |= semantic_column_refs(value)
    if tree.set_op is not None:
        refs |= semantic_column_refs(tree.set_op[1])
    return refs


def _all_tables(tree: ClauseTree) -> Counter:
    tables = Counter(t.lower() for t in tree.named_tables())
    for sub in tree.subquery_tables() + tree.predicate_subqueries():
        tables += _all_tables(sub)
    if tree.set_op is not None:
        tables += _all_tables(tree.set_op[1])
    return tables


def _join_pairs(tree: ClauseTree) -> set[tuple[str, str]]:
    pairs: set[tuple[str, str]] = set()
    for cond in tree.join_conditions:
        if cond.op == "=" and hasattr(cond.value1, "column"):
            a = cond.left.left.column.lower()
            b = cond.value1.column.lower()
            pairs.add(tuple(sorted((a, b))))
    for sub in tree.subquery_tables() + tree.predicate_subqueries():
        pairs |= _join_pairs(sub)
    if tree.set_op is not None:
        pairs |= _join_pairs(tree.set_op[1])
    return pairs


def _nesting_depth(tree: ClauseTree) -> int:
    depths = [0]
    for sub in tree.predicate_subqueries() + tree.subquery_tables():
        depths.append(1 + _nesting_depth(sub))
    if tree.set_op is not None:
        depths.append(_nesting_depth(tree.set_op[1]))
    return max(depths)


def _set_ops(tree: ClauseTree) -> Counter:
    ops: Counter = Counter()
    if tree.set_op is not None:
        ops[tree.set_op[0]] += 1
        ops += _set_ops(tree.set_op[1])
    for sub in tree.predicate_subqueries() + tree.subquery_tables():
        ops += _set_ops(sub)
    return ops


def classify_error(
    pred_sql: str,
    gold_sql: str,
    schema: DatabaseSchema,
    db_path: Path | str | None = None,
) -> ErrorCategory:
    """Assign the first matching category, in priority order."""
    try:
        gold = parse_sql(gold_sql, schema)
    except (SqlSyntaxError, UnknownColumnError) as exc:
        raise EvalError(f"gold SQL does not parse: {exc}") from exc

    try:
        pred = parse_sql(pred_sql, schema)
    except (SqlSyntaxError, UnknownColumnError):
        return ErrorCategory.INVALID_SQL
    if db_path is not None and _engine_rejects(pred_sql, db_path):
        return ErrorCategory.INVALID_SQL

    if semantic_column_refs(pred) != semantic_column_refs(gold):
        return ErrorCategory.SCHEMA_LINKING
    if _all_tables(pred) != _all_tables(gold) or _join_pairs(pred) != _join_pairs(gold):
        return ErrorCategory.JOIN
    pred_group = Counter(c.column.lower() for c in pred.group_by)
    gold_group = Counter(c.column.lower() for c in gold.group_by)
    if pred_group != gold_group:
        return ErrorCategory.GROUP_BY
    if _nesting_depth(pred) != _nesting_depth(gold) or _set_ops(pred) != _set_ops(gold):
        return ErrorCategory.NESTING_SET_OPS
    return ErrorCategory.MISC


def category_histogram(categories) -> dict[str, int]:
    """Counts per category, zeros included; order is the cascade order."""
    counts = Counter(c.value if isinstance(c, ErrorCategory) else c for c in categories)
    return {cat.value: counts.get(cat.value, 0) for cat in ErrorCategory}


def render_histogram(histogram: dict[str, int]) -> str:
    total = sum(histogram.values())
    width = max(len(k) for k in histogram)
    lines = [f"{'category':<{width}}  count  share"]
    for name, count in histogram.items():
        share = f"{100.0 * count / total:.1f}%" if total else "-"
        lines.append(f"{name:<{width}}  {count:>5}  {share:>6}")
    lines.append(f"{'total':<{width}}  {total:>5}")
    return "\n".join(lines)
