"""Perturbation corpus for differential exact-match testing.

Transforms are plain string edits, independent of both SQL parsers, applied
conservatively (a transform that does not cleanly apply is skipped). Each pair
carries its perturbation kind plus two tags:
- value_insensitive: only literal/limit values changed, so EM must stay true;
- semantics_preserving: the result set provably cannot change (identity,
  where-conjunct swap, inner-join order swap).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

CLAUSE_STOPS = (" where ", " group by ", " having ", " order by ", " limit ",
                " union ", " intersect ", " except ")


@dataclass(frozen=True)
class Pair:
    db_id: str
    gold: str
    pred: str
    kind: str
    value_insensitive: bool = False
    semantics_preserving: bool = False


def _depth0_find(text: str, needle: str, start: int = 0) -> int:
    """Index of needle at paren depth zero, outside quotes; -1 if absent."""
    depth = 0
    i = start
    lower = text.lower()
    needle = needle.lower()
    while i < len(text):
        ch = text[i]
        if ch == "'":
            i = text.find("'", i + 1)
            if i < 0:
                return -1
            i += 1
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and lower.startswith(needle, i):
            return i
        i += 1
    return -1


def _split_top_commas(text: str) -> list[str]:
    parts = []
    depth = 0
    buf = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "'":
            j = text.find("'", i + 1)
            buf.append(text[i:j + 1])
            i = j + 1
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    parts.append("".join(buf))
    return parts


def _select_span(sql: str) -> tuple[int, int] | None:
    lower = sql.lower()
    if not lower.startswith("select "):
        return None
    start = len("select ")
    if lower.startswith("select distinct ", 0):
        start = len("select distinct ")
    end = _depth0_find(sql, " from ", start)
    if end < 0:
        return None
    return start, end


def reorder_select(sql: str) -> str | None:
    span = _select_span(sql)
    if span is None:
        return None
    start, end = span
    parts = _split_top_commas(sql[start:end])
    if len(parts) < 2:
        return None
    rotated = parts[1:] + parts[:1]
    return sql[:start] + ",".join(rotated) + sql[end:]


def drop_select_column(sql: str) -> str | None:
    span = _select_span(sql)
    if span is None:
        return None
    start, end = span
    parts = _split_top_commas(sql[start:end])
    if len(parts) < 2:
        return None
    return sql[:start] + ",".join(parts[:-1]).rstrip() + " " + sql[end:].lstrip(" ")


def _where_span(sql: str) -> tuple[int, int] | None:
    start = _depth0_find(sql, " where ")
    if start < 0:
        return None
    start += len(" where ")
    end = len(sql)
    for stop in CLAUSE_STOPS:
        pos = _depth0_find(sql, stop, start)
        if 0 <= pos < end:
            end = pos
    return start, end


def reorder_where(sql: str) -> str | None:
    span = _where_span(sql)
    if span is None:
        return None
    start, end = span
    clause = sql[start:end]
    if " between " in clause.lower() or _depth0_find(clause, " or ") >= 0:
        return None
    pos = _depth0_find(clause, " and ")
    if pos < 0 or _depth0_find(clause, " and ", pos + 5) >= 0:
        return None
    left, right = clause[:pos], clause[pos + len(" and "):]
    return sql[:start] + right.strip() + " AND " + left.strip() + sql[end:]


_NUMBER_RE = re.compile(r"(?<![\w.'])(\d+(?:\.\d+)?)(?![\w.])")
_STRING_RE = re.compile(r"'(?:[^']|'')*'")


def change_literals(sql: str) -> str | None:
    changed = False

    def bump(match):
        nonlocal changed
        changed = True
        value = match.group(1)
        if "." in value:
            return str(float(value) + 17.5)
        return str(int(value) + 17)

    out = _NUMBER_RE.sub(bump, sql)
    if not changed:
        def swap(match):
            nonlocal changed
            changed = True
            return "'Xyzzy'"

        out = _STRING_RE.sub(swap, sql, count=1)
    return out if changed else None


def change_string_literal(sql: str) -> str | None:
    if not _STRING_RE.search(sql):
        return None
    return _STRING_RE.sub("'Other Value'", sql, count=1)


_AGG_RE = re.compile(r"\b(avg|max|min|sum)\s*\(", re.IGNORECASE)
_AGG_SWAP = {"avg": "max", "max": "min", "min": "sum", "sum": "avg"}


def swap_aggregation(sql: str) -> str | None:
    match = _AGG_RE.search(sql)
    if not match:
        return None
    replacement = _AGG_SWAP[match.group(1).lower()] + "("
    return sql[:match.start()] + replacement + sql[match.end():]


_DIRECTION_RE = re.compile(r"\b(DESC|ASC)\b", re.IGNORECASE)


def flip_direction(sql: str) -> str | None:
    match = _DIRECTION_RE.search(sql)
    if not match:
        return None
    flipped = "ASC" if match.group(1).upper() == "DESC" else "DESC"
    return sql[:match.start()] + flipped + sql[match.end():]


def toggle_distinct(sql: str) -> str | None:
    if sql.lower().startswith("select distinct "):
        return "SELECT " + sql[len("select distinct "):]
    if sql.lower().startswith("select "):
        return "SELECT DISTINCT " + sql[len("select "):]
    return None


_COMPARISON_RE = re.compile(r"(?<=\s)(>=|<=|>|<)(?=\s)")
_COMPARISON_SWAP = {">": "<", "<": ">", ">=": "<=", "<=": ">="}


def flip_comparison(sql: str) -> str | None:
    match = _COMPARISON_RE.search(sql)
    if not match:
        return None
    return sql[:match.start()] + _COMPARISON_SWAP[match.group(1)] + sql[match.end():]


_LIMIT_RE = re.compile(r"\bLIMIT\s+(\d+)", re.IGNORECASE)


def change_limit(sql: str) -> str | None:
    match = _LIMIT_RE.search(sql)
    if not match:
        return None
    new_value = int(match.group(1)) + 2
    return sql[:match.start()] + f"LIMIT {new_value}" + sql[match.end():]


_SIMPLE_JOIN_RE = re.compile(
    r"FROM (\w+) AS (T\d) JOIN (\w+) AS (T\d) ON ", re.IGNORECASE
)


def swap_join_order(sql: str) -> str | None:
    if sql.upper().count(" JOIN ") != 1:
        return None
    match = _SIMPLE_JOIN_RE.search(sql)
    if not match:
        return None
    t1, a1, t2, a2 = match.groups()
    return sql[:match.start()] + f"FROM {t2} AS {a2} JOIN {t1} AS {a1} ON " + sql[match.end():]


TRANSFORMS = (
    ("identity", lambda s: s, True, True),
    ("literal", change_literals, True, False),
    ("string_literal", change_string_literal, True, False),
    ("limit_value", change_limit, True, False),
    ("select_reorder", reorder_select, False, False),
    ("where_reorder", reorder_where, False, True),
    ("join_order", swap_join_order, False, True),
    ("drop_column", drop_select_column, False, False),
    ("swap_agg", swap_aggregation, False, False),
    ("direction_flip", flip_direction, False, False),
    ("distinct_toggle", toggle_distinct, False, False),
    ("comparison_flip", flip_comparison, False, False),
)


def build_pairs(items) -> list[Pair]:
    pairs: list[Pair] = []
    for item in items:
        for kind, fn, value_insensitive, preserving in TRANSFORMS:
            perturbed = fn(item.gold_sql)
            if perturbed is None:
                continue
            pairs.append(
                Pair(
                    db_id=item.db_id,
                    gold=item.gold_sql,
                    pred=perturbed,
                    kind=kind,
                    value_insensitive=value_insensitive,
                    semantics_preserving=preserving,
                )
            )
    return pairs
