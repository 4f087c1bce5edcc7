"""Four-level difficulty classifier over gold clause trees.

Component counting mirrors the benchmark's reference script exactly, including
its accounting quirks (negated conditions and HAVING connectors feed the
aggregation count), so levels line up one-for-one.
"""
from __future__ import annotations

from ..catalog import DatabaseSchema
from .parser import ClauseTree, parse_sql

LEVELS = ("easy", "medium", "hard", "extra")


def _component1(tree: ClauseTree) -> int:
    count = 0
    if tree.where_conjuncts:
        count += 1
    if tree.group_by:
        count += 1
    if tree.order_by is not None:
        count += 1
    if tree.limit is not None:
        count += 1
    if tree.from_tables:
        count += len(tree.from_tables) - 1  # joins
    connectors = tree.join_connectors + tree.where_connectors + tree.having_connectors
    count += sum(1 for c in connectors if c == "or")
    count += sum(1 for c in tree.all_conditions() if c.op == "like")
    return count


def _component2(tree: ClauseTree) -> int:
    return len(tree.predicate_subqueries()) + (1 if tree.set_op is not None else 0)


def _others(tree: ClauseTree) -> int:
    agg = sum(1 for s in tree.select if s.agg != "none")
    agg += sum(1 for c in tree.where_conjuncts if c.negated)
    agg += sum(1 for g in tree.group_by if g.agg != "none")
    if tree.order_by is not None:
        for key in tree.order_by.keys:
            if key.left.agg != "none":
                agg += 1
            if key.right is not None and key.right.agg != "none":
                agg += 1
    agg += sum(1 for c in tree.having if c.negated)
    agg += len(tree.having_connectors)

    count = 0
    if agg > 1:
        count += 1
    if len(tree.select) > 1:
        count += 1
    if len(tree.where_conjuncts) > 1:
        count += 1
    if len(tree.group_by) > 1:
        count += 1
    return count


def hardness(tree: ClauseTree) -> str:
    c1 = _component1(tree)
    c2 = _component2(tree)
    others = _others(tree)

    if c1 <= 1 and others == 0 and c2 == 0:
        return "easy"
    if (others <= 2 and c1 <= 1 and c2 == 0) or (c1 <= 2 and others < 2 and c2 == 0):
        return "medium"
    if (
        (others > 2 and c1 <= 2 and c2 == 0)
        or (2 < c1 <= 3 and others <= 2 and c2 == 0)
        or (c1 <= 1 and others == 0 and c2 <= 1)
    ):
        return "hard"
    return "extra"


def hardness_of_sql(sql: str, schema: DatabaseSchema) -> str:
    return hardness(parse_sql(sql, schema))
