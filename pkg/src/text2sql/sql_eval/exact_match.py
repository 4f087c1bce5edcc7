"""Clause-set exact matching, value-insensitive, aligned with the benchmark's
reference evaluator semantics.

Canonicalization before comparison:
- literal and bare-column condition operands become anonymous value slots,
  recursively through predicate-position subqueries and set-operation branches
  (but not through FROM-position subqueries, which stay raw);
- DISTINCT markers are dropped and foreign-key-equivalent columns are rewritten
  to one canonical member, gated on the top-level FROM tables, at the top level
  and down set-operation branches only.

Comparison is set-wise per clause except where the reference evaluator is
order-sensitive: GROUP BY column lists, HAVING chains, ORDER BY keys, and the
structural equality of predicate-position subqueries. Join ON conditions are
not compared (they only feed the keyword set), and LIMIT compares by presence.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import replace

from ..catalog import DatabaseSchema
from ..errors import EvalError, SqlSyntaxError, UnknownColumnError
from .parser import (
    ClauseTree,
    ColUnit,
    Condition,
    OrderBy,
    SelectItem,
    ValueSlot,
    ValUnit,
    parse_sql,
)


def fk_canonical_map(schema: DatabaseSchema) -> dict[str, str]:
    """Map each foreign-key-connected column to one canonical member.

    Reproduces the reference construction: sets grow greedily in declaration
    order without transitive merging, and later sets overwrite shared keys.
    """
    groups: list[set[str]] = []
    for a, b in schema.foreign_keys:
        a, b = a.lower(), b.lower()
        target = None
        for group in groups:
            if a in group or b in group:
                target = group
                break
        if target is None:
            target = set()
            groups.append(target)
        target.add(a)
        target.add(b)
    mapping: dict[str, str] = {}
    for group in groups:
        members = sorted(group)
        for member in members:
            mapping[member] = members[0]
    return mapping


def _strip_values(tree: ClauseTree) -> ClauseTree:
    def strip_value(value):
        if value is None:
            return None
        if isinstance(value, ClauseTree):
            return _strip_values(value)
        return ValueSlot()

    def strip_cond(cond: Condition) -> Condition:
        return replace(cond, value1=strip_value(cond.value1), value2=strip_value(cond.value2))

    set_op = tree.set_op
    if set_op is not None:
        set_op = (set_op[0], _strip_values(set_op[1]))
    return replace(
        tree,
        join_conditions=tuple(strip_cond(c) for c in tree.join_conditions),
        where_conjuncts=tuple(strip_cond(c) for c in tree.where_conjuncts),
        having=tuple(strip_cond(c) for c in tree.having),
        set_op=set_op,
    )


def _rewrite_cols(tree: ClauseTree, valid: set[str], kmap: dict[str, str]) -> ClauseTree:
    def col(unit: ColUnit) -> ColUnit:
        column = unit.column
        if column in kmap and column in valid:
            column = kmap[column]
        return ColUnit(agg=unit.agg, column=column, distinct=False)

    def val(unit: ValUnit) -> ValUnit:
        return ValUnit(op=unit.op, left=col(unit.left),
                       right=col(unit.right) if unit.right else None)

    def cond(c: Condition) -> Condition:
        return replace(c, left=val(c.left))

    order = tree.order_by
    if order is not None:
        order = OrderBy(direction=order.direction, keys=tuple(val(k) for k in order.keys))
    set_op = tree.set_op
    if set_op is not None:
        set_op = (set_op[0], _rewrite_cols(set_op[1], valid, kmap))
    return replace(
        tree,
        select_distinct=False,
        select=tuple(SelectItem(agg=s.agg, val=val(s.val)) for s in tree.select),
        join_conditions=tuple(cond(c) for c in tree.join_conditions),
        where_conjuncts=tuple(cond(c) for c in tree.where_conjuncts),
        group_by=tuple(col(c) for c in tree.group_by),
        having=tuple(cond(c) for c in tree.having),
        order_by=order,
        set_op=set_op,
    )


def canonicalize(tree: ClauseTree, schema: DatabaseSchema) -> ClauseTree:
    kmap = fk_canonical_map(schema)
    valid = {
        key for key in schema.column_keys()
        if key.split(".")[0] in {t.lower() for t in tree.named_tables()}
    }
    return _rewrite_cols(_strip_values(tree), valid, kmap)


def _group_matches(pred: ClauseTree, gold: ClauseTree) -> bool:
    if bool(pred.group_by) != bool(gold.group_by):
        return False
    if not gold.group_by:
        return True
    return (
        pred.group_by == gold.group_by
        and pred.having == gold.having
        and pred.having_connectors == gold.having_connectors
    )


def _order_matches(pred: ClauseTree, gold: ClauseTree) -> bool:
    if (pred.order_by is None) != (gold.order_by is None):
        return False
    if gold.order_by is None:
        return True
    return pred.order_by == gold.order_by and (pred.limit is None) == (gold.limit is None)


def _keywords(tree: ClauseTree) -> set[str]:
    res: set[str] = set()
    if tree.where_conjuncts:
        res.add("where")
    if tree.group_by:
        res.add("group")
    if tree.having:
        res.add("having")
    if tree.order_by is not None:
        res.add("order")
        res.add(tree.order_by.direction)
    if tree.limit is not None:
        res.add("limit")
    if tree.set_op is not None:
        res.add(tree.set_op[0])
    connectors = tree.join_connectors + tree.where_connectors + tree.having_connectors
    if "or" in connectors:
        res.add("or")
    conds = tree.all_conditions()
    if any(c.negated for c in conds):
        res.add("not")
    if any(c.op == "in" for c in conds):
        res.add("in")
    if any(c.op == "like" for c in conds):
        res.add("like")
    return res


def _from_matches(pred: ClauseTree, gold: ClauseTree) -> bool:
    if sorted(pred.named_tables()) != sorted(gold.named_tables()):
        return False
    pred_subs = list(pred.subquery_tables())
    gold_subs = list(gold.subquery_tables())
    if len(pred_subs) != len(gold_subs):
        return False
    for sub in pred_subs:
        if sub in gold_subs:
            gold_subs.remove(sub)
        else:
            return False
    return True


def _set_op_matches(pred: ClauseTree, gold: ClauseTree) -> bool:
    if (pred.set_op is None) != (gold.set_op is None):
        return False
    if gold.set_op is None:
        return True
    if pred.set_op[0] != gold.set_op[0]:
        return False
    return trees_match(pred.set_op[1], gold.set_op[1])


def trees_match(pred: ClauseTree, gold: ClauseTree) -> bool:
    """Compare two canonicalized trees clause by clause."""
    if Counter(pred.select) != Counter(gold.select):
        return False
    if Counter(pred.where_conjuncts) != Counter(gold.where_conjuncts):
        return False
    if set(pred.where_connectors) != set(gold.where_connectors):
        return False
    if not _group_matches(pred, gold):
        return False
    if not _order_matches(pred, gold):
        return False
    if not _set_op_matches(pred, gold):
        return False
    if _keywords(pred) != _keywords(gold):
        return False
    return _from_matches(pred, gold)


def exact_set_match(pred_sql: str, gold_sql: str, schema: DatabaseSchema) -> bool:
    """True iff every clause of pred matches gold as a set, ignoring values.

    An unparsable prediction is simply false; an unparsable gold query is a
    corpus problem and raises EvalError.
    """
    try:
        gold = parse_sql(gold_sql, schema)
    except (SqlSyntaxError, UnknownColumnError) as exc:
        raise EvalError(f"gold SQL does not parse: {exc}") from exc
    try:
        pred = parse_sql(pred_sql, schema)
    except (SqlSyntaxError, UnknownColumnError):
        return False
    return trees_match(canonicalize(pred, schema), canonicalize(gold, schema))
