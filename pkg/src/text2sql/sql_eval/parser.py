"""SQL parsing into clause trees over the benchmark grammar.

The grammar covers the benchmark subset: SELECT with aggregations, DISTINCT
and two-operand arithmetic, FROM with bare JOINs or a single subquery, WHERE
and HAVING condition chains, GROUP BY, ORDER BY, LIMIT, set operations, and
subqueries at predicate positions. Aliases (T1, T2, ...) resolve to table
names; all column keys are stored lowercase as "table.column".
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..catalog import DatabaseSchema
from ..errors import SqlSyntaxError, UnknownColumnError

AGG_OPS = ("none", "max", "min", "count", "sum", "avg")
ARITH_OPS = {"-", "+", "*", "/"}
COND_OPS = ("=", ">", "<", ">=", "<=", "!=", "between", "in", "like", "is", "exists")
ORDER_DIRS = ("asc", "desc")
SET_OPS = ("intersect", "union", "except")
CLAUSE_KEYWORDS = (
    "select", "from", "where", "group", "order", "limit",
    "intersect", "union", "except", "having", "on", "join", "as", "and", "or",
)

_TOKEN_RE = re.compile(
    r"""
      \s+
    | '(?:[^']|'')*'
    | "[^"]*"
    | [A-Za-z_][A-Za-z0-9_$]*(?:\.(?:[A-Za-z_][A-Za-z0-9_$]*|\*))?
    | \d+\.\d*|\.\d+|\d+
    | !=|>=|<=|<>
    | [(),;*=<>+\-/%]
    """,
    re.VERBOSE,
)


def tokenize(sql: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(sql):
        match = _TOKEN_RE.match(sql, pos)
        if not match:
            raise SqlSyntaxError(f"unexpected character {sql[pos]!r}", len(tokens))
        text = match.group(0)
        pos = match.end()
        if text.isspace():
            continue
        if text[0] in "'\"":
            tokens.append(text)  # string literals keep their case
        else:
            tokens.append(text.lower())
    return tokens


@dataclass(frozen=True)
class ColUnit:
    agg: str
    column: str  # "table.column" or "*"
    distinct: bool = False


@dataclass(frozen=True)
class ValUnit:
    op: str  # "none" or an arithmetic operator
    left: ColUnit
    right: ColUnit | None = None


@dataclass(frozen=True)
class SelectItem:
    agg: str
    val: ValUnit


@dataclass(frozen=True)
class Literal:
    kind: str  # "num" | "str"
    value: float | str


@dataclass(frozen=True)
class ValueSlot:
    """Canonical stand-in for a literal or column operand when values are ignored."""


Value = Union[Literal, ColUnit, "ClauseTree", ValueSlot, None]


@dataclass(frozen=True)
class Condition:
    negated: bool
    op: str
    left: ValUnit
    value1: Value = None
    value2: Value = None


@dataclass(frozen=True)
class OrderBy:
    direction: str
    keys: tuple[ValUnit, ...]


@dataclass(frozen=True)
class ClauseTree:
    select_distinct: bool
    select: tuple[SelectItem, ...]
    from_tables: tuple[Union[str, "ClauseTree"], ...]
    join_conditions: tuple[Condition, ...]
    join_connectors: tuple[str, ...]
    where_conjuncts: tuple[Condition, ...]
    where_connectors: tuple[str, ...]
    group_by: tuple[ColUnit, ...]
    having: tuple[Condition, ...]
    having_connectors: tuple[str, ...]
    order_by: OrderBy | None
    limit: int | None
    set_op: tuple[str, "ClauseTree"] | None

    def named_tables(self) -> tuple[str, ...]:
        return tuple(t for t in self.from_tables if isinstance(t, str))

    def subquery_tables(self) -> tuple["ClauseTree", ...]:
        return tuple(t for t in self.from_tables if isinstance(t, ClauseTree))

    def predicate_subqueries(self) -> tuple["ClauseTree", ...]:
        found: list[ClauseTree] = []
        for cond in self.join_conditions + self.where_conjuncts + self.having:
            for value in (cond.value1, cond.value2):
                if isinstance(value, ClauseTree):
                    found.append(value)
        return tuple(found)

    def all_conditions(self) -> tuple[Condition, ...]:
        return self.join_conditions + self.where_conjuncts + self.having


class _Parser:
    def __init__(self, tokens: list[str], schema: DatabaseSchema):
        self.toks = tokens
        self.schema = schema
        self.idx = 0
        self.aliases = self._alias_map()

    # -- token helpers -------------------------------------------------

    def peek(self, offset: int = 0) -> str | None:
        i = self.idx + offset
        return self.toks[i] if i < len(self.toks) else None

    def advance(self) -> str:
        tok = self.peek()
        if tok is None:
            raise SqlSyntaxError("unexpected end of query", self.idx)
        self.idx += 1
        return tok

    def expect(self, token: str) -> None:
        tok = self.advance()
        if tok != token:
            raise SqlSyntaxError(f"expected {token!r}, found {tok!r}", self.idx - 1)

    # -- alias resolution ----------------------------------------------

    def _alias_map(self) -> dict[str, str]:
        aliases: dict[str, str] = {}
        for i, tok in enumerate(self.toks):
            if tok == "as" and 0 < i < len(self.toks) - 1:
                aliases[self.toks[i + 1]] = self.toks[i - 1]
        for table, _ in self.schema.tables:
            if table.lower() in aliases:
                raise SqlSyntaxError(f"alias shadows table name {table!r}", 0)
            aliases[table.lower()] = table.lower()
        return aliases

    def resolve_table(self, name: str) -> str:
        if name not in self.aliases:
            raise SqlSyntaxError(f"unknown table or alias {name!r}", self.idx)
        resolved = self.aliases[name]
        if self.schema.resolve_table(resolved) is None:
            raise SqlSyntaxError(f"unknown table {resolved!r}", self.idx)
        return resolved

    def resolve_column(self, token: str, scope: tuple[str, ...]) -> str:
        if token == "*":
            return "*"
        if "." in token:
            qualifier, _, column = token.partition(".")
            table = self.resolve_table(qualifier)
            if column != "*" and not self.schema.has_column(table, column):
                raise UnknownColumnError(f"{qualifier}.{column}")
            return f"{table}.{column}"
        for table in scope:
            if self.schema.has_column(table, token):
                return f"{table}.{token}"
        raise UnknownColumnError(token)

    # -- grammar -------------------------------------------------------

    def parse_query(self) -> ClauseTree:
        block = False
        if self.peek() == "(":
            block = True
            self.advance()
        tree = self._parse_select_core()
        if block:
            self.expect(")")
        while self.peek() == ";":
            self.advance()
        if self.peek() in SET_OPS:
            op = self.advance()
            rest = self.parse_query()
            tree = _replace(tree, set_op=(op, rest))
        return tree

    def _parse_select_core(self) -> ClauseTree:
        self.expect("select")
        distinct = False
        if self.peek() == "distinct":
            distinct = True
            self.advance()

        raw_items: list[tuple[str, list[str]]] = []
        while True:
            agg = "none"
            if self.peek() in AGG_OPS[1:] and self.peek(1) == "(":
                agg = self.advance()
            expr_tokens = self._consume_expr_tokens()
            raw_items.append((agg, expr_tokens))
            if self.peek() == ",":
                self.advance()
                continue
            break

        self.expect("from")
        scope, from_tables, join_conds, join_conns = self._parse_from()

        select_items = tuple(
            SelectItem(agg=agg, val=self._build_val_unit(tokens, scope))
            for agg, tokens in raw_items
        )
        join_conditions = tuple(self._build_condition(c, scope) for c in join_conds)

        where_conds: tuple[Condition, ...] = ()
        where_conns: tuple[str, ...] = ()
        if self.peek() == "where":
            self.advance()
            where_conds, where_conns = self._parse_condition_chain(scope)

        group: tuple[ColUnit, ...] = ()
        if self.peek() == "group":
            self.advance()
            self.expect("by")
            cols: list[ColUnit] = []
            while True:
                cols.append(self._parse_col_unit(scope))
                if self.peek() == ",":
                    self.advance()
                    continue
                break
            group = tuple(cols)

        having_conds: tuple[Condition, ...] = ()
        having_conns: tuple[str, ...] = ()
        if self.peek() == "having":
            self.advance()
            having_conds, having_conns = self._parse_condition_chain(scope)

        order: OrderBy | None = None
        if self.peek() == "order":
            self.advance()
            self.expect("by")
            keys: list[ValUnit] = []
            direction = "asc"
            while True:
                keys.append(self._build_val_unit(self._consume_expr_tokens(), scope))
                if self.peek() in ORDER_DIRS:
                    direction = self.advance()
                if self.peek() == ",":
                    self.advance()
                    continue
                break
            order = OrderBy(direction=direction, keys=tuple(keys))

        limit: int | None = None
        if self.peek() == "limit":
            self.advance()
            tok = self.advance()
            try:
                limit = int(tok)
            except ValueError:
                raise SqlSyntaxError(f"bad LIMIT value {tok!r}", self.idx - 1) from None

        return ClauseTree(
            select_distinct=distinct,
            select=select_items,
            from_tables=from_tables,
            join_conditions=join_conditions,
            join_connectors=join_conns,
            where_conjuncts=where_conds,
            where_connectors=where_conns,
            group_by=group,
            having=having_conds,
            having_connectors=having_conns,
            order_by=order,
            limit=limit,
            set_op=None,
        )

    _EXPR_STOP = frozenset(
        (",", ";", ")", "=", ">", "<", ">=", "<=", "!=", "<>", "not", "between",
         "in", "like", "is", "exists", "asc", "desc", "and", "or", "by",
         "select", "from", "where", "group", "order", "limit", "having",
         "on", "join", "intersect", "union", "except")
    )

    def _consume_expr_tokens(self) -> list[str]:
        """Grab the token slice of one expression, balanced on parentheses."""
        out: list[str] = []
        depth = 0
        while True:
            tok = self.peek()
            if tok is None:
                break
            if depth == 0 and tok in self._EXPR_STOP:
                break
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
            out.append(self.advance())
        if not out:
            raise SqlSyntaxError("empty expression", self.idx)
        return out

    def _parse_from(self):
        scope: list[str] = []
        sources: list[str | ClauseTree] = []
        join_conds: list[tuple] = []
        join_conns: list[str] = []
        while True:
            if self.peek() == "(":
                self.advance()
                if self.peek() != "select":
                    raise SqlSyntaxError("expected subquery in FROM", self.idx)
                sub = self._parse_select_core()
                while self.peek() in SET_OPS:
                    op = self.advance()
                    sub = _replace(sub, set_op=(op, self.parse_query()))
                self.expect(")")
                if self.peek() == "as":
                    self.advance()
                    self.advance()
                sources.append(sub)
            else:
                name = self.advance()
                table = self.resolve_table(name)
                if self.peek() == "as":
                    self.advance()
                    self.advance()
                sources.append(table)
                scope.append(table)
            if self.peek() == "on":
                self.advance()
                conds, conns = self._collect_condition_chain()
                if join_conds:
                    join_conns.append("and")
                join_conds.extend(conds)
                join_conns.extend(conns)
            if self.peek() == "join":
                self.advance()
                continue
            break
        resolved = tuple(sources)
        return tuple(scope), resolved, tuple(join_conds), tuple(join_conns)

    # Raw condition collection happens during FROM parsing (before the full
    # scope exists); building into Condition objects happens afterwards.

    def _collect_condition_chain(self) -> tuple[list[tuple], list[str]]:
        conds: list[tuple] = []
        conns: list[str] = []
        while True:
            conds.append(self._collect_condition())
            if self.peek() in ("and", "or"):
                conns.append(self.advance())
                continue
            break
        return conds, conns

    def _collect_condition(self) -> tuple:
        left = self._consume_expr_tokens()
        negated = False
        if self.peek() == "not":
            negated = True
            self.advance()
        op = self.advance()
        if op not in COND_OPS:
            raise SqlSyntaxError(f"unknown operator {op!r}", self.idx - 1)
        value1 = self._collect_value()
        value2 = None
        if op == "between":
            self.expect("and")
            value2 = self._collect_value()
        return (negated, op, left, value1, value2)

    def _collect_value(self):
        tok = self.peek()
        if tok is None:
            raise SqlSyntaxError("missing condition value", self.idx)
        if tok == "(":
            self.advance()
            if self.peek() == "select":
                sub = self._parse_select_core()
                while self.peek() in SET_OPS:
                    op = self.advance()
                    sub = _replace(sub, set_op=(op, self.parse_query()))
                self.expect(")")
                return ("subquery", sub)
            inner = self._collect_value()
            self.expect(")")
            return inner
        if tok[0] in "'\"":
            self.advance()
            return ("literal", Literal(kind="str", value=_unquote(tok)))
        try:
            number = float(tok)
        except ValueError:
            return ("colunit", self._consume_expr_tokens())
        self.advance()
        return ("literal", Literal(kind="num", value=number))

    def _parse_condition_chain(self, scope) -> tuple[tuple[Condition, ...], tuple[str, ...]]:
        raw, conns = self._collect_condition_chain()
        return tuple(self._build_condition(r, scope) for r in raw), tuple(conns)

    def _build_condition(self, raw: tuple, scope) -> Condition:
        negated, op, left_tokens, value1, value2 = raw
        return Condition(
            negated=negated,
            op=op,
            left=self._build_val_unit(left_tokens, scope),
            value1=self._build_value(value1, scope),
            value2=self._build_value(value2, scope),
        )

    def _build_value(self, raw, scope) -> Value:
        if raw is None:
            return None
        tag, payload = raw
        if tag == "literal":
            return payload
        if tag == "subquery":
            return payload
        val = self._build_val_unit(payload, scope)
        if val.op != "none":
            raise SqlSyntaxError("arithmetic not allowed as condition value", self.idx)
        return val.left

    def _build_val_unit(self, tokens: list[str], scope) -> ValUnit:
        sub = _ExprReader(tokens, self, scope)
        unit = sub.read_val_unit()
        if not sub.done():
            raise SqlSyntaxError(f"trailing tokens in expression: {tokens}", self.idx)
        return unit

    def _parse_col_unit(self, scope) -> ColUnit:
        tokens = self._consume_expr_tokens()
        unit = self._build_val_unit(tokens, scope)
        if unit.op != "none":
            raise SqlSyntaxError("arithmetic not allowed here", self.idx)
        return unit.left


class _ExprReader:
    """Builds a ValUnit out of a balanced expression token slice."""

    def __init__(self, tokens: list[str], parser: _Parser, scope):
        self.toks = tokens
        self.i = 0
        self.parser = parser
        self.scope = scope

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> str:
        if self.done():
            raise SqlSyntaxError("truncated expression", self.parser.idx)
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, token: str) -> None:
        tok = self.take()
        if tok != token:
            raise SqlSyntaxError(f"expected {token!r} in expression, found {tok!r}",
                                 self.parser.idx)

    def read_val_unit(self) -> ValUnit:
        block = False
        if self.peek() == "(":
            block = True
            self.take()
        left = self.read_col_unit()
        op = "none"
        right = None
        nxt = self.peek()
        if nxt in ARITH_OPS:
            op = self.take()
            right = self.read_col_unit()
        if block:
            self.expect(")")
        return ValUnit(op=op, left=left, right=right)

    def read_col_unit(self) -> ColUnit:
        block = False
        if self.peek() == "(":
            block = True
            self.take()
        agg = "none"
        distinct = False
        if self.peek() in AGG_OPS[1:]:
            agg = self.take()
            self.expect("(")
            if self.peek() == "distinct":
                distinct = True
                self.take()
            column = self.parser.resolve_column(self.take(), self.scope)
            self.expect(")")
            if block:
                self.expect(")")
            return ColUnit(agg=agg, column=column, distinct=distinct)
        if self.peek() == "distinct":
            distinct = True
            self.take()
        column = self.parser.resolve_column(self.take(), self.scope)
        if block:
            self.expect(")")
        return ColUnit(agg=agg, column=column, distinct=distinct)


def _replace(tree: ClauseTree, **kwargs) -> ClauseTree:
    from dataclasses import replace

    return replace(tree, **kwargs)


def _unquote(token: str) -> str:
    if token[0] == "'":
        return token[1:-1].replace("''", "'")
    return token[1:-1]


def parse_sql(sql: str, schema: DatabaseSchema) -> ClauseTree:
    """Parse benchmark-grammar SQL against a schema.

    Raises SqlSyntaxError for out-of-grammar text and UnknownColumnError for
    unresolvable column references.
    """
    tokens = tokenize(sql)
    if not tokens:
        raise SqlSyntaxError("empty query", 0)
    parser = _Parser(tokens, schema)
    tree = parser.parse_query()
    if parser.peek() is not None:
        raise SqlSyntaxError(f"trailing tokens after query: {parser.peek()!r}", parser.idx)
    return tree


def render_sql(tree: ClauseTree) -> str:
    """Emit canonical SQL for a clause tree with fully qualified columns."""

    def col(unit: ColUnit) -> str:
        text = unit.column
        inner = f"DISTINCT {text}" if unit.distinct else text
        if unit.agg != "none":
            return f"{unit.agg}({inner})"
        return inner

    def val(unit: ValUnit) -> str:
        if unit.op == "none":
            return col(unit.left)
        return f"{col(unit.left)} {unit.op} {col(unit.right)}"

    def sel(item: SelectItem) -> str:
        if item.agg != "none":
            return f"{item.agg}({val(item.val)})"
        return val(item.val)

    def lit(value: Value) -> str:
        if isinstance(value, Literal):
            if value.kind == "num":
                num = value.value
                return str(int(num)) if float(num).is_integer() else repr(num)
            escaped = str(value.value).replace("'", "''")
            return f"'{escaped}'"
        if isinstance(value, ClauseTree):
            return f"({render_sql(value)})"
        if isinstance(value, ColUnit):
            return col(value)
        raise ValueError(f"cannot render value {value!r}")

    def cond_chain(conds, conns) -> str:
        parts = []
        for i, c in enumerate(conds):
            text = f"{val(c.left)} "
            if c.negated:
                text += "NOT "
            if c.op == "between":
                text += f"BETWEEN {lit(c.value1)} AND {lit(c.value2)}"
            else:
                text += f"{c.op.upper()} {lit(c.value1)}"
            if i:
                parts.append(conns[i - 1].upper())
            parts.append(text)
        return " ".join(parts)

    pieces = ["SELECT"]
    if tree.select_distinct:
        pieces.append("DISTINCT")
    pieces.append(" , ".join(sel(s) for s in tree.select))
    from_parts = []
    for source in tree.from_tables:
        if isinstance(source, str):
            from_parts.append(source)
        else:
            from_parts.append(f"({render_sql(source)})")
    joined = from_parts[0]
    for extra in from_parts[1:]:
        joined += f" JOIN {extra}"
    if tree.join_conditions:
        joined += " ON " + cond_chain(tree.join_conditions, tree.join_connectors)
    pieces.append(f"FROM {joined}")
    if tree.where_conjuncts:
        pieces.append("WHERE " + cond_chain(tree.where_conjuncts, tree.where_connectors))
    if tree.group_by:
        pieces.append("GROUP BY " + " , ".join(col(c) for c in tree.group_by))
    if tree.having:
        pieces.append("HAVING " + cond_chain(tree.having, tree.having_connectors))
    if tree.order_by:
        keys = " , ".join(val(k) for k in tree.order_by.keys)
        pieces.append(f"ORDER BY {keys} {tree.order_by.direction.upper()}")
    if tree.limit is not None:
        pieces.append(f"LIMIT {tree.limit}")
    text = " ".join(pieces)
    if tree.set_op:
        op, rest = tree.set_op
        text += f" {op.upper()} {render_sql(rest)}"
    return text
