"""SQL evaluation: parsing, exact-set match, execution accuracy, VES, hardness."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..catalog import DatabaseSchema
from ..errors import EvalError, SqlSyntaxError, UnknownColumnError
from .exact_match import canonicalize, exact_set_match, fk_canonical_map, trees_match
from .execution import (
    DEFAULT_TIMEOUT_S,
    execution_match,
    gold_orders_output,
    run_query,
)
from .hardness import LEVELS, hardness, hardness_of_sql
from .parser import (
    ClauseTree,
    ColUnit,
    Condition,
    Literal,
    OrderBy,
    SelectItem,
    ValueSlot,
    ValUnit,
    parse_sql,
    render_sql,
    tokenize,
)
from .ves import (
    DEFAULT_REPS,
    efficiency_ratio,
    measure_pair,
    timed_execution,
    valid_efficiency_score,
    ves_term,
)

__all__ = [
    "ClauseTree", "ColUnit", "Condition", "Literal", "OrderBy", "SelectItem",
    "ValueSlot", "ValUnit", "EvalOutcome", "parse_sql", "render_sql", "tokenize",
    "exact_set_match", "trees_match", "canonicalize", "fk_canonical_map",
    "execution_match", "run_query", "gold_orders_output", "hardness",
    "hardness_of_sql", "valid_efficiency_score", "efficiency_ratio", "ves_term",
    "timed_execution", "measure_pair", "evaluate_pair",
    "LEVELS", "DEFAULT_TIMEOUT_S", "DEFAULT_REPS",
]


@dataclass(frozen=True)
class EvalOutcome:
    question_id: int
    exact_match: bool
    exec_match: bool
    efficiency_ratio: float
    hardness: str
    gold_ms: float
    pred_ms: float

    def __post_init__(self):
        if not self.exec_match and self.efficiency_ratio != 0.0:
            raise ValueError("efficiency_ratio must be 0 when execution does not match")


def evaluate_pair(
    question_id: int,
    pred_sql: str,
    gold_sql: str,
    schema: DatabaseSchema,
    db_path: Path | str,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    ves_reps: int = 0,
) -> EvalOutcome:
    """Full per-question evaluation: EM, EX, hardness, optional VES timing."""
    level = hardness_of_sql(gold_sql, schema)
    em = exact_set_match(pred_sql, gold_sql, schema)
    ex, gold_ms, pred_ms = execution_match(pred_sql, gold_sql, db_path, timeout_s)
    if ex and ves_reps > 0:
        gold_ms, pred_ms = measure_pair(db_path, pred_sql, gold_sql, ves_reps, timeout_s)
    ratio = efficiency_ratio(ex, gold_ms, pred_ms)
    return EvalOutcome(
        question_id=question_id,
        exact_match=em,
        exec_match=ex,
        efficiency_ratio=ratio,
        hardness=level,
        gold_ms=gold_ms,
        pred_ms=pred_ms,
    )
