"""Valid efficiency score: accuracy-gated relative-runtime metric.

Per query the term is [execution match] * sqrt(gold_time / pred_time); the
score is the mean over all queries, reported x100. Timings are the median of
R repeated executions after one warm-up, run serially per database file.
"""
from __future__ import annotations

import math
import sqlite3
import statistics
from pathlib import Path

from ..errors import EvalError
from .execution import DEFAULT_TIMEOUT_S, run_query

DEFAULT_REPS = 5
TIMING_EPSILON_MS = 1e-6


def timed_execution(
    db_path: Path | str,
    sql: str,
    reps: int = DEFAULT_REPS,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> float:
    """Median wall time in ms over reps runs, after one warm-up run."""
    run_query(db_path, sql, timeout_s)
    samples = [run_query(db_path, sql, timeout_s)[1] for _ in range(max(1, reps))]
    return statistics.median(samples)


def measure_pair(
    db_path: Path | str,
    pred_sql: str,
    gold_sql: str,
    reps: int = DEFAULT_REPS,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> tuple[float, float]:
    """(gold_ms, pred_ms) medians; a failing prediction times as 0."""
    try:
        gold_ms = timed_execution(db_path, gold_sql, reps, timeout_s)
    except sqlite3.Error as exc:
        raise EvalError(f"gold SQL failed to execute: {exc}") from exc
    try:
        pred_ms = timed_execution(db_path, pred_sql, reps, timeout_s)
    except sqlite3.Error:
        pred_ms = 0.0
    return gold_ms, pred_ms


def efficiency_ratio(exec_match: bool, gold_ms: float, pred_ms: float,
                     epsilon: float = TIMING_EPSILON_MS) -> float:
    """gold/pred time ratio, zero for misses, timings clamped to epsilon."""
    if not exec_match:
        return 0.0
    return max(gold_ms, epsilon) / max(pred_ms, epsilon)


def ves_term(ratio: float) -> float:
    return math.sqrt(ratio)


def valid_efficiency_score(outcomes) -> float:
    """Aggregate VES x100 over EvalOutcome-like records (.exec_match, .efficiency_ratio)."""
    outcomes = list(outcomes)
    if not outcomes:
        return 0.0
    total = sum(ves_term(o.efficiency_ratio) for o in outcomes if o.exec_match)
    return 100.0 * total / len(outcomes)
