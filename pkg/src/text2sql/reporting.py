"""Aggregation of evaluation outcomes into per-difficulty report tables."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .sql_eval import EvalOutcome, ves_term
from .sql_eval.hardness import LEVELS

ALL = "all"
COLUMNS = (*LEVELS, ALL)


def round1(value: float) -> float:
    return float(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class LevelStats:
    count: int
    exact_pct: float
    exec_pct: float
    ves: float | None = None


@dataclass
class Report:
    levels: dict[str, LevelStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            level: {
                "count": stats.count,
                "exact_match": stats.exact_pct,
                "exec_match": stats.exec_pct,
                **({"ves": stats.ves} if stats.ves is not None else {}),
            }
            for level, stats in self.levels.items()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _stats(outcomes: list[EvalOutcome], with_ves: bool) -> LevelStats:
    n = len(outcomes)
    if n == 0:
        return LevelStats(count=0, exact_pct=0.0, exec_pct=0.0,
                          ves=0.0 if with_ves else None)
    em = 100.0 * sum(o.exact_match for o in outcomes) / n
    ex = 100.0 * sum(o.exec_match for o in outcomes) / n
    ves = None
    if with_ves:
        ves = round1(
            100.0 * sum(ves_term(o.efficiency_ratio) for o in outcomes if o.exec_match) / n
        )
    return LevelStats(count=n, exact_pct=round1(em), exec_pct=round1(ex), ves=ves)


def aggregate(outcomes: list[EvalOutcome], with_ves: bool = False) -> Report:
    """EM/EX percentages (one decimal, half-up) per hardness level and overall."""
    report = Report()
    for level in LEVELS:
        report.levels[level] = _stats([o for o in outcomes if o.hardness == level], with_ves)
    report.levels[ALL] = _stats(list(outcomes), with_ves)
    return report


def render_table(report: Report, title: str = "") -> str:
    headers = ["", *[c.capitalize() if c != ALL else "All" for c in COLUMNS]]
    rows = [
        ["count"] + [str(report.levels[c].count) for c in COLUMNS],
        ["EX"] + [f"{report.levels[c].exec_pct:.1f}" for c in COLUMNS],
        ["EM"] + [f"{report.levels[c].exact_pct:.1f}" for c in COLUMNS],
    ]
    if any(report.levels[c].ves is not None for c in COLUMNS):
        rows.append(
            ["VES"]
            + [
                f"{report.levels[c].ves:.1f}" if report.levels[c].ves is not None else "-"
                for c in COLUMNS
            ]
        )
    widths = [max(len(r[i]) for r in [headers, *rows]) for i in range(len(headers))]
    lines = []
    if title:
        lines.append(title)
    for row in [headers, *rows]:
        lines.append("  ".join(cell.rjust(width) for cell, width in zip(row, widths)))
    return "\n".join(lines)


def to_csv(report: Report) -> str:
    lines = ["level,count,exact_match,exec_match,ves"]
    for level in COLUMNS:
        stats = report.levels[level]
        ves = "" if stats.ves is None else f"{stats.ves:.1f}"
        lines.append(f"{level},{stats.count},{stats.exact_pct:.1f},{stats.exec_pct:.1f},{ves}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Delta:
    level: str
    count: int
    exec_delta: float
    exact_delta: float
    larger: str  # "a" | "b" | "tie" on EX


def compare_runs(
    outcomes_a: list[EvalOutcome],
    outcomes_b: list[EvalOutcome],
) -> list[Delta]:
    """Per-level EX/EM deltas (b minus a); requires identical question sets."""
    ids_a = {o.question_id for o in outcomes_a}
    ids_b = {o.question_id for o in outcomes_b}
    if ids_a != ids_b:
        diff = sorted(ids_a.symmetric_difference(ids_b))
        raise ValueError(f"question sets differ; symmetric difference: {diff}")
    report_a = aggregate(outcomes_a)
    report_b = aggregate(outcomes_b)
    deltas = []
    for level in COLUMNS:
        a, b = report_a.levels[level], report_b.levels[level]
        exec_delta = round1(b.exec_pct - a.exec_pct)
        larger = "tie" if exec_delta == 0 else ("b" if exec_delta > 0 else "a")
        deltas.append(
            Delta(
                level=level,
                count=a.count,
                exec_delta=exec_delta,
                exact_delta=round1(b.exact_pct - a.exact_pct),
                larger=larger,
            )
        )
    return deltas


def render_deltas(deltas: list[Delta]) -> str:
    lines = [f"{'level':<8}{'n':>6}{'dEX':>8}{'dEM':>8}  larger"]
    for d in deltas:
        lines.append(
            f"{d.level:<8}{d.count:>6}{d.exec_delta:>8.1f}{d.exact_delta:>8.1f}  {d.larger}"
        )
    return "\n".join(lines)
