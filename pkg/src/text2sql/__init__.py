"""Decomposed text-to-SQL pipeline and benchmark evaluation harness."""
from __future__ import annotations

from .catalog import (
    BenchmarkItem,
    ColumnDef,
    DatabaseSchema,
    attach_sample_rows,
    load_benchmark,
    serialize_schema,
)
from .pipeline import PipelineConfig, PredictionRecord, run_batch, run_question
from .prompts import Decomposition, Label, SchemaLinks, Stage

__version__ = "0.1.0"

__all__ = [
    "BenchmarkItem", "ColumnDef", "DatabaseSchema", "attach_sample_rows",
    "load_benchmark", "serialize_schema", "PipelineConfig", "PredictionRecord",
    "run_batch", "run_question", "Decomposition", "Label", "SchemaLinks", "Stage",
    "__version__",
]
