"""Evaluation metrics: surface overlap, factuality, and judge aggregation."""

from .basic import (
    BasicScores,
    EmptyAfterTokenization,
    RougeScores,
    basic_scores,
    bleu,
    meteor,
    rouge,
    stem,
)
from .factuality import FactualityScores, MissingGold, halluc, nli_metrics
from .judging import (
    EmptyGold,
    InsufficientJudges,
    JudgeScores,
    LengthMismatch,
    UnparseableRating,
    adaptive_imitativeness,
    agreement,
    judge,
    length_ratio,
)
from .report import (
    CSV_COLUMNS,
    REPORT_NOTES,
    SampleScores,
    aggregate_samples,
    build_report,
    write_report_csv,
    write_report_json,
)

__all__ = [
    "BasicScores",
    "RougeScores",
    "FactualityScores",
    "JudgeScores",
    "SampleScores",
    "EmptyAfterTokenization",
    "MissingGold",
    "UnparseableRating",
    "LengthMismatch",
    "EmptyGold",
    "InsufficientJudges",
    "rouge",
    "bleu",
    "meteor",
    "stem",
    "basic_scores",
    "halluc",
    "nli_metrics",
    "judge",
    "adaptive_imitativeness",
    "length_ratio",
    "agreement",
    "aggregate_samples",
    "build_report",
    "write_report_json",
    "write_report_csv",
    "CSV_COLUMNS",
    "REPORT_NOTES",
]
