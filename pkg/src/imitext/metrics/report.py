"""Per-sample score rows, dataset aggregates, and report serialization."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..core import ValidationError

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "R1",
    "R2",
    "RL",
    "RLsum",
    "Meteor",
    "BLEU",
    "Halluc",
    "NLI-E",
    "NLI-C",
    "I.",
    "A.",
    "A.-I.",
)

REPORT_NOTES = (
    "meteor: exact and suffix-stem match stages only; no synonym stage",
    "tokens: casefolded, all Unicode punctuation removed",
)

_COLUMN_FIELDS = {
    "R1": "r1",
    "R2": "r2",
    "RL": "rl",
    "RLsum": "rlsum",
    "Meteor": "meteor",
    "BLEU": "bleu",
    "Halluc": "halluc",
    "NLI-E": "nli_e",
    "NLI-C": "nli_c",
    "I.": "imitativeness",
    "A.": "adaptiveness",
    "A.-I.": "adaptive_imitativeness",
}


@dataclass(frozen=True)
class SampleScores:
    """Everything measured for one output; judge fields are optional."""

    instance_id: str
    r1: float
    r2: float
    rl: float
    rlsum: float
    meteor: float
    bleu: float
    halluc: float
    nli_e: float
    nli_c: float
    nli_neutral: float
    imitativeness: float | None = None
    adaptiveness: float | None = None
    adaptive_imitativeness: float | None = None
    length_ratio: float | None = None

    def to_dict(self) -> dict:
        record = {
            "instance_id": self.instance_id,
            "r1": self.r1,
            "r2": self.r2,
            "rl": self.rl,
            "rlsum": self.rlsum,
            "meteor": self.meteor,
            "bleu": self.bleu,
            "halluc": self.halluc,
            "nli_e": self.nli_e,
            "nli_c": self.nli_c,
            "nli_neutral": self.nli_neutral,
        }
        for key in (
            "imitativeness",
            "adaptiveness",
            "adaptive_imitativeness",
            "length_ratio",
        ):
            value = getattr(self, key)
            if value is not None:
                record[key] = value
        return record

    @classmethod
    def from_dict(cls, record: Mapping) -> "SampleScores":
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416 - explicit
        kwargs = {k: v for k, v in record.items() if k in known}
        missing = {"instance_id", "r1"} - kwargs.keys()
        if missing:
            raise ValidationError(f"score row missing fields: {sorted(missing)}")
        return cls(**kwargs)


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def aggregate_samples(samples: Sequence[SampleScores]) -> dict:
    """Column-wise means; judge columns appear only when every row has them."""
    if not samples:
        raise ValidationError("cannot aggregate zero samples")
    aggregate = {
        "n": len(samples),
        "r1": _mean([s.r1 for s in samples]),
        "r2": _mean([s.r2 for s in samples]),
        "rl": _mean([s.rl for s in samples]),
        "rlsum": _mean([s.rlsum for s in samples]),
        "meteor": _mean([s.meteor for s in samples]),
        "bleu": _mean([s.bleu for s in samples]),
        "halluc": _mean([s.halluc for s in samples]),
        "nli_e": _mean([s.nli_e for s in samples]),
        "nli_c": _mean([s.nli_c for s in samples]),
        "nli_neutral": _mean([s.nli_neutral for s in samples]),
    }
    for key in ("imitativeness", "adaptiveness", "adaptive_imitativeness"):
        values = [getattr(s, key) for s in samples]
        if all(v is not None for v in values):
            aggregate[key] = _mean(values)
    ratios = [s.length_ratio for s in samples]
    if all(r is not None for r in ratios):
        aggregate["length_ratio"] = _mean(ratios)
    return aggregate


def build_report(
    samples: Sequence[SampleScores], config_echo: Mapping | None = None
) -> dict:
    echo = dict(config_echo or {})
    echo["notes"] = list(REPORT_NOTES)
    return {
        "per_sample": [s.to_dict() for s in samples],
        "aggregate": aggregate_samples(samples),
        "config_echo": echo,
    }


def write_report_json(report: Mapping, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    logger.info("wrote report %s", path)


def write_report_csv(
    rows: Sequence[Mapping], path: str | Path, label_key: str = "label"
) -> None:
    """One labeled row per run; missing judge columns render empty."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([label_key, *CSV_COLUMNS])
        for row in rows:
            out = [row.get(label_key, "")]
            for column in CSV_COLUMNS:
                value = row.get(_COLUMN_FIELDS[column])
                out.append("" if value is None else f"{value:.4f}")
            writer.writerow(out)
    logger.info("wrote %d-row csv %s", len(rows), path)
