"""Judge calls, composite scores, length ratios, and inter-judge agreement."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from ..backends import Backend, BackendRequest, Capability, ComponentTag
from ..core import ImitextError, ValidationError
from ..segmentation import content_tokens
from ..templates_io import TemplateSet
from .factuality import MissingGold


class UnparseableRating(ImitextError):
    def __init__(self, response: str):
        self.response = response
        super().__init__(f"no rating 1-5 found in judge response: {response[:120]!r}")


class LengthMismatch(ImitextError):
    def __init__(self, outputs: int, golds: int):
        super().__init__(f"got {outputs} outputs but {golds} gold texts")


class EmptyGold(ImitextError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"gold text at position {index} has no content tokens")


class InsufficientJudges(ImitextError):
    def __init__(self, count: int):
        super().__init__(f"agreement needs at least 2 judges, got {count}")


@dataclass(frozen=True)
class JudgeScores:
    imitativeness: float
    adaptiveness: float
    adaptive_imitativeness: float


ASPECTS = ("imitativeness", "adaptiveness")

# first standalone digit 1-5; "Rating: 4" -> 4, "10" matches nothing
_RATING_RE = re.compile(r"(?<![\d.])([1-5])(?!\d)")


def judge(
    output: str,
    exemplar: str,
    gold: str | None,
    aspect: str,
    backend: Backend,
    templates: TemplateSet,
) -> float:
    """One judge call for one aspect; returns the parsed 1-5 rating."""
    if aspect not in ASPECTS:
        raise ValidationError(f"unknown judge aspect {aspect!r} (expected {ASPECTS})")
    if aspect == "imitativeness":
        payload = templates.render(
            "judge_imitativeness", exemplar=exemplar, output=output
        )
        tag = ComponentTag.JUDGE_IMITATIVENESS
    else:
        if not gold or not gold.strip():
            raise MissingGold("adaptiveness judging")
        payload = templates.render(
            "judge_adaptiveness", gold=gold, exemplar=exemplar, output=output
        )
        tag = ComponentTag.JUDGE_ADAPTIVENESS
    response = backend.complete(BackendRequest(Capability.JUDGE, tag, payload))
    match = _RATING_RE.search(response)
    if not match:
        raise UnparseableRating(response)
    return float(match.group(1))


def adaptive_imitativeness(imitativeness: float, adaptiveness: float) -> float:
    """Harmonic mean of the two aspect scores for one sample.

    The dataset-level composite is the mean of per-sample values, not the
    harmonic mean of the dataset-level aspect means.
    """
    if imitativeness < 0 or adaptiveness < 0:
        raise ValidationError("aspect scores must be non-negative")
    if imitativeness + adaptiveness == 0.0:
        return 0.0
    return 2.0 * imitativeness * adaptiveness / (imitativeness + adaptiveness)


def length_ratio(
    outputs: Sequence[str], golds: Sequence[str]
) -> tuple[float, float]:
    """(mean of per-sample output/gold token ratios, mean output token count).

    Averaging per-sample ratios is deliberate: it differs from dividing the
    mean lengths whenever lengths vary across samples.
    """
    if len(outputs) == 0 or len(outputs) != len(golds):
        raise LengthMismatch(len(outputs), len(golds))
    ratios = []
    lengths = []
    for index, (output, gold) in enumerate(zip(outputs, golds)):
        gold_count = len(content_tokens(gold))
        if gold_count == 0:
            raise EmptyGold(index)
        out_count = len(content_tokens(output))
        ratios.append(out_count / gold_count)
        lengths.append(out_count)
    return sum(ratios) / len(ratios), sum(lengths) / len(lengths)


def _vote(rating_a: float, rating_b: float) -> str:
    if rating_a > rating_b:
        return "a"
    if rating_a < rating_b:
        return "b"
    return "tie"


def agreement(
    scores: Sequence[Sequence[Sequence[float]]], include_ties: bool = True
) -> float:
    """Probability that two distinct judges cast the same preference vote.

    ``scores[judge][sample][model]`` holds ratings.  Every (sample, unordered
    model pair) is a comparison on which each judge votes for the first
    model, the second, or a tie; the estimate enumerates every comparison
    against every unordered judge pair.  With ``include_ties=False``,
    (comparison, judge-pair) tuples in which either judge voted tie are
    excluded from the denominator.
    """
    if len(scores) < 2:
        raise InsufficientJudges(len(scores))
    n_samples = len(scores[0])
    if n_samples == 0:
        raise ValidationError("agreement needs at least one sample")
    n_models = len(scores[0][0])
    if n_models < 2:
        raise ValidationError("agreement needs at least two models")
    for judge_scores in scores:
        if len(judge_scores) != n_samples or any(
            len(row) != n_models for row in judge_scores
        ):
            raise ValidationError("agreement tensor must be rectangular")

    agree = 0
    total = 0
    for sample in range(n_samples):
        for model_a, model_b in combinations(range(n_models), 2):
            votes = [
                _vote(scores[j][sample][model_a], scores[j][sample][model_b])
                for j in range(len(scores))
            ]
            for vote_1, vote_2 in combinations(votes, 2):
                if not include_ties and "tie" in (vote_1, vote_2):
                    continue
                total += 1
                if vote_1 == vote_2:
                    agree += 1
    if total == 0:
        raise ValueError("no comparisons remain after tie exclusion")
    return agree / total
