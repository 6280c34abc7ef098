"""Factuality metrics: hallucinated-token rate and NLI label fractions."""

from __future__ import annotations

from dataclasses import dataclass

from ..backends import NLI_CONTRADICT, NLI_ENTAIL, Backend
from ..core import ImitextError
from ..segmentation import content_tokens, split_sentences
from .basic import EmptyAfterTokenization


class MissingGold(ImitextError):
    def __init__(self, context: str = ""):
        suffix = f" ({context})" if context else ""
        super().__init__(f"gold text is required for this metric{suffix}")


@dataclass(frozen=True)
class FactualityScores:
    halluc: float  # percent of output tokens, 0..100
    nli_e: float
    nli_c: float
    nli_neutral: float


def halluc(output: str, source: str, gold: str | None) -> float:
    """Percent of output tokens found in neither the source nor the gold text.

    Tokens are compared in normalized form; punctuation-only tokens are
    excluded from both the numerator and the denominator.
    """
    out_tokens = content_tokens(output)
    if not out_tokens:
        raise EmptyAfterTokenization("output")
    allowed = set(content_tokens(source))
    if gold:
        allowed |= set(content_tokens(gold))
    novel = sum(1 for token in out_tokens if token not in allowed)
    return 100.0 * novel / len(out_tokens)


def nli_metrics(output: str, gold: str | None, backend: Backend) -> tuple[float, float, float]:
    """Fractions of output sentences entailed by / contradicting the gold.

    Each output sentence is classified with premise = gold text and
    hypothesis = the sentence; returns (entail, contradict, neutral)
    fractions, which sum to 1.
    """
    if not gold or not gold.strip():
        raise MissingGold("nli premise")
    if not output or not output.strip():
        raise EmptyAfterTokenization("output")
    sentences = split_sentences(output)
    entail = contradict = 0
    for sentence in sentences:
        label = backend.classify_nli(premise=gold, hypothesis=sentence.text)
        if label == NLI_ENTAIL:
            entail += 1
        elif label == NLI_CONTRADICT:
            contradict += 1
    total = len(sentences)
    e = entail / total
    c = contradict / total
    return e, c, 1.0 - e - c


def factuality_scores(
    output: str, source: str, gold: str | None, backend: Backend
) -> FactualityScores:
    e, c, n = nli_metrics(output, gold, backend)
    return FactualityScores(
        halluc=halluc(output, source, gold), nli_e=e, nli_c=c, nli_neutral=n
    )
