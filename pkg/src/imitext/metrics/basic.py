"""Surface-overlap metrics, implemented from scratch with pinned definitions.

All metrics run on the normalized token stream (whitespace split, casefold,
punctuation stripped; punctuation-only tokens dropped).  Exact definitions:

ROUGE-1/2
    F1 over clipped n-gram counts.  A side with zero n-grams of the order
    scores 0.
ROUGE-L
    F1 over the length of the longest common subsequence of the two token
    sequences.
ROUGE-Lsum
    Texts are split into sentences (newline blocks, then the rule-based
    sentence splitter per block).  For each reference sentence, the union of
    LCS-matched reference-token positions against every candidate sentence is
    counted; recall divides the total by the reference token count, precision
    by the candidate token count, combined as F1.  The LCS backtrack resolves
    ties by advancing the reference index (``table[i-1][j] >= table[i][j-1]``
    moves ``i``), which pins the matched position set.
BLEU
    BLEU-4 against a single reference: clipped precisions for orders 1-4;
    the unigram precision is unsmoothed (a zero floors the score at 0);
    orders 2-4 use add-one smoothing on both numerator and denominator
    unconditionally; geometric mean with uniform weights; brevity penalty
    ``exp(1 - r/c)`` when the candidate is shorter than the reference.
METEOR
    Unigram alignment in two stages — exact normalized match, then matching
    suffix-stripped stems — each stage greedy in candidate order taking the
    first unused reference position.  With ``m`` matches, ``P = m/|cand|``,
    ``R = m/|ref|``, ``F = P*R / (0.9*P + 0.1*R)``, chunks are maximal runs
    of pairs consecutive on both sides, and the score is
    ``F * (1 - 0.5 * (chunks/m)**3)``.  No synonym stage (flagged in report
    notes).  The stemmer applies the first matching rule of sses->ss,
    ies->i, -ing, -ed, -s (stems shorter than three characters are left
    alone), then maps a final y to i.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..core import ImitextError
from ..segmentation import content_tokens, split_sentences


class EmptyAfterTokenization(ImitextError):
    def __init__(self, side: str):
        self.side = side
        super().__init__(f"{side} text has no content tokens after normalization")


@dataclass(frozen=True)
class RougeScores:
    r1: float
    r2: float
    rl: float
    rlsum: float


@dataclass(frozen=True)
class BasicScores:
    r1: float
    r2: float
    rl: float
    rlsum: float
    meteor: float
    bleu: float


def _prep(candidate: str, reference: str) -> tuple[list[str], list[str]]:
    cand = content_tokens(candidate)
    ref = content_tokens(reference)
    if not cand:
        raise EmptyAfterTokenization("candidate")
    if not ref:
        raise EmptyAfterTokenization("reference")
    return cand, ref


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(cand_counts: Counter, ref_counts: Counter) -> int:
    return sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _rouge_n(cand: Sequence[str], ref: Sequence[str], n: int) -> float:
    cand_total = len(cand) - n + 1
    ref_total = len(ref) - n + 1
    if cand_total <= 0 or ref_total <= 0:
        return 0.0
    matches = _clipped(_ngram_counts(cand, n), _ngram_counts(ref, n))
    return _f1(matches / cand_total, matches / ref_total)


def _lcs_table(ref: Sequence[str], cand: Sequence[str]) -> list[list[int]]:
    table = [[0] * (len(cand) + 1) for _ in range(len(ref) + 1)]
    for i in range(1, len(ref) + 1):
        for j in range(1, len(cand) + 1):
            if ref[i - 1] == cand[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table


def _lcs_ref_positions(ref: Sequence[str], cand: Sequence[str]) -> set[int]:
    """Reference positions of the pinned LCS (ties advance the ref index)."""
    table = _lcs_table(ref, cand)
    positions: set[int] = set()
    i, j = len(ref), len(cand)
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1]:
            positions.add(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return positions


def _rouge_l(cand: Sequence[str], ref: Sequence[str]) -> float:
    lcs = _lcs_table(ref, cand)[len(ref)][len(cand)]
    return _f1(lcs / len(cand), lcs / len(ref))


def _sentence_token_lists(text: str) -> list[list[str]]:
    sentences: list[list[str]] = []
    for block in text.split("\n"):
        if not block.strip():
            continue
        for segment in split_sentences(block):
            tokens = content_tokens(segment.text)
            if tokens:
                sentences.append(tokens)
    return sentences


def _rouge_lsum(candidate: str, reference: str) -> float:
    cand_sentences = _sentence_token_lists(candidate)
    ref_sentences = _sentence_token_lists(reference)
    cand_total = sum(len(s) for s in cand_sentences)
    ref_total = sum(len(s) for s in ref_sentences)
    if cand_total == 0 or ref_total == 0:
        return 0.0
    hits = 0
    for ref_sent in ref_sentences:
        union: set[int] = set()
        for cand_sent in cand_sentences:
            union |= _lcs_ref_positions(ref_sent, cand_sent)
        hits += len(union)
    return _f1(hits / cand_total, hits / ref_total)


def rouge(candidate: str, reference: str) -> RougeScores:
    cand, ref = _prep(candidate, reference)
    return RougeScores(
        r1=_rouge_n(cand, ref, 1),
        r2=_rouge_n(cand, ref, 2),
        rl=_rouge_l(cand, ref),
        rlsum=_rouge_lsum(candidate, reference),
    )


def bleu(candidate: str, reference: str) -> float:
    cand, ref = _prep(candidate, reference)
    c, r = len(cand), len(ref)
    unigram_matches = _clipped(_ngram_counts(cand, 1), _ngram_counts(ref, 1))
    if unigram_matches == 0:
        return 0.0
    log_sum = math.log(unigram_matches / c)
    for n in (2, 3, 4):
        cand_total = max(0, c - n + 1)
        ref_total = max(0, r - n + 1)
        if cand_total and ref_total:
            matches = _clipped(_ngram_counts(cand, n), _ngram_counts(ref, n))
        else:
            matches = 0
        log_sum += math.log((matches + 1) / (cand_total + 1))
    brevity = math.exp(1.0 - r / c) if c < r else 1.0
    return brevity * math.exp(log_sum / 4.0)


def stem(word: str) -> str:
    """Suffix-stripping stemmer used by the METEOR stem stage."""
    w = word
    if w.endswith("sses"):
        w = w[:-4] + "ss"
    elif w.endswith("ies"):
        w = w[:-3] + "i"
    elif w.endswith("ing") and len(w) - 3 >= 3:
        w = w[:-3]
    elif w.endswith("ed") and len(w) - 2 >= 3:
        w = w[:-2]
    elif w.endswith("s") and not w.endswith("ss") and len(w) - 1 >= 3:
        w = w[:-1]
    if w.endswith("y") and len(w) >= 3:
        w = w[:-1] + "i"
    return w


def _greedy_stage(
    cand: Sequence[str],
    ref: Sequence[str],
    cand_matched: list[bool],
    ref_matched: list[bool],
    key,
) -> list[tuple[int, int]]:
    pairs = []
    for i, cand_tok in enumerate(cand):
        if cand_matched[i]:
            continue
        wanted = key(cand_tok)
        for j, ref_tok in enumerate(ref):
            if ref_matched[j]:
                continue
            if key(ref_tok) == wanted:
                pairs.append((i, j))
                cand_matched[i] = True
                ref_matched[j] = True
                break
    return pairs


def meteor(candidate: str, reference: str) -> float:
    cand, ref = _prep(candidate, reference)
    cand_matched = [False] * len(cand)
    ref_matched = [False] * len(ref)
    pairs = _greedy_stage(cand, ref, cand_matched, ref_matched, key=lambda t: t)
    pairs += _greedy_stage(cand, ref, cand_matched, ref_matched, key=stem)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    f_mean = precision * recall / (0.9 * precision + 0.1 * recall)
    pairs.sort()
    chunks = 1
    for (ci, ri), (cp, rp) in zip(pairs[1:], pairs):
        if not (ci == cp + 1 and ri == rp + 1):
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


def basic_scores(candidate: str, reference: str) -> BasicScores:
    rouge_scores = rouge(candidate, reference)
    return BasicScores(
        r1=rouge_scores.r1,
        r2=rouge_scores.r2,
        rl=rouge_scores.rl,
        rlsum=rouge_scores.rlsum,
        meteor=meteor(candidate, reference),
        bleu=bleu(candidate, reference),
    )
