"""Rule-based sentence splitting and whitespace tokenization.

Splitting rule: a terminator (``.``, ``!``, ``?``) ends a sentence when it is
followed by at least one whitespace character and the next non-whitespace
character is an uppercase letter, a digit, or a quotation mark — unless the
terminator is a period and the non-whitespace chunk ending at it appears on
the abbreviation list (matched case-sensitively, e.g. ``No.`` suppresses a
split before ``No. 5`` while ``no.`` at a sentence end still splits).

Token normalization: casefold, then drop every character whose Unicode
category is punctuation (``P*``).  ``U.S.`` normalizes to ``us``; a token
made only of punctuation normalizes to the empty string and is excluded from
token-level metrics.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import ImitextError

TERMINATORS = ".!?"
QUOTE_CHARS = "\"'“”‘’«»„‚"


class EmptyText(ImitextError):
    def __init__(self) -> None:
        super().__init__("cannot split empty or whitespace-only text")


@dataclass(frozen=True)
class Segment:
    """One sentence-like span; ``text == source[char_span[0]:char_span[1]]``."""

    index: int
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str


def load_abbreviations(path: str | Path | None = None) -> frozenset[str]:
    """Load the abbreviation list; ``None`` loads the packaged default."""
    if path is None:
        raw = resources.files("imitext").joinpath("data/abbreviations.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    entries = []
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return frozenset(entries)


_DEFAULT_ABBREVIATIONS: frozenset[str] | None = None


def default_abbreviations() -> frozenset[str]:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = load_abbreviations(None)
    return _DEFAULT_ABBREVIATIONS


def _chunk_ending_at(text: str, pos: int) -> str:
    """The maximal non-whitespace run whose last character sits at ``pos``."""
    start = pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : pos + 1]


def split_sentences(
    text: str, abbreviations: frozenset[str] | None = None
) -> list[Segment]:
    """Split ``text`` into sentence segments.

    The concatenation of segment texts with the original inter-segment
    whitespace reconstructs the input exactly; splitting any produced segment
    again yields that segment unchanged.
    """
    if not text or text.isspace():
        raise EmptyText()
    abbrevs = default_abbreviations() if abbreviations is None else abbreviations

    cuts: list[int] = []
    for pos, char in enumerate(text):
        if char not in TERMINATORS:
            continue
        after = pos + 1
        probe = after
        while probe < len(text) and text[probe].isspace():
            probe += 1
        if probe == after or probe == len(text):
            continue  # no whitespace right after, or only trailing whitespace
        follower = text[probe]
        if not (follower.isupper() or follower.isdigit() or follower in QUOTE_CHARS):
            continue
        if char == "." and _chunk_ending_at(text, pos) in abbrevs:
            continue
        cuts.append(after)

    segments: list[Segment] = []
    bounds = [0, *cuts, len(text)]
    for piece_start, piece_end in zip(bounds, bounds[1:]):
        start = piece_start
        while start < piece_end and text[start].isspace():
            start += 1
        end = piece_end
        while end > start and text[end - 1].isspace():
            end -= 1
        if start == end:
            continue  # leading/trailing whitespace of the whole text
        segments.append(Segment(index=len(segments), text=text[start:end], char_span=(start, end)))
    return segments


def normalize_token(surface: str) -> str:
    folded = surface.casefold()
    return "".join(
        ch for ch in folded if not unicodedata.category(ch).startswith("P")
    )


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization; empty input yields an empty list."""
    return [Token(surface=s, normalized=normalize_token(s)) for s in text.split()]


def content_tokens(text: str) -> list[str]:
    """Normalized token stream with punctuation-only tokens removed."""
    return [t.normalized for t in tokenize(text) if t.normalized]
