#!/usr/bin/env python3
"""Regenerate the committed deterministic test fixtures.

Writes, under tests/fixtures/:
  * metric_pairs.jsonl      — 30 candidate/reference text pairs for the
                              metric-vs-oracle suite (seeded RNG, stable);
  * nli_stub.jsonl          — digest-keyed NLI labels for the factuality
                              arithmetic fixture;
  * cassettes/clarify_case.jsonl — one recorded clarification exchange.

Run from the repository root: python3 scripts/make_goldens.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from imitext.backends import (
    BackendRequest,
    Capability,
    ComponentTag,
    request_digest,
    text_digest,
)
from imitext.planner import ShortTermMemory
from imitext.templates_io import TemplateSet

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

SEED = 20250817

VOCAB = (
    "district town river lake forest bridge station mill farm plant plain "
    "steppe valley road railway harvest grain flour cheese milk census "
    "population center region republic north south west east old new small "
    "large quiet busy annual local regional shore tower"
).split()


def _sentenceify(tokens: list[str], rng: random.Random, newline_chance: float) -> str:
    """Pack tokens into capitalized sentences; sometimes into newline blocks."""
    sentences = []
    index = 0
    while index < len(tokens):
        length = min(rng.randint(4, 9), len(tokens) - index)
        chunk = tokens[index : index + length]
        sentences.append(chunk[0].capitalize() + " " + " ".join(chunk[1:]) + "."
                         if len(chunk) > 1 else chunk[0].capitalize() + ".")
        index += length
    joiner = "\n" if rng.random() < newline_chance else " "
    return joiner.join(sentences)


def _mutate(tokens: list[str], rng: random.Random) -> list[str]:
    out = list(tokens)
    for _ in range(rng.randint(1, max(2, len(out) // 6))):
        op = rng.choice(("replace", "delete", "insert", "swap"))
        if op == "replace" and out:
            out[rng.randrange(len(out))] = rng.choice(VOCAB)
        elif op == "delete" and len(out) > 4:
            start = rng.randrange(len(out) - 2)
            del out[start : start + rng.randint(1, 3)]
        elif op == "insert":
            out.insert(rng.randrange(len(out) + 1), rng.choice(VOCAB))
        elif op == "swap" and len(out) > 8:
            a = rng.randrange(len(out) - 4)
            b = rng.randrange(len(out) - 4)
            out[a : a + 2], out[b : b + 2] = out[b : b + 2], out[a : a + 2]
    return out


def make_metric_pairs() -> None:
    rng = random.Random(SEED)
    pairs = [
        # hand-picked edges: identical, disjoint, tiny candidate, punctuation
        {"candidate": "The mill is old.", "reference": "The mill is old."},
        {"candidate": "Quiet lakes rest northward.", "reference": "Busy towns grow south."},
        {"candidate": "Grain harvest now.", "reference": "The grain harvest starts now in the valley."},
        {"candidate": "The U.S. census counted 41,361 people!", "reference": "The census counted 41361 people in the district."},
    ]
    while len(pairs) < 30:
        length = rng.randint(5, 60)
        reference_tokens = [rng.choice(VOCAB) for _ in range(length)]
        candidate_tokens = _mutate(reference_tokens, rng)
        pairs.append(
            {
                "candidate": _sentenceify(candidate_tokens, rng, newline_chance=0.25),
                "reference": _sentenceify(reference_tokens, rng, newline_chance=0.25),
            }
        )
    path = FIXTURES / "metric_pairs.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(pairs)} pairs -> {path}")


NLI_GOLD = (
    "Davlekanovsky District is a district of Bashkortostan. "
    "Its population is 41000. The Dyoma River flows through it."
)
NLI_OUTPUT_SENTENCES = (
    ("Davlekanovsky District is a district of Bashkortostan.", "entail"),
    ("Its population is 95000.", "contradict"),
    ("The district is known for cheese.", "neutral"),
    ("The Dyoma River flows through it.", "entail"),
)


def make_nli_fixture() -> None:
    path = FIXTURES / "nli_stub.jsonl"
    premise_digest = text_digest(NLI_GOLD)
    with open(path, "w", encoding="utf-8") as handle:
        for sentence, label in NLI_OUTPUT_SENTENCES:
            row = {
                "premise_digest": premise_digest,
                "hypothesis_digest": text_digest(sentence),
                "label": label,
            }
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"wrote {len(NLI_OUTPUT_SENTENCES)} NLI rows -> {path}")


CLARIFY_PREVIOUS = "Belebeyevsky District is an administrative district of Bashkortostan."
CLARIFY_SEGMENT = "It is located in the west."
CLARIFY_RESPONSE = "Belebeyevsky District is located in the west."


def make_clarify_cassette() -> None:
    templates = TemplateSet.load()
    stm = ShortTermMemory(capacity=2).push(CLARIFY_PREVIOUS)
    payload = templates.render("clarify", stm=stm.rendered, segment=CLARIFY_SEGMENT)
    digest = request_digest(
        BackendRequest(Capability.GENERATE, ComponentTag.CLARIFY, payload)
    )
    path = FIXTURES / "cassettes" / "clarify_case.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    row = {
        "digest": digest,
        "component_tag": "clarify",
        "response": CLARIFY_RESPONSE,
    }
    path.write_text(json.dumps(row, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote clarify cassette -> {path}")


if __name__ == "__main__":
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_metric_pairs()
    make_nli_fixture()
    make_clarify_cassette()
