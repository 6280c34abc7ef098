#!/usr/bin/env python3
"""Regenerate the shared HTTP contract fixtures under contracts/.

The fixtures pin the JSON wire contract between the generation package's
``http`` backend profile and any server that implements it: request bodies,
response bodies, and — for the deterministic builtin models — exact expected
values.  Both test suites consume the same files, so neither side can drift
without a fixture diff.

Run from the repository root: python3 scripts/make_contracts.py
"""

from __future__ import annotations

import json
from pathlib import Path

from imitext.backends import EMBED_DIM, offline_embedding

ROOT = Path(__file__).resolve().parent.parent
CONTRACTS = ROOT / "contracts"

EMBED_TEXTS = [
    "Old Mill is a village in the west.",
    # same normalized token multiset as above: identical vector expected
    "old mill is a village in the west",
    "The Dyoma River flows through it.",
]

NLI_CASES = [
    # reflexive pairs are entailed by construction
    ("The sky is blue.", "The sky is blue.", "entail"),
    ("The sky is blue.", "The grass is green.", "neutral"),
]

GENERATE_PROMPT = "Write one sentence about watermills."


def main() -> None:
    CONTRACTS.mkdir(exist_ok=True)

    embed = {
        "route": "/embed",
        "dim": EMBED_DIM,
        "model": "builtin:hashed-tf",
        "cases": [
            {"request": {"text": text}, "response": {"vector": offline_embedding(text)}}
            for text in EMBED_TEXTS
        ],
    }

    nli = {
        "route": "/nli",
        "labels": ["entail", "contradict", "neutral"],
        "model": "builtin:rules",
        "cases": [
            {
                "request": {"premise": premise, "hypothesis": hypothesis},
                "response": {"label": label},
            }
            for premise, hypothesis, label in NLI_CASES
        ],
    }

    generate = {
        "route": "/generate",
        "model": "builtin:echo",
        "cases": [
            {
                "request": {"prompt": GENERATE_PROMPT},
                "response": {"text": GENERATE_PROMPT},
            }
        ],
    }

    health = {
        "route": "/health",
        "cases": [
            {"configured": ["nli"], "response": {"status": "ok", "capabilities": ["nli"]}},
            {
                "configured": ["embed", "generate", "nli"],
                "response": {
                    "status": "ok",
                    "capabilities": ["embed", "generate", "nli"],
                },
            },
        ],
    }

    for name, payload in (
        ("embed", embed), ("nli", nli), ("generate", generate), ("health", health)
    ):
        path = CONTRACTS / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
