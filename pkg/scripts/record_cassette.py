#!/usr/bin/env python3
"""Record the golden generation cassette used by the replay-determinism tests.

Runs the recurrent pipeline (full, and with the single-segment ablation) over
the demo tasks with the deterministic mock profile, recording every exchange
into tests/fixtures/cassettes/golden_repa.jsonl.  Replaying that cassette must
then reproduce the outputs byte-for-byte with no live backend.

Run from the repository root: python3 scripts/record_cassette.py
"""

from __future__ import annotations

from pathlib import Path

from imitext.adapter import KnowledgeStore
from imitext.backends import make_backend
from imitext.core import PipelineConfig, load_tasks
from imitext.pipeline import run

ROOT = Path(__file__).resolve().parent.parent
CASSETTE = ROOT / "tests" / "fixtures" / "cassettes" / "golden_repa.jsonl"


def main() -> None:
    CASSETTE.parent.mkdir(parents=True, exist_ok=True)
    if CASSETTE.exists():
        CASSETTE.unlink()
    tasks = load_tasks(ROOT / "data" / "demo_tasks.jsonl")
    store = KnowledgeStore.from_jsonl(ROOT / "data" / "demo_store.jsonl")
    backend = make_backend(
        "mock", cassette_path=CASSETTE, cassette_mode="record"
    )
    for config in (
        PipelineConfig(strategy="repa"),
        PipelineConfig(strategy="repa", ablations=frozenset({"no_segment"})),
    ):
        for task in tasks:
            result = run(task, config, backend, store=store)
            print(
                f"recorded {task.id} ablations={sorted(a.value for a in config.ablations)} "
                f"calls={result.call_count} segments={len(result.segments)}"
            )
    print(f"cassette -> {CASSETTE}")


if __name__ == "__main__":
    main()
