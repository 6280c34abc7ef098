#!/usr/bin/env python3
"""Offline end-to-end walkthrough: pair a corpus, generate with every
strategy, evaluate, and tabulate a merged report with a cost table.

Everything runs against the deterministic offline profiles; no network.

Usage: python3 scripts/run_demo.py [output_dir]   (default: ./demo_out)
"""

from __future__ import annotations

import sys
from pathlib import Path

from imitext.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent


def run(args: list[str]) -> None:
    print(f"$ imitext {' '.join(args)}")
    code = cli(args)
    if code != 0:
        raise SystemExit(f"demo step failed with exit code {code}")


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
    out.mkdir(parents=True, exist_ok=True)
    tasks = str(ROOT / "data" / "demo_tasks.jsonl")
    store = str(ROOT / "data" / "demo_store.jsonl")
    corpus = str(ROOT / "data" / "demo_corpus.jsonl")

    run(["pair", "--corpus", corpus, "--out", str(out / "paired_tasks.jsonl"),
         "--mode", "top_k", "--top-k", "2", "--min-words", "40"])

    reports = []
    for strategy in ("repa", "llm", "rom", "self_refine", "default"):
        results = out / f"results_{strategy}.jsonl"
        report = out / f"report_{strategy}.json"
        run(["generate", "--tasks", tasks, "--out", str(results),
             "--strategy", strategy, "--store", store])
        run(["evaluate", "--tasks", tasks, "--results", str(results),
             "--out", str(report)])
        reports.append(str(report))

    run(["report", "--metrics", *reports,
         "--labels", "repa", "llm", "rom", "self_refine", "default",
         "--out", str(out / "metrics.csv"),
         "--manifests", *(str(out / f"results_{s}.jsonl.manifest.json")
                          for s in ("repa", "llm", "rom", "self_refine", "default")),
         "--rate", "15", "--cost-out", str(out / "cost.csv")])

    print(f"\ndemo artifacts in {out}/")
    print((out / "metrics.csv").read_text(), end="")
    print((out / "cost.csv").read_text(), end="")


if __name__ == "__main__":
    main()
