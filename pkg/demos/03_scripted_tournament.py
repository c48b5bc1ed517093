"""End-to-end demo: a fully scripted tournament, no network required.

Every provider response, search result, and wiki page is a fixture, so the
whole pipeline -> guideline -> battle -> evolve -> rate flow runs offline
and deterministically.  One model ("weak") answers the wrong verdict on
every claim and shows up with 0% verdict accuracy on the leaderboard.

Run with: python3 demos/03_scripted_tournament.py
"""

import json
import tempfile
from pathlib import Path

from factarena.cli import main

workdir = Path(tempfile.mkdtemp(prefix="factarena-demo-"))
pool_path = workdir / "pool.jsonl"

claims = [
    {"uid": f"d{i}", "claim": f"Demo statement number {i}.", "label": "SUPPORTED"}
    for i in range(6)
]
(workdir / "dataset.jsonl").write_text("\n".join(json.dumps(r) for r in claims) + "\n")

script = {
    "extract:*": "1. First atomic fact.\n2. Second atomic fact.",
    "evidence:*": "- Key fact one.\n- Key fact two.",
    "entities:*": "Alpha",
    "consolidate:*": "Decompose into atomic, checkable statements.",
    "reverse:*": "The opposite of the demo statement holds.",
    "evolve:*": "A trickier phrasing of the same statement.",
    "judge:*": "Reasoning.\nCE:1 ER:1 H:tie I:tie S:1 R:tie OV:1",
    "verify:*": "Checks out. VERDICT: SUPPORTED",
    # the weak model answers the flip of every original gold label
    "weak:verify:*": "Doubtful. VERDICT: REFUTED",
}
# reversed claims flip the gold, so the strong models must flip too
for row in claims:
    script[f"verify:{row['uid']}:rev"] = "Reversed. VERDICT: REFUTED"
    script[f"weak:verify:{row['uid']}:rev"] = "Still wrong. VERDICT: SUPPORTED"
    script[f"verify:{row['uid']}:e1"] = "Reversed still. VERDICT: REFUTED"
    script[f"weak:verify:{row['uid']}:e1"] = "Wrong again. VERDICT: SUPPORTED"

config = {
    "run_name": "demo",
    "seed": 7,
    "models": [
        {"model_id": "strong-1", "provider_id": "scripted", "family": "famA"},
        {"model_id": "strong-2", "provider_id": "scripted", "family": "famB"},
        {"model_id": "strong-3", "provider_id": "scripted", "family": "famC"},
        {"model_id": "weak", "provider_id": "scripted", "family": "famD"},
    ],
    "judges": ["strong-1", "strong-2", "strong-3"],
    "evolver": {"model_id": "evolver", "provider_id": "scripted", "family": "famE"},
    "sample_size": 4,
    "quorum": 3,
    "max_rounds": 1,
    "pool_path": str(pool_path),
    "scripted": {
        "providers": {"scripted": {"script": script, "default_response": ""}},
        "search": {"default": [{"title": "Ref", "snippet": "Background.", "url": ""}]},
        "wiki": {"pages": {"Alpha": "Alpha is a well-documented subject."}},
    },
}
config_path = workdir / "config.json"
config_path.write_text(json.dumps(config, indent=2))

base = ["--config", str(config_path)]
main(base + ["ingest", "--dataset", str(workdir / "dataset.jsonl"), "--source", "HOVER"])
for command in ("run", "guideline", "battle", "evolve"):
    print(f"\n$ factarena {command}")
    main(base + [command])

print("\n$ factarena rate")
main(base + ["rate"])
print(f"\nPool file: {pool_path} ({pool_path.stat().st_size} bytes)")
print("Re-run any phase with the same config: it appends nothing and calls no provider.")
