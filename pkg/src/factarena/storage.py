"""Append-only JSONL record pool, integrity checking, and dataset ingestion.

The pool is the single source of truth for a run: every claim, pipeline
run, guideline, plan entry, battle, judgment, outcome, lineage, and rating
snapshot lands here as one JSON object per line.  Reports and the evolution
loop both consume it, and restarts resume by scanning it.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .claims import Claim, REFUTED, SUPPORTED
from .errors import CorruptLine, SchemaViolation

SCHEMA_VERSION = 1

KINDS = (
    "claim",
    "run",
    "guideline",
    "plan_entry",
    "battle",
    "judgment",
    "outcome",
    "lineage",
    "rating_snapshot",
)

# Required payload fields per record kind.
REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    "claim": ("claim_id", "text", "gold_verdict", "source"),
    "run": ("run_id", "claim_id", "model_id", "valid"),
    "guideline": ("claim_id", "guideline_kind"),
    "plan_entry": ("claim_id", "model_a", "model_b"),
    "battle": ("battle_id", "claim_id", "model_a", "model_b", "run_a", "run_b"),
    "judgment": ("battle_id", "judge_id", "valid"),
    "outcome": ("battle_id", "outcomes", "quorum_met"),
    "lineage": ("root_claim_id", "stages", "status"),
    "rating_snapshot": ("method", "dimension", "ratings"),
}

# Foreign keys checked by load_and_check: payload field -> referenced kind's
# primary key.  Battle run references are handled specially below.
_PRIMARY_KEY = {
    "claim": "claim_id",
    "run": "run_id",
    "battle": "battle_id",
}


class RecordPool:
    """Append-only persistence over one JSONL file.

    A single writer appends under a lock; reads go through the in-memory
    mirror which reflects everything appended or loaded so far.  With
    ``deterministic=True`` timestamps are logical sequence numbers so reruns
    under the same seed produce byte-identical files.
    """

    def __init__(
        self,
        path: str | Path,
        deterministic: bool = False,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.path = Path(path)
        self.deterministic = deterministic
        self.clock = clock
        self.records: list[dict] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.records)

    def append(self, kind: str, payload: dict) -> int:
        """Validate, durably append, and return the sequence number."""
        if kind not in KINDS:
            raise SchemaViolation(f"unknown record kind {kind!r}")
        missing = [f for f in REQUIRED_FIELDS[kind] if f not in payload]
        if missing:
            raise SchemaViolation(f"{kind} payload missing fields: {missing}")
        with self._lock:
            seq = len(self.records)
            envelope = {
                "seq": seq,
                "kind": kind,
                "schema_version": SCHEMA_VERSION,
                "timestamp": float(seq) if self.deterministic else self.clock(),
                "payload": payload,
            }
            line = json.dumps(envelope, ensure_ascii=False, sort_keys=True)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self.records.append(envelope)
            return seq

    def by_kind(self, kind: str) -> list[dict]:
        """Payloads of all records of the given kind, in append order."""
        return [r["payload"] for r in self.records if r["kind"] == kind]

    def iter_kind(self, kind: str) -> Iterator[dict]:
        return (r["payload"] for r in self.records if r["kind"] == kind)


@dataclass
class IntegrityReport:
    per_kind: dict[str, int] = field(default_factory=dict)
    dangling: list[str] = field(default_factory=list)
    duplicates: list[str] = field(default_factory=list)
    skipped_lines: list[int] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (self.dangling or self.duplicates or self.skipped_lines)


def load_and_check(path: str | Path, strict: bool = True) -> tuple[RecordPool, IntegrityReport]:
    """Parse a pool file and report dangling references and duplicate ids.

    In lenient mode corrupt lines are skipped and counted; strict mode raises
    :class:`CorruptLine` with the offending line number.
    """
    path = Path(path)
    report = IntegrityReport()
    pool = RecordPool(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                envelope = json.loads(line)
                kind = envelope["kind"]
                payload = envelope["payload"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                if strict:
                    raise CorruptLine(f"line {lineno}: {exc}") from exc
                report.skipped_lines.append(lineno)
                continue
            pool.records.append(envelope)
            report.per_kind[kind] = report.per_kind.get(kind, 0) + 1

    ids: dict[str, set[str]] = {k: set() for k in _PRIMARY_KEY}
    for kind, key in _PRIMARY_KEY.items():
        for payload in pool.iter_kind(kind):
            rid = payload[key]
            if rid in ids[kind]:
                report.duplicates.append(f"{kind}:{rid}")
            ids[kind].add(rid)

    def check(ref_kind: str, payload_key: str, target: str, label: str) -> None:
        for payload in pool.iter_kind(ref_kind):
            value = payload.get(payload_key)
            if value is not None and value not in ids[target]:
                report.dangling.append(f"{label}:{value}")

    check("run", "claim_id", "claim", "run->claim")
    check("battle", "claim_id", "claim", "battle->claim")
    check("battle", "run_a", "run", "battle->run")
    check("battle", "run_b", "run", "battle->run")
    check("judgment", "battle_id", "battle", "judgment->battle")
    check("outcome", "battle_id", "battle", "outcome->battle")
    check("plan_entry", "claim_id", "claim", "plan->claim")
    return pool, report


# -- dataset ingestion --------------------------------------------------

# Binary label mappings for the two supported dataset row formats.
_LABEL_MAPS = {
    "HOVER": {"SUPPORTED": SUPPORTED, "NOT_SUPPORTED": REFUTED},
    "FEVEROUS": {"SUPPORTS": SUPPORTED, "REFUTES": REFUTED},
}


@dataclass
class IngestResult:
    claims: list[Claim]
    skipped_unmappable: int


def ingest_claims(
    dataset_path: str | Path,
    source: str,
    limit: int,
    seed: int,
) -> IngestResult:
    """Map dataset rows to claims and take a seed-deterministic sample.

    Rows whose label falls outside the binary Supported/Refuted scheme are
    skipped and counted.  Accepts JSONL or a single JSON array.
    """
    if source not in _LABEL_MAPS:
        raise ValueError(f"unknown source {source!r}")
    label_map = _LABEL_MAPS[source]
    text = Path(dataset_path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        rows: Iterable[dict] = json.loads(stripped)
    else:
        rows = (json.loads(line) for line in text.splitlines() if line.strip())

    mapped: list[Claim] = []
    skipped = 0
    for i, row in enumerate(rows):
        label = str(row.get("label", "")).strip().upper()
        if label not in label_map:
            skipped += 1
            continue
        claim_id = str(row.get("uid") or row.get("id") or f"{source.lower()}-{i}")
        mapped.append(
            Claim(
                claim_id=claim_id,
                text=row["claim"],
                gold_verdict=label_map[label],
                source=source,
            )
        )
    if limit < len(mapped):
        rng = random.Random(seed)
        mapped = rng.sample(mapped, limit) if limit > 0 else []
    return IngestResult(claims=mapped, skipped_unmappable=skipped)


@dataclass
class RunManifest:
    """Run metadata written before any pool record."""

    run_name: str
    seed: int
    config: dict
    model_pool: list[str]
    claim_digests: dict[str, str] = field(default_factory=dict)
    phases_done: list[str] = field(default_factory=list)

    @property
    def config_digest(self) -> str:
        blob = json.dumps(self.config, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        data = {
            "run_name": self.run_name,
            "seed": self.seed,
            "config": self.config,
            "config_digest": self.config_digest,
            "model_pool": self.model_pool,
            "claim_digests": self.claim_digests,
            "phases_done": self.phases_done,
        }
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            run_name=data["run_name"],
            seed=data["seed"],
            config=data["config"],
            model_pool=data["model_pool"],
            claim_digests=data.get("claim_digests", {}),
            phases_done=data.get("phases_done", []),
        )
