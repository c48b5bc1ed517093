"""Claim records and verdict label helpers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

SUPPORTED = "Supported"
REFUTED = "Refuted"
VERDICTS = (SUPPORTED, REFUTED)

CLAIM_SOURCES = ("HOVER", "FEVEROUS", "evolved")
LINEAGE_KINDS = ("reversed", "evolved")


def flip_verdict(verdict: str) -> str:
    if verdict == SUPPORTED:
        return REFUTED
    if verdict == REFUTED:
        return SUPPORTED
    raise ValueError(f"unknown verdict {verdict!r}")


@dataclass(frozen=True)
class Lineage:
    parent_id: str
    round: int
    kind: str  # "reversed" | "evolved"

    def __post_init__(self) -> None:
        if self.kind not in LINEAGE_KINDS:
            raise ValueError(f"unknown lineage kind {self.kind!r}")
        if (self.round == 0) != (self.kind == "reversed"):
            raise ValueError("round 0 iff kind is 'reversed'")


@dataclass(frozen=True)
class Claim:
    claim_id: str
    text: str
    gold_verdict: str
    source: str = "HOVER"
    lineage: Optional[Lineage] = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("claim text must be non-empty")
        if self.gold_verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.gold_verdict!r}")
        if self.source not in CLAIM_SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "evolved" and self.lineage is None:
            raise ValueError("evolved claims must carry a lineage")

    def to_payload(self) -> dict:
        payload = {
            "claim_id": self.claim_id,
            "text": self.text,
            "gold_verdict": self.gold_verdict,
            "source": self.source,
        }
        if self.lineage is not None:
            payload["lineage"] = {
                "parent_id": self.lineage.parent_id,
                "round": self.lineage.round,
                "kind": self.lineage.kind,
            }
        return payload

    @classmethod
    def from_payload(cls, payload: dict) -> "Claim":
        lineage = None
        if payload.get("lineage"):
            li = payload["lineage"]
            lineage = Lineage(parent_id=li["parent_id"], round=li["round"], kind=li["kind"])
        return cls(
            claim_id=payload["claim_id"],
            text=payload["text"],
            gold_verdict=payload["gold_verdict"],
            source=payload.get("source", "HOVER"),
            lineage=lineage,
        )
