"""Anonymized pairwise battles and multi-judge stage-wise voting.

Each battle pairs two valid pipeline runs on the same claim.  Every judge
sees the two outputs as "Assistant 1/2" in an independently randomized
order, votes per dimension, and votes are mapped back to canonical A/B
before majority aggregation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .claims import Claim
from .errors import EmptyPanel, MissingGuideline, NoValidJudgments, ParseError
from .guidelines import EvidenceGuideline, ExtractionGuideline, JustificationRubric
from .pipeline import PipelineContext, PipelineRun

DIMENSIONS = (
    "ClaimExtraction",
    "EvidenceRetrieval",
    "Helpfulness",
    "Informativeness",
    "Soundness",
    "Readability",
    "Overall",
)

# short field tags used in the judge output grammar, in DIMENSIONS order
_TAGS = ("CE", "ER", "H", "I", "S", "R", "OV")
_TAG_TO_DIM = dict(zip(_TAGS, DIMENSIONS))

A, B, TIE = "A", "B", "Tie"
OUTCOMES = (A, B, TIE)

_VOTE_FIELD = re.compile(r"\b(CE|ER|H|I|S|R|OV)\s*:\s*(1|2|tie)\b", re.IGNORECASE)


@dataclass(frozen=True)
class Battle:
    battle_id: str
    claim_id: str
    model_a: str
    model_b: str
    run_a: str
    run_b: str
    presented_order_by_judge: Mapping[str, str]  # judge_id -> "AB" | "BA"

    def to_payload(self) -> dict:
        return {
            "battle_id": self.battle_id,
            "claim_id": self.claim_id,
            "model_a": self.model_a,
            "model_b": self.model_b,
            "run_a": self.run_a,
            "run_b": self.run_b,
            "presented_order_by_judge": dict(self.presented_order_by_judge),
        }


@dataclass(frozen=True)
class StageVote:
    outcomes: Mapping[str, str]  # dimension -> A | B | Tie (canonical)
    rationale: str = ""

    def __post_init__(self) -> None:
        if set(self.outcomes) != set(DIMENSIONS):
            raise ValueError("vote must cover all seven dimensions")
        for v in self.outcomes.values():
            if v not in OUTCOMES:
                raise ValueError(f"bad outcome {v!r}")


@dataclass(frozen=True)
class JudgmentRecord:
    battle_id: str
    judge_id: str
    valid: bool
    vote: StageVote | None = None

    def to_payload(self) -> dict:
        payload: dict = {"battle_id": self.battle_id, "judge_id": self.judge_id, "valid": self.valid}
        if self.vote is not None:
            payload["outcomes"] = dict(self.vote.outcomes)
            payload["rationale"] = self.vote.rationale
        return payload


@dataclass(frozen=True)
class BattleOutcome:
    battle_id: str
    outcomes: Mapping[str, str]  # dimension -> majority A | B | Tie
    quorum_met: bool
    valid_count: int

    def to_payload(self) -> dict:
        return {
            "battle_id": self.battle_id,
            "outcomes": dict(self.outcomes),
            "quorum_met": self.quorum_met,
            "valid_count": self.valid_count,
        }


def battle_id_for(claim_id: str, model_a: str, model_b: str) -> str:
    return f"battle:{claim_id}:{model_a}:{model_b}"


def render_assistant_block(run: PipelineRun) -> str:
    """Stage-wise output of one run, with no model identity."""
    assert run.valid and run.sub_claims and run.evidence and run.verification
    return (
        "Sub-claims:\n"
        f"{run.sub_claims.numbered()}\n\n"
        "Evidence:\n"
        f"{run.evidence.bulleted()}\n\n"
        "Justification:\n"
        f"{run.verification.justification}\n\n"
        f"Verdict: {run.verification.verdict}"
    )


def assemble_battle(
    ctx: PipelineContext,
    claim: Claim,
    run_a: PipelineRun,
    run_b: PipelineRun,
    extraction_guideline: ExtractionGuideline | None,
    evidence_guideline: EvidenceGuideline | None,
    rubric: JustificationRubric,
    panel: Sequence[str],
    seed: int,
    require_guidelines: bool = True,
) -> tuple[Battle, dict[str, str]]:
    """Build the battle record and one blinded prompt per judge."""
    if not (run_a.valid and run_b.valid):
        raise ValueError("both runs must be valid to battle")
    if run_a.model_id == run_b.model_id:
        raise ValueError("a model cannot battle itself")
    if require_guidelines and (extraction_guideline is None or evidence_guideline is None):
        raise MissingGuideline(f"guidelines missing for claim {claim.claim_id}")

    bid = battle_id_for(claim.claim_id, run_a.model_id, run_b.model_id)
    template = ctx.template("judge")
    block_a = render_assistant_block(run_a)
    block_b = render_assistant_block(run_b)
    orders: dict[str, str] = {}
    prompts: dict[str, str] = {}
    for judge_id in panel:
        rng = random.Random(f"{seed}:{bid}:{judge_id}")
        order = "AB" if rng.random() < 0.5 else "BA"
        orders[judge_id] = order
        first, second = (block_a, block_b) if order == "AB" else (block_b, block_a)
        prompts[judge_id] = template.format(
            claim=claim.text,
            guideline_extraction=extraction_guideline.text if extraction_guideline else "(unavailable)",
            guideline_evidence=evidence_guideline.reference_text if evidence_guideline else "(unavailable)",
            rubric=rubric.text(),
            assistant_1_block=first,
            assistant_2_block=second,
        )
    battle = Battle(
        battle_id=bid,
        claim_id=claim.claim_id,
        model_a=run_a.model_id,
        model_b=run_b.model_id,
        run_a=run_a.run_id,
        run_b=run_b.run_id,
        presented_order_by_judge=orders,
    )
    return battle, prompts


def parse_vote_block(text: str) -> dict[str, str]:
    """Parse the seven-field vote line into tag -> '1' | '2' | 'tie'."""
    found: dict[str, str] = {}
    for m in _VOTE_FIELD.finditer(text):
        found[m.group(1).upper()] = m.group(2).lower()
    missing = [t for t in _TAGS if t not in found]
    if missing:
        raise ParseError(f"vote block missing fields: {missing}")
    return {t: found[t] for t in _TAGS}


def canonicalize(raw_votes: Mapping[str, str], presented_order: str) -> dict[str, str]:
    """Map presented labels 1/2 back to canonical A/B given the shown order."""
    if presented_order not in ("AB", "BA"):
        raise ValueError(f"bad presentation order {presented_order!r}")
    first, second = (A, B) if presented_order == "AB" else (B, A)
    mapping = {"1": first, "2": second, "tie": TIE}
    return {_TAG_TO_DIM[tag]: mapping[v] for tag, v in raw_votes.items()}


def judge_battle(
    ctx: PipelineContext, battle: Battle, judge_id: str, prompt: str
) -> JudgmentRecord:
    """Collect and canonicalize one judge's vote; parse failure -> invalid."""
    try:
        raw, content = ctx.chat_parsed(
            judge_id, prompt, f"judge:{battle.battle_id}", parse_vote_block
        )
    except ParseError:
        return JudgmentRecord(battle_id=battle.battle_id, judge_id=judge_id, valid=False)
    outcomes = canonicalize(raw, battle.presented_order_by_judge[judge_id])
    rationale = _VOTE_FIELD.sub("", content).strip()
    return JudgmentRecord(
        battle_id=battle.battle_id,
        judge_id=judge_id,
        valid=True,
        vote=StageVote(outcomes=outcomes, rationale=rationale),
    )


def majority_vote(records: Sequence[JudgmentRecord], quorum: int = 3) -> BattleOutcome:
    """Per-dimension plurality over valid records; plurality ties -> Tie."""
    valid = [r for r in records if r.valid and r.vote is not None]
    if not valid:
        raise NoValidJudgments("no valid judgments for battle")
    battle_id = valid[0].battle_id
    outcomes: dict[str, str] = {}
    for dim in DIMENSIONS:
        counts = {A: 0, B: 0, TIE: 0}
        for r in valid:
            counts[r.vote.outcomes[dim]] += 1
        best = max(counts.values())
        leaders = [o for o, c in counts.items() if c == best]
        outcomes[dim] = leaders[0] if len(leaders) == 1 else TIE
    return BattleOutcome(
        battle_id=battle_id,
        outcomes=outcomes,
        quorum_met=(len(valid) >= quorum),
        valid_count=len(valid),
    )


@dataclass
class ConsistencyStats:
    per_dimension: dict[str, float] = field(default_factory=dict)
    overall: float = 0.0
    valid_votes: int = 0


def inter_judge_consistency(
    judgments: Sequence[dict], outcomes: Sequence[dict]
) -> dict[str, ConsistencyStats]:
    """Each judge's agreement rate with the majority, per dimension and averaged.

    Takes judgment and outcome payloads as stored in the pool.
    """
    majority_by_battle = {o["battle_id"]: o["outcomes"] for o in outcomes}
    tallies: dict[str, dict[str, list[int]]] = {}
    votes_by_judge: dict[str, int] = {}
    for j in judgments:
        judge_id = j["judge_id"]
        votes_by_judge.setdefault(judge_id, 0)
        if not j.get("valid") or j["battle_id"] not in majority_by_battle:
            continue
        votes_by_judge[judge_id] += 1
        majority = majority_by_battle[j["battle_id"]]
        per_dim = tallies.setdefault(judge_id, {d: [0, 0] for d in DIMENSIONS})
        for dim in DIMENSIONS:
            per_dim[dim][1] += 1
            if j["outcomes"][dim] == majority[dim]:
                per_dim[dim][0] += 1
    result: dict[str, ConsistencyStats] = {}
    for judge_id, count in votes_by_judge.items():
        stats = ConsistencyStats(valid_votes=count)
        if judge_id in tallies:
            per_dim = {
                dim: (hit / total if total else 0.0)
                for dim, (hit, total) in tallies[judge_id].items()
            }
            stats.per_dimension = per_dim
            stats.overall = sum(per_dim.values()) / len(per_dim)
        result[judge_id] = stats
    return result


def self_family_filter(
    battle: Battle,
    panel: Sequence[str],
    family_of: Mapping[str, str],
    enabled: bool = False,
) -> list[str]:
    """Optionally drop judges sharing a family with either contestant."""
    if not enabled:
        return list(panel)
    contested = {family_of.get(battle.model_a), family_of.get(battle.model_b)}
    eligible = [j for j in panel if family_of.get(j) not in contested]
    if not eligible:
        raise EmptyPanel(f"all judges conflicted for battle {battle.battle_id}")
    return eligible
