"""Arena-driven claim evolution.

Claims solved unanimously by all participating models are first reversed
(verdict flipped); if the reversal is also solved unanimously, an evolver
model iterates semantically-equivalent harder variants, steered by a
weakness analysis built from the judgment record pool.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .claims import Claim, Lineage, flip_verdict
from .errors import DegenerateReversal, LabelDriftSuspected, ParseError
from .pipeline import PipelineContext, PipelineRun
from .storage import RecordPool

DEFAULT_MAX_ROUNDS = 3


@dataclass(frozen=True)
class LineageStage:
    claim_id: str
    round: int  # -1 original, 0 reversed, >=1 evolved
    kind: str  # "original" | "reversed" | "evolved"
    unanimous_correct: bool


@dataclass
class EvolutionLineage:
    root_claim_id: str
    stages: list[LineageStage] = field(default_factory=list)
    status: str = "active"  # "active" | "converged" | "capped"
    flags: list[str] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "root_claim_id": self.root_claim_id,
            "stages": [
                {
                    "claim_id": s.claim_id,
                    "round": s.round,
                    "kind": s.kind,
                    "unanimous_correct": s.unanimous_correct,
                }
                for s in self.stages
            ],
            "status": self.status,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class WeaknessAnalysis:
    claim_id: str
    observations: tuple[tuple[str, str], ...]  # (model_id, weakness text)
    source_judgments: tuple[str, ...]  # battle ids backing the analysis

    def model_answers(self) -> str:
        return "\n".join(f"- {model}: {text}" for model, text in self.observations) or "(none)"


def _normalize(text: str) -> str:
    return re.sub(r"\W+", " ", text).strip().lower()


def _parse_claim_text(text: str) -> str:
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty claim text from evolver")
    return stripped


def reverse_claim(ctx: PipelineContext, claim: Claim, evolver_model_id: str) -> Claim:
    """Generate the contrastive claim; its gold verdict is the flip of the parent's."""
    prompt = ctx.template("reverse").format(claim=claim.text)
    text, _ = ctx.chat_parsed(
        evolver_model_id, prompt, f"reverse:{claim.claim_id}", _parse_claim_text
    )
    if _normalize(text) == _normalize(claim.text):
        # one retry with an explicit nudge before giving up
        text, _ = ctx.chat_parsed(
            evolver_model_id,
            prompt + "\n\nThe rewrite must differ from the original wording.",
            f"reverse-retry:{claim.claim_id}",
            _parse_claim_text,
        )
        if _normalize(text) == _normalize(claim.text):
            raise DegenerateReversal(f"reversal of {claim.claim_id} equals its input")
    return Claim(
        claim_id=f"{claim.claim_id}:rev",
        text=text,
        gold_verdict=flip_verdict(claim.gold_verdict),
        source="evolved",
        lineage=Lineage(parent_id=claim.claim_id, round=0, kind="reversed"),
    )


def evolve_claim(
    ctx: PipelineContext,
    claim: Claim,
    analysis: WeaknessAnalysis,
    evolver_model_id: str,
    round: int,
) -> Claim:
    """Produce a harder, verdict-preserving variant guided by the weakness analysis."""
    if round < 1:
        raise ValueError("evolution rounds start at 1")
    if not analysis.observations:
        raise ValueError("weakness analysis must be non-empty")
    rationales = "\n".join(f"- {b}" for b in analysis.source_judgments) or "(none)"
    prompt = ctx.template("evolve").format(
        claim=claim.text,
        model_answers=analysis.model_answers(),
        judge_rationales=rationales,
    )
    text, _ = ctx.chat_parsed(
        evolver_model_id, prompt, f"evolve:{claim.claim_id}:r{round}", _parse_claim_text
    )
    if "LABEL_DRIFT" in text:
        raise LabelDriftSuspected(f"evolver flagged drift for {claim.claim_id} round {round}")
    # stage ids are always root + one suffix, so one strip recovers the root
    root = re.sub(r"(:rev|:e\d+)$", "", claim.claim_id)
    return Claim(
        claim_id=f"{root}:e{round}",
        text=text,
        gold_verdict=claim.gold_verdict,
        source="evolved",
        lineage=Lineage(parent_id=claim.claim_id, round=round, kind="evolved"),
    )


def build_weakness_analysis(pool: RecordPool, claim_id: str) -> WeaknessAnalysis:
    """Summarize model behavior on a claim from records already in the pool."""
    observations: list[tuple[str, str]] = []
    for run in pool.iter_kind("run"):
        if run["claim_id"] != claim_id or not run.get("valid"):
            continue
        verdict = run.get("verdict", "?")
        justification = str(run.get("justification", ""))[:200]
        observations.append((run["model_id"], f"verdict={verdict}; {justification}"))
    battle_ids = [b["battle_id"] for b in pool.iter_kind("battle") if b["claim_id"] == claim_id]
    battle_set = set(battle_ids)
    rationales = [
        j["battle_id"]
        for j in pool.iter_kind("judgment")
        if j["battle_id"] in battle_set and j.get("valid")
    ]
    return WeaknessAnalysis(
        claim_id=claim_id,
        observations=tuple(observations),
        source_judgments=tuple(dict.fromkeys(rationales)) or tuple(battle_ids),
    )


def _unanimously_correct(runs: Sequence[PipelineRun]) -> bool:
    valid = [r for r in runs if r.valid]
    return bool(valid) and all(r.correct for r in valid)


def run_evolution_loop(
    pool: RecordPool,
    ctx: PipelineContext,
    original_claims: Sequence[Claim],
    runs_by_claim: dict[str, list[PipelineRun]],
    run_and_battle: Callable[[Claim, Sequence[str]], list[PipelineRun]],
    evolver_model_id: str,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> list[EvolutionLineage]:
    """Drive the full evolution loop over all originally-battled claims.

    ``run_and_battle`` executes pipelines, battles, and judging for a new
    claim against the given participant models, appending everything to the
    pool and returning the pipeline runs.  Evolved claims inherit the
    parent's participant set so weakness targeting faces the same models.
    """
    lineages: list[EvolutionLineage] = []
    for claim in original_claims:
        runs = runs_by_claim.get(claim.claim_id, [])
        participants = [r.model_id for r in runs if r.valid]
        unanimous = _unanimously_correct(runs)
        lineage = EvolutionLineage(root_claim_id=claim.claim_id)
        lineage.stages.append(
            LineageStage(claim.claim_id, round=-1, kind="original", unanimous_correct=unanimous)
        )
        if not unanimous or not participants:
            lineage.status = "converged"
            lineages.append(lineage)
            pool.append("lineage", lineage.to_payload())
            continue

        try:
            current = reverse_claim(ctx, claim, evolver_model_id)
        except (DegenerateReversal, ParseError) as exc:
            lineage.status = "capped"
            lineage.flags.append(type(exc).__name__)
            lineages.append(lineage)
            pool.append("lineage", lineage.to_payload())
            continue
        pool.append("claim", current.to_payload())
        stage_runs = run_and_battle(current, participants)
        unanimous = _unanimously_correct(stage_runs)
        lineage.stages.append(
            LineageStage(current.claim_id, round=0, kind="reversed", unanimous_correct=unanimous)
        )

        round_no = 1
        while unanimous and round_no <= max_rounds:
            analysis = build_weakness_analysis(pool, current.claim_id)
            try:
                current = evolve_claim(ctx, current, analysis, evolver_model_id, round_no)
            except (ParseError, LabelDriftSuspected) as exc:
                lineage.flags.append(type(exc).__name__)
                break
            pool.append("claim", current.to_payload())
            stage_runs = run_and_battle(current, participants)
            unanimous = _unanimously_correct(stage_runs)
            lineage.stages.append(
                LineageStage(
                    current.claim_id, round=round_no, kind="evolved", unanimous_correct=unanimous
                )
            )
            round_no += 1

        lineage.status = "capped" if unanimous else "converged"
        lineages.append(lineage)
        pool.append("lineage", lineage.to_payload())
    return lineages
