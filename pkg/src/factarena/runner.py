"""Phase orchestration over one record pool.

Composes the pipeline, guidelines, judgment, evolution, and rating modules
into resumable phases.  Every phase is idempotent against the pool: work
already recorded is detected by scanning and skipped, so repeating a
completed phase appends zero records and performs zero provider calls.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Sequence

from .claims import Claim
from .config import RunConfig
from .errors import EmptyPanel, NoValidJudgments, ParseError
from .evolution import run_evolution_loop
from .gateway import Gateway, SearchBackend, SearchResult, WikiBackend
from .guidelines import (
    CandidateSet,
    EvidenceGuideline,
    ExtractionGuideline,
    JustificationRubric,
    build_evidence_guideline,
    consolidate_extraction_guideline,
    justification_rubric,
)
from .judgment import (
    DIMENSIONS,
    assemble_battle,
    battle_id_for,
    inter_judge_consistency,
    judge_battle,
    majority_vote,
    self_family_filter,
)
from .metrics import consistency_tsv, evolution_curve, validity_stats, write_reports
from .pipeline import (
    Evidence,
    PipelineContext,
    PipelineRun,
    SubClaimSet,
    VerificationOutput,
    run_pipeline,
)
from .rating import Leaderboard, RatingTable, WinMatrix, accuracy, bt_fit, elo_run, rank
from .errors import NoEvolutionData, NoRuns
from .scheduler import build_plan
from .storage import RecordPool


def run_from_payload(payload: dict) -> PipelineRun:
    """Rehydrate a pipeline run from its pool record."""
    if not payload.get("valid"):
        return PipelineRun(
            run_id=payload["run_id"],
            claim_id=payload["claim_id"],
            model_id=payload["model_id"],
            valid=False,
            error=payload.get("error"),
        )
    web = tuple(
        SearchResult(rank=w["rank"], title=w["title"], snippet=w["snippet"], url=w.get("url", ""))
        for w in payload.get("web_context", [])
    )
    return PipelineRun(
        run_id=payload["run_id"],
        claim_id=payload["claim_id"],
        model_id=payload["model_id"],
        valid=True,
        sub_claims=SubClaimSet(payload["claim_id"], tuple(payload["sub_claims"])),
        evidence=Evidence(
            claim_id=payload["claim_id"],
            items=tuple(payload["evidence_items"]),
            web_context=web,
            degraded=payload.get("degraded", False),
        ),
        verification=VerificationOutput(
            justification=payload["justification"], verdict=payload["verdict"]
        ),
        correct=payload.get("correct"),
        timing_ms=payload.get("timing_ms", {}),
    )


class Arena:
    """One run's orchestrator: wraps a pool, a gateway, and the config."""

    def __init__(
        self,
        config: RunConfig,
        pool: RecordPool,
        gateway: Gateway,
        search_backend: SearchBackend | None = None,
        wiki_backend: WikiBackend | None = None,
    ) -> None:
        self.config = config
        self.pool = pool
        self.gateway = gateway
        self.wiki_backend = wiki_backend
        self.ctx = PipelineContext(
            gateway=gateway,
            search_backend=search_backend,
            provider_of=config.provider_of,
            template_dir=config.template_dir,
            top_k=config.top_k,
            clock=lambda: 0.0,  # logical time keeps reruns byte-identical
        )
        self.rubric: JustificationRubric = justification_rubric(config.template_dir)

    # -- pool views ------------------------------------------------------

    def claims_by_id(self) -> dict[str, Claim]:
        return {c["claim_id"]: Claim.from_payload(c) for c in self.pool.iter_kind("claim")}

    def original_claims(self) -> list[Claim]:
        return [
            Claim.from_payload(c)
            for c in self.pool.iter_kind("claim")
            if c.get("source") != "evolved"
        ]

    def runs_by_key(self) -> dict[tuple[str, str], dict]:
        return {(r["claim_id"], r["model_id"]): r for r in self.pool.iter_kind("run")}

    # -- ingest ----------------------------------------------------------

    def add_claims(self, claims: Sequence[Claim]) -> int:
        existing = {c["claim_id"] for c in self.pool.iter_kind("claim")}
        added = 0
        for claim in claims:
            if claim.claim_id not in existing:
                self.pool.append("claim", claim.to_payload())
                added += 1
        return added

    # -- plan + pipelines --------------------------------------------------

    def ensure_plan(self) -> list[tuple[str, str, str]]:
        """Build (or reload) the tournament plan for the original claims."""
        entries = [
            (p["claim_id"], p["model_a"], p["model_b"])
            for p in self.pool.iter_kind("plan_entry")
            if not p.get("evolved")
        ]
        if entries:
            return entries
        claim_ids = [c.claim_id for c in self.original_claims()]
        plan = build_plan(claim_ids, self.config.model_ids, self.config.sample_size, self.config.seed)
        for claim_id, a, b in plan.entries():
            self.pool.append("plan_entry", {"claim_id": claim_id, "model_a": a, "model_b": b})
        return plan.entries()

    def phase_run(self) -> int:
        """Run pipelines for every (claim, sampled model) pair not yet recorded."""
        entries = self.ensure_plan()
        tasks: list[tuple[str, str]] = []
        seen = set()
        for claim_id, a, b in entries:
            for model in (a, b):
                if (claim_id, model) not in seen:
                    seen.add((claim_id, model))
                    tasks.append((claim_id, model))
        claims = self.claims_by_id()
        done = self.runs_by_key()
        new = 0
        for claim_id, model in tasks:
            if (claim_id, model) in done:
                continue
            run = run_pipeline(self.ctx, model, claims[claim_id])
            self.pool.append("run", run.to_payload())
            new += 1
        return new

    # -- guidelines --------------------------------------------------------

    def _guidelines_for(self, claim_id: str) -> tuple[ExtractionGuideline | None, EvidenceGuideline | None]:
        extraction = None
        evidence = None
        for g in self.pool.iter_kind("guideline"):
            if g["claim_id"] != claim_id:
                continue
            if g["guideline_kind"] == "extraction":
                extraction = ExtractionGuideline(
                    claim_id=claim_id,
                    version=g["version"],
                    text=g["text"],
                    incorporated_sources=set(g["incorporated_sources"]),
                    editor_history=list(g["editor_history"]),
                )
            elif g["guideline_kind"] == "evidence":
                evidence = EvidenceGuideline(
                    claim_id=claim_id,
                    entities=tuple(g["entities"]),
                    reference_text=g["reference_text"],
                    pages_found=g["pages_found"],
                    flagged=g.get("flagged", False),
                )
        return extraction, evidence

    def build_guidelines_for_claim(self, claim: Claim) -> None:
        """Consolidate the extraction guideline and fetch the evidence basis."""
        extraction, evidence = self._guidelines_for(claim.claim_id)
        family_of = self.config.family_of
        if extraction is None:
            candidates = []
            for (claim_id, model), payload in self.runs_by_key().items():
                if claim_id == claim.claim_id and payload.get("valid"):
                    candidates.append(
                        CandidateSet(
                            run_id=payload["run_id"],
                            model_id=model,
                            family=family_of.get(model, model),
                            sub_claims=tuple(payload["sub_claims"]),
                        )
                    )
            if candidates:
                guideline = consolidate_extraction_guideline(
                    self.ctx,
                    claim,
                    candidates,
                    panel=self.config.judges,
                    family_of=family_of,
                    seed=f"{self.config.seed}:consolidate:{claim.claim_id}",
                )
                self.pool.append("guideline", guideline.to_payload())
        if evidence is None:
            rng = random.Random(f"{self.config.seed}:evidence:{claim.claim_id}")
            extractor = rng.choice(self.config.judges)
            guideline = build_evidence_guideline(self.ctx, self.wiki_backend, claim, extractor)
            self.pool.append("guideline", guideline.to_payload())

    def phase_guideline(self) -> int:
        before = len(self.pool.by_kind("guideline"))
        claim_ids_with_runs = {r["claim_id"] for r in self.pool.iter_kind("run") if r.get("valid")}
        for claim in self.original_claims():
            if claim.claim_id in claim_ids_with_runs:
                self.build_guidelines_for_claim(claim)
        return len(self.pool.by_kind("guideline")) - before

    # -- battles -----------------------------------------------------------

    def battle_pair(self, claim: Claim, payload_a: dict, payload_b: dict) -> bool:
        """Judge one pair; returns True if a new outcome was recorded."""
        bid = battle_id_for(claim.claim_id, payload_a["model_id"], payload_b["model_id"])
        if any(o["battle_id"] == bid for o in self.pool.iter_kind("outcome")):
            return False
        run_a = run_from_payload(payload_a)
        run_b = run_from_payload(payload_b)
        if not (run_a.valid and run_b.valid):
            return False
        extraction, evidence = self._guidelines_for(claim.claim_id)
        battle, prompts = assemble_battle(
            self.ctx,
            claim,
            run_a,
            run_b,
            extraction,
            evidence,
            self.rubric,
            panel=self.config.judges,
            seed=self.config.seed,
            require_guidelines=False,
        )
        try:
            eligible = self_family_filter(
                battle, self.config.judges, self.config.family_of, self.config.exclude_self_family
            )
        except EmptyPanel:
            return False
        self.pool.append("battle", battle.to_payload())
        records = []
        for judge_id in eligible:
            record = judge_battle(self.ctx, battle, judge_id, prompts[judge_id])
            self.pool.append("judgment", record.to_payload())
            records.append(record)
        try:
            outcome = majority_vote(records, quorum=self.config.quorum)
        except NoValidJudgments:
            return False
        self.pool.append("outcome", outcome.to_payload())
        return True

    def phase_battle(self) -> int:
        entries = self.ensure_plan()
        claims = self.claims_by_id()
        runs = self.runs_by_key()
        new = 0
        for claim_id, a, b in entries:
            pa, pb = runs.get((claim_id, a)), runs.get((claim_id, b))
            if pa is None or pb is None:
                continue
            if self.battle_pair(claims[claim_id], pa, pb):
                new += 1
        return new

    # -- evolution -----------------------------------------------------------

    def phase_evolve(self) -> int:
        done_roots = {li["root_claim_id"] for li in self.pool.iter_kind("lineage")}
        originals = [c for c in self.original_claims() if c.claim_id not in done_roots]
        if not originals:
            return 0
        runs = self.runs_by_key()
        runs_by_claim: dict[str, list[PipelineRun]] = {}
        for (claim_id, _model), payload in runs.items():
            runs_by_claim.setdefault(claim_id, []).append(run_from_payload(payload))

        def run_and_battle(claim: Claim, participants: Sequence[str]) -> list[PipelineRun]:
            stage_runs: list[PipelineRun] = []
            existing = self.runs_by_key()
            for model in participants:
                prior = existing.get((claim.claim_id, model))
                if prior is not None:
                    stage_runs.append(run_from_payload(prior))
                    continue
                run = run_pipeline(self.ctx, model, claim)
                self.pool.append("run", run.to_payload())
                stage_runs.append(run)
            self.build_guidelines_for_claim(claim)
            valid = [r for r in stage_runs if r.valid]
            for i in range(len(valid)):
                for j in range(i + 1, len(valid)):
                    self.pool.append(
                        "plan_entry",
                        {
                            "claim_id": claim.claim_id,
                            "model_a": valid[i].model_id,
                            "model_b": valid[j].model_id,
                            "evolved": True,
                        },
                    )
                    self.battle_pair(claim, valid[i].to_payload(), valid[j].to_payload())
            return stage_runs

        lineages = run_evolution_loop(
            self.pool,
            self.ctx,
            originals,
            runs_by_claim,
            run_and_battle,
            self.config.evolver.model_id,
            max_rounds=self.config.max_rounds,
        )
        return len(lineages)

    # -- ratings and reports ---------------------------------------------------

    def outcome_rows(self) -> list[tuple[str, str, dict]]:
        """(model_a, model_b, outcomes) per quorum-met battle, pool order."""
        battles = {b["battle_id"]: b for b in self.pool.iter_kind("battle")}
        rows = []
        for outcome in self.pool.iter_kind("outcome"):
            if not outcome.get("quorum_met"):
                continue
            battle = battles.get(outcome["battle_id"])
            if battle is None:
                continue
            rows.append((battle["model_a"], battle["model_b"], outcome["outcomes"]))
        return rows

    def rating_tables(self, method: str = "BradleyTerry") -> dict[str, RatingTable]:
        rows = self.outcome_rows()
        models = sorted({m for a, b, _ in rows for m in (a, b)})
        tables: dict[str, RatingTable] = {}
        for dim in DIMENSIONS:
            if method == "BradleyTerry":
                wm = WinMatrix.empty(models)
                for a, b, outcomes in rows:
                    wm.add(a, b, outcomes[dim])
                tables[dim] = bt_fit(wm, self.config.rating)
            else:
                s_map = {"A": 1.0, "B": 0.0, "Tie": 0.5}
                tables[dim] = elo_run(
                    ((a, b, s_map[outcomes[dim]]) for a, b, outcomes in rows),
                    self.config.rating,
                    models=models,
                )
        return tables

    def accuracy_by_model(self) -> dict[str, float]:
        runs = self.pool.by_kind("run")
        out: dict[str, float] = {}
        for model in self.config.model_ids:
            try:
                out[model] = accuracy(runs, model)
            except NoRuns:
                continue
        return out

    def phase_rate(self) -> dict[str, dict[str, RatingTable]]:
        tables = {"BradleyTerry": self.rating_tables("BradleyTerry"), "Elo": self.rating_tables("Elo")}
        existing = self.pool.by_kind("rating_snapshot")
        for method, per_dim in tables.items():
            for dim, table in per_dim.items():
                payload = table.to_payload(dim)
                if payload not in existing:
                    self.pool.append("rating_snapshot", payload)
        return tables

    def leaderboard(self, tables: dict[str, RatingTable]) -> Leaderboard:
        return rank(tables, self.accuracy_by_model())

    def phase_report(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tables = self.rating_tables("BradleyTerry")
        elo_tables = self.rating_tables("Elo")
        board = self.leaderboard(tables)
        elo_board = self.leaderboard(elo_tables)
        (out / "leaderboard.tsv").write_text(board.to_tsv(), encoding="utf-8")
        (out / "leaderboard.json").write_text(
            json.dumps(board.to_json_payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (out / "leaderboard_elo.tsv").write_text(elo_board.to_tsv(), encoding="utf-8")
        stats = validity_stats(self.pool)
        consistency = inter_judge_consistency(
            self.pool.by_kind("judgment"), self.pool.by_kind("outcome")
        )
        try:
            curve = evolution_curve(self.pool)
        except NoEvolutionData:
            curve = None
        write_reports(out, stats, curve, consistency_tsv(consistency, DIMENSIONS))
        paths = {
            "leaderboard": out / "leaderboard.tsv",
            "leaderboard_json": out / "leaderboard.json",
            "leaderboard_elo": out / "leaderboard_elo.tsv",
            "participation": out / "participation.tsv",
            "consistency": out / "consistency.tsv",
        }
        if curve is not None:
            paths["evolution_curve"] = out / "evolution_curve.tsv"
        return paths
