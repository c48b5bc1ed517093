"""Claim evolution: reversal algebra, drift handling, and the full loop."""

from __future__ import annotations

import pytest

from factarena.claims import Claim, flip_verdict
from factarena.errors import DegenerateReversal, LabelDriftSuspected
from factarena.evolution import (
    WeaknessAnalysis,
    build_weakness_analysis,
    evolve_claim,
    reverse_claim,
    run_evolution_loop,
)
from factarena.gateway import Gateway, ScriptedProvider
from factarena.pipeline import PipelineContext, PipelineRun
from factarena.storage import RecordPool

CLAIM = Claim(claim_id="c1", text="The river flows north.", gold_verdict="Supported", source="HOVER")
ANALYSIS = WeaknessAnalysis(claim_id="c1", observations=(("m1", "verdict=Supported; ok"),), source_judgments=("b1",))


def make_ctx(script):
    gw = Gateway({"p": ScriptedProvider(script=script, default_response="")})
    return PipelineContext(
        gateway=gw, search_backend=None, provider_of={"ev": "p"}, clock=lambda: 0.0
    )


def fake_run(claim, model, correct):
    verdict = claim.gold_verdict if correct else flip_verdict(claim.gold_verdict)
    from factarena.pipeline import Evidence, SubClaimSet, VerificationOutput

    return PipelineRun(
        run_id=f"run:{claim.claim_id}:{model}",
        claim_id=claim.claim_id,
        model_id=model,
        valid=True,
        sub_claims=SubClaimSet(claim.claim_id, ("a fact",)),
        evidence=Evidence(claim.claim_id, ("an item",), ()),
        verification=VerificationOutput("because", verdict),
        correct=correct,
    )


# -- reversal ---------------------------------------------------------------


def test_reverse_flips_gold_and_marks_lineage():
    ctx = make_ctx({"reverse:c1": "The river flows south."})
    rev = reverse_claim(ctx, CLAIM, "ev")
    assert rev.claim_id == "c1:rev"
    assert rev.gold_verdict == "Refuted"
    assert rev.source == "evolved"
    assert rev.lineage.parent_id == "c1" and rev.lineage.round == 0
    assert rev.lineage.kind == "reversed"


def test_reverse_retries_once_then_rejects_degenerate_echo():
    ctx = make_ctx({"reverse:c1": CLAIM.text, "reverse-retry:c1": "The river flows SOUTH now."})
    rev = reverse_claim(ctx, CLAIM, "ev")
    assert rev.text == "The river flows SOUTH now."

    stuck = make_ctx({"reverse:c1": CLAIM.text, "reverse-retry:c1": CLAIM.text.upper()})
    with pytest.raises(DegenerateReversal):
        reverse_claim(stuck, CLAIM, "ev")


# -- evolution step -------------------------------------------------------------


def test_evolve_preserves_gold_and_roots_ids():
    ctx = make_ctx({"reverse:c1": "South.", "evolve:*": "A trickier phrasing."})
    rev = reverse_claim(ctx, CLAIM, "ev")
    e1 = evolve_claim(ctx, rev, ANALYSIS, "ev", round=1)
    assert e1.claim_id == "c1:e1"  # rooted at the original claim id
    assert e1.gold_verdict == rev.gold_verdict  # verdict preserved across evolution
    assert e1.lineage.round == 1 and e1.lineage.kind == "evolved"
    e2 = evolve_claim(ctx, e1, ANALYSIS, "ev", round=2)
    assert e2.claim_id == "c1:e2" and e2.gold_verdict == rev.gold_verdict


def test_evolve_rejects_drift_and_bad_inputs():
    ctx = make_ctx({"evolve:*": "LABEL_DRIFT: the verdict may have changed"})
    with pytest.raises(LabelDriftSuspected):
        evolve_claim(ctx, CLAIM, ANALYSIS, "ev", round=1)
    with pytest.raises(ValueError):
        evolve_claim(ctx, CLAIM, ANALYSIS, "ev", round=0)
    empty = WeaknessAnalysis(claim_id="c1", observations=(), source_judgments=())
    with pytest.raises(ValueError):
        evolve_claim(ctx, CLAIM, empty, "ev", round=1)


def test_weakness_analysis_reads_the_pool(tmp_path):
    pool = RecordPool(tmp_path / "p.jsonl", deterministic=True)
    pool.append("claim", CLAIM.to_payload())
    pool.append("run", fake_run(CLAIM, "m1", True).to_payload())
    pool.append("run", fake_run(CLAIM, "m2", False).to_payload())
    pool.append("battle", {"battle_id": "b1", "claim_id": "c1", "model_a": "m1", "model_b": "m2",
                           "run_a": "run:c1:m1", "run_b": "run:c1:m2"})
    pool.append("judgment", {"battle_id": "b1", "judge_id": "j1", "valid": True,
                             "outcomes": {}, "rationale": ""})
    analysis = build_weakness_analysis(pool, "c1")
    assert {m for m, _ in analysis.observations} == {"m1", "m2"}
    assert analysis.source_judgments == ("b1",)
    assert "verdict=" in analysis.model_answers()


# -- the loop ---------------------------------------------------------------------


def loop(tmp_path, behavior, max_rounds=3, script_extra=None):
    """behavior: claim_id -> all-participants-correct? for each stage claim id."""
    script = {
        "reverse:*": "The opposite statement.",
        "evolve:*": "A harder variant.",
    }
    script.update(script_extra or {})
    ctx = make_ctx(script)
    pool = RecordPool(tmp_path / "pool.jsonl", deterministic=True)
    pool.append("claim", CLAIM.to_payload())
    participants = ["m1", "m2"]

    def run_and_battle(claim, models):
        correct = behavior.get(claim.claim_id, False)
        runs = [fake_run(claim, m, correct) for m in models]
        for r in runs:
            pool.append("run", r.to_payload())
        return runs

    original_runs = {"c1": [fake_run(CLAIM, m, True) for m in participants]}
    lineages = run_evolution_loop(
        pool, ctx, [CLAIM], original_runs, run_and_battle, "ev", max_rounds=max_rounds
    )
    return pool, lineages[0]


def test_loop_converges_when_reversal_stumps_models(tmp_path):
    pool, lineage = loop(tmp_path, {"c1:rev": False})
    assert lineage.status == "converged"
    assert [s.round for s in lineage.stages] == [-1, 0]
    assert not lineage.stages[-1].unanimous_correct
    # reversed claim landed in the pool with the flipped verdict
    stored = {c["claim_id"]: c for c in pool.iter_kind("claim")}
    assert stored["c1:rev"]["gold_verdict"] == "Refuted"


def test_loop_caps_at_max_rounds_when_never_stumped(tmp_path):
    behavior = {"c1:rev": True, "c1:e1": True, "c1:e2": True, "c1:e3": True}
    pool, lineage = loop(tmp_path, behavior, max_rounds=3)
    assert lineage.status == "capped"
    assert [s.round for s in lineage.stages] == [-1, 0, 1, 2, 3]


def test_loop_skips_claims_not_solved_unanimously(tmp_path):
    ctx = make_ctx({})
    pool = RecordPool(tmp_path / "pool.jsonl", deterministic=True)
    runs = {"c1": [fake_run(CLAIM, "m1", True), fake_run(CLAIM, "m2", False)]}
    lineages = run_evolution_loop(pool, ctx, [CLAIM], runs, lambda c, p: [], "ev")
    assert lineages[0].status == "converged"
    assert len(lineages[0].stages) == 1  # no reversal attempted


def test_loop_label_drift_stops_the_lineage(tmp_path):
    behavior = {"c1:rev": True}
    pool, lineage = loop(
        tmp_path, behavior, script_extra={"evolve:*": "LABEL_DRIFT suspected"}
    )
    assert "LabelDriftSuspected" in lineage.flags
    assert lineage.status == "capped"


def test_label_algebra_invariant_over_the_pool(tmp_path):
    """Every evolved claim's gold verdict follows from the parent chain."""
    behavior = {"c1:rev": True, "c1:e1": True, "c1:e2": False}
    pool, _ = loop(tmp_path, behavior)
    stored = {c["claim_id"]: c for c in pool.iter_kind("claim")}
    for cid, payload in stored.items():
        lineage = payload.get("lineage")
        if not lineage:
            continue
        parent = stored[lineage["parent_id"]]
        if lineage["kind"] == "reversed":
            assert payload["gold_verdict"] == flip_verdict(parent["gold_verdict"])
        else:
            assert payload["gold_verdict"] == parent["gold_verdict"]
