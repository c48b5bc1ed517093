"""Acceptance suite: ten oracle- and property-based criteria.

Each test prints one PASS line once its assertions hold, so a verbose run
doubles as a checklist.
"""

from __future__ import annotations

import json
import math
import random
from itertools import product

import numpy as np
import pytest

from factarena.cli import EXIT_OK, main
from factarena.gateway import Gateway, ScriptedProvider
from factarena.guidelines import CandidateSet, consolidate_extraction_guideline
from factarena.judgment import DIMENSIONS, JudgmentRecord, StageVote, canonicalize, majority_vote
from factarena.pipeline import PipelineContext
from factarena.rating import (
    RatingConfig,
    WinMatrix,
    bt_fit,
    bt_log_likelihood,
    elo_expected,
    elo_run,
    elo_update,
)
from factarena.scheduler import build_plan, plan_stats
from factarena.simharness import SimConfig, SyntheticModel, recovery_score, simulate_tournament
from factarena.storage import load_and_check

from conftest import make_arena
from world import build_world_config, simple_claims

NO_PRIOR = RatingConfig(prior_strength=0.0)
_TAGS = ("CE", "ER", "H", "I", "S", "R", "OV")


def test_acceptance_01_elo_formula_exactness():
    assert abs(elo_expected(1400.0, 1000.0, 400.0) - 10 / 11) < 1e-12
    r_a, r_b = elo_update(1000.0, 1000.0, 1.0, RatingConfig(k_factor=4.0))
    assert (r_a, r_b) == (1002.0, 998.0)
    print("ACCEPTANCE 1 PASS: Elo expected-score and update formulas exact")


def test_acceptance_02_bradley_terry_closed_form():
    w31 = WinMatrix.empty(["a", "b"])
    w31.w[0, 1], w31.w[1, 0] = 3.0, 1.0
    gap = bt_fit(w31, NO_PRIOR).ratings["a"] - bt_fit(w31, NO_PRIOR).ratings["b"]
    assert gap == pytest.approx(400 * math.log10(3), abs=0.01)
    assert gap == pytest.approx(190.849, abs=0.01)

    with_tie = WinMatrix.empty(["a", "b"])
    with_tie.w[0, 1], with_tie.w[1, 0] = 2.5, 0.5  # 2-0 plus one half-win tie
    gap_tie = bt_fit(with_tie, NO_PRIOR).ratings["a"] - bt_fit(with_tie, NO_PRIOR).ratings["b"]
    assert gap_tie == pytest.approx(279.588, abs=0.01)
    print("ACCEPTANCE 2 PASS: Bradley-Terry two-model gaps 190.849 / 279.588")


def test_acceptance_03_bt_order_invariance_vs_elo_order_sensitivity():
    rng = random.Random(0)
    models = [f"m{i}" for i in range(6)]
    battles = [
        (a, b, rng.choice(["A", "A", "B", "Tie"]))
        for a, b in (rng.sample(models, 2) for _ in range(200))
    ]

    def fit(order):
        matrix = WinMatrix.empty(models)
        for a, b, outcome in order:
            matrix.add(a, b, outcome)
        return bt_fit(matrix, NO_PRIOR).ratings

    base = fit(battles)
    max_dev = 0.0
    for _ in range(50):
        shuffled = battles[:]
        rng.shuffle(shuffled)
        ratings = fit(shuffled)
        max_dev = max(max_dev, max(abs(ratings[m] - base[m]) for m in models))
    assert max_dev < 1e-6

    fixture = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]
    cfg = RatingConfig(k_factor=32.0)
    forward = elo_run(fixture, cfg).ratings
    backward = elo_run(list(reversed(fixture)), cfg).ratings
    elo_dev = max(abs(forward[m] - backward[m]) for m in "abc")
    assert elo_dev > 0.1
    print(
        f"ACCEPTANCE 3 PASS: BT shuffle deviation {max_dev:.2e} < 1e-6, "
        f"Elo order gap {elo_dev:.3f} > 0.1"
    )


def test_acceptance_04_gradient_stationarity_at_bt_fit():
    rng = random.Random(4)
    models = [f"m{i}" for i in range(5)]
    matrix = WinMatrix.empty(models)
    for _ in range(300):
        a, b = rng.sample(models, 2)
        matrix.add(a, b, rng.choice(["A", "A", "B", "Tie"]))
    ratings = bt_fit(matrix, NO_PRIOR).ratings
    eps = 1e-4
    worst = 0.0
    for m in models:
        up, down = dict(ratings), dict(ratings)
        up[m] += eps
        down[m] -= eps
        grad = (bt_log_likelihood(up, matrix) - bt_log_likelihood(down, matrix)) / (2 * eps)
        worst = max(worst, abs(grad))
    assert worst < 1e-6
    print(f"ACCEPTANCE 4 PASS: max finite-difference gradient {worst:.2e} < 1e-6")


def test_acceptance_05_synthetic_recovery():
    models = tuple(SyntheticModel(f"s{i}", 1000.0 + 50.0 * i) for i in range(8))
    rhos = []
    for seed in range(20):
        cfg = SimConfig(models=models, battles_per_pair=100, tie_rate=0.1, seed=seed)
        fitted = bt_fit(simulate_tournament(cfg).win_matrix, RatingConfig())
        rhos.append(recovery_score(fitted, cfg)[0])
    mean_rho = float(np.mean(rhos))
    assert mean_rho >= 0.95

    # gap recovery at scale: no prior, no skill-independent tie noise
    big = SimConfig(models=models, battles_per_pair=5000, tie_rate=0.0, seed=0)
    fitted = bt_fit(simulate_tournament(big).win_matrix, NO_PRIOR)
    _, gap_error = recovery_score(fitted, big)
    assert gap_error <= 10.0
    print(
        f"ACCEPTANCE 5 PASS: mean Spearman {mean_rho:.4f} >= 0.95, "
        f"max gap error {gap_error:.2f} <= 10 Elo"
    )


def test_acceptance_06_scheduler_determinism_and_counts():
    claims = [f"c{i}" for i in range(400)]
    models = [f"model-{i:02d}" for i in range(16)]
    plan = build_plan(claims, models, sample_size=8, seed=7)
    again = build_plan(claims, models, sample_size=8, seed=7)
    assert plan.entries() == again.entries()
    assert plan.total_battles == 11_200
    stats = plan_stats(plan)
    assert stats.expected_participation == pytest.approx(1400.0)
    print("ACCEPTANCE 6 PASS: 11,200 battles, expected participation 1,400, seed-stable")


def test_acceptance_07_judgment_mechanics():
    flip = {"A": "B", "B": "A", "Tie": "Tie"}
    for pattern in product(("1", "2", "tie"), repeat=7):
        raw = dict(zip(_TAGS, pattern))
        ab = canonicalize(raw, "AB")
        ba = canonicalize(raw, "BA")
        assert ba == {dim: flip[v] for dim, v in ab.items()}

    def record(vote, judge, bid="b1"):
        return JudgmentRecord(
            battle_id=bid, judge_id=judge, valid=True,
            vote=StageVote(outcomes={d: vote for d in DIMENSIONS}, rationale=""),
        )

    three_one = [record(v, f"j{i}") for i, v in enumerate(["A", "A", "B", "Tie"])]
    assert all(v == "A" for v in majority_vote(three_one).outcomes.values())
    even = [record(v, f"j{i}") for i, v in enumerate(["A", "A", "B", "B"])]
    assert all(v == "Tie" for v in majority_vote(even).outcomes.values())

    # 4-judge consistency fixture: j4 dissents on one of two battles -> 50%
    from factarena.judgment import inter_judge_consistency

    judgments, outcomes = [], []
    for bid, votes in (("b1", ["A", "A", "A", "B"]), ("b2", ["B", "B", "B", "B"])):
        records = [record(v, f"j{i+1}", bid) for i, v in enumerate(votes)]
        judgments += [r.to_payload() for r in records]
        outcomes.append(majority_vote(records).to_payload())
    stats = inter_judge_consistency(judgments, outcomes)
    assert stats["j1"].overall == pytest.approx(1.0)
    assert stats["j4"].overall == pytest.approx(0.5)
    print("ACCEPTANCE 7 PASS: 3^7 order-swap flip, majority fixtures, consistency 100%/50%")


def test_acceptance_08_guideline_rotation():
    for n in range(1, 9):
        for m in range(1, 5):
            judges = [f"j{k}" for k in range(m)]
            ctx = PipelineContext(
                gateway=Gateway({"p": ScriptedProvider(default_response="merged")}),
                search_backend=None,
                provider_of={j: "p" for j in judges},
                clock=lambda: 0.0,
            )
            cands = [
                CandidateSet(run_id=f"r{i}", model_id=f"m{i}", family=f"f{i}",
                             sub_claims=(f"fact {i}",))
                for i in range(n)
            ]
            from factarena.claims import Claim

            claim = Claim(claim_id="c", text="t", gold_verdict="Supported", source="HOVER")
            g = consolidate_extraction_guideline(
                ctx, claim, cands, panel=judges,
                family_of={j: f"jf{k}" for k, j in enumerate(judges)}, seed=n * 10 + m,
            )
            assert g.version == max(0, n - 1)
            assert g.incorporated_sources == {c.run_id for c in cands}
    print("ACCEPTANCE 8 PASS: rotation does max(0, n-1) edits, each candidate once")


def test_acceptance_09_evolution_loop_scripted_world(tmp_path):
    from factarena.claims import flip_verdict

    models = [(f"m{i}", f"fam{i % 3}") for i in range(4)]
    claims = simple_claims(4)
    # half the roots survive the reversal (models stay right), half get stumped
    wrong = {(m, f"{c.claim_id}:rev") for m, _ in models for c in claims[2:]}
    config = build_world_config(
        models, ["m0", "m1", "m2"], claims, pool_path=str(tmp_path / "pool.jsonl"),
        wrong_verdicts=wrong, max_rounds=3,
    )
    arena = make_arena(tmp_path, config)
    arena.add_claims(claims)
    arena.phase_run()
    arena.phase_guideline()
    arena.phase_battle()
    arena.phase_evolve()

    lineages = arena.pool.by_kind("lineage")
    assert {li["root_claim_id"] for li in lineages} == {c.claim_id for c in claims}
    for li in lineages:
        assert li["status"] in ("converged", "capped")
        assert all(stage["round"] <= 3 for stage in li["stages"])
    stumped = [li for li in lineages if li["status"] == "converged" and len(li["stages"]) == 2]
    capped = [li for li in lineages if li["status"] == "capped"]
    assert len(stumped) == 2 and len(capped) == 2

    stored = {c["claim_id"]: c for c in arena.pool.iter_kind("claim")}
    for payload in stored.values():
        lineage = payload.get("lineage")
        if not lineage:
            continue
        parent = stored[lineage["parent_id"]]
        if lineage["kind"] == "reversed":
            assert payload["gold_verdict"] == flip_verdict(parent["gold_verdict"])
        else:
            assert payload["gold_verdict"] == parent["gold_verdict"]
    print("ACCEPTANCE 9 PASS: reversal flips gold, lineages terminate, label algebra holds")


def test_acceptance_10_end_to_end_replay(tmp_path, capsys):
    models = [(f"m{i}", f"fam{i % 2}") for i in range(5)]
    claims = simple_claims(20)
    config = build_world_config(
        models, ["m0", "m1", "m2"], claims, pool_path=str(tmp_path / "pool.jsonl"),
        sample_size=4, quorum=3, max_rounds=1, seed=11,
    )
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    dataset = tmp_path / "dataset.jsonl"
    dataset.write_text("\n".join(
        json.dumps({"uid": c.claim_id, "claim": c.text,
                    "label": "SUPPORTED" if c.gold_verdict == "Supported" else "NOT_SUPPORTED"})
        for c in claims
    ) + "\n")

    def full_pass(out_dir):
        base = ["--config", str(config_path)]
        assert main(base + ["ingest", "--dataset", str(dataset), "--source", "HOVER"]) == EXIT_OK
        for command in ("run", "guideline", "battle", "evolve", "rate"):
            assert main(base + [command]) == EXIT_OK, command
        assert main(base + ["report", "--out", str(out_dir)]) == EXIT_OK

    pool_path = tmp_path / "pool.jsonl"
    full_pass(tmp_path / "r1")
    first_pool = pool_path.read_bytes()
    first_board = (tmp_path / "r1" / "leaderboard.tsv").read_bytes()

    pool_path.unlink()
    full_pass(tmp_path / "r2")
    assert pool_path.read_bytes() == first_pool
    assert (tmp_path / "r2" / "leaderboard.tsv").read_bytes() == first_board

    capsys.readouterr()
    assert main(["--config", str(config_path), "run"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0 new runs" in out and "0 provider calls" in out
    _, report = load_and_check(pool_path)
    assert report.clean
    print("ACCEPTANCE 10 PASS: byte-identical replay; rerun performs zero provider calls")
