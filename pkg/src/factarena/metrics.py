"""Cross-cutting report computations over a record pool.

Per-model participation counts, valid-judgment statistics, and the
per-round claim-evolution difficulty curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import NoEvolutionData
from .judgment import ConsistencyStats
from .storage import RecordPool


@dataclass(frozen=True)
class CurvePoint:
    round: int  # 0 = post-reversal, >=1 evolved rounds
    mean_accuracy: float  # percent, over claims rooted in unanimously-correct parents
    battle_count: int
    claim_count: int


@dataclass(frozen=True)
class EvolutionCurve:
    points: tuple[CurvePoint, ...]

    def to_tsv(self) -> str:
        lines = ["round\tmean_accuracy\tbattle_count\tclaim_count"]
        for p in self.points:
            lines.append(f"{p.round}\t{p.mean_accuracy:.2f}\t{p.battle_count}\t{p.claim_count}")
        return "\n".join(lines) + "\n"


def evolution_curve(pool: RecordPool) -> EvolutionCurve:
    """Mean verdict accuracy and battle counts per evolution round."""
    lineages = pool.by_kind("lineage")
    if not lineages:
        raise NoEvolutionData("pool has no lineage records")
    round_of_claim: dict[str, int] = {}
    for lineage in lineages:
        for stage in lineage["stages"]:
            if stage["round"] >= 0:
                round_of_claim[stage["claim_id"]] = stage["round"]
    if not round_of_claim:
        raise NoEvolutionData("no reversed or evolved stages recorded")

    runs_by_round: dict[int, list[dict]] = {}
    for run in pool.iter_kind("run"):
        rnd = round_of_claim.get(run["claim_id"])
        if rnd is not None and run.get("valid"):
            runs_by_round.setdefault(rnd, []).append(run)

    battles_by_id = {b["battle_id"]: b for b in pool.iter_kind("battle")}
    battle_counts: dict[int, int] = {}
    for outcome in pool.iter_kind("outcome"):
        battle = battles_by_id.get(outcome["battle_id"])
        if battle is None or not outcome.get("quorum_met"):
            continue
        rnd = round_of_claim.get(battle["claim_id"])
        if rnd is not None:
            battle_counts[rnd] = battle_counts.get(rnd, 0) + 1

    points = []
    for rnd in sorted(set(runs_by_round) | set(battle_counts)):
        runs = runs_by_round.get(rnd, [])
        correct = sum(1 for r in runs if r.get("correct"))
        mean_acc = 100.0 * correct / len(runs) if runs else 0.0
        claims = len({r["claim_id"] for r in runs})
        points.append(
            CurvePoint(
                round=rnd,
                mean_accuracy=mean_acc,
                battle_count=battle_counts.get(rnd, 0),
                claim_count=claims,
            )
        )
    return EvolutionCurve(points=tuple(points))


@dataclass
class ValidityStats:
    scheduled_battles: int = 0
    valid_battles: int = 0
    dropped_battles: int = 0
    participation: dict[str, dict[str, int]] = field(default_factory=dict)
    parse_failures_by_judge: dict[str, int] = field(default_factory=dict)

    def participation_tsv(self) -> str:
        lines = ["model\tclaims\tbattles_oc\tbattles_ec\tbattles_total"]
        for model in sorted(self.participation):
            row = self.participation[model]
            lines.append(
                f"{model}\t{row['claims']}\t{row['battles_oc']}\t{row['battles_ec']}\t{row['battles_total']}"
            )
        return "\n".join(lines) + "\n"


def validity_stats(pool: RecordPool) -> ValidityStats:
    """Scheduled vs valid battles, per-model participation, judge failures."""
    stats = ValidityStats()
    stats.scheduled_battles = len(pool.by_kind("plan_entry"))

    evolved_claims = {
        c["claim_id"] for c in pool.iter_kind("claim") if c.get("source") == "evolved"
    }
    battles_by_id = {b["battle_id"]: b for b in pool.iter_kind("battle")}

    def row(model: str) -> dict[str, int]:
        return stats.participation.setdefault(
            model, {"claims": 0, "battles_oc": 0, "battles_ec": 0, "battles_total": 0}
        )

    for run in pool.iter_kind("run"):
        if run.get("valid"):
            row(run["model_id"])["claims"] += 1

    for outcome in pool.iter_kind("outcome"):
        battle = battles_by_id.get(outcome["battle_id"])
        if battle is None:
            continue
        if not outcome.get("quorum_met"):
            stats.dropped_battles += 1
            continue
        stats.valid_battles += 1
        key = "battles_ec" if battle["claim_id"] in evolved_claims else "battles_oc"
        for model in (battle["model_a"], battle["model_b"]):
            row(model)[key] += 1
            row(model)["battles_total"] += 1

    for judgment in pool.iter_kind("judgment"):
        if not judgment.get("valid"):
            judge = judgment["judge_id"]
            stats.parse_failures_by_judge[judge] = stats.parse_failures_by_judge.get(judge, 0) + 1
    return stats


def consistency_tsv(consistency: dict[str, ConsistencyStats], dimensions: tuple[str, ...]) -> str:
    """One row per dimension, one column per judge plus the panel average."""
    judges = sorted(consistency)
    lines = ["dimension\t" + "\t".join(judges) + "\tavg"]
    for dim in dimensions:
        values = [consistency[j].per_dimension.get(dim, 0.0) * 100 for j in judges]
        avg = sum(values) / len(values) if values else 0.0
        lines.append(dim + "\t" + "\t".join(f"{v:.2f}" for v in values) + f"\t{avg:.2f}")
    overall = [consistency[j].overall * 100 for j in judges]
    avg = sum(overall) / len(overall) if overall else 0.0
    lines.append("Average\t" + "\t".join(f"{v:.2f}" for v in overall) + f"\t{avg:.2f}")
    return "\n".join(lines) + "\n"


def write_reports(
    out_dir: str | Path,
    stats: ValidityStats,
    curve: EvolutionCurve | None,
    consistency_table: str,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "participation.tsv").write_text(stats.participation_tsv(), encoding="utf-8")
    if curve is not None:
        (out / "evolution_curve.tsv").write_text(curve.to_tsv(), encoding="utf-8")
    (out / "consistency.tsv").write_text(consistency_table, encoding="utf-8")
