"""Tournament planning: which models run each claim and which pairs battle.

Per claim, a seed-deterministic uniform sample of ``s`` models is drawn
without replacement and every unordered pair among them is scheduled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import PoolTooSmall


@dataclass(frozen=True)
class TournamentPlan:
    claims: tuple[str, ...]
    sampled_models: dict[str, tuple[str, ...]]  # claim_id -> s models
    pairs: dict[str, tuple[tuple[str, str], ...]]  # claim_id -> C(s,2) unordered pairs
    sample_size: int
    model_pool: tuple[str, ...]
    seed: int

    @property
    def total_battles(self) -> int:
        return sum(len(p) for p in self.pairs.values())

    def entries(self) -> list[tuple[str, str, str]]:
        """Flat (claim_id, model_a, model_b) list in schedule order."""
        return [(cid, a, b) for cid in self.claims for a, b in self.pairs[cid]]


@dataclass(frozen=True)
class PlanStats:
    total_battles: int
    expected_participation: float  # per model: |claims| * (s/|pool|) * (s-1)
    per_model_scheduled: dict[str, int]
    per_pair_scheduled: dict[tuple[str, str], int]

    @property
    def mean_per_pair(self) -> float:
        n_pairs = len(self.per_pair_scheduled)
        return self.total_battles / n_pairs if n_pairs else 0.0


def build_plan(
    claims: Sequence[str],
    model_pool: Sequence[str],
    sample_size: int,
    seed: int,
) -> TournamentPlan:
    """Sample ``sample_size`` models per claim and schedule all their pairs."""
    if sample_size > len(model_pool):
        raise PoolTooSmall(f"sample size {sample_size} exceeds pool of {len(model_pool)}")
    if sample_size < 2:
        raise PoolTooSmall("need at least 2 models per claim to battle")
    rng = random.Random(seed)
    pool = list(model_pool)
    sampled: dict[str, tuple[str, ...]] = {}
    pairs: dict[str, tuple[tuple[str, str], ...]] = {}
    for claim_id in claims:
        chosen = rng.sample(pool, sample_size)
        sampled[claim_id] = tuple(chosen)
        pairs[claim_id] = tuple(combinations(chosen, 2))
    return TournamentPlan(
        claims=tuple(claims),
        sampled_models=sampled,
        pairs=pairs,
        sample_size=sample_size,
        model_pool=tuple(model_pool),
        seed=seed,
    )


def plan_stats(plan: TournamentPlan) -> PlanStats:
    per_model: dict[str, int] = {m: 0 for m in plan.model_pool}
    per_pair: dict[tuple[str, str], int] = {
        tuple(sorted(p)): 0 for p in combinations(plan.model_pool, 2)
    }
    for claim_id in plan.claims:
        for a, b in plan.pairs[claim_id]:
            per_model[a] += 1
            per_model[b] += 1
            per_pair[tuple(sorted((a, b)))] += 1
    s, n = plan.sample_size, len(plan.model_pool)
    expected = len(plan.claims) * (s / n) * (s - 1)
    return PlanStats(
        total_battles=plan.total_battles,
        expected_participation=expected,
        per_model_scheduled=per_model,
        per_pair_scheduled=per_pair,
    )
