"""Synthetic-skill tournament simulator.

Validates the judging/rating stack without any real model: planted latent
skills drive outcome sampling through the logistic win-probability law, and
recovery of the planted ordering and gaps is scored against the fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.stats import spearmanr

from .rating import RatingTable, WinMatrix, elo_expected
from .storage import RecordPool


@dataclass(frozen=True)
class SyntheticModel:
    model_id: str
    latent_skill: float  # Elo scale
    verdict_accuracy: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.verdict_accuracy <= 1.0:
            raise ValueError("verdict_accuracy must lie in [0, 1]")


@dataclass(frozen=True)
class SimConfig:
    models: tuple[SyntheticModel, ...]
    battles_per_pair: int = 100
    tie_rate: float = 0.0
    seed: int = 0
    alpha: float = 400.0

    def __post_init__(self) -> None:
        if self.battles_per_pair < 1:
            raise ValueError("battles_per_pair must be >= 1")
        if not 0.0 <= self.tie_rate <= 1.0:
            raise ValueError("tie_rate must lie in [0, 1]")


@dataclass
class SimResult:
    win_matrix: WinMatrix
    outcome_payloads: list[dict] = field(default_factory=list)


def simulate_tournament(cfg: SimConfig, pool: RecordPool | None = None) -> SimResult:
    """Sample every pair's battles; emit a win matrix and outcome records.

    For each battle, with probability ``tie_rate`` the outcome is a tie;
    otherwise model a wins with the logistic probability implied by the
    latent skill gap.  Vectorized per pair, deterministic under the seed.
    """
    rng = np.random.default_rng(cfg.seed)
    ids = tuple(m.model_id for m in cfg.models)
    wm = WinMatrix.empty(ids)
    outcomes: list[dict] = []
    k = cfg.battles_per_pair
    for a, b in combinations(cfg.models, 2):
        p_win = elo_expected(a.latent_skill, b.latent_skill, cfg.alpha)
        ties = rng.random(k) < cfg.tie_rate
        a_wins = rng.random(k) < p_win
        i, j = wm.index(a.model_id), wm.index(b.model_id)
        n_tie = int(ties.sum())
        n_a = int((~ties & a_wins).sum())
        n_b = k - n_tie - n_a
        wm.w[i, j] += n_a + 0.5 * n_tie
        wm.w[j, i] += n_b + 0.5 * n_tie
        for t in range(k):
            outcome = "Tie" if ties[t] else ("A" if a_wins[t] else "B")
            payload = {
                "battle_id": f"sim:{a.model_id}:{b.model_id}:{t}",
                "model_a": a.model_id,
                "model_b": b.model_id,
                "outcomes": {"Overall": outcome},
                "quorum_met": True,
                "valid_count": 1,
            }
            outcomes.append(payload)
            if pool is not None:
                pool.append("outcome", payload)
    return SimResult(win_matrix=wm, outcome_payloads=outcomes)


def recovery_score(fitted: RatingTable, cfg: SimConfig) -> tuple[float, float]:
    """(Spearman rank correlation, max absolute pairwise gap error).

    Both compare the fitted ratings against the planted latent skills.
    """
    skills = np.array([m.latent_skill for m in cfg.models])
    ratings = np.array([fitted.ratings[m.model_id] for m in cfg.models])
    if len(cfg.models) < 2:
        return 1.0, 0.0
    rho = float(spearmanr(skills, ratings).statistic)
    gap_error = 0.0
    for i in range(len(cfg.models)):
        for j in range(i + 1, len(cfg.models)):
            planted = skills[i] - skills[j]
            got = ratings[i] - ratings[j]
            gap_error = max(gap_error, abs(got - planted))
    return rho, float(gap_error)
