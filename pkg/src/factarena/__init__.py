"""FactArena: stage-wise fact-checking arena for language models.

Runs target models through a three-stage fact-checking pipeline, judges
their stage-wise outputs in anonymized pairwise battles under consolidated
guidelines, fits Elo and Bradley-Terry ratings from the outcomes, and
adaptively evolves claims toward model weaknesses.
"""

from .claims import Claim, Lineage, flip_verdict
from .gateway import (
    ChatRequest,
    ChatResponse,
    Gateway,
    ScriptedProvider,
    ScriptedSearch,
    ScriptedWiki,
    SearchResult,
    WikiPage,
)
from .judgment import DIMENSIONS, majority_vote
from .rating import (
    Leaderboard,
    RatingConfig,
    RatingTable,
    WinMatrix,
    accuracy,
    bt_fit,
    bt_log_likelihood,
    elo_expected,
    elo_run,
    elo_update,
    rank,
)
from .scheduler import build_plan, plan_stats
from .simharness import SimConfig, SyntheticModel, recovery_score, simulate_tournament
from .storage import RecordPool, ingest_claims, load_and_check

__version__ = "0.1.0"

__all__ = [
    "Claim",
    "Lineage",
    "flip_verdict",
    "ChatRequest",
    "ChatResponse",
    "Gateway",
    "ScriptedProvider",
    "ScriptedSearch",
    "ScriptedWiki",
    "SearchResult",
    "WikiPage",
    "DIMENSIONS",
    "majority_vote",
    "Leaderboard",
    "RatingConfig",
    "RatingTable",
    "WinMatrix",
    "accuracy",
    "bt_fit",
    "bt_log_likelihood",
    "elo_expected",
    "elo_run",
    "elo_update",
    "rank",
    "build_plan",
    "plan_stats",
    "SimConfig",
    "SyntheticModel",
    "recovery_score",
    "simulate_tournament",
    "RecordPool",
    "ingest_claims",
    "load_and_check",
]
