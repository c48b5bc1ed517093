"""Elo and Bradley-Terry ratings over per-dimension battle outcomes.

Elo folds outcomes sequentially (order-sensitive, by design); Bradley-Terry
consumes only the aggregate win matrix and is fit by minorization-
maximization with an optional quadratic prior toward the rating center.
Ratings are reported on the Elo scale: gap(a, b) = alpha * log10(pi_a/pi_b),
re-centered so the mean rating equals ``center``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DisconnectedGraph, NoRuns, NonFinite, UnknownModel

LN10 = math.log(10.0)


@dataclass(frozen=True)
class RatingConfig:
    alpha: float = 400.0
    k_factor: float = 4.0
    initial_rating: float = 1000.0
    center: float = 1000.0
    bt_tolerance: float = 1e-8
    bt_max_iters: int = 1000
    prior_strength: float = 0.01  # lambda; 0 disables the prior

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.k_factor <= 0 or self.prior_strength < 0:
            raise ValueError("require alpha > 0, k_factor > 0, prior_strength >= 0")


@dataclass
class WinMatrix:
    """W[a][b] = wins of a over b; each tie adds half a win to both sides."""

    models: tuple[str, ...]
    w: np.ndarray

    @classmethod
    def empty(cls, models: Sequence[str]) -> "WinMatrix":
        n = len(models)
        return cls(models=tuple(models), w=np.zeros((n, n)))

    def index(self, model: str) -> int:
        try:
            return self.models.index(model)
        except ValueError:
            raise UnknownModel(model) from None

    def add(self, model_a: str, model_b: str, outcome: str) -> None:
        i, j = self.index(model_a), self.index(model_b)
        if outcome == "A":
            self.w[i, j] += 1.0
        elif outcome == "B":
            self.w[j, i] += 1.0
        elif outcome == "Tie":
            self.w[i, j] += 0.5
            self.w[j, i] += 0.5
        else:
            raise ValueError(f"bad outcome {outcome!r}")

    @property
    def total_mass(self) -> float:
        return float(self.w.sum())

    def battle_counts(self) -> dict[str, float]:
        n = (self.w + self.w.T).sum(axis=1)
        return {m: float(c) for m, c in zip(self.models, n)}


@dataclass
class RatingTable:
    method: str  # "Elo" | "BradleyTerry"
    ratings: dict[str, float]
    battle_count: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    flags: list[str] = field(default_factory=list)
    processing_order: tuple[str, ...] = ()  # battle ids / labels, Elo only

    def to_payload(self, dimension: str) -> dict:
        return {
            "method": self.method,
            "dimension": dimension,
            "ratings": dict(self.ratings),
            "battle_count": dict(self.battle_count),
            "converged": self.converged,
            "flags": list(self.flags),
        }


# -- Elo ----------------------------------------------------------------


def elo_expected(r_a: float, r_b: float, alpha: float = 400.0) -> float:
    """Win probability of a over b: 1 / (1 + 10^((R_b - R_a)/alpha))."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / alpha))


def elo_update(
    r_a: float, r_b: float, s_ab: float, cfg: RatingConfig = RatingConfig()
) -> tuple[float, float]:
    """Symmetric update R'_a = R_a + K*(S - P); total rating mass conserved."""
    if s_ab not in (0.0, 0.5, 1.0):
        raise ValueError("observed outcome must be 0, 0.5, or 1")
    p = elo_expected(r_a, r_b, cfg.alpha)
    delta = cfg.k_factor * (s_ab - p)
    return r_a + delta, r_b - delta


def elo_run(
    outcomes: Iterable[tuple[str, str, float]],
    cfg: RatingConfig = RatingConfig(),
    models: Sequence[str] | None = None,
) -> RatingTable:
    """Sequential Elo fold over (model_a, model_b, S_ab) outcomes, in order."""
    ratings: dict[str, float] = {m: cfg.initial_rating for m in (models or [])}
    counts: dict[str, float] = {m: 0.0 for m in ratings}
    order: list[str] = []
    for a, b, s in outcomes:
        if models is not None and (a not in ratings or b not in ratings):
            raise UnknownModel(a if a not in ratings else b)
        ratings.setdefault(a, cfg.initial_rating)
        ratings.setdefault(b, cfg.initial_rating)
        counts[a] = counts.get(a, 0.0) + 1
        counts[b] = counts.get(b, 0.0) + 1
        ratings[a], ratings[b] = elo_update(ratings[a], ratings[b], s, cfg)
        order.append(f"{a}|{b}")
    return RatingTable(
        method="Elo",
        ratings=ratings,
        battle_count=counts,
        processing_order=tuple(order),
    )


# -- Bradley-Terry -------------------------------------------------------


def bt_log_likelihood(
    ratings: Mapping[str, float],
    win_matrix: WinMatrix,
    alpha: float = 400.0,
    prior_strength: float = 0.0,
    center: float = 1000.0,
) -> float:
    """Sum over ordered pairs of W_ab * log P(a beats b), minus the prior.

    P comes from the logistic Elo-scale formula; the optional prior subtracts
    prior_strength * sum_i (R_i - center)^2.
    """
    r = np.array([ratings[m] for m in win_matrix.models])
    value = _neg_penalized(r, win_matrix.w, alpha, prior_strength, center)[0]
    result = -value
    if not np.isfinite(result):
        raise NonFinite("log-likelihood is not finite")
    return float(result)


def _neg_penalized(
    r: np.ndarray, w: np.ndarray, alpha: float, lam: float, center: float
) -> tuple[float, np.ndarray]:
    """Negative penalized log-likelihood and its gradient in rating space."""
    scale = LN10 / alpha
    z = scale * (r[:, None] - r[None, :])  # z_ab = scaled gap
    log_p = -np.logaddexp(0.0, -z)  # log sigma(z), stable
    ll = float((w * log_p).sum())
    p = 1.0 / (1.0 + np.exp(-z))
    # d ll / d r_i = scale * sum_j [ w_ij (1 - p_ij) - w_ji (1 - p_ji) ]
    grad_ll = scale * ((w * (1.0 - p)).sum(axis=1) - (w.T * (1.0 - p.T)).sum(axis=1))
    penalty = lam * float(((r - center) ** 2).sum())
    grad_pen = 2.0 * lam * (r - center)
    return -(ll - penalty), -(grad_ll - grad_pen)


def _is_connected(n_matrix: np.ndarray) -> bool:
    n = n_matrix.shape[0]
    if n <= 1:
        return True
    adjacency = n_matrix > 0
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.nonzero(adjacency[i])[0]:
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    return len(seen) == n


def bt_fit(win_matrix: WinMatrix, cfg: RatingConfig = RatingConfig()) -> RatingTable:
    """Maximum-likelihood Bradley-Terry ratings from the win matrix.

    Minorization-maximization in strength space, then a quasi-Newton polish
    of the (optionally prior-regularized) objective in rating space.  With
    no prior the gauge is fixed by re-centering the mean to ``center``; the
    prior anchors the mean at ``center`` on its own.
    """
    w = win_matrix.w
    n = len(win_matrix.models)
    if n == 0:
        return RatingTable(method="BradleyTerry", ratings={})
    n_matrix = w + w.T
    if np.any(n_matrix.sum(axis=1) == 0) and n > 1:
        lonely = [m for m, c in zip(win_matrix.models, n_matrix.sum(axis=1)) if c == 0]
        raise UnknownModel(f"models with no comparisons: {lonely}")
    flags: list[str] = []
    connected = _is_connected(n_matrix)
    if not connected:
        if cfg.prior_strength == 0:
            raise DisconnectedGraph("comparison graph is disconnected and no prior is set")
        flags.append("disconnected_graph")

    # MM sweeps: pi_i <- total wins of i / sum_j N_ij / (pi_i + pi_j)
    wins = w.sum(axis=1)
    pi = np.ones(n)
    converged = False
    floor = 1e-12
    if np.all(wins > 0):
        for _ in range(cfg.bt_max_iters):
            denom = (n_matrix / (pi[:, None] + pi[None, :] + np.eye(n))).sum(axis=1)
            new_pi = np.where(denom > 0, wins / np.maximum(denom, floor), pi)
            new_pi = np.maximum(new_pi, floor)
            new_pi /= np.exp(np.mean(np.log(new_pi)))  # geometric-mean gauge
            delta_r = cfg.alpha * np.max(np.abs(np.log10(new_pi) - np.log10(pi)))
            pi = new_pi
            if delta_r < cfg.bt_tolerance * cfg.alpha:
                converged = True
                break
    else:
        flags.append("degenerate_wins")  # some model never scored; MLE gap infinite

    r = cfg.center + cfg.alpha * np.log10(pi)
    r = r - r.mean() + cfg.center

    # Polish (and handle the prior) with L-BFGS on the penalized objective.
    result = minimize(
        _neg_penalized,
        r,
        args=(w, cfg.alpha, cfg.prior_strength, cfg.center),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.bt_max_iters, "gtol": 1e-12, "ftol": 1e-15},
    )
    r = result.x
    if cfg.prior_strength == 0:
        r = r - r.mean() + cfg.center
        grad = _neg_penalized(r, w, cfg.alpha, 0.0, cfg.center)[1]
        if np.max(np.abs(grad)) > 1e-6 and "degenerate_wins" not in flags:
            converged = False
        else:
            converged = True
    else:
        converged = bool(result.success) or np.max(np.abs(result.jac)) < 1e-8
    if not converged:
        flags.append("not_converged")

    ratings = {m: float(v) for m, v in zip(win_matrix.models, r)}
    return RatingTable(
        method="BradleyTerry",
        ratings=ratings,
        battle_count=win_matrix.battle_counts(),
        converged=converged,
        flags=flags,
    )


# -- accuracy and leaderboard --------------------------------------------


def accuracy(run_payloads: Sequence[dict], model_id: str) -> float:
    """Percentage of valid runs with a correct verdict, over all claims."""
    valid = [r for r in run_payloads if r["model_id"] == model_id and r.get("valid")]
    if not valid:
        raise NoRuns(f"no valid runs for {model_id}")
    correct = sum(1 for r in valid if r.get("correct"))
    return 100.0 * correct / len(valid)


@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    model_id: str
    ratings: Mapping[str, float]  # dimension -> rating
    battle_count: float
    accuracy: float | None


@dataclass(frozen=True)
class Leaderboard:
    rows: tuple[LeaderboardRow, ...]
    dimensions: tuple[str, ...]

    def to_tsv(self) -> str:
        header = ["rank", "model", "battle_count", *self.dimensions, "accuracy"]
        lines = ["\t".join(header)]
        for row in self.rows:
            cells = [
                str(row.rank),
                row.model_id,
                f"{row.battle_count:g}",
                *[f"{row.ratings[d]:.2f}" for d in self.dimensions],
                "" if row.accuracy is None else f"{row.accuracy:.2f}",
            ]
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_payload(self) -> list[dict]:
        return [
            {
                "rank": row.rank,
                "model_id": row.model_id,
                "battle_count": row.battle_count,
                "ratings": {d: row.ratings[d] for d in self.dimensions},
                "accuracy": row.accuracy,
            }
            for row in self.rows
        ]


def rank(
    tables: Mapping[str, RatingTable],
    accuracy_by_model: Mapping[str, float] | None = None,
    overall_dimension: str = "Overall",
) -> Leaderboard:
    """Leaderboard sorted by the Overall rating, descending.

    Exact rating ties break by battle count (descending), then model id.
    """
    if overall_dimension not in tables:
        raise ValueError(f"missing {overall_dimension!r} rating table")
    overall = tables[overall_dimension]
    dimensions = tuple(tables)
    accuracy_by_model = accuracy_by_model or {}

    def sort_key(model: str):
        return (
            -overall.ratings[model],
            -overall.battle_count.get(model, 0.0),
            model,
        )

    rows = []
    for i, model in enumerate(sorted(overall.ratings, key=sort_key), start=1):
        rows.append(
            LeaderboardRow(
                rank=i,
                model_id=model,
                ratings={d: tables[d].ratings.get(model, float("nan")) for d in dimensions},
                battle_count=overall.battle_count.get(model, 0.0),
                accuracy=accuracy_by_model.get(model),
            )
        )
    return Leaderboard(rows=tuple(rows), dimensions=dimensions)
