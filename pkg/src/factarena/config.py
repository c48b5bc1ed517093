"""Run configuration: model pool, panel, evolver, seeds, and validation.

Configs are plain JSON.  Validation is total and happens before any
network call; every failure names the offending key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .rating import RatingConfig


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    provider_id: str
    family: str


@dataclass
class RunConfig:
    run_name: str
    seed: int
    models: list[ModelSpec]
    judges: list[str]
    evolver: ModelSpec
    sample_size: int
    pool_path: str
    quorum: int = 3
    max_rounds: int = 3
    top_k: int = 1
    template_dir: str | None = None
    exclude_self_family: bool = False
    allow_evolver_in_pool: bool = False
    parallel: int = 8
    rating: RatingConfig = field(default_factory=RatingConfig)
    scripted: dict = field(default_factory=dict)  # script/search/wiki fixtures
    raw: dict = field(default_factory=dict)

    @property
    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.models]

    @property
    def family_of(self) -> dict[str, str]:
        mapping = {m.model_id: m.family for m in self.models}
        mapping.setdefault(self.evolver.model_id, self.evolver.family)
        return mapping

    @property
    def provider_of(self) -> dict[str, str]:
        mapping = {m.model_id: m.provider_id for m in self.models}
        mapping.setdefault(self.evolver.model_id, self.evolver.provider_id)
        return mapping


def _require(data: dict, key: str):
    if key not in data:
        raise ConfigError(f"missing required config key: {key}")
    return data[key]


def parse_config(data: dict) -> RunConfig:
    models = []
    for i, entry in enumerate(_require(data, "models")):
        for key in ("model_id", "provider_id", "family"):
            if key not in entry:
                raise ConfigError(f"models[{i}].{key} is missing")
        models.append(ModelSpec(entry["model_id"], entry["provider_id"], entry["family"]))
    if len({m.model_id for m in models}) != len(models):
        raise ConfigError("models: duplicate model_id")

    seed = _require(data, "seed")
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer (seeds are mandatory)")

    judges = list(_require(data, "judges"))
    model_ids = {m.model_id for m in models}
    for j in judges:
        if j not in model_ids:
            raise ConfigError(f"judges: {j!r} is not a configured model")
    if not judges:
        raise ConfigError("judges: panel must be non-empty")
    if len(judges) >= len(models):
        raise ConfigError("judges: panel size must be smaller than the model pool")

    ev = _require(data, "evolver")
    if isinstance(ev, str):
        match = [m for m in models if m.model_id == ev]
        if not match:
            raise ConfigError(f"evolver: {ev!r} is not a configured model")
        evolver = match[0]
        if not data.get("allow_evolver_in_pool", False):
            raise ConfigError("evolver: is a target model; set allow_evolver_in_pool to override")
    else:
        for key in ("model_id", "provider_id", "family"):
            if key not in ev:
                raise ConfigError(f"evolver.{key} is missing")
        evolver = ModelSpec(ev["model_id"], ev["provider_id"], ev["family"])
        if evolver.model_id in model_ids and not data.get("allow_evolver_in_pool", False):
            raise ConfigError("evolver: is a target model; set allow_evolver_in_pool to override")

    sample_size = _require(data, "sample_size")
    if not 2 <= sample_size <= len(models):
        raise ConfigError("sample_size: must satisfy 2 <= s <= number of models")

    quorum = data.get("quorum", 3)
    if quorum < 1:
        raise ConfigError("quorum: must be >= 1")

    rating_data = data.get("rating", {})
    try:
        rating = RatingConfig(**rating_data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"rating: {exc}") from exc

    return RunConfig(
        run_name=data.get("run_name", "run"),
        seed=seed,
        models=models,
        judges=judges,
        evolver=evolver,
        sample_size=sample_size,
        pool_path=_require(data, "pool_path"),
        quorum=quorum,
        max_rounds=data.get("max_rounds", 3),
        top_k=data.get("top_k", 1),
        template_dir=data.get("template_dir"),
        exclude_self_family=data.get("exclude_self_family", False),
        allow_evolver_in_pool=data.get("allow_evolver_in_pool", False),
        parallel=data.get("parallel", 8),
        rating=rating,
        scripted=data.get("scripted", {}),
        raw=data,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return parse_config(data)
