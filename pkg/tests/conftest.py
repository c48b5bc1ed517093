from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from factarena.config import parse_config
from factarena.runner import Arena
from factarena.storage import RecordPool

from world import build_world_config, simple_claims


def make_arena(tmp_path, config_dict):
    from factarena.cli import _build_gateway, _build_search, _build_wiki

    config = parse_config(config_dict)
    pool = RecordPool(config.pool_path, deterministic=True)
    gateway = _build_gateway(config)
    search = _build_search(config)
    wiki = _build_wiki(config)
    return Arena(config, pool, gateway, search_backend=search, wiki_backend=wiki)


@pytest.fixture
def small_world(tmp_path):
    models = [(f"m{i}", f"fam{i % 3}") for i in range(4)]
    judges = ["m0", "m1", "m2"]
    claims = simple_claims(3)
    config = build_world_config(
        models, judges, claims, pool_path=str(tmp_path / "pool.jsonl"), max_rounds=1
    )
    arena = make_arena(tmp_path, config)
    arena.add_claims(claims)
    return arena, claims
