"""Operator entry point: resumable subcommands over one record pool.

Exit codes: 0 success, 2 config error, 3 provider error, 4 integrity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, load_config, parse_config
from .errors import (
    AuthError,
    BudgetExceeded,
    ConfigError,
    CorruptLine,
    FactArenaError,
    ProviderUnreachable,
    SchemaViolation,
)
from .gateway import (
    Gateway,
    HttpProvider,
    HttpSearch,
    HttpWiki,
    ScriptedProvider,
    ScriptedSearch,
    ScriptedWiki,
    SearchResult,
)
from .rating import RatingConfig, bt_fit
from .runner import Arena
from .simharness import SimConfig, SyntheticModel, recovery_score, simulate_tournament
from .storage import RecordPool, ingest_claims, load_and_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_INTEGRITY = 4


def _build_gateway(config: RunConfig) -> Gateway:
    scripted = config.scripted.get("providers", {})
    providers = {}
    for provider_id in sorted(set(config.provider_of.values())):
        if provider_id in scripted:
            spec = scripted[provider_id]
            providers[provider_id] = ScriptedProvider(
                script=spec.get("script", {}),
                default_response=spec.get("default_response", ""),
            )
        else:
            providers[provider_id] = HttpProvider(provider_id)
    cache_dir = config.raw.get("cache_dir")
    max_calls = config.raw.get("max_calls")
    return Gateway(providers, cache_dir=cache_dir, max_calls=max_calls)


def _build_search(config: RunConfig):
    spec = config.scripted.get("search")
    if spec is not None:
        def rows(entries):
            return [
                SearchResult(
                    rank=i + 1,
                    title=e.get("title", ""),
                    snippet=e.get("snippet", ""),
                    url=e.get("url", ""),
                )
                for i, e in enumerate(entries)
            ]

        return ScriptedSearch(
            index={q: rows(entries) for q, entries in spec.get("index", {}).items()},
            default=rows(spec.get("default", [])),
        )
    http = config.raw.get("search")
    if http and http.get("endpoint"):
        return HttpSearch(endpoint=http["endpoint"])
    return None


def _build_wiki(config: RunConfig):
    spec = config.scripted.get("wiki")
    if spec is not None:
        return ScriptedWiki(pages=spec.get("pages", {}))
    if config.raw.get("wiki", {}).get("mode") == "http":
        return HttpWiki()
    return None


def _arena(args: argparse.Namespace) -> Arena:
    config = load_config(args.config)
    overrides = {
        "seed": args.seed,
        "sample_size": args.sample_size,
        "max_rounds": args.max_rounds,
        "parallel": args.parallel,
    }
    raw = dict(config.raw)
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    if args.exclude_self_family:
        raw["exclude_self_family"] = True
    rating = dict(raw.get("rating", {}))
    if args.k_factor is not None:
        rating["k_factor"] = args.k_factor
    if getattr(args, "lam", None) is not None:
        rating["prior_strength"] = args.lam
    raw["rating"] = rating
    config = parse_config(raw)
    pool_path = args.pool or config.pool_path
    pool = RecordPool(pool_path, deterministic=True)
    if Path(pool_path).exists():
        loaded, report = load_and_check(pool_path, strict=True)
        pool.records = loaded.records
    return Arena(
        config,
        pool,
        _build_gateway(config),
        search_backend=_build_search(config),
        wiki_backend=_build_wiki(config),
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="factarena", description=__doc__)
    parser.add_argument("--config", help="run config JSON")
    parser.add_argument("--pool", help="pool file path (overrides config)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--parallel", type=int)
    parser.add_argument("--exclude-self-family", action="store_true")
    parser.add_argument("--k-factor", type=float)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--max-rounds", type=int)
    parser.add_argument("--sample-size", type=int)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="map dataset rows to claim records")
    p_ingest.add_argument("--dataset", required=True)
    p_ingest.add_argument("--source", required=True, choices=["HOVER", "FEVEROUS"])
    p_ingest.add_argument("--limit", type=int, default=200)

    for name in ("run", "guideline", "battle", "evolve", "rate"):
        sub.add_parser(name)
    p_report = sub.add_parser("report")
    p_report.add_argument("--out", default="reports")

    p_sim = sub.add_parser("sim", help="synthetic-skill tournament and recovery report")
    p_sim.add_argument("--models", type=int, default=8)
    p_sim.add_argument("--skill-gap", type=float, default=50.0)
    p_sim.add_argument("--battles-per-pair", type=int, default=100)
    p_sim.add_argument("--tie-rate", type=float, default=0.1)
    p_sim.add_argument("--sim-seed", type=int, default=0)
    p_sim.add_argument("--sim-pool", default="sim_pool.jsonl")

    p_check = sub.add_parser("check", help="pool integrity report")
    p_check.add_argument("--lenient", action="store_true")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProviderUnreachable, AuthError, BudgetExceeded) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (CorruptLine, SchemaViolation) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except FactArenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "sim":
        skills = [1000.0 + args.skill_gap * i for i in range(args.models)]
        cfg = SimConfig(
            models=tuple(
                SyntheticModel(model_id=f"synth-{i}", latent_skill=s)
                for i, s in enumerate(skills)
            ),
            battles_per_pair=args.battles_per_pair,
            tie_rate=args.tie_rate,
            seed=args.sim_seed,
        )
        pool = RecordPool(args.sim_pool, deterministic=True)
        result = simulate_tournament(cfg, pool)
        fitted = bt_fit(result.win_matrix, RatingConfig())
        rho, gap = recovery_score(fitted, cfg)
        print(f"spearman={rho:.4f} max_gap_error={gap:.2f} pool={args.sim_pool}")
        return EXIT_OK

    if args.command == "check":
        if not args.pool:
            raise ConfigError("check requires --pool")
        _, report = load_and_check(args.pool, strict=not args.lenient)
        print(json.dumps({
            "per_kind": report.per_kind,
            "dangling": report.dangling,
            "duplicates": report.duplicates,
            "skipped_lines": report.skipped_lines,
        }, indent=2))
        return EXIT_OK if report.clean else EXIT_INTEGRITY

    if not args.config:
        raise ConfigError(f"{args.command} requires --config")
    arena = _arena(args)

    if args.command == "ingest":
        result = ingest_claims(args.dataset, args.source, args.limit, arena.config.seed)
        added = arena.add_claims(result.claims)
        print(f"ingested {added} claims ({result.skipped_unmappable} rows skipped)")
    elif args.command == "run":
        new = arena.phase_run()
        print(f"pipelines: {new} new runs, {arena.gateway.outbound_calls} provider calls")
    elif args.command == "guideline":
        new = arena.phase_guideline()
        print(f"guidelines: {new} new records")
    elif args.command == "battle":
        new = arena.phase_battle()
        print(f"battles: {new} new outcomes")
    elif args.command == "evolve":
        new = arena.phase_evolve()
        print(f"evolution: {new} lineages processed")
    elif args.command == "rate":
        tables = arena.phase_rate()
        board = arena.leaderboard(tables["BradleyTerry"])
        print(board.to_tsv(), end="")
    elif args.command == "report":
        paths = arena.phase_report(args.out)
        for name, path in sorted(paths.items()):
            print(f"{name}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
