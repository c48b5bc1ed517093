"""Provider-agnostic access to chat models, web search, and Wikipedia.

Every LLM call in the engine goes through :class:`Gateway`, which adds
file-backed response caching, bounded retries with exponential backoff,
per-provider rate limiting, and an optional call budget.  A deterministic
:class:`ScriptedProvider` stands in for real endpoints in tests.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import requests

from .errors import (
    AuthError,
    BudgetExceeded,
    EmptyResults,
    ProviderUnreachable,
    SearchUnavailable,
    WikiUnavailable,
)

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatRequest:
    provider_id: str
    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 2048
    scenario_key: str | None = None  # human-readable override for scripted fixtures

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        roles = [r for r, _ in self.messages]
        for r in roles:
            if r not in ROLES:
                raise ValueError(f"unknown role {r!r}")
        body = roles[1:] if roles[0] == "system" else roles
        for i, r in enumerate(body):
            expected = "user" if i % 2 == 0 else "assistant"
            if r != expected:
                raise ValueError("roles must alternate user/assistant after an optional system message")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def cache_hash(self) -> str:
        """Content hash over the fields that determine the response."""
        payload = json.dumps(
            [self.provider_id, self.model_id, list(self.messages), self.temperature],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cached: bool = False


@dataclass(frozen=True)
class SearchResult:
    rank: int
    title: str
    snippet: str
    url: str = ""


@dataclass(frozen=True)
class WikiPage:
    entity: str
    summary_text: str
    found: bool


class Provider(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class ScriptedProvider:
    """Pure lookup-table provider for deterministic tests.

    Lookup order for a request: ``"{model_id}:{scenario_key}"``, then the bare
    scenario key, then the first 16 hex chars of the request hash, each first
    against exact keys and then against glob-style script keys (``fnmatch``,
    in sorted key order), then the default response.  Script values may be
    callables taking the request.
    """

    def __init__(
        self,
        script: Mapping[str, str | Callable[[ChatRequest], str]] | None = None,
        default_response: str = "",
    ) -> None:
        self.script = dict(script or {})
        self.default_response = default_response
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            self.calls.append(req)
        keys = []
        if req.scenario_key is not None:
            keys.append(f"{req.model_id}:{req.scenario_key}")
            keys.append(req.scenario_key)
        keys.append(req.cache_hash()[:16])
        patterns = sorted(k for k in self.script if any(ch in k for ch in "*?["))
        for key in keys:
            if key in self.script:
                return self._render(self.script[key], req)
            for pattern in patterns:
                if fnmatch.fnmatchcase(key, pattern):
                    return self._render(self.script[pattern], req)
        return self.default_response

    @staticmethod
    def _render(value: str | Callable[[ChatRequest], str], req: ChatRequest) -> str:
        return value(req) if callable(value) else value

    @property
    def call_count(self) -> int:
        return len(self.calls)


class FailingProvider:
    """Always raises a transient failure; used to exercise retry exhaustion."""

    def __init__(self) -> None:
        self.attempts = 0

    def complete(self, req: ChatRequest) -> str:
        self.attempts += 1
        raise ProviderUnreachable("scripted 500")


class HttpProvider:
    """Chat-completions-style HTTP+JSON endpoint.

    Base URL and credential come from ``FACTARENA_<PROVIDER>_BASE_URL`` and
    ``FACTARENA_<PROVIDER>_API_KEY`` unless given explicitly.
    """

    def __init__(
        self,
        provider_id: str,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        session: requests.Session | None = None,
    ) -> None:
        env = provider_id.upper().replace("-", "_")
        self.provider_id = provider_id
        self.base_url = base_url or os.environ.get(f"FACTARENA_{env}_BASE_URL", "")
        self.api_key = api_key or os.environ.get(f"FACTARENA_{env}_API_KEY", "")
        if not self.base_url:
            raise ValueError(f"no base URL configured for provider {provider_id!r}")
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, req: ChatRequest) -> str:
        body = {
            "model": req.model_id,
            "messages": [{"role": r, "content": c} for r, c in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        try:
            resp = self.session.post(
                f"{self.base_url.rstrip('/')}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnreachable(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"provider {self.provider_id}: HTTP {resp.status_code}")
        if resp.status_code >= 500 or resp.status_code == 429:
            raise ProviderUnreachable(f"provider {self.provider_id}: HTTP {resp.status_code}")
        resp.raise_for_status()
        data = resp.json()
        return data["choices"][0]["message"]["content"]


class RateLimiter:
    """Token-bucket limiter admitting at most ``rps`` requests per second."""

    def __init__(
        self,
        rps: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.rps = rps
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()
        self._admitted: list[float] = []

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                window_start = now - 1.0
                self._admitted = [t for t in self._admitted if t > window_start]
                if len(self._admitted) < self.rps:
                    self._admitted.append(now)
                    return
                wait = self._admitted[0] - window_start
            self.sleep(max(wait, 1e-3))


@dataclass
class RetryPolicy:
    retries: int = 2  # attempts = retries + 1
    backoff_start: float = 1.0
    backoff_factor: float = 2.0


class Gateway:
    """Front door for chat calls: caching, rate limiting, retries, budget."""

    def __init__(
        self,
        providers: Mapping[str, Provider],
        cache_dir: str | Path | None = None,
        retry: RetryPolicy | None = None,
        rate_limits: Mapping[str, RateLimiter] | None = None,
        max_calls: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.providers = dict(providers)
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.retry = retry or RetryPolicy()
        self.rate_limits = dict(rate_limits or {})
        self.max_calls = max_calls
        self.sleep = sleep
        self.clock = clock
        self.outbound_calls = 0
        self._lock = threading.Lock()

    # -- cache ---------------------------------------------------------

    def _cache_path(self, h: str) -> Path:
        assert self.cache_dir is not None
        return self.cache_dir / h[:2] / f"{h}.json"

    def _cache_get(self, req: ChatRequest) -> ChatResponse | None:
        if self.cache_dir is None:
            return None
        path = self._cache_path(req.cache_hash())
        if not path.exists():
            return None
        entry = json.loads(path.read_text(encoding="utf-8"))
        r = entry["response"]
        return ChatResponse(
            content=r["content"],
            prompt_tokens=r.get("prompt_tokens", 0),
            completion_tokens=r.get("completion_tokens", 0),
            cached=True,
        )

    def _cache_put(self, req: ChatRequest, resp: ChatResponse) -> None:
        if self.cache_dir is None:
            return
        path = self._cache_path(req.cache_hash())
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "request": {
                "provider_id": req.provider_id,
                "model_id": req.model_id,
                "messages": list(req.messages),
                "temperature": req.temperature,
            },
            "response": {
                "content": resp.content,
                "prompt_tokens": resp.prompt_tokens,
                "completion_tokens": resp.completion_tokens,
            },
            "timestamp": self.clock(),
        }
        tmp = path.with_suffix(f".tmp{os.getpid()}{threading.get_ident()}")
        tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)  # atomic on POSIX

    # -- chat ----------------------------------------------------------

    def chat(self, req: ChatRequest) -> ChatResponse:
        cached = self._cache_get(req)
        if cached is not None:
            return cached
        provider = self.providers.get(req.provider_id)
        if provider is None:
            raise ProviderUnreachable(f"no provider configured for {req.provider_id!r}")
        with self._lock:
            if self.max_calls is not None and self.outbound_calls >= self.max_calls:
                raise BudgetExceeded(f"call cap {self.max_calls} reached")
            self.outbound_calls += 1
        limiter = self.rate_limits.get(req.provider_id)
        if limiter is not None:
            limiter.acquire()
        delay = self.retry.backoff_start
        last_exc: Exception | None = None
        for attempt in range(self.retry.retries + 1):
            try:
                content = provider.complete(req)
                break
            except ProviderUnreachable as exc:
                last_exc = exc
                if attempt == self.retry.retries:
                    raise
                self.sleep(delay)
                delay *= self.retry.backoff_factor
        else:  # pragma: no cover - loop always breaks or raises
            raise ProviderUnreachable(str(last_exc))
        resp = ChatResponse(content=content, cached=False)
        self._cache_put(req, resp)
        return resp


# -- search ------------------------------------------------------------


class SearchBackend(Protocol):
    def search(self, query: str) -> Sequence[SearchResult]: ...


class ScriptedSearch:
    """Fixture-backed search index keyed by exact query (with a default)."""

    def __init__(
        self,
        index: Mapping[str, Sequence[SearchResult]] | None = None,
        default: Sequence[SearchResult] = (),
    ) -> None:
        self.index = dict(index or {})
        self.default = list(default)

    def search(self, query: str) -> Sequence[SearchResult]:
        return list(self.index.get(query, self.default))


class HttpSearch:
    """Minimal JSON search API client (rank/title/snippet/url rows)."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.api_key = api_key or os.environ.get("FACTARENA_SEARCH_API_KEY", "")
        self.timeout = timeout
        self.session = session or requests.Session()

    def search(self, query: str) -> Sequence[SearchResult]:
        try:
            resp = self.session.get(
                self.endpoint,
                params={"q": query, "key": self.api_key},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            rows = resp.json().get("results", [])
        except requests.RequestException as exc:
            raise SearchUnavailable(str(exc)) from exc
        return [
            SearchResult(
                rank=i + 1,
                title=row.get("title", ""),
                snippet=row.get("snippet", ""),
                url=row.get("url", ""),
            )
            for i, row in enumerate(rows)
        ]


def search(backend: SearchBackend, query: str, top_k: int = 1) -> list[SearchResult]:
    """Top-``top_k`` results with ranks renumbered 1..k ascending."""
    if not query:
        raise ValueError("query must be non-empty")
    if top_k < 1:
        raise ValueError("top_k must be positive")
    results = sorted(backend.search(query), key=lambda r: r.rank)[:top_k]
    if not results:
        raise EmptyResults(f"no results for {query!r}")
    return [
        SearchResult(rank=i + 1, title=r.title, snippet=r.snippet, url=r.url)
        for i, r in enumerate(results)
    ]


# -- wikipedia ---------------------------------------------------------


class WikiBackend(Protocol):
    def fetch(self, entity: str) -> WikiPage: ...


class ScriptedWiki:
    """Fixture page map: entity -> lead-section summary text."""

    def __init__(self, pages: Mapping[str, str] | None = None) -> None:
        self.pages = dict(pages or {})

    def fetch(self, entity: str) -> WikiPage:
        if entity in self.pages:
            return WikiPage(entity=entity, summary_text=self.pages[entity], found=True)
        return WikiPage(entity=entity, summary_text="", found=False)


class HttpWiki:
    """Wikipedia REST page-summary client."""

    def __init__(
        self,
        base_url: str = "https://en.wikipedia.org/api/rest_v1",
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url
        self.timeout = timeout
        self.session = session or requests.Session()

    def fetch(self, entity: str) -> WikiPage:
        url = f"{self.base_url}/page/summary/{requests.utils.quote(entity, safe='')}"
        try:
            resp = self.session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise WikiUnavailable(str(exc)) from exc
        if resp.status_code == 404:
            return WikiPage(entity=entity, summary_text="", found=False)
        if resp.status_code >= 500:
            raise WikiUnavailable(f"HTTP {resp.status_code}")
        resp.raise_for_status()
        return WikiPage(entity=entity, summary_text=resp.json().get("extract", ""), found=True)


def wiki_fetch(backend: WikiBackend, entity: str) -> WikiPage:
    if not entity:
        raise ValueError("entity must be non-empty")
    return backend.fetch(entity)
