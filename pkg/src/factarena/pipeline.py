"""Three-stage fact-checking pipeline driven by one target model.

Stage 1 decomposes the claim into sub-claims, stage 2 retrieves web context
and summarizes evidence, stage 3 produces a justification and a binary
verdict.  Stages run strictly in order; each later prompt embeds the
earlier outputs.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .claims import Claim, REFUTED, SUPPORTED
from .errors import EmptyResults, ParseError, SearchUnavailable
from .gateway import ChatRequest, Gateway, SearchBackend, SearchResult, search

REPROMPT_LIMIT = 2  # re-prompts after the first attempt

_NUDGE = "Your previous answer did not follow the required output format. Answer again, following the format exactly."


def load_template(name: str, template_dir: str | Path | None = None) -> str:
    """Load a prompt template, falling back to the packaged default."""
    if template_dir is not None:
        candidate = Path(template_dir) / f"{name}.txt"
        if candidate.exists():
            return candidate.read_text(encoding="utf-8")
    return resources.files("factarena.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class SubClaimSet:
    claim_id: str
    sub_claims: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.sub_claims or any(not c for c in self.sub_claims):
            raise ValueError("sub-claims must be a non-empty list of non-empty strings")

    @property
    def count(self) -> int:
        return len(self.sub_claims)

    def numbered(self) -> str:
        return "\n".join(f"{i + 1}. {c}" for i, c in enumerate(self.sub_claims))


@dataclass(frozen=True)
class Evidence:
    claim_id: str
    items: tuple[str, ...]
    web_context: tuple[SearchResult, ...]
    degraded: bool = False

    def bulleted(self) -> str:
        return "\n".join(f"- {item}" for item in self.items) if self.items else "(none)"


@dataclass(frozen=True)
class VerificationOutput:
    justification: str
    verdict: str

    def __post_init__(self) -> None:
        if self.verdict not in (SUPPORTED, REFUTED):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if not self.justification:
            raise ValueError("justification must be non-empty")


@dataclass
class PipelineRun:
    run_id: str
    claim_id: str
    model_id: str
    valid: bool
    sub_claims: SubClaimSet | None = None
    evidence: Evidence | None = None
    verification: VerificationOutput | None = None
    correct: bool | None = None
    timing_ms: dict[str, float] = field(default_factory=dict)
    error: str | None = None

    def to_payload(self) -> dict:
        payload: dict = {
            "run_id": self.run_id,
            "claim_id": self.claim_id,
            "model_id": self.model_id,
            "valid": self.valid,
            "timing_ms": self.timing_ms,
        }
        if self.valid:
            assert self.sub_claims and self.evidence and self.verification
            payload.update(
                sub_claims=list(self.sub_claims.sub_claims),
                evidence_items=list(self.evidence.items),
                web_context=[
                    {"rank": r.rank, "title": r.title, "snippet": r.snippet, "url": r.url}
                    for r in self.evidence.web_context
                ],
                degraded=self.evidence.degraded,
                justification=self.verification.justification,
                verdict=self.verification.verdict,
                correct=self.correct,
            )
        else:
            payload["error"] = self.error or ""
        return payload


@dataclass
class PipelineContext:
    """Wiring for pipeline stages: gateway, search, bindings, templates."""

    gateway: Gateway
    search_backend: SearchBackend | None
    provider_of: Mapping[str, str]  # model_id -> provider_id
    template_dir: str | Path | None = None
    top_k: int = 1
    tolerate_degraded: bool = True
    clock: Callable[[], float] = time.perf_counter

    def template(self, name: str) -> str:
        return load_template(name, self.template_dir)

    def chat(self, model_id: str, prompt: str, scenario_key: str) -> str:
        """One call with up to REPROMPT_LIMIT format-nudge retries on empty output."""
        req = ChatRequest(
            provider_id=self.provider_of[model_id],
            model_id=model_id,
            messages=(("user", prompt),),
            scenario_key=scenario_key,
        )
        return self.gateway.chat(req).content

    def chat_parsed(self, model_id: str, prompt: str, scenario_key: str, parse: Callable[[str], object]):
        """Call the model and parse; re-prompt with a format nudge on failure."""
        messages: tuple[tuple[str, str], ...] = (("user", prompt),)
        last_error: ParseError | None = None
        for _ in range(REPROMPT_LIMIT + 1):
            req = ChatRequest(
                provider_id=self.provider_of[model_id],
                model_id=model_id,
                messages=messages,
                scenario_key=scenario_key,
            )
            content = self.gateway.chat(req).content
            try:
                return parse(content), content
            except ParseError as exc:
                last_error = exc
                messages = messages + (("assistant", content), ("user", _NUDGE))
        raise last_error if last_error else ParseError("unparseable output")


_ENUM_LINE = re.compile(r"^\s*\d+[.)]\s+(\S.*)$")
_BULLET_LINE = re.compile(r"^\s*[-*•]\s+(\S.*)$")
_VERDICT = re.compile(r"VERDICT\s*:\s*(SUPPORTED|REFUTED)", re.IGNORECASE)


def parse_numbered_list(text: str) -> list[str]:
    items = [m.group(1).strip() for line in text.splitlines() if (m := _ENUM_LINE.match(line))]
    if not items:
        raise ParseError("no enumerable list found")
    return items


def parse_bulleted_list(text: str) -> list[str]:
    items = [m.group(1).strip() for line in text.splitlines() if (m := _BULLET_LINE.match(line))]
    if not items:
        items = [m.group(1).strip() for line in text.splitlines() if (m := _ENUM_LINE.match(line))]
    if not items:
        raise ParseError("no evidence list found")
    return items


def parse_verdict(text: str) -> VerificationOutput:
    matches = list(_VERDICT.finditer(text))
    if not matches:
        raise ParseError("no verdict marker found")
    label = matches[-1].group(1).upper()
    verdict = SUPPORTED if label == "SUPPORTED" else REFUTED
    justification = _VERDICT.sub("", text).strip()
    if not justification:
        justification = text.strip()
    return VerificationOutput(justification=justification, verdict=verdict)


def format_web_context(results: Sequence[SearchResult]) -> str:
    if not results:
        return "(no web context available)"
    return "\n".join(f"[{r.rank}] {r.title}: {r.snippet}" for r in results)


def extract_claims(ctx: PipelineContext, model_id: str, claim: Claim) -> SubClaimSet:
    prompt = ctx.template("extract").format(claim=claim.text)
    items, _ = ctx.chat_parsed(model_id, prompt, f"extract:{claim.claim_id}", parse_numbered_list)
    return SubClaimSet(claim_id=claim.claim_id, sub_claims=tuple(items))


def retrieve_evidence(
    ctx: PipelineContext, model_id: str, claim: Claim, sub_claims: SubClaimSet
) -> Evidence:
    degraded = False
    web_context: tuple[SearchResult, ...] = ()
    if ctx.search_backend is None:
        degraded = True
    else:
        try:
            web_context = tuple(search(ctx.search_backend, claim.text, ctx.top_k))
        except EmptyResults:
            degraded = True
        except SearchUnavailable:
            if not ctx.tolerate_degraded:
                raise
            # search backend down: proceed with no evidence, flagged
            return Evidence(claim_id=claim.claim_id, items=(), web_context=(), degraded=True)
    prompt = ctx.template("evidence").format(
        claim=claim.text,
        sub_claims=sub_claims.numbered(),
        web_context=format_web_context(web_context),
    )
    items, _ = ctx.chat_parsed(model_id, prompt, f"evidence:{claim.claim_id}", parse_bulleted_list)
    return Evidence(
        claim_id=claim.claim_id, items=tuple(items), web_context=web_context, degraded=degraded
    )


def verify(
    ctx: PipelineContext, model_id: str, claim: Claim, sub_claims: SubClaimSet, evidence: Evidence
) -> VerificationOutput:
    prompt = ctx.template("verify").format(
        claim=claim.text,
        sub_claims=sub_claims.numbered(),
        evidence=evidence.bulleted(),
    )
    output, _ = ctx.chat_parsed(model_id, prompt, f"verify:{claim.claim_id}", parse_verdict)
    return output


def run_pipeline(ctx: PipelineContext, model_id: str, claim: Claim) -> PipelineRun:
    """Execute the three stages in order; errors yield an invalid run record."""
    run_id = f"run:{claim.claim_id}:{model_id}"
    timing: dict[str, float] = {}
    try:
        t0 = ctx.clock()
        sub_claims = extract_claims(ctx, model_id, claim)
        t1 = ctx.clock()
        timing["extract"] = (t1 - t0) * 1000.0
        evidence = retrieve_evidence(ctx, model_id, claim, sub_claims)
        t2 = ctx.clock()
        timing["evidence"] = (t2 - t1) * 1000.0
        verification = verify(ctx, model_id, claim, sub_claims, evidence)
        timing["verify"] = (ctx.clock() - t2) * 1000.0
    except (ParseError, SearchUnavailable, EmptyResults) as exc:
        return PipelineRun(
            run_id=run_id,
            claim_id=claim.claim_id,
            model_id=model_id,
            valid=False,
            timing_ms=timing,
            error=f"{type(exc).__name__}: {exc}",
        )
    return PipelineRun(
        run_id=run_id,
        claim_id=claim.claim_id,
        model_id=model_id,
        valid=True,
        sub_claims=sub_claims,
        evidence=evidence,
        verification=verification,
        correct=(verification.verdict == claim.gold_verdict),
        timing_ms=timing,
    )
