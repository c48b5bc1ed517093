"""Judge reference guidelines.

Three kinds: a consolidated claim-extraction guideline built by rotating
judges over all candidate sub-claim decompositions, a Wikipedia-grounded
evidence guideline, and the fixed four-criterion justification rubric.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .claims import Claim
from .errors import ParseError, WikiUnavailable
from .gateway import WikiBackend, wiki_fetch
from .pipeline import PipelineContext

EVIDENCE_REFERENCE_CAP = 4000  # characters; whole summaries dropped last-first

RUBRIC_CRITERIA = ("Helpfulness", "Informativeness", "Soundness", "Readability")


@dataclass(frozen=True)
class CandidateSet:
    """One target model's sub-claim decomposition offered for consolidation."""

    run_id: str
    model_id: str
    family: str
    sub_claims: tuple[str, ...]

    def numbered(self) -> str:
        return "\n".join(f"{i + 1}. {c}" for i, c in enumerate(self.sub_claims))


@dataclass
class ExtractionGuideline:
    claim_id: str
    version: int
    text: str
    incorporated_sources: set[str] = field(default_factory=set)
    editor_history: list[str] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "guideline_kind": "extraction",
            "version": self.version,
            "text": self.text,
            "incorporated_sources": sorted(self.incorporated_sources),
            "editor_history": list(self.editor_history),
        }


@dataclass(frozen=True)
class EvidenceGuideline:
    claim_id: str
    entities: tuple[str, ...]
    reference_text: str
    pages_found: int
    flagged: bool = False
    is_gold: bool = False  # reference is a factual basis, never a gold label

    def to_payload(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "guideline_kind": "evidence",
            "entities": list(self.entities),
            "reference_text": self.reference_text,
            "pages_found": self.pages_found,
            "flagged": self.flagged,
            "is_gold": False,
        }


@dataclass(frozen=True)
class RubricCriterion:
    name: str
    definition: str


@dataclass(frozen=True)
class JustificationRubric:
    criteria: tuple[RubricCriterion, ...]

    def text(self) -> str:
        return "\n".join(f"{c.name}: {c.definition}" for c in self.criteria)


def justification_rubric(template_dir=None) -> JustificationRubric:
    """The four fixed judging criteria, in canonical order."""
    from .pipeline import load_template

    raw = load_template("rubric", template_dir)
    definitions: dict[str, str] = {}
    for line in raw.splitlines():
        if ":" in line:
            name, definition = line.split(":", 1)
            definitions[name.strip()] = definition.strip()
    criteria = tuple(
        RubricCriterion(name=name, definition=definitions.get(name, name))
        for name in RUBRIC_CRITERIA
    )
    return JustificationRubric(criteria=criteria)


def consolidate_extraction_guideline(
    ctx: PipelineContext,
    claim: Claim,
    candidate_sets: Sequence[CandidateSet],
    panel: Sequence[str],
    family_of: Mapping[str, str],
    seed: int | str,
    max_edits: int | None = None,
) -> ExtractionGuideline:
    """Merge all candidate decompositions into one reference guideline.

    Initializes from a seed-selected candidate, then performs one edit per
    remaining candidate: the next judge in rotation (skipping any judge whose
    family produced that candidate) merges it into the current guideline.
    Candidate provenance is hidden and presentation order shuffled.
    """
    if not candidate_sets:
        raise ValueError("need at least one candidate set")
    if not panel:
        raise ValueError("panel must be non-empty")
    rng = random.Random(seed)
    order = list(candidate_sets)
    rng.shuffle(order)
    initial, rest = order[0], order[1:]
    if max_edits is not None:
        rest = rest[:max_edits]

    guideline = ExtractionGuideline(
        claim_id=claim.claim_id,
        version=0,
        text=initial.numbered(),
        incorporated_sources={initial.run_id},
    )
    template = ctx.template("consolidate")
    judge_cursor = 0
    m = len(panel)
    for candidate in rest:
        prompt = template.format(
            claim=claim.text, guideline=guideline.text, candidate=candidate.numbered()
        )
        updated: str | None = None
        editor: str | None = None
        for offset in range(m):
            judge_id = panel[(judge_cursor + offset) % m]
            if family_of.get(judge_id) == candidate.family:
                continue  # judges never edit a round built on their own family's output
            try:
                updated, _ = ctx.chat_parsed(
                    judge_id,
                    prompt,
                    f"consolidate:{claim.claim_id}:{candidate.run_id}",
                    _parse_guideline_text,
                )
                editor = judge_id
                judge_cursor = (judge_cursor + offset + 1) % m
                break
            except ParseError:
                continue  # retried with the next judge in rotation
        if updated is None or editor is None:
            raise ParseError(
                f"no eligible judge produced a guideline for candidate {candidate.run_id}"
            )
        guideline.version += 1
        guideline.text = updated
        guideline.incorporated_sources.add(candidate.run_id)
        guideline.editor_history.append(editor)
    return guideline


def _parse_guideline_text(text: str) -> str:
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty guideline update")
    return stripped


def build_evidence_guideline(
    ctx: PipelineContext,
    wiki_backend: WikiBackend | None,
    claim: Claim,
    extractor_judge_id: str,
) -> EvidenceGuideline:
    """Wikipedia-grounded factual basis: entities in the claim, page summaries.

    Summaries are concatenated in entity order up to a character cap, dropping
    whole summaries last-first.  Never used as a gold label.
    """
    prompt = ctx.template("entities").format(claim=claim.text)
    raw = ctx.chat(extractor_judge_id, prompt, f"entities:{claim.claim_id}")
    entities = tuple(line.strip() for line in raw.splitlines() if line.strip())
    if not entities:
        return EvidenceGuideline(
            claim_id=claim.claim_id, entities=(), reference_text="", pages_found=0, flagged=True
        )
    summaries: list[str] = []
    found = 0
    try:
        for entity in entities:
            if wiki_backend is None:
                raise WikiUnavailable("no wiki backend configured")
            page = wiki_fetch(wiki_backend, entity)
            if page.found:
                found += 1
                summaries.append(page.summary_text)
    except WikiUnavailable:
        return EvidenceGuideline(
            claim_id=claim.claim_id,
            entities=entities,
            reference_text="",
            pages_found=0,
            flagged=True,
        )
    while summaries and sum(len(s) for s in summaries) + 2 * (len(summaries) - 1) > EVIDENCE_REFERENCE_CAP:
        summaries.pop()  # drop whole summaries from the end
    reference = "\n\n".join(summaries)
    return EvidenceGuideline(
        claim_id=claim.claim_id,
        entities=entities,
        reference_text=reference,
        pages_found=found,
        flagged=(found == 0),
    )
