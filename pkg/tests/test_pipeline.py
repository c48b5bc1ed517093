"""Three-stage pipeline: parsing, staging, degradation, and run records."""

from __future__ import annotations

import pytest

from factarena.claims import Claim
from factarena.errors import ParseError, SearchUnavailable
from factarena.gateway import Gateway, ScriptedProvider, ScriptedSearch, SearchResult
from factarena.pipeline import (
    PipelineContext,
    parse_bulleted_list,
    parse_numbered_list,
    parse_verdict,
    run_pipeline,
)
from factarena.runner import run_from_payload

CLAIM = Claim(claim_id="c1", text="The tower is tall.", gold_verdict="Supported", source="HOVER")

GOOD_SCRIPT = {
    "extract:c1": "1. The tower exists.\n2. The tower is tall.",
    "evidence:c1": "- The tower is 300m.\n- Towers over 100m are tall.",
    "verify:c1": "The evidence supports it.\nVERDICT: SUPPORTED",
}


def make_ctx(script, search_backend=ScriptedSearch(default=[SearchResult(1, "t", "s")]), **kw):
    gw = Gateway({"p": ScriptedProvider(script=script)})
    return PipelineContext(
        gateway=gw, search_backend=search_backend, provider_of={"m1": "p"}, clock=lambda: 0.0, **kw
    )


# -- parsers ---------------------------------------------------------------


def test_parse_numbered_list_variants():  # [TRIVIAL]
    assert parse_numbered_list("1. a\n2) b\n 3. c") == ["a", "b", "c"]
    with pytest.raises(ParseError):
        parse_numbered_list("no list here")


def test_parse_bulleted_list_falls_back_to_numbers():  # [TRIVIAL]
    assert parse_bulleted_list("- a\n* b\n• c") == ["a", "b", "c"]
    assert parse_bulleted_list("1. a\n2. b") == ["a", "b"]
    with pytest.raises(ParseError):
        parse_bulleted_list("prose only")


def test_parse_verdict_takes_last_marker_case_insensitively():
    out = parse_verdict("Maybe VERDICT: supported... on reflection VERDICT: REFUTED")
    assert out.verdict == "Refuted"
    assert "VERDICT" not in out.justification
    with pytest.raises(ParseError):
        parse_verdict("no marker")


# -- full pipeline -----------------------------------------------------------


def test_run_pipeline_valid_and_correct():
    run = run_pipeline(make_ctx(GOOD_SCRIPT), "m1", CLAIM)
    assert run.valid and run.correct
    assert run.sub_claims.count == 2
    assert run.evidence.items == ("The tower is 300m.", "Towers over 100m are tall.")
    assert run.verification.verdict == "Supported"
    assert set(run.timing_ms) == {"extract", "evidence", "verify"}


def test_run_pipeline_wrong_verdict_is_valid_but_incorrect():
    script = dict(GOOD_SCRIPT)
    script["verify:c1"] = "Counter-evidence found. VERDICT: REFUTED"
    run = run_pipeline(make_ctx(script), "m1", CLAIM)
    assert run.valid and run.correct is False


def test_run_pipeline_stage_failure_yields_invalid_run():
    run = run_pipeline(make_ctx({"extract:c1": "free prose, never a list"}), "m1", CLAIM)
    assert not run.valid
    assert "ParseError" in run.error
    payload = run.to_payload()
    assert payload["valid"] is False and "verdict" not in payload


def test_reprompt_nudge_recovers_from_one_bad_format():
    calls = {"n": 0}

    def flaky_extract(request):
        calls["n"] += 1
        return "unusable prose" if calls["n"] == 1 else "1. A fact."

    script = dict(GOOD_SCRIPT)
    script["extract:c1"] = flaky_extract
    run = run_pipeline(make_ctx(script), "m1", CLAIM)
    assert run.valid
    assert calls["n"] == 2
    assert run.sub_claims.sub_claims == ("A fact.",)


def test_search_outage_degrades_when_tolerated():
    class DownSearch:
        def search(self, query):
            raise SearchUnavailable("down")

    run = run_pipeline(make_ctx(GOOD_SCRIPT, search_backend=DownSearch()), "m1", CLAIM)
    assert run.valid and run.evidence.degraded
    assert run.evidence.items == ()

    strict = make_ctx(GOOD_SCRIPT, search_backend=DownSearch(), tolerate_degraded=False)
    run = run_pipeline(strict, "m1", CLAIM)
    assert not run.valid and "SearchUnavailable" in run.error


def test_empty_search_results_degrade_but_still_summarize():
    run = run_pipeline(make_ctx(GOOD_SCRIPT, search_backend=ScriptedSearch()), "m1", CLAIM)
    assert run.valid and run.evidence.degraded
    assert run.evidence.items  # the model still produced an evidence summary


def test_run_payload_roundtrip():
    run = run_pipeline(make_ctx(GOOD_SCRIPT), "m1", CLAIM)
    back = run_from_payload(run.to_payload())
    assert back.to_payload() == run.to_payload()
    assert back.valid and back.verification.verdict == "Supported"
