"""Evaluation agent: renders the judgment prompt for a (decomposition,
response, optional dialogue context) triple, parses the verdicts, and
assembles a report.

Scores are always recomputed from the per-predicate verdicts; the backend's
own aggregate numbers are parsed but never trusted, and any disagreement is
logged and noted in the report meta.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import logging

from . import repair
from .analyzer import ParseFailure, UnparseableOutput
from .model import (
    Decomposition,
    DialogueContext,
    DialogueTranscript,
    EvaluationReport,
    ReportMeta,
    SatisfactionResult,
    validate_decomposition,
)
from .prompting import PromptBundle, TEMPLATE_VERSION, render_evaluator_prompt
from .provider import Provider
from .scoring import DialogueScore

log = logging.getLogger(__name__)

#: The only accepted spellings for a verdict besides JSON booleans,
#: case-insensitive. Anything else is a parse failure.
BOOLEAN_ALIASES = {"true": True, "yes": True, "false": False, "no": False}

DEFAULT_EVIDENCE_CAP = 500

VERDICT_REMINDER = (
    "\n\nREMINDER: Respond with ONLY one valid JSON object matching the "
    "required schema, covering EVERY listed requirement id exactly once."
)


class MissingVerdict(ParseFailure):
    """The judge omitted one or more predicate ids."""

    def __init__(self, missing_ids: list[int]) -> None:
        super().__init__(f"missing verdicts for predicate ids {missing_ids}")
        self.missing_ids = missing_ids


class DuplicateVerdict(ParseFailure):
    """The judge answered a predicate id more than once."""

    def __init__(self, duplicate_ids: list[int]) -> None:
        super().__init__(f"duplicate verdicts for predicate ids {duplicate_ids}")
        self.duplicate_ids = duplicate_ids


def _parse_bool(value: object, pid: object) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        alias = value.strip().lower()
        if alias in BOOLEAN_ALIASES:
            return BOOLEAN_ALIASES[alias]
    raise ParseFailure(f"verdict for predicate {pid}: 'satisfied' value {value!r} is not boolean")


def _extract_payload(raw: str) -> dict:
    stripped = raw.strip()
    candidates = [stripped] if stripped.startswith(("{", "[")) else []
    candidates += [c for c in repair.extract_candidates(stripped) if c != stripped]
    first_error: str | None = None
    for cand in candidates:
        try:
            obj = json.loads(cand)
        except json.JSONDecodeError as exc:
            if first_error is None:
                first_error = f"{exc.msg} at offset {exc.pos}"
            continue
        if isinstance(obj, dict) and "instruction_evaluations" in obj:
            return obj
    if first_error is not None:
        raise ParseFailure(f"no parseable JSON object found: {first_error}")
    raise ParseFailure("no JSON object with an 'instruction_evaluations' field found")


def _parse_payload(
    raw: str, d: Decomposition
) -> tuple[list[SatisfactionResult], dict]:
    """Parse verdicts plus the (untrusted) aggregate fields."""
    payload = _extract_payload(raw)
    entries = payload["instruction_evaluations"]
    if not isinstance(entries, list):
        raise ParseFailure("field 'instruction_evaluations' is not a list")
    expected = set(d.predicate_ids())
    seen: dict[int, SatisfactionResult] = {}
    duplicates: list[int] = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ParseFailure(f"verdict at index {i} is not an object")
        if "instruction_id" not in entry:
            raise ParseFailure(f"verdict at index {i}: missing field 'instruction_id'")
        pid = entry["instruction_id"]
        if isinstance(pid, bool) or not isinstance(pid, int):
            raise ParseFailure(f"verdict at index {i}: 'instruction_id' is not an integer")
        if pid not in expected:
            raise ParseFailure(f"verdict names unknown predicate id {pid}")
        if "satisfied" not in entry:
            raise ParseFailure(f"verdict for predicate {pid}: missing field 'satisfied'")
        satisfied = _parse_bool(entry["satisfied"], pid)
        evidence = entry.get("evidence", "")
        if not isinstance(evidence, str):
            raise ParseFailure(f"verdict for predicate {pid}: 'evidence' is not text")
        if pid in seen:
            duplicates.append(pid)
            continue
        try:
            seen[pid] = SatisfactionResult(predicate_id=pid, satisfied=satisfied, evidence=evidence)
        except ValueError as exc:
            raise ParseFailure(str(exc)) from exc
    if duplicates:
        raise DuplicateVerdict(sorted(set(duplicates)))
    missing = sorted(expected - set(seen))
    if missing:
        raise MissingVerdict(missing)
    aggregates = {
        k: payload.get(k) for k in ("overall_score", "overall_verifiable_score", "type_scores")
    }
    return [seen[pid] for pid in d.predicate_ids()], aggregates


def parse_evaluator_output(raw: str, d: Decomposition) -> list[SatisfactionResult]:
    """Strictly parse judge output into one verdict per predicate id.

    Booleans accept JSON ``true``/``false`` plus the documented aliases in
    :data:`BOOLEAN_ALIASES`. Raises :class:`MissingVerdict`,
    :class:`DuplicateVerdict`, or :class:`ParseFailure`.
    """
    results, _ = _parse_payload(raw, d)
    return results


def _cap_evidence(
    results: list[SatisfactionResult], cap: int
) -> tuple[list[SatisfactionResult], list[str]]:
    capped: list[SatisfactionResult] = []
    notes: list[str] = []
    for r in results:
        if len(r.evidence) > cap:
            capped.append(
                SatisfactionResult(
                    predicate_id=r.predicate_id,
                    satisfied=r.satisfied,
                    evidence=r.evidence[:cap],
                )
            )
            notes.append(f"evidence for predicate {r.predicate_id} truncated to {cap} characters")
        else:
            capped.append(r)
    return capped, notes


def _aggregate_disagreements(report: EvaluationReport, aggregates: dict) -> list[str]:
    notes: list[str] = []
    overall = aggregates.get("overall_score")
    if isinstance(overall, (int, float)) and abs(float(report.uifs) - overall) > 1e-9:
        notes.append(
            f"judge-reported overall score {overall} disagrees with recomputed {float(report.uifs)}"
        )
    reported_types = aggregates.get("type_scores")
    if isinstance(reported_types, dict):
        for t, score in report.type_scores.items():
            reported = reported_types.get(t.value)
            if isinstance(reported, (int, float)) and abs(float(score) - reported) > 1e-9:
                notes.append(
                    f"judge-reported {t.value} score {reported} disagrees with "
                    f"recomputed {float(score)}"
                )
    return notes


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def evaluate(
    d: Decomposition,
    response: str,
    provider: Provider | None = None,
    ctx: DialogueContext | None = None,
    *,
    temperature: float = 0.0,
    max_tokens: int = 2048,
    evidence_cap: int = DEFAULT_EVIDENCE_CAP,
    stamp_time: bool = True,
    subject_id: str = "",
    model_tag: str = "",
) -> EvaluationReport:
    """Judge one response against a validated decomposition.

    Every predicate is judged unconditionally; dependency links are shown to
    the judge as context only. A missing or malformed verdict set triggers
    one re-prompt before failing.
    """
    if provider is None:
        raise ValueError("a completion provider is required")
    verdict = validate_decomposition(d)
    if not verdict.ok:
        raise ValueError(
            "decomposition failed validation: "
            + "; ".join(v.message for v in verdict.violations)
        )
    if not response.strip():
        raise ValueError("response is empty")

    bundle = render_evaluator_prompt(d, response, ctx=ctx)

    def attempt(b: PromptBundle) -> tuple[list[SatisfactionResult], dict]:
        resp = provider.complete(
            provider.request(b, temperature=temperature, max_tokens=max_tokens)
        )
        return _parse_payload(resp.text, d)

    try:
        results, aggregates = attempt(bundle)
    except ParseFailure as exc:
        log.debug("judge output rejected (%s), re-prompting", exc)
        retry_bundle = PromptBundle(
            system=bundle.system,
            user=bundle.user + VERDICT_REMINDER,
            template_version=bundle.template_version,
            mode=bundle.mode,
        )
        try:
            results, aggregates = attempt(retry_bundle)
        except (MissingVerdict, DuplicateVerdict):
            raise
        except ParseFailure as exc2:
            raise UnparseableOutput(
                f"judge output unparseable after re-prompt: {exc2}"
            ) from exc2

    results, notes = _cap_evidence(results, evidence_cap)
    meta = ReportMeta(
        model_id=provider.model_id,
        template_version=TEMPLATE_VERSION,
        timestamp=_utc_now() if stamp_time else None,
        subject_id=subject_id,
        model_tag=model_tag,
    )
    report = EvaluationReport.from_results(d, results, meta=meta)
    disagreements = _aggregate_disagreements(report, aggregates)
    for note in disagreements:
        log.warning("%s", note)
    if notes or disagreements:
        meta = dataclasses.replace(meta, notes=tuple(notes + disagreements))
        report = EvaluationReport.from_results(d, results, meta=meta)
    return report


def evaluate_dialogue(
    d: Decomposition,
    transcript: DialogueTranscript,
    provider: Provider | None = None,
    **kwargs: object,
) -> tuple[DialogueScore, list[EvaluationReport]]:
    """Judge every evaluated-role utterance of a transcript against the same
    decomposition, each with its own history context, and average the
    per-utterance scores."""
    reports: list[EvaluationReport] = []
    scored: list[tuple[int, object]] = []
    for index in transcript.evaluated_indices():
        ctx = DialogueContext.from_transcript(transcript, index)
        report = evaluate(
            d, transcript.utterances[index].text, provider, ctx=ctx, **kwargs  # type: ignore[arg-type]
        )
        reports.append(report)
        scored.append((index, report.uifs))
    return DialogueScore.from_pairs(scored), reports
