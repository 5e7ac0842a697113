"""Instruction analysis agent: drives the decomposition prompt through a
completion backend, parses the structured output, repairs what it can, and
validates the result.

Failure handling is bounded: one re-prompt with a format reminder, then the
text repair pipeline, then a hard error. Recoverable id collisions are
renumbered in place with a repair note instead of failing the run.
"""

from __future__ import annotations

import datetime
import json
import logging

from . import repair
from .repair import repair_output  # noqa: F401  (part of this module's surface)
from .model import (
    Decomposition,
    DecompositionMeta,
    Predicate,
    PredicateType,
    UnknownTypeLabel,
    validate_decomposition,
)
from .prompting import (
    PromptBundle,
    PromptKnowledgeBase,
    PromptMode,
    TEMPLATE_VERSION,
    render_analyzer_prompt,
)
from .provider import Provider

log = logging.getLogger(__name__)

FORMAT_REMINDER = (
    "\n\nREMINDER: Respond with ONLY one valid JSON object matching the "
    "required schema. No prose, no code fences."
)


class ParseFailure(Exception):
    """Structured output could not be interpreted.

    ``location`` is a character offset into the raw text when one is known.
    """

    def __init__(self, message: str, location: int | None = None) -> None:
        super().__init__(message)
        self.location = location


class UnparseableOutput(ParseFailure):
    """Output stayed unparseable after the re-prompt and repair pipeline."""


class ValidationFailed(Exception):
    """Structural violations persisted after the renumbering repair."""

    def __init__(self, verdict) -> None:
        super().__init__(
            "decomposition failed validation: "
            + "; ".join(v.message for v in verdict.violations)
        )
        self.verdict = verdict


def _require(entry: dict, key: str, index: int):
    if key not in entry:
        raise ParseFailure(f"predicate at index {index}: missing field {key!r}")
    return entry[key]


def _build_predicate(entry: object, index: int) -> Predicate:
    if not isinstance(entry, dict):
        raise ParseFailure(f"predicate at index {index} is not an object")
    raw_id = _require(entry, "id", index)
    if isinstance(raw_id, bool) or not isinstance(raw_id, int):
        raise ParseFailure(f"predicate at index {index}: field 'id' is not an integer")
    criterion = _require(entry, "instruction", index)
    if not isinstance(criterion, str):
        raise ParseFailure(f"predicate at index {index}: field 'instruction' is not text")
    try:
        ptype = PredicateType.from_label(_require(entry, "type", index))
    except UnknownTypeLabel as exc:
        raise ParseFailure(f"predicate at index {index}: field 'type': {exc}") from exc
    deps = entry.get("dependencies", [])
    if not isinstance(deps, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in deps):
        raise ParseFailure(
            f"predicate at index {index}: field 'dependencies' is not a list of integers"
        )
    verifiable = entry.get("verifiable", False)
    if not isinstance(verifiable, bool):
        raise ParseFailure(f"predicate at index {index}: field 'verifiable' is not a boolean")
    parent = entry.get("parent_id")
    if parent is not None and (isinstance(parent, bool) or not isinstance(parent, int)):
        raise ParseFailure(f"predicate at index {index}: field 'parent_id' is not an integer")
    return Predicate(
        id=raw_id,
        type=ptype,
        criterion=criterion,
        dependencies=tuple(deps),
        verifiable=verifiable,
        parent_id=parent,
    )


def parse_analyzer_output(raw: str) -> Decomposition:
    """Extract the first JSON object carrying ``atomic_instructions``.

    Surrounding prose and code fences are tolerated. Raises
    :class:`ParseFailure` with a character offset diagnostic when no
    candidate parses, or with the offending field when the schema is wrong
    (e.g. an unknown type label).
    """
    stripped = raw.strip()
    first_error: tuple[int, str] | None = None
    offset = 0
    candidates = [stripped] if stripped.startswith(("{", "[")) else []
    for cand in repair.extract_candidates(stripped):
        if cand != stripped:
            candidates.append(cand)
    for cand in candidates:
        start = stripped.find(cand)
        try:
            obj = json.loads(cand)
        except json.JSONDecodeError as exc:
            if first_error is None:
                first_error = (start + exc.pos, exc.msg)
            continue
        if isinstance(obj, dict) and "atomic_instructions" in obj:
            entries = obj["atomic_instructions"]
            if not isinstance(entries, list):
                raise ParseFailure("field 'atomic_instructions' is not a list", location=start)
            predicates = tuple(_build_predicate(e, i) for i, e in enumerate(entries))
            return Decomposition(instruction="", predicates=predicates)
        offset = start
    if first_error is not None:
        raise ParseFailure(
            f"no parseable JSON object found: {first_error[1]} at offset {first_error[0]}",
            location=first_error[0],
        )
    raise ParseFailure(
        "no JSON object with an 'atomic_instructions' field found", location=offset
    )


def renumber_duplicate_ids(d: Decomposition) -> tuple[Decomposition, tuple[str, ...]]:
    """Renumber predicates 1..n in input order when ids collide or are
    non-positive; dependency references resolve to the first predicate that
    carried the old id. Well-formed inputs come back untouched."""
    ids = [p.id for p in d.predicates]
    ok = len(set(ids)) == len(ids) and all(
        isinstance(i, int) and not isinstance(i, bool) and i >= 1 for i in ids
    )
    if ok:
        return d, ()
    mapping: dict[int, int] = {}
    for position, p in enumerate(d.predicates, start=1):
        mapping.setdefault(p.id, position)
    renumbered = tuple(
        Predicate(
            id=position,
            type=p.type,
            criterion=p.criterion,
            dependencies=tuple(mapping.get(dep, dep) for dep in p.dependencies),
            verifiable=p.verifiable,
            parent_id=p.parent_id,
        )
        for position, p in enumerate(d.predicates, start=1)
    )
    note = f"repaired predicate ids: renumbered {ids} to {list(range(1, len(ids) + 1))}"
    return Decomposition(instruction=d.instruction, predicates=renumbered, meta=d.meta), (note,)


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def decompose(
    instruction: str,
    mode: PromptMode = PromptMode.SINGLE_TURN,
    provider: Provider | None = None,
    kb: PromptKnowledgeBase | None = None,
    *,
    temperature: float = 0.0,
    max_tokens: int = 2048,
    stamp_time: bool = True,
    subject_id: str = "",
) -> Decomposition:
    """Decompose one instruction into a validated set of typed predicates.

    For dialogues, decomposition happens once per dialogue (callers evaluate
    each turn against the same predicate set, varying only the context).
    """
    if provider is None:
        raise ValueError("a completion provider is required")
    bundle = render_analyzer_prompt(instruction, mode=mode, kb=kb)
    raw_texts: list[str] = []

    def attempt(b: PromptBundle) -> str:
        resp = provider.complete(
            provider.request(b, temperature=temperature, max_tokens=max_tokens)
        )
        raw_texts.append(resp.text)
        return resp.text

    parsed: Decomposition | None = None
    failure: ParseFailure | None = None
    try:
        parsed = parse_analyzer_output(attempt(bundle))
    except ParseFailure as exc:
        failure = exc
        log.debug("analyzer output unparseable, re-prompting: %s", exc)
        retry_bundle = PromptBundle(
            system=bundle.system,
            user=bundle.user + FORMAT_REMINDER,
            template_version=bundle.template_version,
            mode=bundle.mode,
        )
        try:
            parsed = parse_analyzer_output(attempt(retry_bundle))
        except ParseFailure as exc2:
            failure = exc2
            for raw in reversed(raw_texts):
                try:
                    parsed = parse_analyzer_output(repair.repair_output(raw))
                    break
                except ParseFailure:
                    continue
    if parsed is None:
        raise UnparseableOutput(
            f"analyzer output unparseable after re-prompt and repair: {failure}",
            location=failure.location if failure else None,
        )

    repaired, notes = renumber_duplicate_ids(parsed)
    verdict = validate_decomposition(repaired)
    if not verdict.ok:
        raise ValidationFailed(verdict)
    meta = DecompositionMeta(
        model_id=provider.model_id,
        template_version=TEMPLATE_VERSION,
        timestamp=_utc_now() if stamp_time else None,
        subject_id=subject_id,
        repair_notes=notes,
        warnings=verdict.warnings,
    )
    return Decomposition(instruction=instruction, predicates=repaired.predicates, meta=meta)
