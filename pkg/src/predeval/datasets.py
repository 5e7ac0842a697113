"""Ingestion and validation of benchmark records and dialogue transcripts.

Both record kinds live in line-delimited JSON (UTF-8, one object per line,
``schema_version`` stamped on every object). Loading never drops lines
silently: every non-blank line either becomes a record or lands in the
rejection list with its 1-based line number; strict mode aborts on the
first defect instead.

Import adapters map two common external field layouts onto the canonical
schema. Neither external layout is formally published, so the mappings are
editorial; see the adapter docstrings for the exact field names expected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .model import DialogueTranscript, SCHEMA_VERSION, Utterance, as_fraction, fraction_str

_DIFFICULTIES = ("easy", "hard")


class DatasetError(ValueError):
    """A record violated the dataset schema (strict-mode loading)."""


@dataclass(frozen=True)
class BenchmarkRecord:
    """One instruction with responses from one or more models and optional
    annotator satisfaction fractions."""

    record_id: str
    instruction: str
    responses: dict[str, str]
    difficulty: str | None = None
    annotations: dict[str, Fraction] | None = None
    reference_decomposition: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.record_id:
            raise ValueError("record id is empty")
        if not self.instruction.strip():
            raise ValueError("instruction is empty")
        if not self.responses:
            raise ValueError("record carries no responses")
        if self.difficulty is not None and self.difficulty not in _DIFFICULTIES:
            raise ValueError(f"unknown difficulty tag {self.difficulty!r}")
        if self.annotations is not None:
            for annotator, score in self.annotations.items():
                if not 0 <= score <= 1:
                    raise ValueError(f"annotation {annotator!r}={score} outside [0, 1]")


@dataclass(frozen=True)
class DialogueRecord:
    """One multi-turn conversation with the evaluated role's instruction."""

    record_id: str
    instruction: str
    transcript: DialogueTranscript
    model_tag: str = ""

    def __post_init__(self) -> None:
        if not self.record_id:
            raise ValueError("record id is empty")
        if not self.instruction.strip():
            raise ValueError("instruction is empty")
        if len(self.transcript.utterances) < 2:
            raise ValueError("dialogue needs at least 2 utterances")


@dataclass(frozen=True)
class LineError:
    line_no: int
    message: str


@dataclass(frozen=True)
class LoadResult:
    """Accepted records plus per-line rejections; input line count equals
    ``len(records) + len(rejected)`` over non-blank lines."""

    records: tuple
    rejected: tuple[LineError, ...]


# ---------------------------------------------------------------------------
# Canonical dict forms
# ---------------------------------------------------------------------------


def benchmark_to_dict(rec: BenchmarkRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "id": rec.record_id,
        "instruction": rec.instruction,
        "difficulty": rec.difficulty,
        "responses": dict(rec.responses),
        "annotations": (
            None
            if rec.annotations is None
            else {k: fraction_str(v) for k, v in rec.annotations.items()}
        ),
        "reference_decomposition": (
            None if rec.reference_decomposition is None else list(rec.reference_decomposition)
        ),
    }


def benchmark_from_dict(obj: Mapping) -> BenchmarkRecord:
    try:
        annotations = obj.get("annotations")
        parsed_annotations = (
            None
            if annotations is None
            else {str(k): as_fraction(v) for k, v in annotations.items()}
        )
        reference = obj.get("reference_decomposition")
        return BenchmarkRecord(
            record_id=str(obj["id"]),
            instruction=str(obj["instruction"]),
            responses={str(k): str(v) for k, v in obj["responses"].items()},
            difficulty=obj.get("difficulty"),
            annotations=parsed_annotations,
            reference_decomposition=None if reference is None else tuple(str(x) for x in reference),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise DatasetError(f"malformed benchmark record: {exc!r}") from exc
    except ValueError as exc:
        raise DatasetError(str(exc)) from exc


def dialogue_to_dict(rec: DialogueRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "dialogue",
        "id": rec.record_id,
        "instruction": rec.instruction,
        "model_tag": rec.model_tag,
        "evaluated_role": rec.transcript.evaluated_role,
        "utterances": [{"role": u.role, "text": u.text} for u in rec.transcript.utterances],
    }


def dialogue_from_dict(obj: Mapping) -> DialogueRecord:
    try:
        utterances = tuple(
            Utterance(role=str(u["role"]), text=str(u["text"])) for u in obj["utterances"]
        )
        transcript = DialogueTranscript(
            utterances=utterances, evaluated_role=str(obj["evaluated_role"])
        )
        return DialogueRecord(
            record_id=str(obj["id"]),
            instruction=str(obj["instruction"]),
            transcript=transcript,
            model_tag=str(obj.get("model_tag", "")),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise DatasetError(f"malformed dialogue record: {exc!r}") from exc
    except ValueError as exc:
        raise DatasetError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Import adapters (editorial field mappings)
# ---------------------------------------------------------------------------


def adapt_infobench_style(obj: Mapping) -> dict:
    """Map an annotated-benchmark layout onto the canonical benchmark schema.

    Expected fields: ``id``, ``instruction`` plus optional ``input`` (merged
    into the instruction text), ``subset`` (``Easy_set``/``Hard_set``),
    ``responses`` (model tag to text), and optional ``annotations`` mapping
    an annotator id to either a satisfaction fraction or a list of per-item
    booleans (averaged).
    """
    instruction = str(obj.get("instruction", ""))
    extra = obj.get("input")
    if extra:
        instruction = f"{instruction}\n\n{extra}"
    subset = str(obj.get("subset", "")).lower()
    difficulty = "easy" if "easy" in subset else "hard" if "hard" in subset else None
    annotations = None
    raw_ann = obj.get("annotations")
    if isinstance(raw_ann, Mapping):
        annotations = {}
        for annotator, value in raw_ann.items():
            if isinstance(value, (list, tuple)):
                if not value:
                    continue
                score = Fraction(sum(1 for v in value if v), len(value))
            else:
                score = as_fraction(value)
            annotations[str(annotator)] = fraction_str(score)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "id": str(obj.get("id", "")),
        "instruction": instruction,
        "difficulty": difficulty,
        "responses": dict(obj.get("responses", {})),
        "annotations": annotations,
        "reference_decomposition": obj.get("decomposed_questions"),
    }


def adapt_botwars_style(obj: Mapping) -> dict:
    """Map an adversarial-conversation layout onto the canonical dialogue
    schema.

    Expected fields: ``conversation_id``, ``model``, ``system_prompt`` (the
    evaluated bot's directive), ``conversation`` as a list of
    ``{"speaker", "message"}`` turns, and optional ``evaluated_speaker``
    (defaults to the first turn's speaker).
    """
    turns = obj.get("conversation", [])
    utterances = [{"role": str(t["speaker"]), "text": str(t["message"])} for t in turns]
    evaluated = obj.get("evaluated_speaker")
    if evaluated is None and utterances:
        evaluated = utterances[0]["role"]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "dialogue",
        "id": str(obj.get("conversation_id", "")),
        "instruction": str(obj.get("system_prompt", "")),
        "model_tag": str(obj.get("model", "")),
        "evaluated_role": str(evaluated or ""),
        "utterances": utterances,
    }


_BENCHMARK_ADAPTERS: dict[str, Callable[[Mapping], dict]] = {
    "canonical": dict,
    "infobench": adapt_infobench_style,
}
_DIALOGUE_ADAPTERS: dict[str, Callable[[Mapping], dict]] = {
    "canonical": dict,
    "botwars": adapt_botwars_style,
}


# ---------------------------------------------------------------------------
# Line-delimited IO
# ---------------------------------------------------------------------------


def _load_lines(
    path: str | Path,
    build: Callable[[Mapping], object],
    adapter: Callable[[Mapping], dict],
    strict: bool,
) -> LoadResult:
    records: list = []
    rejected: list[LineError] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise DatasetError("line is not a JSON object")
                records.append(build(adapter(obj)))
            except (ValueError, KeyError, TypeError) as exc:
                message = f"line {line_no}: {exc}"
                if strict:
                    raise DatasetError(message) from exc
                rejected.append(LineError(line_no=line_no, message=message))
    return LoadResult(records=tuple(records), rejected=tuple(rejected))


def load_benchmark(path: str | Path, strict: bool = False, adapter: str = "canonical") -> LoadResult:
    """Load benchmark records from a JSONL file.

    ``adapter`` selects the input layout (``canonical`` or ``infobench``).
    Non-strict loading returns rejects alongside records; strict loading
    raises :class:`DatasetError` on the first malformed line.
    """
    return _load_lines(path, benchmark_from_dict, _BENCHMARK_ADAPTERS[adapter], strict)


def load_dialogues(path: str | Path, strict: bool = False, adapter: str = "canonical") -> LoadResult:
    """Load dialogue records from a JSONL file (``canonical`` or ``botwars``)."""
    return _load_lines(path, dialogue_from_dict, _DIALOGUE_ADAPTERS[adapter], strict)


def _write_lines(path: str | Path, dicts: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for obj in dicts:
            handle.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def write_benchmark(path: str | Path, records: Sequence[BenchmarkRecord]) -> None:
    _write_lines(path, (benchmark_to_dict(r) for r in records))


def write_dialogues(path: str | Path, records: Sequence[DialogueRecord]) -> None:
    _write_lines(path, (dialogue_to_dict(r) for r in records))
