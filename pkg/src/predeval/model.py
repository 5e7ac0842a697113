"""Core data model: typed requirements ("predicates"), decompositions,
dialogue transcripts, satisfaction verdicts, and their structural validation.

Every type here is an immutable value object, safe to share across threads.
Validation is pure and returns a verdict listing *all* violations instead of
raising on the first one, so a caller can report or repair in one pass.

Score fields use :class:`fractions.Fraction` so that ratios like 2/4 stay
exact; conversion to ``float`` happens only when serializing for display.
"""

from __future__ import annotations

import enum
import heapq
import statistics
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = 1

TYPE_LABELS = ("content", "format", "style", "logical", "numerical")


class UnknownTypeLabel(ValueError):
    """A predicate type label outside the closed five-category set."""


class PredicateType(enum.Enum):
    """Closed set of requirement categories.

    Each category carries its own judgment semantics downstream: lenient
    semantic matching for CONTENT, structural conformance for FORMAT,
    holistic impression for STYLE, reasoning-structure checks for LOGICAL,
    and strict exactness for NUMERICAL.
    """

    CONTENT = "content"
    FORMAT = "format"
    STYLE = "style"
    LOGICAL = "logical"
    NUMERICAL = "numerical"

    @classmethod
    def from_label(cls, label: object) -> "PredicateType":
        """Map a raw label onto the enum, case-insensitively, ignoring padding."""
        if isinstance(label, PredicateType):
            return label
        if isinstance(label, str):
            try:
                return cls(label.strip().lower())
            except ValueError:
                pass
        raise UnknownTypeLabel(f"unknown predicate type label: {label!r}")


#: Stable ordering used everywhere types are listed or serialized.
TYPE_ORDER: tuple[PredicateType, ...] = tuple(PredicateType)


def as_fraction(value: object) -> Fraction:
    """Coerce ints, floats, strings like ``"3/4"``, and Fractions to Fraction.

    Floats convert to their exact binary value, so quarter-like fractions
    (0.25, 0.5, 0.75) stay exact while 0.1 becomes its IEEE-754 neighbour;
    comparisons remain consistent either way.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError(f"cannot interpret {value!r} as a score fraction")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a score fraction")


def fraction_str(value: Fraction) -> str:
    """Lossless text form of a Fraction (``"1/2"``, ``"1"``)."""
    return str(value)


# ---------------------------------------------------------------------------
# Predicates and decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Predicate:
    """One atomic requirement with its category and satisfaction criterion.

    Attributes:
        id:           Analyzer-assigned integer, unique within a decomposition.
        type:         The requirement category.
        criterion:    How to check the requirement, phrased as an evaluation
                      criterion.
        dependencies: Ids of requirements this one builds on. They are
                      surfaced to the judge as context and never change
                      scoring.
        verifiable:   Whether the requirement can be checked objectively
                      without human judgment.
        parent_id:    Optional provenance link from the analyzer output;
                      carried through but unscored.
    """

    id: int
    type: PredicateType
    criterion: str
    dependencies: tuple[int, ...] = ()
    verifiable: bool = False
    parent_id: int | None = None


@dataclass(frozen=True)
class DecompositionMeta:
    """Provenance for a decomposition: which backend and prompt produced it."""

    model_id: str = ""
    template_version: str = ""
    timestamp: str | None = None
    subject_id: str = ""
    repair_notes: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


_EMPTY_DECOMPOSITION_META = DecompositionMeta()


@dataclass(frozen=True)
class Decomposition:
    """An instruction together with the ordered set of predicates extracted
    from it."""

    instruction: str
    predicates: tuple[Predicate, ...]
    meta: DecompositionMeta = _EMPTY_DECOMPOSITION_META

    def predicate_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.predicates)

    def by_id(self) -> dict[int, Predicate]:
        return {p.id: p for p in self.predicates}


@dataclass(frozen=True)
class Violation:
    """One structural defect found by :func:`validate_decomposition`."""

    code: str
    message: str


@dataclass(frozen=True)
class ValidationVerdict:
    """Outcome of structural validation.

    ``ok`` is true iff there are no violations. ``warnings`` carry advisory
    findings (e.g. a suspiciously large predicate count) that never fail
    validation on their own.
    """

    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def validate_decomposition(d: Decomposition) -> ValidationVerdict:
    """Check every structural invariant of a decomposition.

    Violation codes: ``empty`` (no predicates), ``non-positive-id``,
    ``duplicate-id``, ``empty-criterion``, ``self-dependency``,
    ``dangling-dependency``, ``cycle``. Type labels are already closed at
    parse time (``PredicateType`` is an enum), so no label check happens here.
    """
    violations: list[Violation] = []
    warnings: list[str] = []

    if not d.predicates:
        violations.append(Violation("empty", "decomposition has no predicates"))
        return ValidationVerdict(tuple(violations))

    all_ids = {p.id for p in d.predicates}
    seen: set[int] = set()
    for p in d.predicates:
        if not isinstance(p.id, int) or isinstance(p.id, bool) or p.id < 1:
            violations.append(
                Violation("non-positive-id", f"predicate id {p.id!r} is not a positive integer")
            )
        if p.id in seen:
            violations.append(Violation("duplicate-id", f"duplicate predicate id {p.id}"))
        seen.add(p.id)
        if not p.criterion.strip():
            violations.append(Violation("empty-criterion", f"empty criterion at id {p.id}"))
        for dep in p.dependencies:
            if dep == p.id:
                violations.append(Violation("self-dependency", f"id {p.id} depends on itself"))
            elif dep not in all_ids:
                violations.append(
                    Violation("dangling-dependency", f"id {p.id} depends on unknown id {dep}")
                )

    # Cycle search over the deduplicated id set, counting only resolvable
    # edges; self-loops surface here as well as via self-dependency above.
    ids = list(dict.fromkeys(p.id for p in d.predicates))
    id_set = set(ids)
    deps_of: dict[int, set[int]] = {i: set() for i in ids}
    for p in d.predicates:
        deps_of[p.id].update(dep for dep in p.dependencies if dep in id_set)
    remaining = dict(deps_of)
    progressed = True
    while progressed and remaining:
        progressed = False
        for node in list(remaining):
            if not (remaining[node] & set(remaining)):
                del remaining[node]
                progressed = True
    if remaining:
        stuck = sorted(remaining)
        violations.append(Violation("cycle", f"dependency cycle involving ids {stuck}"))

    n = len(d.predicates)
    if n > 12:
        warnings.append(f"predicate count {n} is outside the expected [1, 12] range")
    elif n > 7:
        warnings.append(f"predicate count {n} exceeds the typical 5-7 core requirements")

    return ValidationVerdict(tuple(violations), tuple(warnings))


def topological_order(d: Decomposition) -> list[int]:
    """Order predicate ids so every id appears after all its dependencies.

    Stable: among predicates whose dependencies are already placed, input
    order decides. Raises ``ValueError`` when the decomposition does not
    validate (cycles included).
    """
    verdict = validate_decomposition(d)
    if not verdict.ok:
        raise ValueError(
            "decomposition failed validation: "
            + "; ".join(v.message for v in verdict.violations)
        )
    position = {p.id: i for i, p in enumerate(d.predicates)}
    pending: dict[int, set[int]] = {p.id: set(p.dependencies) for p in d.predicates}
    dependents: dict[int, list[int]] = {p.id: [] for p in d.predicates}
    for p in d.predicates:
        for dep in p.dependencies:
            dependents[dep].append(p.id)

    ready = [position[i] for i, deps in pending.items() if not deps]
    heapq.heapify(ready)
    by_position = {i: pid for pid, i in position.items()}
    order: list[int] = []
    while ready:
        pid = by_position[heapq.heappop(ready)]
        order.append(pid)
        for follower in dependents[pid]:
            pending[follower].discard(pid)
            if not pending[follower]:
                heapq.heappush(ready, position[follower])
    return order


# ---------------------------------------------------------------------------
# Dialogue transcripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Utterance:
    role: str
    text: str


@dataclass(frozen=True)
class DialogueTranscript:
    """An ordered two-party conversation with one role marked for scoring."""

    utterances: tuple[Utterance, ...]
    evaluated_role: str

    def __post_init__(self) -> None:
        roles = {u.role for u in self.utterances}
        if len(roles) > 2:
            raise ValueError(f"transcript uses more than two roles: {sorted(roles)}")
        if self.evaluated_role not in roles:
            raise ValueError(
                f"evaluated role {self.evaluated_role!r} has no utterances in the transcript"
            )

    def evaluated_indices(self) -> list[int]:
        return [i for i, u in enumerate(self.utterances) if u.role == self.evaluated_role]


@dataclass(frozen=True)
class DialogueContext:
    """What the judge sees besides the utterance itself: the full prefix of
    earlier turns and, surfaced explicitly, the other party's latest message."""

    history: tuple[Utterance, ...]
    last_partner_utterance: Utterance | None = None

    def __post_init__(self) -> None:
        lp = self.last_partner_utterance
        if lp is None:
            return
        # lp must be the final entry of its role; everything after it in the
        # history belongs to the single (evaluated) other role.
        try:
            idx = len(self.history) - 1 - self.history[::-1].index(lp)
        except ValueError:
            raise ValueError("last_partner_utterance is not part of the history") from None
        tail_roles = {u.role for u in self.history[idx + 1 :]}
        if lp.role in tail_roles or len(tail_roles) > 1:
            raise ValueError(
                "last_partner_utterance is not the final other-role entry in the history"
            )

    @classmethod
    def from_transcript(cls, transcript: DialogueTranscript, index: int) -> "DialogueContext":
        """Context for scoring ``transcript.utterances[index]``.

        History is everything strictly before the evaluated utterance.
        """
        target = transcript.utterances[index]
        if target.role != transcript.evaluated_role:
            raise ValueError(
                f"utterance {index} belongs to {target.role!r}, "
                f"not the evaluated role {transcript.evaluated_role!r}"
            )
        history = transcript.utterances[:index]
        partner = None
        for u in reversed(history):
            if u.role != transcript.evaluated_role:
                partner = u
                break
        return cls(history=history, last_partner_utterance=partner)


# ---------------------------------------------------------------------------
# Verdicts and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SatisfactionResult:
    """Binary verdict for one predicate, with evidence quoted from the
    response. Evidence is mandatory for satisfied verdicts; it may be empty
    only when the judge reports the required element as absent."""

    predicate_id: int
    satisfied: bool
    evidence: str

    def __post_init__(self) -> None:
        if self.satisfied and not self.evidence.strip():
            raise ValueError(
                f"satisfied verdict for predicate {self.predicate_id} carries no evidence"
            )


@dataclass(frozen=True)
class ReportMeta:
    """Provenance for an evaluation report."""

    model_id: str = ""
    template_version: str = ""
    timestamp: str | None = None
    subject_id: str = ""
    model_tag: str = ""
    notes: tuple[str, ...] = ()


_EMPTY_REPORT_META = ReportMeta()


@dataclass(frozen=True)
class EvaluationReport:
    """Per-predicate verdicts plus the scores recomputed from them.

    ``uifs`` is the satisfied fraction over all predicates; ``type_scores``
    holds the satisfied fraction per category, with categories absent from
    the decomposition absent from the map. Both are exact rationals.
    """

    per_predicate: tuple[SatisfactionResult, ...]
    uifs: Fraction
    type_scores: dict[PredicateType, Fraction]
    meta: ReportMeta = _EMPTY_REPORT_META

    def __post_init__(self) -> None:
        total = len(self.per_predicate)
        satisfied = sum(1 for r in self.per_predicate if r.satisfied)
        if total == 0:
            raise ValueError("report covers no predicates")
        if self.uifs != Fraction(satisfied, total):
            raise ValueError(
                f"uifs {self.uifs} does not equal satisfied/total = {satisfied}/{total}"
            )

    @classmethod
    def from_results(
        cls,
        decomposition: Decomposition,
        results: Iterable[SatisfactionResult],
        meta: ReportMeta = _EMPTY_REPORT_META,
    ) -> "EvaluationReport":
        """Assemble a report, recomputing every score from the verdicts.

        The verdict ids must be exactly the decomposition's ids; results are
        reordered to the decomposition's predicate order.
        """
        by_id = {r.predicate_id: r for r in results}
        decomp_ids = decomposition.predicate_ids()
        if set(by_id) != set(decomp_ids) or len(by_id) != len(decomp_ids):
            raise ValueError(
                f"verdict ids {sorted(by_id)} are not a permutation of "
                f"decomposition ids {sorted(decomp_ids)}"
            )
        ordered = tuple(by_id[pid] for pid in decomp_ids)
        uifs = Fraction(sum(1 for r in ordered if r.satisfied), len(ordered))
        type_scores: dict[PredicateType, Fraction] = {}
        for t in TYPE_ORDER:
            of_type = [p for p in decomposition.predicates if p.type is t]
            if not of_type:
                continue
            sat = sum(1 for p in of_type if by_id[p.id].satisfied)
            type_scores[t] = Fraction(sat, len(of_type))
        return cls(per_predicate=ordered, uifs=uifs, type_scores=type_scores, meta=meta)

    def satisfied_count(self) -> int:
        return sum(1 for r in self.per_predicate if r.satisfied)


# ---------------------------------------------------------------------------
# Annotated pairs (human validation data)
# ---------------------------------------------------------------------------


def aggregate_human_scores(scores: Sequence[Fraction], rule: str = "mean") -> Fraction:
    """Deterministic aggregate of annotator fractions.

    ``mean`` (default) averages the fractions; ``median`` takes the exact
    median (midpoint of the two central values for even counts).
    """
    if not scores:
        raise ValueError("no annotator scores to aggregate")
    fracs = [as_fraction(s) for s in scores]
    if rule == "mean":
        return sum(fracs, Fraction(0)) / len(fracs)
    if rule == "median":
        return Fraction(statistics.median(fracs))
    raise ValueError(f"unknown aggregation rule {rule!r}")


@dataclass(frozen=True)
class AnnotatedPair:
    """An instruction-response pair with human satisfaction judgments."""

    pair_id: str
    instruction: str
    response: str
    human_scores: tuple[Fraction, ...]
    human_majority: Fraction
    model_tag: str = ""

    def __post_init__(self) -> None:
        for s in (*self.human_scores, self.human_majority):
            if not 0 <= s <= 1:
                raise ValueError(f"annotator score {s} outside [0, 1]")

    @classmethod
    def from_scores(
        cls,
        pair_id: str,
        instruction: str,
        response: str,
        human_scores: Sequence[object],
        model_tag: str = "",
        aggregation: str = "mean",
    ) -> "AnnotatedPair":
        fracs = tuple(as_fraction(s) for s in human_scores)
        return cls(
            pair_id=pair_id,
            instruction=instruction,
            response=response,
            human_scores=fracs,
            human_majority=aggregate_human_scores(fracs, aggregation),
            model_tag=model_tag,
        )


# ---------------------------------------------------------------------------
# Canonical JSON forms
# ---------------------------------------------------------------------------
#
# Decompositions serialize in the analyzer-output shape (atomic_instructions
# entries with id / instruction / type / parent_id / dependencies /
# verifiable); reports serialize in the judge-output shape
# (instruction_evaluations entries with instruction_id / satisfied /
# evidence). Scores carry both a float rendering and an exact "a/b" string;
# the exact string wins on load, making round trips lossless.


def _meta_to_dict(meta: DecompositionMeta | ReportMeta) -> dict:
    out: dict = {
        "model_id": meta.model_id,
        "template_version": meta.template_version,
        "timestamp": meta.timestamp,
        "subject_id": meta.subject_id,
    }
    if isinstance(meta, DecompositionMeta):
        out["repair_notes"] = list(meta.repair_notes)
        out["warnings"] = list(meta.warnings)
    else:
        out["model_tag"] = meta.model_tag
        out["notes"] = list(meta.notes)
    return out


def decomposition_to_dict(d: Decomposition) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "decomposition",
        "instruction": d.instruction,
        "meta": _meta_to_dict(d.meta),
        "atomic_instructions": [
            {
                "id": p.id,
                "instruction": p.criterion,
                "type": p.type.value,
                "parent_id": p.parent_id,
                "dependencies": list(p.dependencies),
                "verifiable": p.verifiable,
            }
            for p in d.predicates
        ],
    }


def decomposition_from_dict(obj: Mapping) -> Decomposition:
    try:
        entries = obj["atomic_instructions"]
        predicates = tuple(
            Predicate(
                id=int(e["id"]),
                type=PredicateType.from_label(e["type"]),
                criterion=str(e["instruction"]),
                dependencies=tuple(int(x) for x in e.get("dependencies", ())),
                verifiable=bool(e.get("verifiable", False)),
                parent_id=(None if e.get("parent_id") is None else int(e["parent_id"])),
            )
            for e in entries
        )
        meta_obj = obj.get("meta", {})
        meta = DecompositionMeta(
            model_id=meta_obj.get("model_id", ""),
            template_version=meta_obj.get("template_version", ""),
            timestamp=meta_obj.get("timestamp"),
            subject_id=meta_obj.get("subject_id", ""),
            repair_notes=tuple(meta_obj.get("repair_notes", ())),
            warnings=tuple(meta_obj.get("warnings", ())),
        )
        return Decomposition(
            instruction=str(obj.get("instruction", "")), predicates=predicates, meta=meta
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UnknownTypeLabel):
            raise
        raise ValueError(f"malformed decomposition object: {exc}") from exc


def report_to_dict(r: EvaluationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "evaluation_report",
        "meta": _meta_to_dict(r.meta),
        "instruction_evaluations": [
            {
                "instruction_id": res.predicate_id,
                "satisfied": res.satisfied,
                "evidence": res.evidence,
            }
            for res in r.per_predicate
        ],
        "uifs": float(r.uifs),
        "uifs_exact": fraction_str(r.uifs),
        "type_scores": {t.value: float(s) for t, s in r.type_scores.items()},
        "type_scores_exact": {t.value: fraction_str(s) for t, s in r.type_scores.items()},
    }


def report_from_dict(obj: Mapping) -> EvaluationReport:
    try:
        results = tuple(
            SatisfactionResult(
                predicate_id=int(e["instruction_id"]),
                satisfied=bool(e["satisfied"]),
                evidence=str(e.get("evidence", "")),
            )
            for e in obj["instruction_evaluations"]
        )
        uifs = as_fraction(obj.get("uifs_exact", obj.get("uifs")))
        scores_exact = obj.get("type_scores_exact", obj.get("type_scores", {}))
        type_scores = {
            PredicateType.from_label(label): as_fraction(value)
            for label, value in scores_exact.items()
        }
        meta_obj = obj.get("meta", {})
        meta = ReportMeta(
            model_id=meta_obj.get("model_id", ""),
            template_version=meta_obj.get("template_version", ""),
            timestamp=meta_obj.get("timestamp"),
            subject_id=meta_obj.get("subject_id", ""),
            model_tag=meta_obj.get("model_tag", ""),
            notes=tuple(meta_obj.get("notes", ())),
        )
        return EvaluationReport(
            per_predicate=results, uifs=uifs, type_scores=type_scores, meta=meta
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UnknownTypeLabel):
            raise
        raise ValueError(f"malformed evaluation report object: {exc}") from exc


def with_meta(d: Decomposition, **changes: object) -> Decomposition:
    """Return a copy of ``d`` with meta fields replaced."""
    return replace(d, meta=replace(d.meta, **changes))
