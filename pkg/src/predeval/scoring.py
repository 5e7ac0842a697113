"""Aggregate metrics over evaluation reports and human annotations.

Dialogue-level scores, validation accuracy against annotator aggregates,
error-type breakdowns of tool/human disagreements, per-model type-score
matrices, and between-type correlation. Score arithmetic stays in exact
rationals; floats appear only in the correlation statistics and at
serialization boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .model import EvaluationReport, PredicateType, TYPE_ORDER, as_fraction, fraction_str
from .stats import paired_t, pearson, spearman  # re-exported: part of this module's surface

__all__ = [
    "DialogueScore",
    "ErrorDistribution",
    "InterTypeCell",
    "TypeCorrelationMatrix",
    "ValidationPair",
    "ValidationSummary",
    "accuracy",
    "build_validation_summary",
    "classify_errors",
    "difs",
    "inter_type_correlation",
    "paired_t",
    "pearson",
    "spearman",
    "summary_to_json_dict",
    "type_score_matrix",
]


def difs(scores: Sequence[object]) -> Fraction:
    """Dialogue-level score: the arithmetic mean of per-utterance scores."""
    if not scores:
        raise ValueError("cannot average an empty score list")
    fracs = [as_fraction(s) for s in scores]
    for f in fracs:
        if not 0 <= f <= 1:
            raise ValueError(f"utterance score {f} outside [0, 1]")
    return sum(fracs, Fraction(0)) / len(fracs)


@dataclass(frozen=True)
class DialogueScore:
    """Per-utterance scores (by transcript index) and their mean."""

    per_utterance: tuple[tuple[int, Fraction], ...]
    difs: Fraction

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, object]]) -> "DialogueScore":
        indexed = tuple((i, as_fraction(s)) for i, s in pairs)
        return cls(per_utterance=indexed, difs=difs([s for _, s in indexed]))

    def to_json_dict(self) -> dict:
        return {
            "per_utterance": [
                {"index": i, "uifs": float(s), "uifs_exact": fraction_str(s)}
                for i, s in self.per_utterance
            ],
            "difs": float(self.difs),
            "difs_exact": fraction_str(self.difs),
        }


def accuracy(pairs: Sequence[tuple[object, object]]) -> Fraction:
    """1 minus the mean absolute deviation between paired human and tool
    scores; permutation-invariant over pairs."""
    if not pairs:
        raise ValueError("cannot compute accuracy over zero pairs")
    total = Fraction(0)
    for human, tool in pairs:
        h, t = as_fraction(human), as_fraction(tool)
        if not (0 <= h <= 1 and 0 <= t <= 1):
            raise ValueError(f"scores ({h}, {t}) outside [0, 1]")
        total += abs(h - t)
    return 1 - total / len(pairs)


@dataclass(frozen=True)
class ErrorDistribution:
    """Breakdown of tool-vs-human disagreements.

    A pair counts as a disagreement when |tool - majority| exceeds the
    threshold. Among disagreements: ``boundary`` when the annotators
    themselves disagreed, otherwise ``false_positive`` (tool above the
    majority) or ``false_negative``. Fractions are reported against both
    denominators (disagreements and all pairs) because either convention is
    defensible; pick one and stay consistent.
    """

    n_pairs: int
    n_disagreements: int
    false_positive: int
    false_negative: int
    boundary: int

    def of_disagreements(self) -> dict[str, Fraction]:
        d = self.n_disagreements
        if d == 0:
            return {"false_positive": Fraction(0), "false_negative": Fraction(0), "boundary": Fraction(0)}
        return {
            "false_positive": Fraction(self.false_positive, d),
            "false_negative": Fraction(self.false_negative, d),
            "boundary": Fraction(self.boundary, d),
        }

    def of_all_pairs(self) -> dict[str, Fraction]:
        n = self.n_pairs
        return {
            "false_positive": Fraction(self.false_positive, n),
            "false_negative": Fraction(self.false_negative, n),
            "boundary": Fraction(self.boundary, n),
        }

    def to_json_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_disagreements": self.n_disagreements,
            "counts": {
                "false_positive": self.false_positive,
                "false_negative": self.false_negative,
                "boundary": self.boundary,
            },
            "fraction_of_disagreements": {k: float(v) for k, v in self.of_disagreements().items()},
            "fraction_of_all_pairs": {k: float(v) for k, v in self.of_all_pairs().items()},
        }


def classify_errors(
    pairs: Sequence[tuple[Sequence[object], object, object]],
    disagree_threshold: object = 0,
) -> ErrorDistribution:
    """Classify disagreements for pairs of
    ``(annotator_scores, majority_score, tool_score)``.

    Comparisons are exact rational comparisons; the default threshold 0
    counts any deviation from the majority as a disagreement.
    """
    if not pairs:
        raise ValueError("cannot classify errors over zero pairs")
    threshold = as_fraction(disagree_threshold)
    fp = fn = boundary = disagreements = 0
    for annotator_scores, majority, tool in pairs:
        if not annotator_scores:
            raise ValueError("pair carries no annotator scores")
        maj = as_fraction(majority)
        t = as_fraction(tool)
        if abs(t - maj) <= threshold:
            continue
        disagreements += 1
        scores = [as_fraction(s) for s in annotator_scores]
        if any(s != scores[0] for s in scores[1:]):
            boundary += 1
        elif t > maj:
            fp += 1
        else:
            fn += 1
    return ErrorDistribution(
        n_pairs=len(pairs),
        n_disagreements=disagreements,
        false_positive=fp,
        false_negative=fn,
        boundary=boundary,
    )


def type_score_matrix(
    reports: Iterable[tuple[str, EvaluationReport]],
) -> dict[str, dict[PredicateType, Fraction]]:
    """Mean per-type score for each model tag.

    Reports missing a type simply do not contribute to that cell; a cell is
    absent when no report for the model carries the type.
    """
    sums: dict[str, dict[PredicateType, list[Fraction]]] = {}
    for tag, report in reports:
        bucket = sums.setdefault(tag, {})
        for t, score in report.type_scores.items():
            bucket.setdefault(t, []).append(score)
    return {
        tag: {t: sum(vals, Fraction(0)) / len(vals) for t, vals in by_type.items()}
        for tag, by_type in sums.items()
    }


@dataclass(frozen=True)
class InterTypeCell:
    r: float
    p: float
    n: int


@dataclass(frozen=True)
class TypeCorrelationMatrix:
    """Pairwise correlation of per-report type scores.

    ``cells`` holds computed entries keyed by unordered type pair (stored
    with both orderings for convenient lookup); ``skipped`` records why a
    pair has no value (insufficient support or constant scores).
    """

    cells: dict[tuple[PredicateType, PredicateType], InterTypeCell]
    skipped: dict[tuple[PredicateType, PredicateType], str]

    def get(self, a: PredicateType, b: PredicateType) -> InterTypeCell | None:
        return self.cells.get((a, b))


def inter_type_correlation(reports: Sequence[EvaluationReport]) -> TypeCorrelationMatrix:
    """Pearson correlation between type scores across reports, per type pair.

    A cell needs at least 3 reports carrying both types and non-constant
    score vectors; anything else is marked absent with a reason.
    """
    cells: dict[tuple[PredicateType, PredicateType], InterTypeCell] = {}
    skipped: dict[tuple[PredicateType, PredicateType], str] = {}
    for i, a in enumerate(TYPE_ORDER):
        for b in TYPE_ORDER[i:]:
            xs: list[float] = []
            ys: list[float] = []
            for rep in reports:
                if a in rep.type_scores and b in rep.type_scores:
                    xs.append(float(rep.type_scores[a]))
                    ys.append(float(rep.type_scores[b]))
            key = (a, b)
            if len(xs) < 3:
                skipped[key] = skipped[(b, a)] = f"insufficient support (n={len(xs)})"
                continue
            try:
                r, p = pearson(xs, ys)
            except ValueError:
                skipped[key] = skipped[(b, a)] = f"constant scores (n={len(xs)})"
                continue
            cells[key] = cells[(b, a)] = InterTypeCell(r=r, p=p, n=len(xs))
    return TypeCorrelationMatrix(cells=cells, skipped=skipped)


# ---------------------------------------------------------------------------
# Validation against human annotation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationPair:
    """One scored pair for tool-vs-human validation.

    ``comparator_score`` optionally carries another evaluator's score for the
    same pair, enabling the paired significance test between tools.
    """

    pair_id: str
    annotator_scores: tuple[Fraction, ...]
    human_majority: Fraction
    tool_score: Fraction
    comparator_score: Fraction | None = None
    model_tag: str = ""
    difficulty: str | None = None


@dataclass(frozen=True)
class ValidationSummary:
    """Everything the validation run measures, in one record.

    Correlations are None (with the reason in ``notes``) when undefined,
    e.g. for constant score vectors or fewer than 3 pairs. ``paired_t``
    compares the per-pair absolute errors of this tool against a
    comparator's and is present only when comparator scores were supplied.
    """

    n_pairs: int
    accuracy: Fraction
    pearson_r: float | None
    pearson_p: float | None
    spearman_rho: float | None
    spearman_p: float | None
    paired_t: tuple[float, float] | None
    error_distribution: ErrorDistribution
    notes: tuple[str, ...] = ()


def build_validation_summary(
    pairs: Sequence[ValidationPair],
    disagree_threshold: object = 0,
) -> ValidationSummary:
    if not pairs:
        raise ValueError("no pairs to validate")
    acc = accuracy([(p.human_majority, p.tool_score) for p in pairs])
    human = [float(p.human_majority) for p in pairs]
    tool = [float(p.tool_score) for p in pairs]
    notes: list[str] = []

    pearson_r = pearson_p = spearman_rho = spearman_p = None
    try:
        pearson_r, pearson_p = pearson(human, tool)
    except ValueError as exc:
        notes.append(f"pearson undefined: {exc}")
    try:
        spearman_rho, spearman_p = spearman(human, tool)
    except ValueError as exc:
        notes.append(f"spearman undefined: {exc}")

    t_result = None
    with_comparator = [p for p in pairs if p.comparator_score is not None]
    if with_comparator:
        ours = [abs(float(p.human_majority - p.tool_score)) for p in with_comparator]
        theirs = [abs(float(p.human_majority - p.comparator_score)) for p in with_comparator]
        try:
            t_result = paired_t(ours, theirs)
        except ValueError as exc:
            notes.append(f"paired t undefined: {exc}")

    dist = classify_errors(
        [(p.annotator_scores, p.human_majority, p.tool_score) for p in pairs],
        disagree_threshold,
    )
    return ValidationSummary(
        n_pairs=len(pairs),
        accuracy=acc,
        pearson_r=pearson_r,
        pearson_p=pearson_p,
        spearman_rho=spearman_rho,
        spearman_p=spearman_p,
        paired_t=t_result,
        error_distribution=dist,
        notes=tuple(notes),
    )


def summary_to_json_dict(s: ValidationSummary) -> dict:
    return {
        "n_pairs": s.n_pairs,
        "accuracy": float(s.accuracy),
        "accuracy_exact": fraction_str(s.accuracy),
        "pearson": None if s.pearson_r is None else {"r": s.pearson_r, "p": s.pearson_p},
        "spearman": None if s.spearman_rho is None else {"rho": s.spearman_rho, "p": s.spearman_p},
        "paired_t": None if s.paired_t is None else {"t": s.paired_t[0], "p": s.paired_t[1]},
        "error_distribution": s.error_distribution.to_json_dict(),
        "notes": list(s.notes),
    }


# ---------------------------------------------------------------------------
# Tabular renderings
# ---------------------------------------------------------------------------


def type_matrix_rows(matrix: Mapping[str, Mapping[PredicateType, Fraction]]) -> list[list[str]]:
    """CSV rows (header first) for a model-by-type score matrix."""
    header = ["model", "overall", *(t.value for t in TYPE_ORDER)]
    rows = [header]
    for tag in sorted(matrix):
        by_type = matrix[tag]
        present = list(by_type.values())
        overall = sum(present, Fraction(0)) / len(present) if present else None
        row = [tag, "" if overall is None else f"{float(overall):.4f}"]
        for t in TYPE_ORDER:
            row.append("" if t not in by_type else f"{float(by_type[t]):.4f}")
        rows.append(row)
    return rows


def error_distribution_rows(dist: ErrorDistribution) -> list[list[str]]:
    header = ["error_type", "count", "fraction_of_disagreements", "fraction_of_all_pairs"]
    of_dis = dist.of_disagreements()
    of_all = dist.of_all_pairs()
    rows = [header]
    for key, count in (
        ("false_positive", dist.false_positive),
        ("false_negative", dist.false_negative),
        ("boundary", dist.boundary),
    ):
        rows.append([key, str(count), f"{float(of_dis[key]):.4f}", f"{float(of_all[key]):.4f}"])
    return rows


def group_accuracy_rows(pairs: Sequence[ValidationPair]) -> list[list[str]]:
    """CSV rows of accuracy per (model tag, difficulty) group, with totals."""
    groups: dict[tuple[str, str], list[ValidationPair]] = {}
    for p in pairs:
        key = (p.model_tag or "(untagged)", p.difficulty or "(untagged)")
        groups.setdefault(key, []).append(p)
    rows = [["model", "difficulty", "n", "accuracy"]]
    for (tag, diff) in sorted(groups):
        members = groups[(tag, diff)]
        acc = accuracy([(p.human_majority, p.tool_score) for p in members])
        rows.append([tag, diff, str(len(members)), f"{float(acc):.4f}"])
    total = accuracy([(p.human_majority, p.tool_score) for p in pairs])
    rows.append(["(all)", "(all)", str(len(pairs)), f"{float(total):.4f}"])
    return rows


def render_table(rows: Sequence[Sequence[str]]) -> str:
    """Fixed-width text rendering of CSV-style rows."""
    if not rows:
        return ""
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
