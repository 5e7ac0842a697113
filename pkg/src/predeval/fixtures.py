"""Curated test assets: a fully scripted end-to-end example, a corpus of
broken structured-output payloads for the repair pipeline, and synthetic
dataset generators.

The scripted agent outputs here are authored against the documented schemas;
they are plausible agent responses, not captured live transcripts. The
assets target :data:`.prompting.TEMPLATE_VERSION` — template edits that
change rendered prompts require regenerating the mock scripts (digests move
with the text).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .analyzer import parse_analyzer_output
from .datasets import BenchmarkRecord, DialogueRecord
from .model import (
    Decomposition,
    DecompositionMeta,
    DialogueTranscript,
    EvaluationReport,
    Predicate,
    PredicateType,
    SatisfactionResult,
    Utterance,
)
from .prompting import (
    PromptBundle,
    PromptKnowledgeBase,
    PromptMode,
    TEMPLATE_VERSION,
    prompt_digest,
    render_analyzer_prompt,
    render_evaluator_prompt,
)

#: Template version these fixtures were authored against.
TARGET_TEMPLATE_VERSION = "v1"
assert TARGET_TEMPLATE_VERSION == TEMPLATE_VERSION, (
    "fixtures target a different template version; regenerate the fixtures "
    "and golden renderings"
)


def make_script(pairs: Iterable[tuple[PromptBundle, str]]) -> dict[str, str]:
    """Build a scripted-provider table from (prompt, response) pairs."""
    return {prompt_digest(bundle): text for bundle, text in pairs}


# ---------------------------------------------------------------------------
# Worked end-to-end example
# ---------------------------------------------------------------------------

_WORKED_INSTRUCTION = (
    "Change the first person to the third person in the given sentence. "
    "The meaning should be kept, but you can paraphrase it or expand it "
    "in order to have a better pose."
)

_WORKED_SOURCE = (
    "We were recently able to increase the amount of stock we hold with "
    "the same supplier thereby reducing our risk."
)

_WORKED_RESPONSE = (
    "They were recently able to increase the amount of stock they hold with "
    "the same supplier, thereby reducing their risk."
)

_WORKED_ANALYZER_PAYLOAD = json.dumps(
    {
        "atomic_instructions": [
            {
                "id": 1,
                "instruction": "Changes all first person pronouns to third person",
                "type": "format",
                "parent_id": None,
                "dependencies": [],
                "verifiable": True,
            },
            {
                "id": 2,
                "instruction": "Maintains the same core meaning",
                "type": "content",
                "parent_id": None,
                "dependencies": [],
                "verifiable": False,
            },
            {
                "id": 3,
                "instruction": "Includes acceptable paraphrasing or expansion",
                "type": "style",
                "parent_id": None,
                "dependencies": [2],
                "verifiable": False,
            },
            {
                "id": 4,
                "instruction": "Maintains better prose/flow",
                "type": "style",
                "parent_id": None,
                "dependencies": [2, 3],
                "verifiable": False,
            },
        ]
    },
    indent=2,
)

_WORKED_EVALUATOR_PAYLOAD = json.dumps(
    {
        "instruction_evaluations": [
            {
                "instruction_id": 1,
                "instruction": "Changes all first person pronouns to third person",
                "type": "format",
                "satisfied": True,
                "evidence": (
                    "'We were' becomes 'They were', 'we hold' becomes 'they hold', "
                    "and 'our risk' becomes 'their risk'."
                ),
                "verifiable": True,
            },
            {
                "instruction_id": 2,
                "instruction": "Maintains the same core meaning",
                "type": "content",
                "satisfied": True,
                "evidence": (
                    "The response preserves the point about increasing stock held "
                    "with the same supplier to reduce risk."
                ),
                "verifiable": False,
            },
            {
                "instruction_id": 3,
                "instruction": "Includes acceptable paraphrasing or expansion",
                "type": "style",
                "satisfied": False,
                "evidence": (
                    "The wording tracks the original sentence; nothing is "
                    "paraphrased or expanded."
                ),
                "verifiable": False,
            },
            {
                "instruction_id": 4,
                "instruction": "Maintains better prose/flow",
                "type": "style",
                "satisfied": False,
                "evidence": "",
                "verifiable": False,
            },
        ],
        "overall_score": 0.5,
        "overall_verifiable_score": 1.0,
        "type_scores": {"format": 1.0, "content": 1.0, "style": 0.0},
    },
    indent=2,
)


@dataclass(frozen=True)
class WorkedExample:
    """Scripted pronoun-conversion example: a four-predicate decomposition
    where the format and content requirements pass and both style
    requirements fail, giving an overall score of exactly 1/2."""

    instruction: str
    source_sentence: str
    response: str
    analyzer_payload: str
    evaluator_payload: str
    expected_uifs: Fraction
    expected_type_scores: dict[PredicateType, Fraction]

    def decomposition(self) -> Decomposition:
        d = parse_analyzer_output(self.analyzer_payload)
        return Decomposition(instruction=self.instruction, predicates=d.predicates, meta=d.meta)

    def expected_report(self) -> EvaluationReport:
        results = [
            SatisfactionResult(1, True, "pronouns converted"),
            SatisfactionResult(2, True, "meaning preserved"),
            SatisfactionResult(3, False, ""),
            SatisfactionResult(4, False, ""),
        ]
        return EvaluationReport.from_results(self.decomposition(), results)

    def script(
        self,
        kb: PromptKnowledgeBase | None = None,
        mode: PromptMode = PromptMode.SINGLE_TURN,
    ) -> dict[str, str]:
        """Mock-provider table covering both agent calls of an end-to-end run."""
        analyzer_bundle = render_analyzer_prompt(self.instruction, mode=mode, kb=kb)
        evaluator_bundle = render_evaluator_prompt(self.decomposition(), self.response)
        return make_script(
            [(analyzer_bundle, self.analyzer_payload), (evaluator_bundle, self.evaluator_payload)]
        )


def worked_example() -> WorkedExample:
    return WorkedExample(
        instruction=_WORKED_INSTRUCTION,
        source_sentence=_WORKED_SOURCE,
        response=_WORKED_RESPONSE,
        analyzer_payload=_WORKED_ANALYZER_PAYLOAD,
        evaluator_payload=_WORKED_EVALUATOR_PAYLOAD,
        expected_uifs=Fraction(1, 2),
        expected_type_scores={
            PredicateType.FORMAT: Fraction(1),
            PredicateType.CONTENT: Fraction(1),
            PredicateType.STYLE: Fraction(0),
        },
    )


def worked_example_fixture() -> tuple[str, str, str, EvaluationReport]:
    """(instruction, scripted analyzer output, scripted judge output,
    expected report) for the end-to-end worked example."""
    ex = worked_example()
    return ex.instruction, ex.analyzer_payload, ex.evaluator_payload, ex.expected_report()


# ---------------------------------------------------------------------------
# Broken-payload repair corpus
# ---------------------------------------------------------------------------

_VALID_CORE = (
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "parent_id": null, "dependencies": [], "verifiable": false}]}'
)

#: Curated broken payloads. The first 16 are repairable by the pipeline;
#: the last 4 (unquoted keys, comments, missing commas, brace-free refusal)
#: are intentionally beyond it.
BROKEN_PAYLOADS: tuple[str, ...] = (
    # trailing comma in array
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "dependencies": [], "verifiable": false},]}',
    # trailing comma in object
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "dependencies": [], "verifiable": false,}]}',
    # fenced block
    "```json\n" + _VALID_CORE + "\n```",
    # surrounding prose
    "Here is the decomposition you asked for:\n\n"
    + _VALID_CORE
    + "\n\nLet me know if you need anything else!",
    # Python repr style (single quotes, False)
    "{'atomic_instructions': [{'id': 1, 'instruction': 'Answer in French', "
    "'type': 'content', 'dependencies': [], 'verifiable': False}]}",
    # Python literals in otherwise valid JSON
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "parent_id": None, "dependencies": [], "verifiable": True}]}',
    # curly quotes as delimiters
    "{“atomic_instructions”: [{“id”: 1, "
    "“instruction”: “Answer in French”, "
    "“type”: “content”, “dependencies”: [], "
    "“verifiable”: false}]}",
    # truncated mid-array
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "dependencies": [], "verifiable": false}, '
    '{"id": 2, "instruction": "Use a formal tone", "type": "style", "dependencies": []',
    # truncated mid-string
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in Fre',
    # fenced block with trailing comma
    "```json\n"
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "dependencies": [], "verifiable": false},]}\n```',
    # prose then truncated payload
    "Sure! Here is the JSON:\n"
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content"',
    # single quotes plus trailing comma
    "{'atomic_instructions': [{'id': 1, 'instruction': 'Answer in French', "
    "'type': 'content', 'dependencies': [],},]}",
    # truncated right after a key's colon
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "verifiable":',
    # truncated bareword literal
    '{"atomic_instructions": [{"id": 1, "instruction": "Answer in French", '
    '"type": "content", "verifiable": fal',
    # curly quotes plus Python literal
    "{“atomic_instructions”: [{“id”: 1, "
    "“instruction”: “Answer in French”, "
    "“type”: “content”, “verifiable”: False}]}",
    # fence with uppercase tag and prose before it
    "The decomposition follows.\n```JSON\n" + _VALID_CORE + "\n```",
    # unquoted keys (beyond the pipeline)
    '{atomic_instructions: [{id: 1, instruction: "Answer in French", type: "content"}]}',
    # comments (beyond the pipeline)
    '{"atomic_instructions": [/* one entry */ {"id": 1, "instruction": "x", '
    '"type": "content"}]}',
    # missing commas (beyond the pipeline)
    '{"atomic_instructions": [{"id": 1 "instruction": "x" "type": "content"}]}',
    # brace-free refusal (beyond the pipeline)
    "I cannot produce a decomposition for that request.",
)

#: How many corpus entries the pipeline is expected to fix.
EXPECTED_REPAIRABLE = 16


# ---------------------------------------------------------------------------
# Synthetic dataset generators
# ---------------------------------------------------------------------------

_MODEL_TAGS = ("alpha", "bravo", "charlie", "delta")
_TOPICS = (
    "renew a passport",
    "compare two insurance plans",
    "summarize a quarterly report",
    "plan a three-day itinerary",
    "explain a tax form",
    "troubleshoot a router",
)
_ROLES = ("caller", "agent")


def synthetic_benchmark_records(n: int, seed: int) -> list[BenchmarkRecord]:
    """Deterministic benchmark records with annotator fractions in k/4 steps."""
    rng = random.Random(seed)
    records = []
    for i in range(n):
        topic = rng.choice(_TOPICS)
        tags = rng.sample(_MODEL_TAGS, k=rng.randint(1, 3))
        responses = {tag: f"Response from {tag} about how to {topic}." for tag in tags}
        annotations = None
        if rng.random() < 0.8:
            annotations = {
                f"annotator-{a}": Fraction(rng.randint(0, 4), 4) for a in range(1, 4)
            }
        reference = None
        if rng.random() < 0.5:
            reference = tuple(
                f"Covers aspect {k} of the task" for k in range(1, rng.randint(2, 4))
            )
        records.append(
            BenchmarkRecord(
                record_id=f"bench-{i:04d}",
                instruction=f"Explain how to {topic} in a clear, structured way.",
                responses=responses,
                difficulty=rng.choice(("easy", "hard", None)),
                annotations=annotations,
                reference_decomposition=reference,
            )
        )
    return records


def synthetic_dialogue_records(n: int, seed: int) -> list[DialogueRecord]:
    """Deterministic dialogues, 6-50 utterances each, skewed toward a mean
    around 33 turns."""
    rng = random.Random(seed)
    records = []
    for i in range(n):
        length = int(round(rng.triangular(6, 50, 43)))
        roles = [_ROLES[k % 2] for k in range(length)]
        utterances = tuple(
            Utterance(role=role, text=f"Turn {k + 1} spoken by the {role}.")
            for k, role in enumerate(roles)
        )
        evaluated = rng.choice(_ROLES)
        records.append(
            DialogueRecord(
                record_id=f"dlg-{i:04d}",
                instruction="Stay in persona and keep every reply under 30 words.",
                transcript=DialogueTranscript(utterances=utterances, evaluated_role=evaluated),
                model_tag=rng.choice(_MODEL_TAGS),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Scripted evaluation batches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationBatch:
    """Everything needed to drive a batch of scripted judgments:
    decompositions, paired responses, the mock-provider script, and the
    score each pair must come out to."""

    decompositions: list[Decomposition]
    responses: list[dict]
    script: dict[str, str]
    expected_uifs: dict[str, Fraction]


def _judge_payload(d: Decomposition, satisfied_ids: set[int]) -> str:
    entries = []
    for p in d.predicates:
        ok = p.id in satisfied_ids
        entries.append(
            {
                "instruction_id": p.id,
                "instruction": p.criterion,
                "type": p.type.value,
                "satisfied": ok,
                "evidence": f"The response addresses requirement {p.id}." if ok else "",
                "verifiable": p.verifiable,
            }
        )
    sat_by_type: dict[str, list[bool]] = {}
    for p in d.predicates:
        sat_by_type.setdefault(p.type.value, []).append(p.id in satisfied_ids)
    return json.dumps(
        {
            "instruction_evaluations": entries,
            "overall_score": len(satisfied_ids) / len(d.predicates),
            "overall_verifiable_score": 1.0,
            "type_scores": {
                t: sum(flags) / len(flags) for t, flags in sat_by_type.items()
            },
        },
        sort_keys=True,
    )


def synthetic_evaluation_batch(n: int, seed: int, model_tag: str = "alpha") -> EvaluationBatch:
    """Deterministic batch of n (decomposition, response) pairs with scripted
    judge outputs and the exact scores they encode."""
    rng = random.Random(seed)
    decompositions: list[Decomposition] = []
    responses: list[dict] = []
    script: dict[str, str] = {}
    expected: dict[str, Fraction] = {}
    for i in range(n):
        subject = f"pair-{i:04d}"
        k = rng.randint(1, 4)
        predicates = tuple(
            Predicate(
                id=j + 1,
                type=rng.choice(list(PredicateType)),
                criterion=f"Requirement {j + 1} for task {i}: states point {rng.randint(1, 9)}",
                verifiable=rng.random() < 0.3,
            )
            for j in range(k)
        )
        d = Decomposition(
            instruction=f"Task {i}: respond to the {rng.choice(_TOPICS)} request.",
            predicates=predicates,
            meta=DecompositionMeta(subject_id=subject, template_version=TEMPLATE_VERSION),
        )
        response = f"Candidate answer {i} produced by {model_tag}."
        satisfied = {p.id for p in predicates if rng.random() < 0.6}
        bundle = render_evaluator_prompt(d, response)
        script[prompt_digest(bundle)] = _judge_payload(d, satisfied)
        decompositions.append(d)
        responses.append({"id": subject, "model_tag": model_tag, "response": response})
        expected[subject] = Fraction(len(satisfied), k)
    return EvaluationBatch(
        decompositions=decompositions,
        responses=responses,
        script=script,
        expected_uifs=expected,
    )
