"""Rendering of analyzer and judge prompts from versioned text templates.

The templates under ``templates/`` ARE the method: change them and every
downstream verdict may shift. They are therefore shipped as plain-text
assets, stamped with :data:`TEMPLATE_VERSION`, and that version is recorded
in the meta of every decomposition and report so drift stays detectable.
Bump :data:`TEMPLATE_VERSION` whenever any template file changes, and
refresh the golden renderings in the test suite.

Rendering is pure: identical inputs produce byte-identical bundles. A
dialogue-mode bundle extends the single-turn bundle for the same core
inputs: the dialogue directives are appended to the system text, and the
history/partner blocks are prefixed to the user text.

Placeholder syntax is :class:`string.Template` (``$name``).
"""

from __future__ import annotations

import enum
import functools
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Mapping

from .model import (
    Decomposition,
    DialogueContext,
    PredicateType,
    TYPE_ORDER,
    Utterance,
    validate_decomposition,
)

TEMPLATE_VERSION = "v1"

#: Characters per estimated token, used for the history budget heuristic.
_CHARS_PER_TOKEN = 4

_TRUNCATION_MARKER = "[earlier turns omitted]"


class PromptError(ValueError):
    """Invalid input to a renderer (empty instruction, unvalidated
    decomposition, empty response)."""


class PromptMode(enum.Enum):
    SINGLE_TURN = "single_turn"
    DIALOGUE = "dialogue"


@dataclass(frozen=True)
class TypeEntry:
    """Definition and exemplar phrasings for one predicate type."""

    definition: str
    exemplars: tuple[str, ...]


@dataclass(frozen=True)
class PromptKnowledgeBase:
    """Type definitions and exemplars injected into the analyzer prompt.

    Exactly one non-empty entry per predicate type. The default definitions
    describe each category as a question a reviewer would ask; the default
    exemplars are editorially authored illustrations.
    """

    entries: dict[PredicateType, TypeEntry]

    def __post_init__(self) -> None:
        missing = [t.value for t in TYPE_ORDER if t not in self.entries]
        if missing or len(self.entries) != len(TYPE_ORDER):
            raise ValueError(f"knowledge base must cover exactly the five types; missing {missing}")
        for t, entry in self.entries.items():
            if not entry.definition.strip() or not entry.exemplars:
                raise ValueError(f"knowledge base entry for {t.value} is empty")
            if any(not e.strip() for e in entry.exemplars):
                raise ValueError(f"knowledge base entry for {t.value} has an empty exemplar")

    @classmethod
    def default(cls) -> "PromptKnowledgeBase":
        return _DEFAULT_KB

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "PromptKnowledgeBase":
        entries = {
            PredicateType.from_label(label): TypeEntry(
                definition=str(spec["definition"]),
                exemplars=tuple(str(e) for e in spec["exemplars"]),
            )
            for label, spec in obj.items()
        }
        return cls(entries)

    def to_json_dict(self) -> dict:
        return {
            t.value: {
                "definition": self.entries[t].definition,
                "exemplars": list(self.entries[t].exemplars),
            }
            for t in TYPE_ORDER
        }


_DEFAULT_KB = PromptKnowledgeBase(
    {
        PredicateType.CONTENT: TypeEntry(
            "Information/content requirements (Does the response include required content?)",
            ("Mentions the 30-day return window", "Covers all three requested topics"),
        ),
        PredicateType.FORMAT: TypeEntry(
            "Structural/formatting requirements (Does the response follow the required structure?)",
            ("Formats the answer as a numbered list", "Wraps the code in a fenced block"),
        ),
        PredicateType.STYLE: TypeEntry(
            "Writing style/tone requirements (Does the response use appropriate style?)",
            ("Keeps a formal, professional tone", "Avoids first-person narration"),
        ),
        PredicateType.LOGICAL: TypeEntry(
            "Reasoning/logic requirements (Does the response demonstrate logical reasoning?)",
            (
                "Justifies the conclusion from the two stated premises",
                "Orders the argument so each step follows from the previous one",
            ),
        ),
        PredicateType.NUMERICAL: TypeEntry(
            "Mathematical/quantitative requirements (Does the response include correct calculations?)",
            ("Reports the total as exactly 42", "Keeps the response under 30 words"),
        ),
    }
)


@dataclass(frozen=True)
class PromptBundle:
    """A fully rendered prompt: system text, user text, and provenance."""

    system: str
    user: str
    template_version: str
    mode: PromptMode


@functools.lru_cache(maxsize=None)
def _template(name: str) -> Template:
    text = resources.files(__package__).joinpath("templates", f"{name}.txt").read_text("utf-8")
    return Template(text)


def _render(name: str, **values: str) -> str:
    try:
        return _template(name).substitute(**values)
    except (KeyError, ValueError) as exc:
        raise PromptError(f"template {name!r} has unresolved placeholders: {exc}") from exc


def _type_definitions(kb: PromptKnowledgeBase) -> str:
    lines: list[str] = []
    for t in TYPE_ORDER:
        entry = kb.entries[t]
        lines.append(f"   - {t.value}: {entry.definition}")
        for exemplar in entry.exemplars:
            lines.append(f'     e.g. "{exemplar}"')
    return "\n".join(lines)


def render_analyzer_prompt(
    instruction: str,
    mode: PromptMode = PromptMode.SINGLE_TURN,
    kb: PromptKnowledgeBase | None = None,
) -> PromptBundle:
    """Build the decomposition prompt for one instruction."""
    if not instruction.strip():
        raise PromptError("instruction is empty")
    kb = kb or PromptKnowledgeBase.default()
    system = _render("analyzer_system", type_definitions=_type_definitions(kb))
    if mode is PromptMode.DIALOGUE:
        system += _render("analyzer_dialogue_extension")
    user = _render("analyzer_user", instruction=instruction)
    return PromptBundle(system=system, user=user, template_version=TEMPLATE_VERSION, mode=mode)


def _predicate_list(d: Decomposition) -> str:
    lines = []
    for p in d.predicates:
        line = f"{p.id}. ({p.type.value}) {p.criterion}"
        if p.dependencies:
            line += f" [depends on: {', '.join(str(i) for i in p.dependencies)}]"
        if p.verifiable:
            line += " [verifiable]"
        lines.append(line)
    return "\n".join(lines)


def _type_criteria(d: Decomposition) -> str:
    present = [t for t in TYPE_ORDER if any(p.type is t for p in d.predicates)]
    return "\n".join(_render(f"criteria_{t.value}") for t in present)


def _estimated_tokens(text: str) -> int:
    return math.ceil(len(text) / _CHARS_PER_TOKEN)


def _history_lines(
    history: tuple[Utterance, ...],
    keep: Utterance | None,
    budget_tokens: int,
) -> str:
    """Serialize the history, truncating oldest-first under the token budget
    but always retaining ``keep`` (the latest partner utterance)."""
    rendered = [f"{u.role}: {u.text}" for u in history]
    total = sum(_estimated_tokens(line) + 1 for line in rendered)
    if total <= budget_tokens:
        return "\n".join(rendered)
    keep_index = None
    if keep is not None:
        keep_index = len(history) - 1 - history[::-1].index(keep)
    kept: list[tuple[int, str]] = []
    used = 0
    for idx in range(len(rendered) - 1, -1, -1):
        cost = _estimated_tokens(rendered[idx]) + 1
        if used + cost <= budget_tokens or idx == keep_index:
            kept.append((idx, rendered[idx]))
            used += cost
    kept.sort()
    return "\n".join([_TRUNCATION_MARKER, *(line for _, line in kept)])


def render_evaluator_prompt(
    d: Decomposition,
    response: str,
    ctx: DialogueContext | None = None,
    history_token_budget: int = 1000,
) -> PromptBundle:
    """Build the judgment prompt for a (decomposition, response) pair.

    With a dialogue context, the system text gains the dialogue directives
    and the user text is prefixed with the serialized history and the other
    party's most recent message; an empty history omits both blocks.
    """
    verdict = validate_decomposition(d)
    if not verdict.ok:
        raise PromptError(
            "decomposition failed validation: "
            + "; ".join(v.message for v in verdict.violations)
        )
    if not response.strip():
        raise PromptError("response is empty")

    system = _render("evaluator_system", type_criteria=_type_criteria(d))
    user = _render("evaluator_user", predicate_list=_predicate_list(d), response=response)
    mode = PromptMode.SINGLE_TURN
    if ctx is not None:
        mode = PromptMode.DIALOGUE
        system += _render("evaluator_dialogue_extension")
        prefix = ""
        if ctx.history:
            history = _history_lines(
                ctx.history, ctx.last_partner_utterance, history_token_budget
            )
            prefix += _render("evaluator_history_block", history=history)
        if ctx.last_partner_utterance is not None:
            partner = ctx.last_partner_utterance
            prefix += _render("evaluator_partner_block", partner=f"{partner.role}: {partner.text}")
        user = prefix + user
    return PromptBundle(system=system, user=user, template_version=TEMPLATE_VERSION, mode=mode)


def prompt_digest(bundle: PromptBundle) -> str:
    """Stable hex digest of a bundle's rendered text.

    This is the key scripted providers and the response cache use: SHA-256
    over ``system + chr(0x1E) + user``, hex-encoded.
    """
    payload = bundle.system + "\x1e" + bundle.user
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
