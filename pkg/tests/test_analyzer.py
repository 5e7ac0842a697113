import json
import random

import pytest

from predeval.analyzer import (
    FORMAT_REMINDER,
    ParseFailure,
    UnparseableOutput,
    decompose,
    parse_analyzer_output,
    renumber_duplicate_ids,
)
from predeval.fixtures import make_script, worked_example
from predeval.model import PredicateType, validate_decomposition
from predeval.prompting import PromptBundle, prompt_digest, render_analyzer_prompt
from predeval.provider import MockProvider, MockScriptMiss

from oracles import random_valid_payload


def payload_for(entries):
    return json.dumps({"atomic_instructions": entries})


def entry(i, type_label="content", deps=(), **extra):
    base = {
        "id": i,
        "instruction": f"requirement {i}",
        "type": type_label,
        "parent_id": None,
        "dependencies": list(deps),
        "verifiable": False,
    }
    base.update(extra)
    return base


class TestParseAnalyzerOutput:
    def test_happy_path(self):
        d = parse_analyzer_output(payload_for([entry(1), entry(2, "style", deps=[1])]))
        assert [p.id for p in d.predicates] == [1, 2]
        assert d.predicates[1].dependencies == (1,)

    def test_prose_and_fences_match_direct_parse(self):
        core = payload_for([entry(1), entry(2, "format")])
        wrapped = f"Sure thing!\n```json\n{core}\n```\nDone."
        assert parse_analyzer_output(wrapped) == parse_analyzer_output(core)

    def test_unknown_type_label_names_the_field(self):
        with pytest.raises(ParseFailure) as exc:
            parse_analyzer_output(payload_for([entry(1, "tone")]))
        assert "type" in str(exc.value) and "tone" in str(exc.value)

    def test_type_label_normalized(self):
        d = parse_analyzer_output(payload_for([entry(1, "Content ")]))
        assert d.predicates[0].type is PredicateType.CONTENT

    def test_missing_required_field(self):
        broken = payload_for([{"id": 1, "type": "content"}])
        with pytest.raises(ParseFailure) as exc:
            parse_analyzer_output(broken)
        assert "instruction" in str(exc.value)

    def test_unparseable_reports_location(self):
        with pytest.raises(ParseFailure) as exc:
            parse_analyzer_output('prefix {"atomic_instructions": [}]} suffix')
        assert exc.value.location is not None

    def test_no_matching_object(self):
        with pytest.raises(ParseFailure):
            parse_analyzer_output('{"something_else": 1}')


class TestRenumbering:
    def test_well_formed_untouched(self):
        d = parse_analyzer_output(payload_for([entry(1), entry(2)]))
        repaired, notes = renumber_duplicate_ids(d)
        assert repaired is d and notes == ()

    def test_duplicates_renumbered_sequentially(self):
        d = parse_analyzer_output(payload_for([entry(1), entry(1, "style"), entry(2, "format")]))
        repaired, notes = renumber_duplicate_ids(d)
        assert [p.id for p in repaired.predicates] == [1, 2, 3]
        assert notes and "renumbered" in notes[0]
        assert validate_decomposition(repaired).ok

    def test_dependencies_follow_first_occurrence(self):
        d = parse_analyzer_output(
            payload_for([entry(1), entry(1, "style"), entry(3, "format", deps=[1])])
        )
        repaired, _ = renumber_duplicate_ids(d)
        assert repaired.predicates[2].dependencies == (1,)

    def test_random_duplicate_batches_always_validate(self):
        rng = random.Random(31)
        for _ in range(200):
            n = rng.randint(1, 8)
            ids = [rng.randint(1, max(1, n // 2)) for _ in range(n)]
            entries = [entry(i) for i in ids]
            repaired, _ = renumber_duplicate_ids(parse_analyzer_output(payload_for(entries)))
            assert validate_decomposition(repaired).ok


class TestDecompose:
    def test_worked_example_types_and_dependencies(self):
        ex = worked_example()
        provider = MockProvider(ex.script())
        d = decompose(ex.instruction, provider=provider, stamp_time=False)
        assert [p.type for p in d.predicates] == [
            PredicateType.FORMAT,
            PredicateType.CONTENT,
            PredicateType.STYLE,
            PredicateType.STYLE,
        ]
        assert {p.id: p.dependencies for p in d.predicates if p.dependencies} == {
            3: (2,),
            4: (2, 3),
        }
        assert d.meta.model_id == "mock"
        assert d.meta.template_version == "v1"
        assert d.meta.timestamp is None
        assert validate_decomposition(d).ok

    def test_deterministic_end_to_end(self):
        ex = worked_example()
        d1 = decompose(ex.instruction, provider=MockProvider(ex.script()), stamp_time=False)
        d2 = decompose(ex.instruction, provider=MockProvider(ex.script()), stamp_time=False)
        assert d1 == d2

    def test_duplicate_ids_repaired_with_note(self):
        instruction = "list the steps"
        bundle = render_analyzer_prompt(instruction)
        script = make_script(
            [(bundle, payload_for([entry(1), entry(1, "style"), entry(2, "format")]))]
        )
        d = decompose(instruction, provider=MockProvider(script), stamp_time=False)
        assert [p.id for p in d.predicates] == [1, 2, 3]
        assert d.meta.repair_notes
        assert validate_decomposition(d).ok

    def test_reprompt_recovers_from_garbage_first_answer(self):
        instruction = "x"
        first = render_analyzer_prompt(instruction)
        retry = PromptBundle(
            system=first.system,
            user=first.user + FORMAT_REMINDER,
            template_version=first.template_version,
            mode=first.mode,
        )
        script = make_script([(first, "no json at all"), (retry, payload_for([entry(1)]))])
        d = decompose(instruction, provider=MockProvider(script), stamp_time=False)
        assert [p.id for p in d.predicates] == [1]

    def test_repair_pipeline_recovers_broken_retry(self):
        instruction = "x"
        first = render_analyzer_prompt(instruction)
        retry = PromptBundle(
            system=first.system,
            user=first.user + FORMAT_REMINDER,
            template_version=first.template_version,
            mode=first.mode,
        )
        broken = payload_for([entry(1)])[:-2]  # truncated tail
        script = make_script([(first, "still not json"), (retry, broken)])
        d = decompose(instruction, provider=MockProvider(script), stamp_time=False)
        assert [p.id for p in d.predicates] == [1]

    def test_unparseable_after_all_attempts(self):
        provider = MockProvider({}, policy="default", default_text="I refuse.")
        with pytest.raises(UnparseableOutput):
            decompose("x", provider=provider, stamp_time=False)

    def test_provider_errors_propagate(self):
        with pytest.raises(MockScriptMiss):
            decompose("x", provider=MockProvider({}), stamp_time=False)

    def test_count_warnings_recorded(self):
        instruction = "big task"
        bundle = render_analyzer_prompt(instruction)
        script = make_script([(bundle, payload_for([entry(i) for i in range(1, 10)]))])
        d = decompose(instruction, provider=MockProvider(script), stamp_time=False)
        assert any("5-7" in w for w in d.meta.warnings)

    def test_random_valid_payloads_always_give_validating_decompositions(self):
        rng = random.Random(33)
        for i in range(50):
            instruction = f"task {i}"
            bundle = render_analyzer_prompt(instruction)
            script = make_script([(bundle, random_valid_payload(rng))])
            d = decompose(instruction, provider=MockProvider(script), stamp_time=False)
            assert validate_decomposition(d).ok


def test_repair_output_idempotent_on_image():
    from predeval.analyzer import repair_output

    rng = random.Random(34)
    for _ in range(100):
        text = random_valid_payload(rng)
        assert repair_output(repair_output(text)) == repair_output(text)
