import json
from fractions import Fraction

from predeval import cli
from predeval.analyzer import decompose
from predeval.fixtures import (
    make_script,
    synthetic_evaluation_batch,
    worked_example,
)
from predeval.model import (
    DialogueContext,
    DialogueTranscript,
    Predicate,
    PredicateType,
    Decomposition,
    DecompositionMeta,
    EvaluationReport,
    ReportMeta,
    SatisfactionResult,
    Utterance,
    decomposition_to_dict,
    report_to_dict,
)
from predeval.prompting import render_analyzer_prompt, render_evaluator_prompt
from predeval.provider import MockProvider


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows), encoding="utf-8")


def write_script(path, script):
    path.write_text(json.dumps(script), encoding="utf-8")


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def read_manifest(path):
    return json.loads((path.parent / (path.name + ".manifest.json")).read_text(encoding="utf-8"))


def analyzer_payload(n):
    return json.dumps(
        {
            "atomic_instructions": [
                {
                    "id": i,
                    "instruction": f"requirement {i}",
                    "type": "content",
                    "parent_id": None,
                    "dependencies": [],
                    "verifiable": False,
                }
                for i in range(1, n + 1)
            ]
        }
    )


class TestDecomposeCommand:
    def test_single_instruction(self, tmp_path):
        ex = worked_example()
        script_path = tmp_path / "script.json"
        write_script(script_path, ex.script())
        input_path = tmp_path / "in.jsonl"
        write_jsonl(input_path, [{"id": "w1", "instruction": ex.instruction}])
        out = tmp_path / "out.jsonl"
        code = cli.main(
            [
                "decompose",
                "-i", str(input_path),
                "-o", str(out),
                "--mock-script", str(script_path),
                "--seed", "1",
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_jsonl(out)
        assert len(rows) == 1
        assert rows[0]["meta"]["subject_id"] == "w1"
        assert rows[0]["meta"]["timestamp"] is None  # deterministic mode
        assert len(rows[0]["atomic_instructions"]) == 4

    def test_unreadable_input_is_io_error(self, tmp_path):
        code = cli.main(
            ["decompose", "-i", str(tmp_path / "missing.jsonl"), "-o", str(tmp_path / "o")]
        )
        assert code == cli.EXIT_IO

    def test_partial_failure_manifest(self, tmp_path):
        # ten instructions; one unscripted digest falls through to garbage
        instructions = [f"task number {i}" for i in range(10)]
        script = {}
        for i, text in enumerate(instructions):
            if i == 4:
                continue  # this one will get the unparseable default
            bundle = render_analyzer_prompt(text)
            script.update(make_script([(bundle, analyzer_payload(2))]))
        script_path = tmp_path / "script.json"
        write_script(script_path, script)
        input_path = tmp_path / "in.jsonl"
        write_jsonl(
            input_path,
            [{"id": f"t{i}", "instruction": text} for i, text in enumerate(instructions)],
        )
        out = tmp_path / "out.jsonl"
        code = cli.main(
            [
                "decompose",
                "-i", str(input_path),
                "-o", str(out),
                "--mock-script", str(script_path),
                "--mock-policy", "default",
                "--mock-default", "no structured output here",
                "--seed", "1",
            ]
        )
        assert code == cli.EXIT_PARTIAL
        assert len(read_jsonl(out)) == 9
        manifest = read_manifest(out)
        assert len(manifest["failures"]) == 1
        assert manifest["failures"][0]["id"] == "t4"

    def test_unknown_provider_is_usage_error(self, tmp_path):
        input_path = tmp_path / "in.jsonl"
        write_jsonl(input_path, [{"id": "x", "instruction": "y"}])
        code = cli.main(
            [
                "decompose",
                "-i", str(input_path),
                "-o", str(tmp_path / "o"),
                "--config", str(tmp_path / "nope.json"),
            ]
        )
        assert code == cli.EXIT_USAGE


class TestEvaluateCommand:
    def test_worked_pair_scores_half(self, tmp_path):
        ex = worked_example()
        d = decompose(ex.instruction, provider=MockProvider(ex.script()), stamp_time=False)
        decomp_dict = decomposition_to_dict(d)
        decomp_dict["meta"]["subject_id"] = "w1"
        decomp_path = tmp_path / "d.jsonl"
        write_jsonl(decomp_path, [decomp_dict])
        responses_path = tmp_path / "r.jsonl"
        write_jsonl(
            responses_path, [{"id": "w1", "model_tag": "gpt", "response": ex.response}]
        )
        script_path = tmp_path / "script.json"
        write_script(script_path, ex.script())
        out = tmp_path / "reports.jsonl"
        code = cli.main(
            [
                "evaluate",
                "-d", str(decomp_path),
                "-r", str(responses_path),
                "-o", str(out),
                "--mock-script", str(script_path),
                "--seed", "1",
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_jsonl(out)
        assert rows[0]["uifs_exact"] == "1/2"
        assert rows[0]["type_scores"] == {"content": 1.0, "format": 1.0, "style": 0.0}

    def test_missing_decomposition_skipped(self, tmp_path):
        batch = synthetic_evaluation_batch(2, seed=9)
        decomp_path = tmp_path / "d.jsonl"
        write_jsonl(decomp_path, [decomposition_to_dict(batch.decompositions[0])])
        responses_path = tmp_path / "r.jsonl"
        write_jsonl(responses_path, batch.responses)
        script_path = tmp_path / "script.json"
        write_script(script_path, batch.script)
        out = tmp_path / "reports.jsonl"
        code = cli.main(
            [
                "evaluate",
                "-d", str(decomp_path),
                "-r", str(responses_path),
                "-o", str(out),
                "--mock-script", str(script_path),
                "--seed", "1",
            ]
        )
        assert code == cli.EXIT_OK
        assert len(read_jsonl(out)) == 1
        manifest = read_manifest(out)
        assert manifest["skipped"] == [
            {"id": "pair-0001", "reason": "no decomposition with this id"}
        ]

    def test_dialogue_mode_emits_difs(self, tmp_path):
        d = Decomposition(
            instruction="answer briefly",
            predicates=tuple(
                Predicate(id=i, type=PredicateType.CONTENT, criterion=f"req {i}")
                for i in (1, 2, 3, 4)
            ),
            meta=DecompositionMeta(subject_id="dlg-1"),
        )
        transcript = DialogueTranscript(
            utterances=(
                Utterance("caller", "hi"),
                Utterance("agent", "hello"),
                Utterance("caller", "plans?"),
                Utterance("agent", "two plans"),
                Utterance("caller", "prices?"),
                Utterance("agent", "ten and twenty"),
            ),
            evaluated_role="agent",
        )
        satisfied_counts = {1: 4, 3: 2, 5: 3}  # uifs 1.0, 0.5, 0.75
        pairs = []
        for index, count in satisfied_counts.items():
            ctx = DialogueContext.from_transcript(transcript, index)
            bundle = render_evaluator_prompt(d, transcript.utterances[index].text, ctx=ctx)
            entries = [
                {
                    "instruction_id": i,
                    "satisfied": i <= count,
                    "evidence": "seen" if i <= count else "",
                }
                for i in (1, 2, 3, 4)
            ]
            pairs.append((bundle, json.dumps({"instruction_evaluations": entries})))
        script_path = tmp_path / "script.json"
        write_script(script_path, make_script(pairs))
        decomp_path = tmp_path / "d.jsonl"
        write_jsonl(decomp_path, [decomposition_to_dict(d)])
        dialogues_path = tmp_path / "dlg.jsonl"
        write_jsonl(
            dialogues_path,
            [
                {
                    "schema_version": 1,
                    "kind": "dialogue",
                    "id": "dlg-1",
                    "instruction": "answer briefly",
                    "model_tag": "alpha",
                    "evaluated_role": "agent",
                    "utterances": [
                        {"role": u.role, "text": u.text} for u in transcript.utterances
                    ],
                }
            ],
        )
        out = tmp_path / "scores.jsonl"
        code = cli.main(
            [
                "evaluate",
                "--dialogue",
                "-d", str(decomp_path),
                "-r", str(dialogues_path),
                "-o", str(out),
                "--mock-script", str(script_path),
                "--seed", "1",
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_jsonl(out)
        assert rows[0]["difs_exact"] == "3/4"
        assert [e["index"] for e in rows[0]["per_utterance"]] == [1, 3, 5]
        assert len(rows[0]["reports"]) == 3

    def test_determinism_across_parallelism(self, tmp_path):
        batch = synthetic_evaluation_batch(10, seed=11)
        decomp_path = tmp_path / "d.jsonl"
        write_jsonl(decomp_path, [decomposition_to_dict(d) for d in batch.decompositions])
        responses_path = tmp_path / "r.jsonl"
        write_jsonl(responses_path, batch.responses)
        script_path = tmp_path / "script.json"
        write_script(script_path, batch.script)
        outputs = []
        for parallel, name in ((1, "a.jsonl"), (8, "b.jsonl")):
            out = tmp_path / name
            code = cli.main(
                [
                    "evaluate",
                    "-d", str(decomp_path),
                    "-r", str(responses_path),
                    "-o", str(out),
                    "--mock-script", str(script_path),
                    "--seed", "7",
                    "--parallel", str(parallel),
                ]
            )
            assert code == cli.EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        for row, (subject, expected) in zip(
            read_jsonl(tmp_path / "a.jsonl"), sorted(batch.expected_uifs.items())
        ):
            assert row["uifs_exact"] == str(expected)


def make_report(subject, model_tag, scores):
    predicates = []
    results = []
    pid = 0
    for t, frac in scores.items():
        hits = int(frac * 4)
        for k in range(4):
            pid += 1
            predicates.append(Predicate(id=pid, type=t, criterion=f"req {pid}"))
            results.append(SatisfactionResult(pid, k < hits, "ev" if k < hits else ""))
    d = Decomposition(instruction="x", predicates=tuple(predicates))
    report = EvaluationReport.from_results(
        d, results, meta=ReportMeta(subject_id=subject, model_tag=model_tag)
    )
    return report_to_dict(report)


class TestValidateCommand:
    def benchmark_rows(self, score):
        return [
            {
                "schema_version": 1,
                "kind": "benchmark",
                "id": f"b{i}",
                "instruction": "explain",
                "difficulty": "easy" if i % 2 else "hard",
                "responses": {"alpha": "text"},
                "annotations": {"a1": score, "a2": score, "a3": score},
                "reference_decomposition": None,
            }
            for i in range(4)
        ]

    def report_rows(self, uifs_hits):
        rows = []
        for i in range(4):
            rows.append(
                make_report(
                    f"b{i}", "alpha", {PredicateType.CONTENT: Fraction(uifs_hits, 4)}
                )
            )
        return rows

    def test_identical_scores_give_accuracy_one(self, tmp_path, capsys):
        bench = tmp_path / "bench.jsonl"
        write_jsonl(bench, self.benchmark_rows(1.0))
        reports = tmp_path / "reports.jsonl"
        write_jsonl(reports, self.report_rows(4))
        out_dir = tmp_path / "out"
        code = cli.main(
            ["validate", "-b", str(bench), "-r", str(reports), "-o", str(out_dir)]
        )
        assert code == cli.EXIT_OK
        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["accuracy"] == 1.0
        assert summary["error_distribution"]["n_disagreements"] == 0
        assert (out_dir / "accuracy_by_group.csv").exists()
        assert (out_dir / "error_types.csv").exists()
        assert "accuracy: 1.0000" in capsys.readouterr().out

    def test_missing_annotations_specific_exit(self, tmp_path):
        rows = self.benchmark_rows(1.0)
        for row in rows:
            row["annotations"] = None
        bench = tmp_path / "bench.jsonl"
        write_jsonl(bench, rows)
        reports = tmp_path / "reports.jsonl"
        write_jsonl(reports, self.report_rows(4))
        code = cli.main(
            ["validate", "-b", str(bench), "-r", str(reports), "-o", str(tmp_path / "o")]
        )
        assert code == cli.EXIT_NO_ANNOTATIONS

    def test_toy_pair_matches_scoring(self, tmp_path):
        # human majority 1.0 everywhere; tool scores 3/4 -> accuracy 1 - 1/4
        bench = tmp_path / "bench.jsonl"
        write_jsonl(bench, self.benchmark_rows(1.0))
        reports = tmp_path / "reports.jsonl"
        write_jsonl(reports, self.report_rows(3))
        out_dir = tmp_path / "out"
        code = cli.main(
            ["validate", "-b", str(bench), "-r", str(reports), "-o", str(out_dir)]
        )
        assert code == cli.EXIT_OK
        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["accuracy_exact"] == "3/4"
        dist = summary["error_distribution"]
        assert dist["counts"]["false_negative"] == 4  # tool below unanimous humans


class TestReportCommand:
    def test_single_report_single_row(self, tmp_path, capsys):
        reports = tmp_path / "reports.jsonl"
        write_jsonl(
            reports,
            [make_report("b1", "alpha", {PredicateType.FORMAT: Fraction(1)})],
        )
        out_dir = tmp_path / "out"
        code = cli.main(["report", "-r", str(reports), "-o", str(out_dir)])
        assert code == cli.EXIT_OK
        matrix_lines = (out_dir / "type_scores.csv").read_text(encoding="utf-8").splitlines()
        assert len(matrix_lines) == 2  # header + one model row
        assert matrix_lines[1].startswith("alpha,")
        assert "alpha" in capsys.readouterr().out

    def test_empty_reports_ok_with_warning(self, tmp_path, capsys):
        reports = tmp_path / "reports.jsonl"
        reports.write_text("", encoding="utf-8")
        out_dir = tmp_path / "out"
        code = cli.main(["report", "-r", str(reports), "-o", str(out_dir)])
        assert code == cli.EXIT_OK
        assert "warning" in capsys.readouterr().err
        assert (out_dir / "type_scores.csv").exists()

    def test_matrix_matches_group_by_oracle(self, tmp_path):
        rows = [
            make_report("b1", "m1", {PredicateType.FORMAT: Fraction(1)}),
            make_report("b2", "m1", {PredicateType.FORMAT: Fraction(1, 2)}),
            make_report("b3", "m2", {PredicateType.STYLE: Fraction(3, 4)}),
        ]
        reports = tmp_path / "reports.jsonl"
        write_jsonl(reports, rows)
        out_dir = tmp_path / "out"
        assert cli.main(["report", "-r", str(reports), "-o", str(out_dir)]) == cli.EXIT_OK
        text = (out_dir / "type_scores.csv").read_text(encoding="utf-8")
        lines = dict(line.split(",", 1) for line in text.splitlines()[1:])
        # columns after the model tag: overall, content, format, style, ...
        assert lines["m1"].split(",")[2] == "0.7500"  # format column mean
        per_instruction = (out_dir / "per_instruction.csv").read_text(encoding="utf-8")
        assert "b2,m1,0.5000" in per_instruction
