"""Batch orchestration CLI: decompose, evaluate, validate, and report.

Exit codes:
    0  success (no hard failures)
    1  completed, but some items failed (see the ``.manifest.json`` file)
    2  usage or configuration error
    3  I/O error
    4  input schema or validation error
    5  required annotations absent

Configuration precedence is flags > environment > config file. Recognized
environment variables: ``PREDEVAL_API_KEY`` (credential), ``PREDEVAL_PROVIDER``,
``PREDEVAL_ENDPOINT``, ``PREDEVAL_MODEL_ID``.

Every output file is line-delimited JSON with sorted keys, written in input
order regardless of worker completion order, so runs with the same inputs
and ``--seed`` are byte-identical at any parallelism. ``--seed`` omits
wall-clock timestamps from output meta; with a scripted provider nothing
else varies between runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import datasets, scoring
from .analyzer import ParseFailure, ValidationFailed, decompose
from .evaluator import evaluate, evaluate_dialogue
from .model import (
    aggregate_human_scores,
    decomposition_from_dict,
    decomposition_to_dict,
    report_from_dict,
    report_to_dict,
)
from .prompting import PromptError, PromptKnowledgeBase, PromptMode
from .provider import (
    HttpConfig,
    HttpProvider,
    MockProvider,
    Provider,
    ProviderError,
    ResponseCache,
    RetryPolicy,
    TokenBucket,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SCHEMA = 4
EXIT_NO_ANNOTATIONS = 5

_ITEM_ERRORS = (ParseFailure, ValidationFailed, ProviderError, PromptError, ValueError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class EffectiveConfig:
    provider: str = "mock"
    endpoint: str = ""
    model_id: str = ""
    api_key: str = ""
    temperature: float = 0.0
    max_tokens: int = 2048
    retry_attempts: int = 4
    rate_limit_rpm: float | None = None
    max_in_flight: int | None = None
    cache_dir: str | None = None
    mock_script: str | None = None
    mock_policy: str = "strict"
    mock_default: str = ""
    kb_path: str | None = None

    def masked(self) -> dict:
        out = dict(self.__dict__)
        if out["api_key"]:
            out["api_key"] = "***"
        return out


def _resolve_config(args: argparse.Namespace) -> EffectiveConfig:
    cfg = EffectiveConfig()
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        except ValueError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        for key, value in file_values.items():
            if key == "api_key_env":
                cfg.api_key = os.environ.get(str(value), "")
            elif hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                raise UsageError(f"unknown config key {key!r}")
    for env, key in (
        ("PREDEVAL_PROVIDER", "provider"),
        ("PREDEVAL_ENDPOINT", "endpoint"),
        ("PREDEVAL_MODEL_ID", "model_id"),
    ):
        if os.environ.get(env):
            setattr(cfg, key, os.environ[env])
    if os.environ.get("PREDEVAL_API_KEY"):
        cfg.api_key = os.environ["PREDEVAL_API_KEY"]
    for flag, key in (
        ("provider", "provider"),
        ("endpoint", "endpoint"),
        ("model_id", "model_id"),
        ("temperature", "temperature"),
        ("max_tokens", "max_tokens"),
        ("retry_attempts", "retry_attempts"),
        ("rate_limit_rpm", "rate_limit_rpm"),
        ("max_in_flight", "max_in_flight"),
        ("cache_dir", "cache_dir"),
        ("mock_script", "mock_script"),
        ("mock_policy", "mock_policy"),
        ("mock_default", "mock_default"),
        ("kb", "kb_path"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _build_provider(cfg: EffectiveConfig) -> Provider:
    cache = ResponseCache(cfg.cache_dir) if cfg.cache_dir else None
    retry = RetryPolicy(max_attempts=cfg.retry_attempts)
    limiter = TokenBucket(cfg.rate_limit_rpm) if cfg.rate_limit_rpm else None
    common = dict(
        cache=cache, retry=retry, rate_limiter=limiter, max_in_flight=cfg.max_in_flight
    )
    if cfg.provider == "mock":
        script: dict[str, str] = {}
        if cfg.mock_script:
            try:
                script = json.loads(Path(cfg.mock_script).read_text(encoding="utf-8"))
            except OSError as exc:
                raise UsageError(f"cannot read mock script: {exc}") from exc
            except ValueError as exc:
                raise UsageError(f"mock script is not valid JSON: {exc}") from exc
        return MockProvider(
            script,
            policy=cfg.mock_policy,
            default_text=cfg.mock_default,
            model_id=cfg.model_id or "mock",
            **common,
        )
    if cfg.provider in ("openai", "anthropic"):
        if not cfg.endpoint:
            raise UsageError(f"provider {cfg.provider!r} requires an endpoint")
        http_cfg = HttpConfig(
            endpoint=cfg.endpoint,
            model_id=cfg.model_id,
            family=cfg.provider,
            api_key=cfg.api_key,
        )
        return HttpProvider(http_cfg, **common)
    raise UsageError(f"unknown provider {cfg.provider!r}")


def _load_kb(cfg: EffectiveConfig) -> PromptKnowledgeBase | None:
    if not cfg.kb_path:
        return None
    try:
        return PromptKnowledgeBase.from_json_dict(
            json.loads(Path(cfg.kb_path).read_text(encoding="utf-8"))
        )
    except OSError as exc:
        raise UsageError(f"cannot read knowledge base file: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed knowledge base file: {exc}") from exc


# ---------------------------------------------------------------------------
# IO helpers
# ---------------------------------------------------------------------------


def _dump(obj: object) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _read_jsonl(path: str) -> list[dict]:
    rows: list[dict] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise datasets.DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise datasets.DatasetError(f"{path}:{line_no}: line is not a JSON object")
            rows.append(obj)
    return rows


def _write_jsonl(path: str, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(_dump(row) + "\n")


def _write_manifest(out_path: str, payload: dict) -> None:
    manifest_path = out_path + ".manifest.json"
    Path(manifest_path).write_text(_dump(payload) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        csv.writer(handle).writerows(rows)


def _parallel_map(
    worker: Callable[[int], object], count: int, parallelism: int
) -> list[object]:
    """Run ``worker(i)`` for 0..count-1, preserving index order of results."""
    if parallelism <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(worker, range(count)))


def _parallelism(args: argparse.Namespace, cfg: EffectiveConfig) -> int:
    if args.parallel is not None:
        return max(1, args.parallel)
    return cfg.max_in_flight or 1


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_decompose(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    provider = _build_provider(cfg)
    kb = _load_kb(cfg)
    default_mode = PromptMode(args.mode)
    stamp_time = args.seed is None
    rows = _read_jsonl(args.input)

    items: list[tuple[str, str, PromptMode]] = []
    failures: list[dict] = []
    for idx, row in enumerate(rows):
        subject = str(row.get("id", f"line-{idx + 1}"))
        instruction = row.get("instruction")
        if not isinstance(instruction, str) or not instruction.strip():
            failures.append({"id": subject, "error": "missing or empty 'instruction' field"})
            continue
        mode = PromptMode(row["mode"]) if "mode" in row else default_mode
        items.append((subject, instruction, mode))

    def worker(i: int) -> tuple[str, dict | None, str | None]:
        subject, instruction, mode = items[i]
        try:
            d = decompose(
                instruction,
                mode=mode,
                provider=provider,
                kb=kb,
                temperature=cfg.temperature,
                max_tokens=cfg.max_tokens,
                stamp_time=stamp_time,
                subject_id=subject,
            )
            return subject, decomposition_to_dict(d), None
        except _ITEM_ERRORS as exc:
            return subject, None, f"{type(exc).__name__}: {exc}"

    results = _parallel_map(worker, len(items), _parallelism(args, cfg))
    outputs = []
    for subject, payload, error in results:  # type: ignore[misc]
        if error is None:
            outputs.append(payload)
        else:
            failures.append({"id": subject, "error": error})
    _write_jsonl(args.output, outputs)
    _write_manifest(
        args.output,
        {"command": "decompose", "written": len(outputs), "failures": failures},
    )
    _echo(args, f"decompose: {len(outputs)} written, {len(failures)} failed")
    return EXIT_PARTIAL if failures else EXIT_OK


def _index_decompositions(path: str) -> dict[str, object]:
    index: dict[str, object] = {}
    for row in _read_jsonl(path):
        d = decomposition_from_dict(row)
        if d.meta.subject_id:
            index[d.meta.subject_id] = d
    return index


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    provider = _build_provider(cfg)
    stamp_time = args.seed is None
    decomps = _index_decompositions(args.decompositions)

    if args.dialogue:
        return _evaluate_dialogues(args, cfg, provider, decomps, stamp_time)

    rows = _read_jsonl(args.responses)
    skipped: list[dict] = []
    failures: list[dict] = []
    items: list[tuple[str, str, str]] = []
    for idx, row in enumerate(rows):
        subject = str(row.get("id", f"line-{idx + 1}"))
        response = row.get("response")
        if not isinstance(response, str) or not response.strip():
            failures.append({"id": subject, "error": "missing or empty 'response' field"})
            continue
        if subject not in decomps:
            skipped.append({"id": subject, "reason": "no decomposition with this id"})
            continue
        items.append((subject, str(row.get("model_tag", "")), response))

    def worker(i: int) -> tuple[str, dict | None, str | None]:
        subject, model_tag, response = items[i]
        try:
            report = evaluate(
                decomps[subject],  # type: ignore[arg-type]
                response,
                provider,
                temperature=cfg.temperature,
                max_tokens=cfg.max_tokens,
                stamp_time=stamp_time,
                subject_id=subject,
                model_tag=model_tag,
            )
            return subject, report_to_dict(report), None
        except _ITEM_ERRORS as exc:
            return subject, None, f"{type(exc).__name__}: {exc}"

    results = _parallel_map(worker, len(items), _parallelism(args, cfg))
    outputs = []
    for subject, payload, error in results:  # type: ignore[misc]
        if error is None:
            outputs.append(payload)
        else:
            failures.append({"id": subject, "error": error})
    _write_jsonl(args.output, outputs)
    _write_manifest(
        args.output,
        {
            "command": "evaluate",
            "written": len(outputs),
            "failures": failures,
            "skipped": skipped,
        },
    )
    _echo(
        args,
        f"evaluate: {len(outputs)} written, {len(failures)} failed, {len(skipped)} skipped",
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def _evaluate_dialogues(
    args: argparse.Namespace,
    cfg: EffectiveConfig,
    provider: Provider,
    decomps: dict[str, object],
    stamp_time: bool,
) -> int:
    loaded = datasets.load_dialogues(args.responses)
    skipped: list[dict] = []
    failures: list[dict] = [
        {"id": f"line-{e.line_no}", "error": e.message} for e in loaded.rejected
    ]
    items = []
    for rec in loaded.records:
        if rec.record_id not in decomps:
            skipped.append({"id": rec.record_id, "reason": "no decomposition with this id"})
            continue
        items.append(rec)

    def worker(i: int) -> tuple[str, dict | None, str | None]:
        rec = items[i]
        try:
            score, reports = evaluate_dialogue(
                decomps[rec.record_id],  # type: ignore[arg-type]
                rec.transcript,
                provider,
                temperature=cfg.temperature,
                max_tokens=cfg.max_tokens,
                stamp_time=stamp_time,
                subject_id=rec.record_id,
                model_tag=rec.model_tag,
            )
            payload = {
                "kind": "dialogue_score",
                "id": rec.record_id,
                "model_tag": rec.model_tag,
                **score.to_json_dict(),
                "reports": [report_to_dict(r) for r in reports],
            }
            return rec.record_id, payload, None
        except _ITEM_ERRORS as exc:
            return rec.record_id, None, f"{type(exc).__name__}: {exc}"

    results = _parallel_map(worker, len(items), _parallelism(args, cfg))
    outputs = []
    for subject, payload, error in results:  # type: ignore[misc]
        if error is None:
            outputs.append(payload)
        else:
            failures.append({"id": subject, "error": error})
    _write_jsonl(args.output, outputs)
    _write_manifest(
        args.output,
        {
            "command": "evaluate --dialogue",
            "written": len(outputs),
            "failures": failures,
            "skipped": skipped,
        },
    )
    _echo(
        args,
        f"evaluate --dialogue: {len(outputs)} written, {len(failures)} failed, "
        f"{len(skipped)} skipped",
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def _load_reports_by_key(path: str) -> dict[tuple[str, str], Fraction]:
    scores: dict[tuple[str, str], Fraction] = {}
    for row in _read_jsonl(path):
        report = report_from_dict(row)
        scores[(report.meta.subject_id, report.meta.model_tag)] = report.uifs
    return scores


def _cmd_validate(args: argparse.Namespace) -> int:
    loaded = datasets.load_benchmark(args.benchmark, strict=args.strict)
    tool_scores = _load_reports_by_key(args.reports)
    comparator_scores = (
        _load_reports_by_key(args.comparator_reports) if args.comparator_reports else {}
    )

    annotated = [r for r in loaded.records if r.annotations]
    if not annotated:
        print("error: benchmark records carry no annotations", file=sys.stderr)
        return EXIT_NO_ANNOTATIONS

    pairs: list[scoring.ValidationPair] = []
    unmatched: list[dict] = []
    for rec in annotated:
        annotator_scores = tuple(
            rec.annotations[k] for k in sorted(rec.annotations)  # type: ignore[index]
        )
        majority = aggregate_human_scores(annotator_scores, args.aggregation)
        for model_tag in sorted(rec.responses):
            key = (rec.record_id, model_tag)
            if key not in tool_scores:
                unmatched.append({"id": rec.record_id, "model_tag": model_tag})
                continue
            pairs.append(
                scoring.ValidationPair(
                    pair_id=f"{rec.record_id}::{model_tag}",
                    annotator_scores=annotator_scores,
                    human_majority=majority,
                    tool_score=tool_scores[key],
                    comparator_score=comparator_scores.get(key),
                    model_tag=model_tag,
                    difficulty=rec.difficulty,
                )
            )
    if not pairs:
        print("error: no (benchmark, report) pairs matched", file=sys.stderr)
        return EXIT_SCHEMA

    summary = scoring.build_validation_summary(pairs, args.disagree_threshold)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(
        _dump(scoring.summary_to_json_dict(summary)) + "\n", encoding="utf-8"
    )
    _write_csv(out_dir / "accuracy_by_group.csv", scoring.group_accuracy_rows(pairs))
    _write_csv(
        out_dir / "error_types.csv", scoring.error_distribution_rows(summary.error_distribution)
    )
    _write_manifest(
        str(out_dir / "summary.json"),
        {
            "command": "validate",
            "pairs": len(pairs),
            "unmatched": unmatched,
            "rejected_lines": [e.message for e in loaded.rejected],
        },
    )

    print(f"pairs: {summary.n_pairs}")
    print(f"accuracy: {float(summary.accuracy):.4f}")
    if summary.pearson_r is not None:
        print(f"pearson r: {summary.pearson_r:.4f} (p = {summary.pearson_p:.4g})")
    if summary.spearman_rho is not None:
        print(f"spearman rho: {summary.spearman_rho:.4f} (p = {summary.spearman_p:.4g})")
    if summary.paired_t is not None:
        print(f"paired t vs comparator: t = {summary.paired_t[0]:.4f} (p = {summary.paired_t[1]:.4g})")
    for note in summary.notes:
        print(f"note: {note}")
    print(scoring.render_table(scoring.group_accuracy_rows(pairs)))
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    rows = _read_jsonl(args.reports)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        print("warning: no reports found; writing empty tables", file=sys.stderr)
        _write_csv(out_dir / "type_scores.csv", scoring.type_matrix_rows({}))
        _write_csv(out_dir / "per_instruction.csv", [["instruction", "model", "uifs"]])
        _write_csv(out_dir / "inter_type_correlation.csv", [["type_a", "type_b", "r", "p", "n"]])
        return EXIT_OK

    reports = [report_from_dict(row) for row in rows]
    tagged = [(r.meta.model_tag or "(untagged)", r) for r in reports]

    matrix = scoring.type_score_matrix(tagged)
    matrix_rows = scoring.type_matrix_rows(matrix)
    _write_csv(out_dir / "type_scores.csv", matrix_rows)

    per_instruction = [["instruction", "model", "uifs"]]
    for r in sorted(reports, key=lambda r: (r.meta.subject_id, r.meta.model_tag)):
        per_instruction.append(
            [r.meta.subject_id or "(unknown)", r.meta.model_tag or "(untagged)", f"{float(r.uifs):.4f}"]
        )
    _write_csv(out_dir / "per_instruction.csv", per_instruction)

    corr = scoring.inter_type_correlation(reports)
    corr_rows = [["type_a", "type_b", "r", "p", "n"]]
    listed = set()
    for (a, b), cell in sorted(corr.cells.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        if (b, a) in listed:
            continue
        listed.add((a, b))
        corr_rows.append([a.value, b.value, f"{cell.r:.4f}", f"{cell.p:.4g}", str(cell.n)])
    _write_csv(out_dir / "inter_type_correlation.csv", corr_rows)

    if args.group_by == "type":
        print(scoring.render_table(corr_rows))
    elif args.group_by == "instruction":
        print(scoring.render_table(per_instruction))
    else:
        print(scoring.render_table(matrix_rows))
    return EXIT_OK


def _echo(args: argparse.Namespace, message: str) -> None:
    if getattr(args, "verbose", False):
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_provider_args(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("provider")
    group.add_argument("--config", help="JSON config file")
    group.add_argument("--provider", choices=["mock", "openai", "anthropic"])
    group.add_argument("--endpoint")
    group.add_argument("--model-id", dest="model_id")
    group.add_argument("--temperature", type=float)
    group.add_argument("--max-tokens", dest="max_tokens", type=int)
    group.add_argument("--retry-attempts", dest="retry_attempts", type=int)
    group.add_argument("--rate-limit-rpm", dest="rate_limit_rpm", type=float)
    group.add_argument("--max-in-flight", dest="max_in_flight", type=int)
    group.add_argument("--cache-dir", dest="cache_dir")
    group.add_argument("--mock-script", dest="mock_script", help="JSON map of prompt digest to response text")
    group.add_argument("--mock-policy", dest="mock_policy", choices=["strict", "default"])
    group.add_argument("--mock-default", dest="mock_default")
    group.add_argument("--kb", help="JSON knowledge base override for the analyzer prompt")


def _add_common_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, help="deterministic mode: omit timestamps from outputs")
    sub.add_argument(
        "--parallel",
        type=int,
        default=None,
        help="concurrent provider calls (default: the provider in-flight cap, else 1)",
    )
    sub.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predeval",
        description="Instruction-following evaluation through typed-predicate decomposition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dec = sub.add_parser("decompose", help="extract typed predicates from instructions")
    p_dec.add_argument("--input", "-i", required=True, help="JSONL of {id, instruction[, mode]}")
    p_dec.add_argument("--output", "-o", required=True, help="JSONL of decompositions")
    p_dec.add_argument("--mode", choices=["single_turn", "dialogue"], default="single_turn")
    _add_provider_args(p_dec)
    _add_common_args(p_dec)
    p_dec.set_defaults(func=_cmd_decompose)

    p_eval = sub.add_parser("evaluate", help="judge responses against decompositions")
    p_eval.add_argument("--decompositions", "-d", required=True, help="JSONL of decompositions")
    p_eval.add_argument(
        "--responses",
        "-r",
        required=True,
        help="JSONL of {id, model_tag, response}, or dialogue records with --dialogue",
    )
    p_eval.add_argument("--output", "-o", required=True, help="JSONL of reports")
    p_eval.add_argument(
        "--dialogue",
        action="store_true",
        help="treat responses as dialogue records; judge each evaluated turn with history",
    )
    _add_provider_args(p_eval)
    _add_common_args(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_val = sub.add_parser("validate", help="compare reports against human annotations")
    p_val.add_argument("--benchmark", "-b", required=True, help="JSONL benchmark with annotations")
    p_val.add_argument("--reports", "-r", required=True, help="JSONL of evaluation reports")
    p_val.add_argument("--out", "-o", required=True, help="output directory")
    p_val.add_argument(
        "--comparator-reports",
        dest="comparator_reports",
        help="JSONL reports from another evaluator for the paired significance test",
    )
    p_val.add_argument(
        "--disagree-threshold",
        dest="disagree_threshold",
        default="0",
        help="|tool - majority| above this counts as a disagreement (exact fraction)",
    )
    p_val.add_argument(
        "--aggregation", choices=["mean", "median"], default="mean",
        help="annotator aggregation rule for the majority score",
    )
    p_val.add_argument("--strict", action="store_true", help="abort on the first malformed line")
    _add_common_args(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_rep = sub.add_parser("report", help="tabulate reports by model, type, or instruction")
    p_rep.add_argument("--reports", "-r", required=True, help="JSONL of evaluation reports")
    p_rep.add_argument("--out", "-o", required=True, help="output directory")
    p_rep.add_argument("--group-by", dest="group_by", choices=["model", "type", "instruction"], default="model")
    _add_common_args(p_rep)
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    if getattr(args, "verbose", False):
        try:
            cfg = _resolve_config(args)
            print(f"effective config: {_dump(cfg.masked())}", file=sys.stderr)
        except UsageError:
            pass
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except datasets.DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
