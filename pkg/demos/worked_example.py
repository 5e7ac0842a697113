"""End-to-end walkthrough on a scripted backend.

A pronoun-conversion instruction is decomposed into four typed requirements;
a candidate rewrite is then judged requirement by requirement. The scripted
provider plays both agent roles deterministically, so this runs offline and
always produces the same report: the format and content requirements pass,
both style requirements fail, and the overall score lands on exactly 1/2.

Run: python3 demos/worked_example.py
"""

from predeval.analyzer import decompose
from predeval.evaluator import evaluate
from predeval.fixtures import worked_example
from predeval.provider import MockProvider


def main() -> None:
    ex = worked_example()
    provider = MockProvider(ex.script())

    print("instruction:")
    print(f"  {ex.instruction}\n")
    print("source sentence:")
    print(f"  {ex.source_sentence}\n")
    print("candidate response:")
    print(f"  {ex.response}\n")

    d = decompose(ex.instruction, provider=provider)
    print("extracted requirements:")
    for p in d.predicates:
        deps = f"  (depends on {', '.join(map(str, p.dependencies))})" if p.dependencies else ""
        print(f"  {p.id}. [{p.type.value:9s}] {p.criterion}{deps}")
    print()

    report = evaluate(d, ex.response, provider)
    print("verdicts:")
    for result in report.per_predicate:
        mark = "satisfied" if result.satisfied else "failed   "
        evidence = f" -- {result.evidence}" if result.evidence else ""
        print(f"  {result.predicate_id}. {mark}{evidence}")
    print()
    print(f"overall score: {report.uifs} ({float(report.uifs):.2f})")
    for t, score in report.type_scores.items():
        print(f"  {t.value:9s} {float(score):.2f}")


if __name__ == "__main__":
    main()
