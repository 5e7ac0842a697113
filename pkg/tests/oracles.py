"""Independent reference implementations used to check the package.

Everything here is deliberately naive: exhaustive permutation search for
order existence, exact Fraction arithmetic for score math, and 60-digit
mpmath evaluation for the statistics. None of it shares code with the
package paths it checks.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 60


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


def order_exists(n_nodes: int, edges: set[tuple[int, int]]) -> bool:
    """Whether some permutation places every node after all its dependencies.

    ``edges`` holds (node, dep) pairs meaning ``node`` depends on ``dep``.
    Brute force over all permutations; fine for n <= 6.
    """
    nodes = list(range(1, n_nodes + 1))
    for perm in itertools.permutations(nodes):
        pos = {node: i for i, node in enumerate(perm)}
        if all(pos[dep] < pos[node] for node, dep in edges):
            return True
    return False


# ---------------------------------------------------------------------------
# Exact score arithmetic
# ---------------------------------------------------------------------------


def brute_scores(type_labels: list[str], satisfied: list[bool]):
    """(overall, per-type) satisfied fractions via direct counting."""
    total = len(type_labels)
    overall = Fraction(sum(satisfied), total)
    per_type: dict[str, Fraction] = {}
    for label in set(type_labels):
        idx = [i for i, t in enumerate(type_labels) if t == label]
        per_type[label] = Fraction(sum(1 for i in idx if satisfied[i]), len(idx))
    return overall, per_type


def exact_mean(values) -> Fraction:
    fracs = [Fraction(v) for v in values]
    return sum(fracs, Fraction(0)) / len(fracs)


def average_ranks_exact(values) -> list[Fraction]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = Fraction(i + j + 2, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


# ---------------------------------------------------------------------------
# Extended-precision statistics
# ---------------------------------------------------------------------------


def t_pvalue_ref(t: mp.mpf, df: int) -> mp.mpf:
    if t == 0:
        return mp.mpf(1)
    x = mp.mpf(df) / (df + t * t)
    return mp.betainc(mp.mpf(df) / 2, mp.mpf(1) / 2, 0, x, regularized=True)


def pearson_ref(x, y) -> tuple[float, float]:
    xs = [mp.mpf(v) for v in x]
    ys = [mp.mpf(v) for v in y]
    n = len(xs)
    mx = mp.fsum(xs) / n
    my = mp.fsum(ys) / n
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    sxx = mp.fsum(a * a for a in dx)
    syy = mp.fsum(b * b for b in dy)
    sxy = mp.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / mp.sqrt(sxx * syy)
    if abs(r) >= 1:
        return float(r), 0.0
    df = n - 2
    t = r * mp.sqrt(mp.mpf(df) / (1 - r * r))
    return float(r), float(t_pvalue_ref(t, df))


def spearman_ref(x, y) -> tuple[float, float]:
    rx = [float(v) for v in average_ranks_exact(x)]
    ry = [float(v) for v in average_ranks_exact(y)]
    return pearson_ref(rx, ry)


def paired_t_ref(x, y) -> tuple[float, float]:
    diffs = [mp.mpf(a) - mp.mpf(b) for a, b in zip(x, y)]
    n = len(diffs)
    md = mp.fsum(diffs) / n
    var = mp.fsum((d - md) ** 2 for d in diffs) / (n - 1)
    if var == 0:
        return float(mp.inf if md > 0 else -mp.inf), 0.0
    t = md / mp.sqrt(var / n)
    return float(t), float(t_pvalue_ref(t, n - 1))


# ---------------------------------------------------------------------------
# Payload generation and mutation
# ---------------------------------------------------------------------------

_CRITERIA = (
    "Answers in French",
    "Uses the user's preferred name",
    "Wraps the output in {curly} braces",
    'Quotes the phrase "exactly once"',
    "Keeps the reply under 30 words",
    "Lists pros, then cons",
)
_TYPES = ("content", "format", "style", "logical", "numerical")


def random_valid_payload(rng: random.Random) -> str:
    entries = [
        {
            "id": i + 1,
            "instruction": f"{rng.choice(_CRITERIA)} #{rng.randint(0, 99)}",
            "type": rng.choice(_TYPES),
            "parent_id": None,
            "dependencies": [],
            "verifiable": rng.random() < 0.5,
        }
        for i in range(rng.randint(1, 4))
    ]
    return json.dumps({"atomic_instructions": entries}, indent=rng.choice((None, 2)))


def mutate_payload(valid: str, rng: random.Random) -> str:
    """Apply 1-3 random corruptions of the kinds models actually produce."""
    text = valid
    for op in rng.sample(range(9), k=rng.randint(1, 3)):
        if op == 0:
            text = f"```json\n{text}\n```"
        elif op == 1:
            text = "Here is the decomposition:\n" + text
        elif op == 2:
            text = text + "\nLet me know if you need changes."
        elif op == 3:
            text = text.replace('"', "'")
        elif op == 4:
            text = (
                text.replace("true", "True").replace("false", "False").replace("null", "None")
            )
        elif op == 5:
            cut = rng.randint(max(1, len(text) // 2), len(text))
            text = text[:cut]
        elif op == 6:
            text = re.sub(r"([\]\}])", r",\1", text, count=1)
        elif op == 7:
            text = text.replace('"', "“", 1)
            text = text.replace('"', "”", 1)
        elif op == 8:
            text = text + text
    return text
