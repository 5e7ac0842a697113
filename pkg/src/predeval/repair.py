"""Tolerant extraction and repair of JSON emitted by language models.

Models wrap payloads in prose and code fences, use curly quotes or Python
literal syntax, leave trailing commas, and truncate output mid-structure.
:func:`extract_candidates` finds the structural regions in such text;
:func:`repair_output` runs a fixed, ordered pipeline over them:

  1. keep the first structural region, dropping surrounding prose/fences
  2. normalize curly quotes acting as string delimiters to ASCII
  3. rewrite single-quoted strings as double-quoted
  4. replace bareword ``True``/``False``/``None`` with JSON literals
  5. remove trailing commas before ``}`` or ``]``
  6. conservatively close truncated strings, arrays, and objects

Every stage scans character by character, tracking string state, so content
inside string literals is never rewritten. The pipeline is idempotent:
``repair_output(repair_output(x)) == repair_output(x)`` for any input.
"""

from __future__ import annotations

import json

_OPENERS = {"{": "}", "[": "]"}
_CLOSERS = {"}", "]"}
_SMART_DOUBLE = "“”„″"
_SMART_SINGLE = "‘’‚′"
_PY_LITERALS = {"True": "true", "False": "false", "None": "null"}
_JSON_WORDS = ("true", "false", "null")

_MAX_CANDIDATES = 20


def _scan_string(text: str, i: int, quote: str) -> tuple[int, bool]:
    """Scan the string starting at ``text[i] == quote``.

    Returns ``(index_past_string, terminated)``; when the closing quote never
    arrives the index is ``len(text)`` and ``terminated`` is False.
    """
    i += 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == quote:
            return i + 1, True
        i += 1
    return n, False


def _skip_string(text: str, i: int, quote: str) -> int:
    return _scan_string(text, i, quote)[0]


def extract_candidates(text: str) -> list[str]:
    """All top-level ``{...}``/``[...]`` regions in ``text``, left to right.

    Inside a region, both double- and single-quoted strings shield their
    content from bracket matching. A final region whose closer never arrives
    is returned as-is (opener through end of text) so a later stage can
    close it.
    """
    candidates: list[str] = []
    i, n = 0, len(text)
    while i < n and len(candidates) < _MAX_CANDIDATES:
        c = text[i]
        if c not in _OPENERS:
            i += 1
            continue
        start = i
        stack = [c]
        i += 1
        while i < n and stack:
            ch = text[i]
            if ch in ('"', "'"):
                i = _skip_string(text, i, ch)
                continue
            if ch in _OPENERS:
                stack.append(ch)
            elif ch in _CLOSERS:
                # A mismatched closer is tolerated: it still pops one level.
                stack.pop()
            i += 1
        candidates.append(text[start:i])
        if stack:
            break  # unterminated region consumed the rest of the text
    return candidates


def _normalize_smart_quotes(text: str) -> str:
    """Replace curly quotes that act as string delimiters with ASCII ones.

    Curly quotes inside properly delimited strings are content and stay
    untouched.
    """
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in ('"', "'"):
            end = _skip_string(text, i, c)
            out.append(text[i:end])
            i = end
            continue
        if c in _SMART_DOUBLE or c in _SMART_SINGLE:
            ascii_quote = '"' if c in _SMART_DOUBLE else "'"
            closers = (_SMART_DOUBLE if c in _SMART_DOUBLE else _SMART_SINGLE) + ascii_quote
            out.append(ascii_quote)
            i += 1
            while i < n:
                ch = text[i]
                if ch == "\\":
                    out.append(text[i : i + 2])
                    i += 2
                    continue
                if ch in closers:
                    out.append(ascii_quote)
                    i += 1
                    break
                out.append(ch)
                i += 1
            continue
        out.append(c)
        i += 1
    return "".join(out)


def _convert_single_quoted(text: str) -> str:
    """Rewrite single-quoted strings to double-quoted, fixing escapes."""
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == '"':
            end = _skip_string(text, i, c)
            out.append(text[i:end])
            i = end
            continue
        if c == "'":
            out.append('"')
            i += 1
            while i < n:
                ch = text[i]
                if ch == "\\" and i + 1 < n:
                    nxt = text[i + 1]
                    out.append("'" if nxt == "'" else text[i : i + 2])
                    i += 2
                    continue
                if ch == "'":
                    out.append('"')
                    i += 1
                    break
                out.append('\\"' if ch == '"' else ch)
                i += 1
            continue
        out.append(c)
        i += 1
    return "".join(out)


def _replace_python_literals(text: str) -> str:
    """Map ``True``/``False``/``None`` outside strings to JSON spellings."""
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in ('"', "'"):
            end = _skip_string(text, i, c)
            out.append(text[i:end])
            i = end
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            out.append(_PY_LITERALS.get(word, word))
            i = j
            continue
        out.append(c)
        i += 1
    return "".join(out)


def _remove_trailing_commas(text: str) -> str:
    """Drop any comma that is followed (modulo whitespace) by ``}`` or ``]``."""
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in ('"', "'"):
            end = _skip_string(text, i, c)
            out.append(text[i:end])
            i = end
            continue
        if c == ",":
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j < n and text[j] in _CLOSERS:
                i += 1
                continue
        out.append(c)
        i += 1
    return "".join(out)


def _close_structures(text: str) -> str:
    """Terminate a dangling string, drop a dangling comma, complete a partial
    literal, and append whatever closers the bracket stack still needs."""
    stack: list[str] = []
    in_string = False
    quote = '"'
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in ('"', "'"):
            end, terminated = _scan_string(text, i, c)
            if not terminated:
                in_string = True
                quote = c
            i = end
            continue
        if c in _OPENERS:
            stack.append(c)
        elif c in _CLOSERS and stack:
            stack.pop()
        i += 1

    if not stack and not in_string:
        return text

    repaired = text
    if in_string:
        repaired += quote
    repaired = repaired.rstrip()
    while repaired.endswith(","):
        repaired = repaired[:-1].rstrip()
    if repaired.endswith(":"):
        repaired += " null"
    else:
        # Complete a truncated bareword literal such as "tru" or "fal".
        j = len(repaired)
        while j > 0 and repaired[j - 1].isalpha():
            j -= 1
        tail = repaired[j:]
        if tail:
            for word in _JSON_WORDS:
                if word.startswith(tail) and tail != word:
                    repaired = repaired[:j] + word
                    break
    repaired += "".join(_OPENERS[c] for c in reversed(stack))
    return repaired


def _pipeline(candidate: str) -> str:
    fixed = _normalize_smart_quotes(candidate)
    fixed = _convert_single_quoted(fixed)
    fixed = _replace_python_literals(fixed)
    fixed = _remove_trailing_commas(fixed)
    return _close_structures(fixed)


def _parses(text: str) -> bool:
    try:
        json.loads(text)
        return True
    except (ValueError, TypeError):
        return False


def repair_output(raw: str) -> str:
    """Best-effort repair of a model payload toward parseable JSON.

    Already-valid input comes back unchanged (after outer whitespace
    stripping). Otherwise each structural region is run through the repair
    pipeline and the first one that parses wins; if none does, the repaired
    first region is returned so the caller's re-parse reports a precise
    diagnosis on stable text.
    """
    stripped = raw.strip()
    if _parses(stripped):
        return stripped
    first_repair: str | None = None
    for candidate in extract_candidates(stripped):
        fixed = _pipeline(candidate)
        if first_repair is None:
            first_repair = fixed
        if _parses(fixed):
            return fixed
    return first_repair if first_repair is not None else stripped
