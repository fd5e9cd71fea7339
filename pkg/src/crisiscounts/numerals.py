"""Spelled-out cardinal normalization.

Rewrites every maximal spelled-out cardinal in running text to its digit
string ("Twenty-three people" -> "23 people") so that downstream
extraction rules only ever have to recognize digits.  Vague quantifiers
("dozens", "several") are left alone, as are digit tokens, which makes
the rewrite idempotent.
"""

from __future__ import annotations

import re

_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4,
    "five": 5, "six": 6, "seven": 7, "eight": 8, "nine": 9,
}
_TEENS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
_SCALES = {"hundred": 100, "thousand": 1_000, "million": 1_000_000}

# Values above this are left as words.  With "million" as the largest
# supported scale the grammar cannot exceed it, but keep the guard.
CEILING = 999_999_999

_WORD_RE = re.compile(r"[A-Za-z]+")
# Words belong to the same candidate run when separated by whitespace or
# a (possibly space-padded) hyphen.  Anything else ends the run.
_GAP_RE = re.compile(r"\s+|[ \t]*-[ \t]*")

# Digits with internal comma grouping; a trailing comma is punctuation.
_COUNT_RE = re.compile(r"\d(?:[\d,]*\d)?")


def _parse_small(words: list[str], i: int):
    """Parse a value below 100 starting at words[i]; None if absent."""
    if i >= len(words):
        return None
    w = words[i]
    if w in _TEENS:
        return _TEENS[w], i + 1
    if w in _TENS:
        value, j = _TENS[w], i + 1
        if j < len(words) and words[j] in _UNITS and _UNITS[words[j]] > 0:
            return value + _UNITS[words[j]], j + 1
        return value, j
    if w in _UNITS:
        return _UNITS[w], i + 1
    return None


def _parse_group(words: list[str], i: int):
    """Parse a group below 1000 ("three hundred and five")."""
    parsed = _parse_small(words, i)
    if parsed is None:
        return None
    lead, j = parsed
    if j < len(words) and words[j] == "hundred" and 1 <= lead <= 9:
        value, j = lead * 100, j + 1
        k = j
        if k < len(words) and words[k] == "and":
            k += 1
        rest = _parse_small(words, k)
        if rest is not None and 0 < rest[0] < 100:
            value += rest[0]
            j = rest[1]
        return value, j
    return lead, j


def _parse_cardinal(words: list[str], start: int):
    """Longest valid cardinal beginning at words[start].

    Returns (value, end_index) or None.  Handles "a"/"an" only directly
    before a scale word, and requires big scales to descend so that
    separate cardinals ("two thousand" / "three million") never merge.
    """
    i = start
    total = 0
    prev_scale = None
    progressed = False
    while i < len(words):
        j = i
        if words[i] in ("a", "an") and not progressed:
            if i + 1 >= len(words) or words[i + 1] not in _SCALES:
                break
            if words[i + 1] == "hundred":
                group, j = 100, i + 2
                k = j
                if k < len(words) and words[k] == "and":
                    k += 1
                rest = _parse_small(words, k)
                if rest is not None and 0 < rest[0] < 100:
                    group += rest[0]
                    j = rest[1]
            else:
                group, j = 1, i + 1
        else:
            parsed = _parse_group(words, i)
            if parsed is None:
                break
            group, j = parsed
        if j < len(words) and words[j] in ("thousand", "million") and group > 0:
            mult = _SCALES[words[j]]
            if prev_scale is not None and mult >= prev_scale:
                break
            total += group * mult
            prev_scale = mult
            i = j + 1
            progressed = True
            continue
        total += group
        i = j
        progressed = True
        break
    if not progressed:
        return None
    return total, i


def normalize_numerals(text: str) -> str:
    """Replace each maximal spelled-out cardinal with its digit string.

    Characters outside the replaced spans are preserved untouched, the
    rewrite is case-insensitive, and applying it twice is a no-op.
    """
    tokens = list(_WORD_RE.finditer(text))
    # Split tokens into adjacency runs; cardinals never cross run breaks.
    runs: list[list[re.Match]] = []
    for tok in tokens:
        if runs and _GAP_RE.fullmatch(text[runs[-1][-1].end():tok.start()]):
            runs[-1].append(tok)
        else:
            runs.append([tok])

    replacements = []
    for run in runs:
        words = [m.group(0).lower() for m in run]
        i = 0
        while i < len(words):
            parsed = _parse_cardinal(words, i)
            if parsed is None:
                i += 1
                continue
            value, end = parsed
            if value > CEILING:
                i = end
                continue
            replacements.append((run[i].start(), run[end - 1].end(), str(value)))
            i = end

    if not replacements:
        return text
    out = []
    cursor = 0
    for start, end, digits in replacements:
        out.append(text[cursor:start])
        out.append(digits)
        cursor = end
    out.append(text[cursor:])
    return "".join(out)


def parse_count_token(token: str):
    """Integer value of a digit token with optional comma grouping.

    Returns None for anything that is not purely digits and commas,
    including vague quantifiers such as "dozens".
    """
    stripped = token.strip()
    if not stripped or not _COUNT_RE.fullmatch(stripped):
        return None
    return int(stripped.replace(",", ""))


def find_count_tokens(text: str):
    """Yield (value, start, end) for each digit token in reading order."""
    for m in _COUNT_RE.finditer(text):
        yield int(m.group(0).replace(",", "")), m.start(), m.end()
