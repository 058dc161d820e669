"""Lexical helpers for looking at cell source without parsing it.

Notebook cells are frequently unparseable mid-edit (that is half the
point of logging them), so everything here works on a character scan:
string literals are masked out, comments are recognized per line, and
identifiers come from a plain token regex.  Deliberately no ast.
"""

from __future__ import annotations

import keyword
import re

KEYWORDS = frozenset(keyword.kwlist)

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_QUOTES = ("'''", '"""', "'", '"')


def mask_strings(source: str) -> str:
    """Blank out string-literal contents, preserving length and newlines.

    Quote characters stay so the line shape survives; everything between
    them becomes spaces.  Handles triple quotes, escapes, and prefixed
    literals (r'', f'', b'') well enough for line classification; an
    unterminated literal masks to the end of input rather than failing.
    """
    out = list(source)
    i = 0
    n = len(source)
    in_string: str | None = None
    while i < n:
        ch = source[i]
        if in_string is not None:
            if source.startswith(in_string, i):
                i += len(in_string)
                in_string = None
                continue
            if ch == "\\" and len(in_string) == 1 and i + 1 < n:
                out[i] = " "
                if source[i + 1] != "\n":
                    out[i + 1] = " "
                i += 2
                continue
            if ch != "\n":
                out[i] = " "
            i += 1
            continue
        if ch == "#":
            # Comment runs to end of line; leave it for line classifiers.
            end = source.find("\n", i)
            i = n if end == -1 else end
            continue
        for quote in _QUOTES:
            if source.startswith(quote, i):
                in_string = quote
                i += len(quote)
                break
        else:
            i += 1
    return "".join(out)


def classify_lines(source: str) -> tuple[list[str], list[str]]:
    """Split masked source lines into (code_lines, comment_lines).

    Blank lines are dropped.  A code line arrives with its inline comment
    removed.  Comments are recognized on the masked text, so a '#' inside
    a string literal never counts.
    """
    code: list[str] = []
    comments: list[str] = []
    masked = mask_strings(source)
    raw_lines = source.split("\n")
    for raw, m in zip(raw_lines, masked.split("\n")):
        stripped = m.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append(raw)
            continue
        cut = m.find("#")
        code.append((raw[:cut] if cut != -1 else raw).rstrip())
    return code, comments


def identifiers(source: str) -> set[str]:
    """Distinct identifier tokens, keywords excluded, strings/comments masked."""
    masked = mask_strings(source)
    lines = []
    for line in masked.split("\n"):
        cut = line.find("#")
        lines.append(line[:cut] if cut != -1 else line)
    tokens = set(IDENTIFIER_RE.findall("\n".join(lines)))
    return {t for t in tokens if t not in KEYWORDS}


_AUGMENTED = ("+=", "-=", "*=", "/=", "//=", "%=", "**=", "&=", "|=", "^=", ">>=", "<<=", "@=")


def has_assignment(masked_line: str) -> bool:
    """True when the (masked) line binds a name at bracket depth zero.

    Covers plain ``=``, augmented assignment, and the walrus operator;
    comparison operators and keyword arguments inside calls do not count.
    """
    depth = 0
    i = 0
    line = masked_line
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        elif ch == "=":
            nxt = line[i + 1] if i + 1 < n else ""
            prev = line[i - 1] if i > 0 else ""
            if nxt == "=" or prev in ("=", "!", "<", ">"):
                i += 2 if nxt == "=" else 1
                continue
            if prev == ":":  # walrus — a binding at any depth
                return True
            for op in _AUGMENTED:
                if line.startswith(op, i - len(op) + 1):
                    if depth == 0:
                        return True
                    break
            else:
                if depth == 0:
                    return True
        i += 1
    return False


def normalize_whitespace(source: str) -> str:
    """Collapse all whitespace away, for format-only-change checks."""
    return "".join(source.split())
