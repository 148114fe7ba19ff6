"""Compiled-pattern facility shared by the corpus cleaner and the matcher.

The engine is Python's stdlib ``re`` module, which covers the bulk of the
PCRE dialect.  Patterns that use constructs ``re`` does not support raise
``re.error`` at compile time; callers record those rejections rather than
papering over them, so the surviving pattern set is always an explicit,
engine-confirmed subset.

Flag names used throughout the package and their single-letter file codes:

    case_insensitive     i   -> re.IGNORECASE
    dot_matches_newline  s   -> re.DOTALL
    multiline            m   -> re.MULTILINE
    extended             x   -> re.VERBOSE
    unicode              u   -> re.UNICODE (the Python 3 default; accepted
                                for fidelity to corpora that carry it)

``^``/``$`` anchor to the whole value unless an entry carries the
multiline flag.  Note the engine's one PCRE-ism: ``$`` also matches just
before a single trailing newline; column values normally have none.
"""

from __future__ import annotations

import re

FLAG_CODES = {
    "i": "case_insensitive",
    "s": "dot_matches_newline",
    "m": "multiline",
    "x": "extended",
    "u": "unicode",
}

FLAG_NAMES = {name: code for code, name in FLAG_CODES.items()}

_RE_FLAGS = {
    "case_insensitive": re.IGNORECASE,
    "dot_matches_newline": re.DOTALL,
    "multiline": re.MULTILINE,
    "extended": re.VERBOSE,
    "unicode": re.UNICODE,
}


def flags_from_codes(codes) -> frozenset[str]:
    """Translate single-letter file codes ("i", "s", ...) to flag names.

    Unknown codes raise ValueError; corpora are uncurated but their flag
    vocabulary is fixed by the file format.
    """
    names = set()
    for code in codes:
        if code not in FLAG_CODES:
            raise ValueError(f"unknown flag code {code!r}")
        names.add(FLAG_CODES[code])
    return frozenset(names)


def codes_from_flags(flags) -> list[str]:
    """Inverse of flags_from_codes, sorted for stable serialization."""
    return sorted(FLAG_NAMES[name] for name in flags)


def re_flags(flags) -> int:
    """Fold a set of flag names into the engine's flag bitmask."""
    bits = 0
    for name in flags:
        try:
            bits |= _RE_FLAGS[name]
        except KeyError:
            raise ValueError(f"unknown flag name {name!r}") from None
    return bits


def compile_pattern(pattern: str, flags=frozenset()) -> re.Pattern:
    """Compile one pattern under its flags; re.error propagates to the caller."""
    return re.compile(pattern, re_flags(flags))
