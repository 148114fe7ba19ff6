"""Load, validate, filter, and deduplicate an uncurated regex corpus.

Uncurated collections of user-authored regular expressions are full of
junk: one-character patterns, multi-kilobyte monsters, syntax errors, and
degenerate expressions like ``.`` or ``.*`` that match any non-empty
string and therefore carry no signal.  This module turns such a dump into
a clean, ordered corpus whose entry order defines the downstream feature
layout.

Corpus JSONL format, one object per line::

    {"id": str, "pattern": str, "dialect": str, "flags": ["i", ...], "source": str}

Flags use the single-letter codes "i", "s", "m", "x", "u" (see engine.py).
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .engine import codes_from_flags, compile_pattern, flags_from_codes
from .errors import DuplicateIdError, NoRecordsError

log = logging.getLogger(__name__)

# Degeneracy is defined operationally: a pattern is degenerate iff it finds a
# match (unanchored search) in every one of these probe strings.  The set is
# versioned because changing it changes which patterns get dropped.
PROBES_VERSION = "1"
DEFAULT_PROBES: tuple[str, ...] = (
    "0",
    "42",
    "3.14159",
    "1999-12-31",
    "2020-01-01",
    "hello world",
    "Hello World",
    "UPPERCASE",
    "user@example.com",
    "https://example.com/path?q=1",
    "UTC+05:00",
    "K-5",
    "978-0-3064-0615-7",
    "  padded with spaces  ",
    "punctuation!?:;,.",
    "line1\nline2",
)


@dataclass(frozen=True)
class RegexEntry:
    """One uncurated pattern with dialect, flags, and provenance."""

    id: str
    pattern: str
    dialect: str
    flags: frozenset[str] = frozenset()
    source: str = ""

    def __post_init__(self):
        if not self.pattern:
            raise ValueError(f"entry {self.id!r}: pattern is empty")


@dataclass(frozen=True)
class Corpus:
    """Ordered list of entries; order defines downstream feature indices."""

    entries: tuple[RegexEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class FilterPolicy:
    """What the cleaner drops.

    Defaults: patterns of length 4 or less are unlikely to mean anything,
    multi-thousand-character patterns are almost certainly noise, and only
    the PCRE dialect is kept.
    """

    min_pattern_length: int = 5
    max_pattern_length: int = 1000
    allowed_dialects: frozenset[str] = frozenset({"pcre"})
    degeneracy_probes: tuple[str, ...] = DEFAULT_PROBES
    dedupe: bool = True

    def __post_init__(self):
        if not (0 < self.min_pattern_length <= self.max_pattern_length):
            raise ValueError("need 0 < min_pattern_length <= max_pattern_length")
        if not any(self.degeneracy_probes):
            raise ValueError("degeneracy_probes needs at least one non-empty string")


@dataclass
class CorpusStats:
    """Bookkeeping for one filter_corpus run; totals always balance."""

    total: int = 0
    kept: int = 0
    dropped_length: int = 0
    dropped_dialect: int = 0
    dropped_duplicate: int = 0
    dropped_degenerate: int = 0

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "dropped_length": self.dropped_length,
            "dropped_dialect": self.dropped_dialect,
            "dropped_duplicate": self.dropped_duplicate,
            "dropped_degenerate": self.dropped_degenerate,
        }


def _entry_from_record(record: dict) -> RegexEntry:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    missing = [k for k in ("id", "pattern") if not record.get(k)]
    if missing:
        raise ValueError(f"missing field(s) {', '.join(missing)}")
    return RegexEntry(
        id=str(record["id"]),
        pattern=str(record["pattern"]),
        dialect=str(record.get("dialect", "pcre")),
        flags=flags_from_codes(record.get("flags", [])),
        source=str(record.get("source", "")),
    )


def _load_jsonl(path: Path) -> list[RegexEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entries.append(_entry_from_record(record))
            except (json.JSONDecodeError, ValueError) as exc:
                log.warning("%s line %d: %s; skipped", path, lineno, exc)
    return entries


# regex101 offline exports are a JSON array of saved-expression objects.
# Only these fields have a RegexEntry mapping; everything else is packed
# into `source` so no provenance is lost.
_R101_ID_KEYS = ("permalinkFragment", "fragment", "id")


def _entry_from_regex101(record: dict) -> RegexEntry:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    entry_id = next((str(record[k]) for k in _R101_ID_KEYS if record.get(k)), None)
    if entry_id is None:
        raise ValueError("no id field (permalinkFragment/fragment/id)")
    pattern = record.get("regex") or record.get("pattern")
    if not pattern:
        raise ValueError("missing regex")
    dialect = str(record.get("flavor", record.get("dialect", "pcre"))).lower()
    flag_str = record.get("flags") or ""
    # 'g' (global) affects iteration, not compilation; drop it silently.
    flags = flags_from_codes(c for c in flag_str if c in "ismxu")
    mapped = set(_R101_ID_KEYS) | {"regex", "pattern", "flavor", "dialect", "flags"}
    extras = {k: v for k, v in record.items() if k not in mapped}
    source = "regex101:" + json.dumps(extras, sort_keys=True, ensure_ascii=False)
    return RegexEntry(id=entry_id, pattern=str(pattern), dialect=dialect,
                      flags=flags, source=source)


def _load_regex101_export(path: Path) -> list[RegexEntry]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise NoRecordsError(f"{path}: regex101 export must be a JSON array")
    entries = []
    for index, record in enumerate(data):
        try:
            entries.append(_entry_from_regex101(record))
        except ValueError as exc:
            log.warning("%s entry %d: %s; skipped", path, index, exc)
    return entries


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Read a corpus file; malformed records are logged and skipped.

    Args:
        path: corpus file.
        format: "jsonl" (native format above) or "regex101_export"
            (offline JSON-array export of saved expressions).

    Raises:
        DuplicateIdError: two records share an id.
        NoRecordsError: nothing parseable in the file.
    """
    path = Path(path)
    if format == "jsonl":
        entries = _load_jsonl(path)
    elif format == "regex101_export":
        entries = _load_regex101_export(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    if not entries:
        raise NoRecordsError(f"{path}: no parseable records")
    seen: set[str] = set()
    for entry in entries:
        if entry.id in seen:
            raise DuplicateIdError(entry.id)
        seen.add(entry.id)
    return Corpus(entries=tuple(entries))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the native JSONL format (the exact bytes fingerprints hash)."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in corpus:
            fh.write(_entry_line(entry) + "\n")


def _entry_line(entry: RegexEntry) -> str:
    return json.dumps(
        {
            "id": entry.id,
            "pattern": entry.pattern,
            "dialect": entry.dialect,
            "flags": codes_from_flags(entry.flags),
            "source": entry.source,
        },
        sort_keys=True,
        ensure_ascii=False,
    )


def corpus_fingerprint(corpus: Corpus) -> str:
    """Content hash binding feature matrices and models to this exact
    pattern set and order."""
    digest = hashlib.sha256()
    for entry in corpus:
        digest.update(_entry_line(entry).encode("utf-8"))
        digest.update(b"\n")
    return "sha256:" + digest.hexdigest()


def detect_degenerate(
    entry: RegexEntry,
    probes: Iterable[str] = DEFAULT_PROBES,
    compile_fn: Callable[[str, frozenset], re.Pattern] = compile_pattern,
) -> bool:
    """True iff the pattern finds a match in every non-empty probe string.

    Such patterns (".", ".*", and friends) match any non-empty string and
    are useless as features.  Probing is engine-consistent and catches
    flag interactions that static pattern inspection would miss; the probe
    set is versioned (PROBES_VERSION) because results depend on it.

    The entry must compile; callers that cannot guarantee that should have
    dropped it already.
    """
    compiled = compile_fn(entry.pattern, entry.flags)
    return all(compiled.search(p) is not None for p in probes if p)


def filter_corpus(
    corpus: Corpus,
    policy: FilterPolicy = FilterPolicy(),
    compile_fn: Callable[[str, frozenset], re.Pattern] = compile_pattern,
) -> tuple[Corpus, CorpusStats]:
    """Apply the policy; kept entries preserve input order.

    Each drop is attributed to exactly one reason, tested in fixed order:
    dialect -> length -> duplicate -> degenerate.  Deduplication is by
    exact pattern text after trimming leading/trailing whitespace
    (semantic regex equivalence is undecidable and not attempted).
    Entries that fail to compile cannot be probed for degeneracy and are
    kept; the matcher records them as rejected at compile time.
    """
    stats = CorpusStats(total=len(corpus))
    kept: list[RegexEntry] = []
    seen_patterns: set[str] = set()
    for entry in corpus:
        if entry.dialect not in policy.allowed_dialects:
            stats.dropped_dialect += 1
            continue
        if not (policy.min_pattern_length <= len(entry.pattern) <= policy.max_pattern_length):
            stats.dropped_length += 1
            continue
        trimmed = entry.pattern.strip()
        if policy.dedupe and trimmed in seen_patterns:
            stats.dropped_duplicate += 1
            continue
        try:
            compiled_ok = compile_fn(entry.pattern, entry.flags) is not None
        except re.error:
            compiled_ok = False
        if compiled_ok and detect_degenerate(entry, policy.degeneracy_probes, compile_fn):
            stats.dropped_degenerate += 1
            continue
        seen_patterns.add(trimmed)
        kept.append(entry)
        stats.kept += 1
    return Corpus(entries=tuple(kept)), stats
