"""Compile a filtered corpus into an immutable multi-pattern set and turn
columns of string values into match-fraction feature vectors.

Feature i of a column is the fraction of its values in which pattern i
finds at least one match (unanchored search; patterns opt into anchoring
with ``^``/``$``).  The pattern set is ordered and immutable, so the
feature layout is fixed and fingerprinted: models trained on one layout
refuse matrices from another.

Reproducibility over speed: instead of wall-clock timeouts the matcher
enforces structural limits only -- a per-pattern source-complexity cap at
compile time and a per-value length cap (overflow truncated and logged).
The stdlib engine exposes no step budget, so the per-(pattern, value)
timeout counter required by the interchange format is always zero here.

External formats:
  - feature matrix CSV: header ``sample_id,<pattern_id_0>,...``, fractions
    printed with 9 digits after the point;
  - sidecar metadata JSON next to the CSV (``<stem>.meta.json``):
    ``{"corpus_fingerprint": str, "pattern_ids": [...], "timeouts": int}``.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, corpus_fingerprint
from .engine import compile_pattern
from .errors import (
    AllPatternsRejectedError,
    EmptyColumnError,
    EmptyCorpusError,
    EmptyDatasetError,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchOptions:
    """Structural limits and the optional literal prefilter toggle."""

    max_value_length: int = 4096
    max_pattern_complexity: int = 2000  # source chars; compiled size is linear in it
    literal_prefilter: bool = True

    def __post_init__(self):
        if self.max_value_length < 1 or self.max_pattern_complexity < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class CompiledPattern:
    index: int
    entry_id: str
    regex: re.Pattern
    literal: str | None  # substring every match must contain; None = always try


@dataclass(frozen=True)
class CompiledPatternSet:
    """Ordered, immutable pattern set defining the feature-vector layout."""

    patterns: tuple[CompiledPattern, ...]
    rejected: tuple[tuple[str, str], ...]  # (entry id, engine reason)
    corpus_fingerprint: str
    options: MatchOptions

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def pattern_ids(self) -> tuple[str, ...]:
        return tuple(p.entry_id for p in self.patterns)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (d,) match fractions, each matched_count/column_size
    column_size: int


@dataclass(eq=False)
class FeatureMatrix:
    values: np.ndarray  # (n, d) float64
    sample_ids: tuple[str, ...]
    pattern_ids: tuple[str, ...]
    corpus_fingerprint: str
    column_sizes: tuple[int, ...] | None = None  # None when loaded from CSV
    truncations: int = 0
    timeouts: int = 0  # engine has no step budget; kept for the sidecar format


def compile_set(corpus: Corpus, options: MatchOptions = MatchOptions()) -> CompiledPatternSet:
    """Compile every corpus entry or record why it was rejected.

    Surviving patterns get feature indices 0..d-1 in corpus order.  An
    entry is rejected when the engine refuses it or when its source
    exceeds the complexity cap; both are deterministic and logged.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot compile an empty corpus")
    patterns: list[CompiledPattern] = []
    rejected: list[tuple[str, str]] = []
    for entry in corpus:
        if len(entry.pattern) > options.max_pattern_complexity:
            reason = (
                f"complexity cap: {len(entry.pattern)} chars "
                f"> {options.max_pattern_complexity}"
            )
            rejected.append((entry.id, reason))
            log.info("rejected %s: %s", entry.id, reason)
            continue
        try:
            regex = compile_pattern(entry.pattern, entry.flags)
        except re.error as exc:
            rejected.append((entry.id, str(exc)))
            log.info("rejected %s: %s", entry.id, exc)
            continue
        literal = required_literal(entry.pattern, entry.flags)
        patterns.append(
            CompiledPattern(index=len(patterns), entry_id=entry.id,
                            regex=regex, literal=literal)
        )
    if not patterns:
        raise AllPatternsRejectedError(f"all {len(corpus)} patterns rejected")
    return CompiledPatternSet(
        patterns=tuple(patterns),
        rejected=tuple(rejected),
        corpus_fingerprint=corpus_fingerprint(corpus),
        options=options,
    )


def _subject(value: str, limit: int) -> str:
    if len(value) > limit:
        log.warning("value of %d chars truncated to %d for matching", len(value), limit)
        return value[:limit]
    return value


def match_value(pset: CompiledPatternSet, value: str, prefilter: bool | None = None) -> set[int]:
    """Feature indices whose pattern finds a match anywhere in the value.

    The empty string is a legal value (patterns that accept the empty
    match, like ``.*``, do match it).  `prefilter` overrides the option
    on the set; the prefilter is semantics-preserving either way.
    """
    use_prefilter = pset.options.literal_prefilter if prefilter is None else prefilter
    subject = _subject(value, pset.options.max_value_length)
    hits = set()
    for cp in pset.patterns:
        if use_prefilter and cp.literal is not None and cp.literal not in subject:
            continue
        if cp.regex.search(subject) is not None:
            hits.add(cp.index)
    return hits


def extract_features(
    pset: CompiledPatternSet, column: list[str], prefilter: bool | None = None
) -> FeatureVector:
    """Match fractions for one column; duplicates in the column each count."""
    if not column:
        raise EmptyColumnError()
    counts = np.zeros(len(pset), dtype=np.int64)
    for value in column:
        for index in match_value(pset, value, prefilter):
            counts[index] += 1
    return FeatureVector(values=counts / float(len(column)), column_size=len(column))


def extract_matrix(
    pset: CompiledPatternSet,
    dataset,
    workers: int = 1,
    prefilter: bool | None = None,
) -> FeatureMatrix:
    """One feature row per dataset column, in dataset order.

    Output is identical for any `workers` value: rows are independent and
    collected in input order regardless of scheduling.
    """
    if len(dataset.samples) == 0:
        raise EmptyDatasetError("dataset has no samples")
    for sample in dataset.samples:
        if not sample.values:
            raise EmptyColumnError(sample.sample_id)

    def one(sample) -> FeatureVector:
        return extract_features(pset, list(sample.values), prefilter)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors = list(pool.map(one, dataset.samples))
    else:
        vectors = [one(s) for s in dataset.samples]
    limit = pset.options.max_value_length
    truncations = sum(
        1 for s in dataset.samples for v in s.values if len(v) > limit
    )
    return FeatureMatrix(
        values=np.stack([v.values for v in vectors]),
        sample_ids=tuple(s.sample_id for s in dataset.samples),
        pattern_ids=pset.pattern_ids,
        corpus_fingerprint=pset.corpus_fingerprint,
        column_sizes=tuple(v.column_size for v in vectors),
        truncations=truncations,
    )


# --- literal prefilter -----------------------------------------------------
#
# required_literal() finds a substring that every match of a pattern must
# contain, scanning the pattern source conservatively: anything it does not
# fully understand makes it give up (return None) rather than guess.  The
# prefilter may then skip a pattern whenever its literal is absent from the
# subject, which can never change results -- the guarantee the matrix
# equality tests pin down.

_CTRL_ESCAPES = {"n": "\n", "r": "\r", "t": "\t", "f": "\f", "v": "\v"}

# flag-setting group prefixes like (?i) or (?s-m: change semantics globally
# or for a scope; simplest sound move is to skip such patterns entirely
_INLINE_FLAGS = re.compile(r"\(\?[a-zA-Z]*-?[a-zA-Z]+[):]")


def _quantifier_at(pattern: str, i: int) -> tuple[int, int] | None:
    """Parse a quantifier at i; returns (min_count, end_index) or None."""
    n = len(pattern)
    if i >= n:
        return None
    c = pattern[i]
    if c in "*+?":
        lo = 1 if c == "+" else 0
        end = i + 1
    elif c == "{":
        close = pattern.find("}", i)
        if close == -1:
            return None
        body = pattern[i + 1 : close]
        m = re.fullmatch(r"(\d+)|(\d*),(\d*)", body)
        if m is None:
            return None  # the engine treats a malformed {...} as literal text
        lo = int(m.group(1) or m.group(2) or 0)
        end = close + 1
    else:
        return None
    if end < n and pattern[end] in "?+":  # lazy / possessive suffix
        end += 1
    return lo, end


def _skip_class(pattern: str, i: int) -> int | None:
    """Index just past the ']' closing the class opened at i, or None."""
    j = i + 1
    if j < len(pattern) and pattern[j] == "^":
        j += 1
    if j < len(pattern) and pattern[j] == "]":
        j += 1  # leading ] is a literal member
    while j < len(pattern):
        c = pattern[j]
        if c == "\\":
            j += 2
        elif c == "]":
            return j + 1
        else:
            j += 1
    return None


def required_literal(pattern: str, flags=frozenset()) -> str | None:
    """A substring every match of `pattern` must contain, or None.

    Only literal runs at nesting depth 0 are considered; groups, classes,
    dots and zero-min quantifiers break runs, top-level alternation or any
    construct with case/parse implications (i or x flags, inline flags,
    exotic escapes) aborts.  Returns the longest run of length >= 2.
    """
    if "case_insensitive" in flags or "extended" in flags:
        return None
    if _INLINE_FLAGS.search(pattern):
        return None
    runs: list[str] = []
    cur: list[str] = []

    def end_run():
        if cur:
            runs.append("".join(cur))
            cur.clear()

    def add(ch: str, next_i: int) -> int:
        """Append a literal char, honoring a quantifier right after it."""
        q = _quantifier_at(pattern, next_i)
        if q is None:
            cur.append(ch)
            return next_i
        if q[0] >= 1:
            # the first copy ends the current run; the last copy abuts
            # whatever follows, so it also seeds the next run
            cur.append(ch)
            end_run()
            cur.append(ch)
        else:
            end_run()
        return q[1]

    i, n = 0, len(pattern)
    depth = 0
    while i < n:
        c = pattern[i]
        if c == "\\":
            if i + 1 >= n:
                return None
            esc = pattern[i + 1]
            j = i + 2
            if esc.isdigit():
                return None  # backreference/octal ambiguity: give up
            if esc in "xuUN":
                return None  # coded character escapes: not worth decoding
            if depth > 0:
                i = j
                continue
            if esc in _CTRL_ESCAPES:
                i = add(_CTRL_ESCAPES[esc], j)
            elif esc.isalpha():
                # \d, \w, \s, \b, \A, \Z, ...: classes or assertions
                end_run()
                q = _quantifier_at(pattern, j)
                i = q[1] if q else j
            else:
                i = add(esc, j)  # escaped metachar is a literal
            continue
        if depth > 0:
            if c == "[":
                j = _skip_class(pattern, i)
                if j is None:
                    return None
                i = j
            elif c == "(":
                depth += 1
                i += 1
            elif c == ")":
                depth -= 1
                i += 1
            else:
                i += 1
            continue
        if c == "[":
            j = _skip_class(pattern, i)
            if j is None:
                return None
            end_run()
            q = _quantifier_at(pattern, j)
            i = q[1] if q else j
            continue
        if c == "(":
            depth += 1
            end_run()
            i += 1
            continue
        if c == ")":
            return None  # unbalanced; the engine will reject it anyway
        if c == "|":
            return None  # top-level alternation: nothing is required
        if c in "^$":
            i += 1  # zero-width: does not break contiguity
            continue
        if c == ".":
            end_run()
            q = _quantifier_at(pattern, i + 1)
            i = q[1] if q else i + 1
            continue
        if c in "*+?":
            return None  # quantifier with no atom we tracked: give up
        if c == "{":
            if _quantifier_at(pattern, i) is not None:
                return None
            i = add(c, i + 1)  # malformed {...} is literal text
            continue
        i = add(c, i + 1)
    if depth != 0:
        return None
    end_run()
    best = max(runs, key=len, default="")
    return best if len(best) >= 2 else None


# --- interchange -----------------------------------------------------------


def sidecar_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".meta.json")


def write_matrix_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    """Write the matrix CSV plus its sidecar metadata JSON."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", *matrix.pattern_ids])
        for sid, row in zip(matrix.sample_ids, matrix.values):
            writer.writerow([sid, *(f"{x:.9f}" for x in row)])
    meta = {
        "corpus_fingerprint": matrix.corpus_fingerprint,
        "pattern_ids": list(matrix.pattern_ids),
        "timeouts": matrix.timeouts,
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_matrix_csv(path: str | Path) -> FeatureMatrix:
    """Read a matrix CSV and its sidecar.  Column sizes are not part of
    the interchange format and come back as None."""
    path = Path(path)
    with open(sidecar_path(path), encoding="utf-8") as fh:
        meta = json.load(fh)
    sample_ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        pattern_ids = tuple(header[1:])
        for row in reader:
            sample_ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    if list(pattern_ids) != list(meta["pattern_ids"]):
        raise ValueError(f"{path}: sidecar pattern_ids disagree with CSV header")
    return FeatureMatrix(
        values=np.array(rows, dtype=np.float64).reshape(len(rows), len(pattern_ids)),
        sample_ids=tuple(sample_ids),
        pattern_ids=pattern_ids,
        corpus_fingerprint=meta["corpus_fingerprint"],
        timeouts=int(meta.get("timeouts", 0)),
    )
