"""Labeled column datasets: ingestion, stratified splits, synthetic data.

A dataset is an ordered list of columns; each column is a list of string
values with an optional semantic type label (null labels are allowed and
simply excluded from the label set -- clustering does not need them).

Dataset JSONL, one column per line::

    {"sample_id": str?, "values": [str, ...], "label": str|null}

The synthetic generator produces six desk-scale classes whose values
follow documented defining regexes (see DEFINING_REGEX); the classes are
pairwise disjoint under those regexes, which the tests assert.  ISBN
check digits give one class structure a regex alone cannot verify.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NoRecordsError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnSample:
    sample_id: str
    values: tuple[str, ...]
    label: str | None = None

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"sample {self.sample_id!r} has no values")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[ColumnSample, ...]

    def __post_init__(self):
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate sample ids: {dupes[:5]}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def label_set(self) -> tuple[str, ...]:
        """Sorted distinct non-null labels present."""
        return tuple(sorted({s.label for s in self.samples if s.label is not None}))

    def labels(self) -> list[str | None]:
        return [s.label for s in self.samples]


def load_dataset(path: str | Path) -> Dataset:
    """Read dataset JSONL; malformed lines are logged and skipped.

    Samples without a sample_id get sequential ones in file order.
    """
    path = Path(path)
    samples: list[ColumnSample] = []
    counter = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                values = record["values"]
                if not isinstance(values, list) or not values:
                    raise ValueError("'values' must be a non-empty list")
                sid = record.get("sample_id")
                if sid is None:
                    sid = f"sample-{counter:05d}"
                label = record.get("label")
                samples.append(
                    ColumnSample(
                        sample_id=str(sid),
                        values=tuple(str(v) for v in values),
                        label=None if label is None else str(label),
                    )
                )
                counter += 1
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                log.warning("%s line %d: %s; skipped", path, lineno, exc)
    if not samples:
        raise NoRecordsError(f"{path}: no valid samples")
    return Dataset(samples=tuple(samples))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.samples:
            fh.write(
                json.dumps(
                    {"sample_id": s.sample_id, "values": list(s.values), "label": s.label},
                    ensure_ascii=False,
                )
                + "\n"
            )


def _class_rng(seed: int, class_name: str) -> np.random.Generator:
    # PCG64 seeded by (seed, class-name digest): per-class streams are stable
    # under class additions/reordering
    digest = int.from_bytes(hashlib.sha256(class_name.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng([seed, digest])


def stratified_split(
    dataset: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic per-class split; quota = floor(fraction*count + 0.5).

    Classes with a single sample go entirely to train (with a warning).
    Both outputs preserve the original dataset order.  Shuffling uses
    PCG64 seeded by (seed, class name), so per-class membership does not
    change when other classes are added.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    unlabeled = [s.sample_id for s in dataset.samples if s.label is None]
    if unlabeled:
        raise ValueError(f"cannot split: unlabeled sample(s) {unlabeled[:5]}")
    by_class: dict[str, list[int]] = {}
    for idx, s in enumerate(dataset.samples):
        by_class.setdefault(s.label, []).append(idx)
    train_idx: set[int] = set()
    for name, indices in by_class.items():
        if len(indices) == 1:
            log.warning("class %r has a single sample; placing it in train", name)
            train_idx.add(indices[0])
            continue
        quota = int(np.floor(train_fraction * len(indices) + 0.5))
        perm = _class_rng(seed, name).permutation(len(indices))
        train_idx.update(indices[p] for p in perm[:quota])
    train = tuple(s for i, s in enumerate(dataset.samples) if i in train_idx)
    test = tuple(s for i, s in enumerate(dataset.samples) if i not in train_idx)
    return Dataset(samples=train), Dataset(samples=test)


# --- synthetic data ---------------------------------------------------------

_EMAIL_LOCALS = ("alice", "bob", "carol", "dave", "erin", "frank", "grace",
                 "heidi", "ivan", "judy", "mallory", "oscar", "peggy", "trent")
_EMAIL_DOMAINS = ("example", "mail", "corp", "campus", "lab", "shop", "webhost")
_EMAIL_TLDS = ("com", "org", "net", "edu", "io")
_GENDER_VALUES = ("male", "female", "m", "f", "M", "F")

_DATE_LO = datetime.date(1900, 1, 1).toordinal()
_DATE_HI = datetime.date(2020, 12, 31).toordinal()


def _gen_year(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    lo = int(params.get("start", 1900))
    hi = int(params.get("end", 2020))
    return [str(rng.integers(lo, hi + 1)) for _ in range(n)]


def _gen_iso_date(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    return [
        datetime.date.fromordinal(int(rng.integers(_DATE_LO, _DATE_HI + 1))).isoformat()
        for _ in range(n)
    ]


def _isbn13_check(digits12: str) -> str:
    total = sum(int(d) * (1 if i % 2 == 0 else 3) for i, d in enumerate(digits12))
    return str((10 - total % 10) % 10)


def _gen_isbn13(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    out = []
    for _ in range(n):
        prefix = "978" if rng.integers(0, 2) == 0 else "979"
        group = str(rng.integers(0, 10))
        registrant = f"{rng.integers(0, 10000):04d}"
        publication = f"{rng.integers(0, 10000):04d}"
        digits12 = prefix + group + registrant + publication
        out.append(f"{prefix}-{group}-{registrant}-{publication}-{_isbn13_check(digits12)}")
    return out


def _gen_email(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    return [
        f"{_EMAIL_LOCALS[rng.integers(0, len(_EMAIL_LOCALS))]}"
        f"@{_EMAIL_DOMAINS[rng.integers(0, len(_EMAIL_DOMAINS))]}"
        f".{_EMAIL_TLDS[rng.integers(0, len(_EMAIL_TLDS))]}"
        for _ in range(n)
    ]


def _gen_grade_range(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    out = []
    for _ in range(n):
        form = rng.integers(0, 5)
        if form == 0:
            out.append("PK" if rng.integers(0, 2) == 0 else "K")
        elif form == 1:
            out.append(f"K-{rng.integers(1, 13)}")
        elif form == 2:
            lo = int(rng.integers(1, 12))
            hi = int(rng.integers(lo + 1, 13))
            out.append(f"{lo}-{hi}")
        elif form == 3:
            out.append(f"KG - {rng.integers(1, 13):02d}")
        else:
            out.append(f"PK - {rng.integers(1, 13):02d}")
    return out


def _gen_gender(rng: np.random.Generator, n: int, params: dict) -> list[str]:
    return [_GENDER_VALUES[rng.integers(0, len(_GENDER_VALUES))] for _ in range(n)]


GENERATORS = {
    "year": _gen_year,
    "iso_date": _gen_iso_date,
    "isbn13": _gen_isbn13,
    "email": _gen_email,
    "grade_range": _gen_grade_range,
    "gender": _gen_gender,
}

# Every generated value of a class matches its defining regex; for any two
# classes below, no value of one matches the defining regex of the other
# (pairwise disjoint).  The tests enforce both properties.
DEFINING_REGEX = {
    "year": r"^\d{4}$",
    "iso_date": r"^\d{4}-\d{2}-\d{2}$",
    "isbn13": r"^\d{3}-\d-\d{4}-\d{4}-\d$",
    "email": r"^[a-z]+@[a-z]+\.[a-z]{2,4}$",
    "grade_range": r"^(?:PK|KG?|\d{1,2})(?:(?:-| - )\d{1,2})?$",
    "gender": r"^(?:male|female|[mfMF])$",
}


@dataclass(frozen=True)
class ClassSpec:
    name: str
    kind: str
    params: tuple = ()  # (key, value) pairs; dicts are not hashable

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[ClassSpec, ...]
    columns_per_class: int = 200
    values_per_column: int = 20
    seed: int = 42

    def __post_init__(self):
        if self.columns_per_class < 1 or self.values_per_column < 1:
            raise ValueError("counts must be positive")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be distinct")


def default_synth_spec(
    columns_per_class: int = 200, values_per_column: int = 20, seed: int = 42,
    classes: tuple[str, ...] = tuple(GENERATORS),
) -> SynthSpec:
    return SynthSpec(
        classes=tuple(ClassSpec(name=k, kind=k) for k in classes),
        columns_per_class=columns_per_class,
        values_per_column=values_per_column,
        seed=seed,
    )


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Deterministic synthetic dataset; per-class rng streams, so the
    values of one class do not depend on which other classes exist."""
    samples: list[ColumnSample] = []
    for cls in spec.classes:
        try:
            gen = GENERATORS[cls.kind]
        except KeyError:
            raise ValueError(f"unknown generator kind {cls.kind!r}") from None
        rng = _class_rng(spec.seed, cls.name)
        params = cls.params_dict()
        defining = re.compile(DEFINING_REGEX[cls.kind]) if cls.kind in DEFINING_REGEX else None
        for col in range(spec.columns_per_class):
            values = gen(rng, spec.values_per_column, params)
            if defining is not None:
                bad = [v for v in values if not defining.search(v)]
                assert not bad, f"{cls.kind} generator broke its defining regex: {bad[:3]}"
            samples.append(
                ColumnSample(
                    sample_id=f"{cls.name}-{col:04d}",
                    values=tuple(values),
                    label=cls.name,
                )
            )
    return Dataset(samples=tuple(samples))
