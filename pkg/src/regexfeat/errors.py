"""Exception types shared across the package.

Everything derives from DataError so the CLI can map "your inputs are
bad" failures to a single exit code and leave genuine bugs to crash.
"""

from __future__ import annotations


class DataError(Exception):
    """Base class for input/contract violations (CLI exit code 2)."""


class DuplicateIdError(DataError):
    def __init__(self, entry_id: str):
        super().__init__(f"duplicate id {entry_id!r}")
        self.entry_id = entry_id


class NoRecordsError(DataError):
    """A loader produced zero usable records."""


class EmptyCorpusError(DataError):
    pass


class AllPatternsRejectedError(DataError):
    pass


class EmptyColumnError(DataError):
    def __init__(self, sample_id: str = "<column>"):
        super().__init__(f"column {sample_id!r} has no values")
        self.sample_id = sample_id


class EmptyDatasetError(DataError):
    pass


class DimensionMismatchError(DataError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"feature dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class FingerprintMismatchError(DataError):
    def __init__(self, expected: str, got: str):
        super().__init__(
            f"corpus fingerprint mismatch: expected {expected}, got {got}; "
            "features and model must come from the same compiled pattern set"
        )
        self.expected = expected
        self.got = got
