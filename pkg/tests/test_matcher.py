from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import regexfeat as rf
from regexfeat.errors import (
    AllPatternsRejectedError,
    EmptyColumnError,
    EmptyCorpusError,
    EmptyDatasetError,
)

from oracles import reference_fraction, reference_match


def corpus_of(*patterns, flags=()):
    return rf.Corpus(entries=tuple(
        rf.RegexEntry(id=f"p{i}", pattern=p, dialect="pcre", flags=frozenset(flags))
        for i, p in enumerate(patterns)
    ))


def column_samples(columns):
    return rf.Dataset(samples=tuple(
        rf.ColumnSample(sample_id=f"s{i}", values=tuple(col))
        for i, col in enumerate(columns)
    ))


class TestCompileSet:
    def test_invalid_pattern_rejected_and_indices_compact(self):
        pset = rf.compile_set(corpus_of(r"^\d+$", "(", "a|b"))
        assert len(pset) == 2
        assert [(p.index, p.entry_id) for p in pset.patterns] == [(0, "p0"), (1, "p2")]
        assert pset.rejected[0][0] == "p1"
        assert "unterminated" in pset.rejected[0][1] or "missing" in pset.rejected[0][1]

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            rf.compile_set(rf.Corpus(entries=()))

    def test_all_rejected(self):
        with pytest.raises(AllPatternsRejectedError):
            rf.compile_set(corpus_of("(", "a{9,1}"))

    def test_backreference_supported_by_this_engine(self):
        # stdlib re accepts backreferences, so the pattern compiles and
        # becomes a feature; engines without them would reject it here
        pset = rf.compile_set(corpus_of(r"(a)\1"))
        assert len(pset) == 1
        assert pset.rejected == ()
        assert rf.match_value(pset, "baad") == {0}

    def test_complexity_cap_counts_as_rejection(self):
        options = rf.MatchOptions(max_pattern_complexity=10)
        pset = rf.compile_set(corpus_of(r"\d+", "x" * 11), options)
        assert len(pset) == 1
        assert pset.rejected[0][0] == "p1"
        assert "complexity cap" in pset.rejected[0][1]

    def test_flags_honored(self):
        pset = rf.compile_set(corpus_of("^abc$", flags=("case_insensitive",)))
        assert rf.match_value(pset, "ABC") == {0}

    def test_fingerprint_matches_source_corpus(self):
        corpus = corpus_of(r"\d+", "(")
        pset = rf.compile_set(corpus)
        assert pset.corpus_fingerprint == rf.corpus_fingerprint(corpus)


class TestMatchValue:
    def test_anchored_vs_unanchored(self):
        pset = rf.compile_set(corpus_of(r"^\d+$", "[a-z]+"))
        assert rf.match_value(pset, "123") == {0}
        assert rf.match_value(pset, "abc123") == {1}

    def test_empty_string_matches_dot_star(self):
        pset = rf.compile_set(corpus_of(".*"))
        assert rf.match_value(pset, "") == {0}

    def test_multiline_only_with_flag(self):
        plain = rf.compile_set(corpus_of("^world"))
        multi = rf.compile_set(corpus_of("^world", flags=("multiline",)))
        subject = "hello\nworld"
        assert rf.match_value(plain, subject) == set()
        assert rf.match_value(multi, subject) == {0}

    def test_truncation_logged_and_counted(self, caplog):
        pset = rf.compile_set(corpus_of("zzz$"), rf.MatchOptions(max_value_length=8))
        with caplog.at_level("WARNING"):
            assert rf.match_value(pset, "abczzz") == {0}
            assert rf.match_value(pset, "zzz" + "a" * 100) == set()
        assert any("truncated" in rec.message for rec in caplog.records)
        data = column_samples([["zzz" + "a" * 100, "xzzz"]])
        matrix = rf.extract_matrix(pset, data)
        assert matrix.truncations == 1


class TestExtractFeatures:
    def test_fraction_two_thirds(self):
        pset = rf.compile_set(corpus_of(r"^\d+$"))
        vec = rf.extract_features(pset, ["12", "ab", "3"])
        assert vec.column_size == 3
        assert abs(vec.values[0] - 2 / 3) < 1e-12

    def test_universal_pattern_gives_one(self):
        pset = rf.compile_set(corpus_of(".*"))
        vec = rf.extract_features(pset, ["anything", "", "at all"])
        assert vec.values[0] == 1.0

    def test_dot_needs_a_character(self):
        pset = rf.compile_set(corpus_of("."))
        vec = rf.extract_features(pset, ["", ""])
        assert vec.values[0] == 0.0

    def test_duplicates_each_count(self):
        pset = rf.compile_set(corpus_of(r"^a$"))
        vec = rf.extract_features(pset, ["a", "a", "b", "a"])
        assert abs(vec.values[0] - 0.75) < 1e-12

    def test_empty_column(self):
        pset = rf.compile_set(corpus_of(r"^\d+$"))
        with pytest.raises(EmptyColumnError):
            rf.extract_features(pset, [])


class TestExtractMatrix:
    def test_rows_compose_extract_features(self, ):
        pset = rf.compile_set(corpus_of(r"^\d+$", "[a-z]+"))
        data = column_samples([["12", "ab"], ["xy", "zz"]])
        matrix = rf.extract_matrix(pset, data)
        for row, sample in zip(matrix.values, data.samples):
            expected = rf.extract_features(pset, list(sample.values)).values
            assert np.array_equal(row, expected)
        assert matrix.sample_ids == ("s0", "s1")
        assert matrix.pattern_ids == ("p0", "p1")
        assert matrix.corpus_fingerprint == pset.corpus_fingerprint

    def test_workers_do_not_change_output(self, mini_pset, synth6):
        small = rf.Dataset(samples=synth6.samples[::40])
        serial = rf.extract_matrix(mini_pset, small, workers=1)
        parallel = rf.extract_matrix(mini_pset, small, workers=8)
        assert np.array_equal(serial.values, parallel.values)
        assert serial.sample_ids == parallel.sample_ids

    def test_empty_dataset(self, mini_pset):
        with pytest.raises(EmptyDatasetError):
            rf.extract_matrix(mini_pset, rf.Dataset(samples=()))

    def test_empty_column_names_offender(self, mini_pset):
        sample = rf.ColumnSample(sample_id="ok", values=("x",))
        bad = object.__new__(rf.ColumnSample)  # bypass the ctor invariant
        object.__setattr__(bad, "sample_id", "offender")
        object.__setattr__(bad, "values", ())
        object.__setattr__(bad, "label", None)
        data = rf.Dataset(samples=(sample, bad))
        with pytest.raises(EmptyColumnError, match="offender"):
            rf.extract_matrix(mini_pset, data)


VALUE_ALPHABET = st.characters(min_codepoint=32, max_codepoint=126)


class TestOracleEquivalence:
    @settings(max_examples=150, deadline=None)
    @given(st.text(alphabet=VALUE_ALPHABET, max_size=60))
    def test_mini_corpus_agrees_with_single_pattern_matcher(self, mini_pset, value):
        got = rf.match_value(mini_pset, value)
        for cp in mini_pset.patterns:
            entry_flags = _flags_of(mini_pset, cp.entry_id)
            expected = reference_match(cp.regex.pattern, entry_flags, value)
            assert (cp.index in got) == expected, (cp.entry_id, value)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.text(alphabet=VALUE_ALPHABET, max_size=40), min_size=1, max_size=8))
    def test_prefilter_changes_nothing(self, mini_pset, column):
        with_pf = rf.extract_features(mini_pset, column, prefilter=True)
        without = rf.extract_features(mini_pset, column, prefilter=False)
        assert np.array_equal(with_pf.values, without.values)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.text(alphabet=VALUE_ALPHABET, max_size=40), min_size=1, max_size=8))
    def test_fraction_times_size_is_integral(self, mini_pset, column):
        vec = rf.extract_features(mini_pset, column)
        scaled = vec.values * vec.column_size
        assert np.all(np.abs(scaled - np.round(scaled)) < 1e-12)


def _flags_of(pset, entry_id):
    raw = rf.load_corpus(rf.mini_corpus_path())
    return next(e.flags for e in raw if e.id == entry_id)


class TestMonotonicity:
    def test_appending_matching_value_never_decreases_count(self, mini_pset):
        rng = random.Random(3)
        pool = ["1999", "2001-04-02", "978-1-2345-6789-7", "bob@mail.com",
                "K-5", "male", "?!", ""]
        for _ in range(30):
            column = [rng.choice(pool) for _ in range(rng.randint(1, 10))]
            before = rf.extract_features(mini_pset, column)
            extra = rng.choice(pool)
            after = rf.extract_features(mini_pset, column + [extra])
            counts_before = np.round(before.values * before.column_size)
            counts_after = np.round(after.values * after.column_size)
            assert np.all(counts_after >= counts_before)


class TestRequiredLiteral:
    @pytest.mark.parametrize("pattern,expected", [
        (r"^UTC[+-]\d{2}[:]\d{2}$", "UTC"),
        (r"\S+@gmail\.com", "@gmail.com"),
        (r"^https?://", "http"),
        (r"(19|20)\d{2}", None),        # literals only inside a group
        (r"a|b", None),                  # top-level alternation
        (r"ab?c", None),                 # longest certain run is 1 char
        (r"foo\d+bar", "foo"),
        (r"colou?r", "colo"),
        (r"a{2,4}bc", "abc"),            # first 'a' is certain, then run breaks
        (r"\x41BC", None),               # coded escapes: bail
        (r"(a)\1", None),                # backreference: bail
    ])
    def test_extraction(self, pattern, expected):
        assert rf.required_literal(pattern) == expected

    def test_case_insensitive_bails(self):
        assert rf.required_literal("FOOBAR", frozenset({"case_insensitive"})) is None

    def test_inline_flags_bail(self):
        assert rf.required_literal(r"(?i)foobar") is None
        assert rf.required_literal(r"(?s-m:foo)bar") is None

    def test_extracted_literal_is_sound(self):
        # whenever the pattern matches a value, the literal must be in it
        rng = random.Random(5)
        raw = rf.load_corpus(rf.mini_corpus_path())
        compiled = []
        for e in raw:
            lit = rf.required_literal(e.pattern, e.flags)
            if lit is None:
                continue
            try:
                compiled.append((rf.engine.compile_pattern(e.pattern, e.flags), lit))
            except Exception:
                continue
        assert compiled, "expected at least one prefilter literal in the mini corpus"
        pool = ["UTC+05:00", "978-1-2345-6789-7", "KG - 05", "https://x.io",
                "bob@mail.com", "1999-12-31", "hello world", ""]
        for _ in range(200):
            value = rng.choice(pool) + rng.choice(["", "x", " ", "99"])
            for regex, lit in compiled:
                if regex.search(value):
                    assert lit in value


class TestMatrixCsv:
    def test_round_trip(self, tmp_path):
        pset = rf.compile_set(corpus_of(r"^\d+$", "[a-z]+"))
        data = column_samples([["12", "ab", "3"], ["xy", "zz"]])
        matrix = rf.extract_matrix(pset, data)
        path = tmp_path / "features.csv"
        rf.write_matrix_csv(matrix, path)

        text = path.read_text()
        assert text.splitlines()[0] == "sample_id,p0,p1"
        assert "0.666666667" in text

        back = rf.read_matrix_csv(path)
        assert back.sample_ids == matrix.sample_ids
        assert back.pattern_ids == matrix.pattern_ids
        assert back.corpus_fingerprint == matrix.corpus_fingerprint
        assert np.allclose(back.values, matrix.values, atol=5e-10)
        assert back.column_sizes is None

    def test_sidecar_schema(self, tmp_path):
        import json

        pset = rf.compile_set(corpus_of(r"^\d+$"))
        matrix = rf.extract_matrix(pset, column_samples([["1"]]))
        rf.write_matrix_csv(matrix, tmp_path / "m.csv")
        meta = json.loads((tmp_path / "m.meta.json").read_text())
        assert set(meta) == {"corpus_fingerprint", "pattern_ids", "timeouts"}
        assert meta["timeouts"] == 0
        assert meta["pattern_ids"] == ["p0"]


class TestReferenceFractions:
    def test_matrix_matches_per_pattern_reference(self, mini_pset, synth6):
        # spot-check a slice of the synthetic dataset against the
        # single-pattern fraction oracle
        raw = rf.load_corpus(rf.mini_corpus_path())
        flags_by_id = {e.id: e.flags for e in raw}
        subset = rf.Dataset(samples=synth6.samples[::97])
        matrix = rf.extract_matrix(mini_pset, subset)
        for cp in mini_pset.patterns:
            for row, sample in zip(matrix.values, subset.samples):
                expected = reference_fraction(
                    cp.regex.pattern, flags_by_id[cp.entry_id], list(sample.values)
                )
                assert math.isclose(row[cp.index], expected, abs_tol=1e-12)
