from __future__ import annotations

import time

import pytest

import regexfeat as rf


@pytest.fixture(scope="session")
def mini_pset():
    """Cleaned and compiled bundled mini corpus."""
    raw = rf.load_corpus(rf.mini_corpus_path())
    cleaned, _ = rf.filter_corpus(raw)
    return rf.compile_set(cleaned)


@pytest.fixture(scope="session")
def synth6():
    """The 6-class synthetic dataset the classification analogue uses."""
    return rf.generate_synthetic(rf.default_synth_spec())


@pytest.fixture(scope="session")
def matrix6(mini_pset, synth6):
    return rf.extract_matrix(mini_pset, synth6)


def _submatrix(matrix, dataset):
    row_of = {sid: i for i, sid in enumerate(matrix.sample_ids)}
    idx = [row_of[s.sample_id] for s in dataset.samples]
    sub = rf.FeatureMatrix(
        values=matrix.values[idx],
        sample_ids=tuple(s.sample_id for s in dataset.samples),
        pattern_ids=matrix.pattern_ids,
        corpus_fingerprint=matrix.corpus_fingerprint,
    )
    return sub, [s.label for s in dataset.samples]


@pytest.fixture(scope="session")
def synth6_experiment(synth6, matrix6):
    """80/20 stratified split, default-config training, held-out report.

    Shared by the acceptance gate and the loss-curve tests; the elapsed
    seconds cover split + train + eval (extraction is timed separately).
    """
    started = time.time()
    train_ds, test_ds = rf.stratified_split(synth6, 0.8, seed=7)
    train_m, train_y = _submatrix(matrix6, train_ds)
    test_m, test_y = _submatrix(matrix6, test_ds)
    model = rf.init_model(
        matrix6.values.shape[1],
        sorted(set(train_y)),
        seed=0,
        pattern_ids=matrix6.pattern_ids,
        corpus_fingerprint=matrix6.corpus_fingerprint,
    )
    trained, history = rf.train(model, train_m, train_y, rf.TrainConfig())
    report = rf.evaluate(rf.predict(trained, test_m.values), test_y)
    elapsed = time.time() - started
    return {
        "trained": trained,
        "history": history,
        "report": report,
        "elapsed": elapsed,
        "train_size": len(train_ds),
        "test_size": len(test_ds),
    }


@pytest.fixture(scope="session")
def synth4():
    """The 4 most pattern-regular classes, for the clustering analogue."""
    spec = rf.default_synth_spec(classes=("year", "iso_date", "isbn13", "email"))
    return rf.generate_synthetic(spec)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" in nodeid and getattr(rep, "when", "call") == "call":
                rows[nodeid.split("::")[-1]] = status == "passed"
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(rows):
        terminalreporter.write_line(f"{'PASS' if rows[name] else 'FAIL'}  {name}")
