"""Batch command-line surface over the pipeline.

Subcommands::

    corpus clean      raw regex dump -> cleaned corpus + filter stats
    corpus fetch      recorded regex101 export -> corpus JSONL (pluggable
                      transport; only "file" ships, tests use fixtures)
    synth generate    deterministic synthetic labeled dataset
    features extract  corpus + dataset -> match-fraction matrix CSV
    model train       features + labels -> model JSON + loss history
    model eval        model + features + labels -> metrics report
    cluster run       features -> 2-D embedding, density clusters, and
                      (when labels exist) best-match accuracy
    plot scatter      embedding CSV -> SVG scatter plot

Every subcommand writes a run manifest next to its first output
(``<stem>.manifest.json``) holding the command, argv, input content
hashes, seeds, config, and output paths; feeding the manifest's argv back
to `regexfeat` reproduces the outputs byte for byte.  Logs go to stderr,
data only to files.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import (
    best_match_accuracy,
    dbscan,
    default_eps,
    pca_embed,
    write_cluster_json,
    write_embedding_csv,
)
from .corpus import FilterPolicy, PROBES_VERSION, filter_corpus, load_corpus, save_corpus
from .dataset import GENERATORS, default_synth_spec, generate_synthetic, load_dataset, save_dataset
from .errors import DataError, FingerprintMismatchError
from .matcher import MatchOptions, compile_set, extract_matrix, read_matrix_csv, sidecar_path, write_matrix_csv
from .model import TrainConfig, evaluate, init_model, load_model, predict, save_model, train

log = logging.getLogger(__name__)


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors instead of calling sys.exit(2)."""

    def error(self, message):
        raise UsageError(message, self.format_usage())


# --- manifests ---------------------------------------------------------------


def _file_hash(path: str | Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(first_output: str | Path) -> Path:
    return Path(first_output).with_suffix(".manifest.json")


def _write_manifest(command, argv, inputs, outputs, seeds, config) -> Path:
    doc = {
        "command": command,
        "version": __version__,
        "argv": list(argv),
        "inputs": {str(p): _file_hash(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seeds": seeds,
        "config": config,
    }
    target = manifest_path(outputs[0])
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return target


# --- handlers ----------------------------------------------------------------


def _cmd_corpus_clean(args, argv):
    corpus = load_corpus(args.input, format=args.format)
    policy = FilterPolicy(
        min_pattern_length=args.min_len,
        max_pattern_length=args.max_len,
        allowed_dialects=frozenset(args.dialects.split(",")),
        dedupe=not args.no_dedupe,
    )
    cleaned, stats = filter_corpus(corpus, policy)
    save_corpus(cleaned, args.out)
    stats_path = Path(args.out).with_suffix(".stats.json")
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(stats.as_dict(), fh, indent=2)
        fh.write("\n")
    _write_manifest(
        "corpus clean", argv,
        inputs=[args.input],
        outputs=[args.out, stats_path],
        seeds={},
        config={
            "format": args.format,
            "min_pattern_length": args.min_len,
            "max_pattern_length": args.max_len,
            "allowed_dialects": sorted(policy.allowed_dialects),
            "dedupe": policy.dedupe,
            "probes_version": PROBES_VERSION,
        },
    )


# transports resolve a source string to export bytes; "file" is the only one
# shipped -- network transports would plug in here without touching handlers
TRANSPORTS = {
    "file": lambda source: Path(source).read_bytes(),
}


def _cmd_corpus_fetch(args, argv):
    try:
        transport = TRANSPORTS[args.transport]
    except KeyError:
        raise DataError(f"unknown transport {args.transport!r}") from None
    raw = transport(args.source)
    tmp = Path(args.out).with_suffix(".export.json")
    tmp.write_bytes(raw)
    corpus = load_corpus(tmp, format="regex101_export")
    save_corpus(corpus, args.out)
    _write_manifest(
        "corpus fetch", argv,
        inputs=[args.source],
        outputs=[args.out, tmp],
        seeds={},
        config={"transport": args.transport},
    )


def _cmd_synth_generate(args, argv):
    classes = tuple(args.classes.split(","))
    unknown = [c for c in classes if c not in GENERATORS]
    if unknown:
        raise DataError(f"unknown generator kind(s): {', '.join(unknown)}")
    spec = default_synth_spec(
        columns_per_class=args.columns_per_class,
        values_per_column=args.values_per_column,
        seed=args.seed,
        classes=classes,
    )
    save_dataset(generate_synthetic(spec), args.out)
    _write_manifest(
        "synth generate", argv,
        inputs=[],
        outputs=[args.out],
        seeds={"seed": args.seed},
        config={
            "classes": list(classes),
            "columns_per_class": args.columns_per_class,
            "values_per_column": args.values_per_column,
        },
    )


def _cmd_features_extract(args, argv):
    corpus = load_corpus(args.corpus)
    options = MatchOptions(literal_prefilter=not args.no_prefilter)
    pset = compile_set(corpus, options)
    inputs = [args.corpus, args.data]
    if args.model:
        model = load_model(args.model)
        if model.corpus_fingerprint and model.corpus_fingerprint != pset.corpus_fingerprint:
            raise FingerprintMismatchError(model.corpus_fingerprint, pset.corpus_fingerprint)
        inputs.append(args.model)
    dataset = load_dataset(args.data)
    matrix = extract_matrix(pset, dataset, workers=args.workers)
    write_matrix_csv(matrix, args.out)
    if pset.rejected:
        log.info("%d of %d patterns rejected at compile", len(pset.rejected), len(corpus))
    _write_manifest(
        "features extract", argv,
        inputs=inputs,
        outputs=[args.out, sidecar_path(args.out)],
        seeds={},
        config={
            "workers": args.workers,
            "literal_prefilter": options.literal_prefilter,
            "max_value_length": options.max_value_length,
            "max_pattern_complexity": options.max_pattern_complexity,
        },
    )


def _labels_for_matrix(matrix, dataset, require_all: bool) -> list[str] | None:
    by_id = {s.sample_id: s.label for s in dataset.samples}
    labels = []
    for sid in matrix.sample_ids:
        if sid not in by_id:
            raise DataError(f"sample {sid!r} from the feature matrix is not in the dataset")
        labels.append(by_id[sid])
    missing = [s for s, l in zip(matrix.sample_ids, labels) if l is None]
    if missing:
        if require_all:
            raise DataError(f"unlabeled sample(s): {missing[:5]}")
        return None
    return labels


def _cmd_model_train(args, argv):
    matrix = read_matrix_csv(args.features)
    dataset = load_dataset(args.data)
    labels = _labels_for_matrix(matrix, dataset, require_all=True)
    hidden = tuple(int(x) for x in args.hidden.split(","))
    model = init_model(
        input_dim=matrix.values.shape[1],
        labels=sorted(set(labels)),
        hidden_dims=hidden,
        seed=args.seed,
        pattern_ids=matrix.pattern_ids,
        corpus_fingerprint=matrix.corpus_fingerprint,
    )
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l2_penalty=args.l2,
        seed=args.seed,
    )
    trained, history = train(model, matrix, labels, config)
    save_model(trained, args.out)
    history_path = Path(args.out).with_suffix(".history.json")
    with open(history_path, "w", encoding="utf-8") as fh:
        json.dump({"epoch_mean_loss": history}, fh)
        fh.write("\n")
    _write_manifest(
        "model train", argv,
        inputs=[args.features, sidecar_path(args.features), args.data],
        outputs=[args.out, history_path],
        seeds={"seed": args.seed},
        config={
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "l2_penalty": config.l2_penalty,
            "hidden_dims": list(hidden),
        },
    )


def _cmd_model_eval(args, argv):
    model = load_model(args.model)
    matrix = read_matrix_csv(args.features)
    if model.corpus_fingerprint and model.corpus_fingerprint != matrix.corpus_fingerprint:
        raise FingerprintMismatchError(model.corpus_fingerprint, matrix.corpus_fingerprint)
    dataset = load_dataset(args.data)
    labels = _labels_for_matrix(matrix, dataset, require_all=True)
    report = evaluate(predict(model, matrix.values), labels)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
    table_path = Path(args.report).with_suffix(".txt")
    table_path.write_text(report.render_table(), encoding="utf-8")
    _write_manifest(
        "model eval", argv,
        inputs=[args.model, args.features, sidecar_path(args.features), args.data],
        outputs=[args.report, table_path],
        seeds={},
        config={},
    )


def _cmd_cluster_run(args, argv):
    matrix = read_matrix_csv(args.features)
    embedding = pca_embed(matrix)
    eps = args.eps if args.eps is not None else default_eps(embedding)
    result = dbscan(embedding, eps=eps, min_pts=args.min_pts)
    write_cluster_json(result, args.out)
    outputs = [Path(args.out)]
    inputs = [args.features, sidecar_path(args.features)]
    labels = None
    if args.data:
        inputs.append(args.data)
        labels = _labels_for_matrix(matrix, load_dataset(args.data), require_all=False)
        if labels is None:
            log.warning("dataset has unlabeled samples; skipping best-match accuracy")
        else:
            match = best_match_accuracy(result, labels)
            match_path = Path(args.out).with_suffix(".match.json")
            with open(match_path, "w", encoding="utf-8") as fh:
                json.dump(
                    {
                        "mapping": {str(c): lab for c, lab in sorted(match.mapping.items())},
                        "accuracy": match.accuracy,
                    },
                    fh, indent=2,
                )
                fh.write("\n")
            outputs.append(match_path)
    if args.embedding_out:
        write_embedding_csv(embedding, matrix.sample_ids, labels, args.embedding_out)
        outputs.append(Path(args.embedding_out))
    _write_manifest(
        "cluster run", argv,
        inputs=inputs,
        outputs=outputs,
        seeds={},
        config={"eps": eps, "min_pts": args.min_pts, "embedder": embedding.method},
    )


def _cmd_plot_scatter(args, argv):
    import csv as _csv

    with open(args.embedding, encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["sample_id", "x", "y"]:
            raise DataError(f"{args.embedding}: not an embedding CSV")
        points, labels = [], []
        for row in reader:
            points.append((float(row[1]), float(row[2])))
            labels.append(row[3] if len(row) > 3 else "")
    if not points:
        raise DataError(f"{args.embedding}: no points")
    label_list = None if all(l == "" for l in labels) else labels
    svg = render_scatter_svg(np.array(points), label_list)
    Path(args.out).write_text(svg, encoding="utf-8")
    _write_manifest(
        "plot scatter", argv,
        inputs=[args.embedding],
        outputs=[args.out],
        seeds={},
        config={},
    )


# --- SVG scatter -------------------------------------------------------------

PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)
OTHER_COLOR = "#444444"


def render_scatter_svg(points, labels=None, width: int = 880, height: int = 640) -> str:
    """Deterministic SVG scatter plot: one circle per point, one fixed
    palette color per label (alphabetical; past 20 labels everything else
    shares the "other" color), axes fitted to the data bounding box with
    a 5% margin."""
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty embedding")
    if labels is not None and len(labels) != pts.shape[0]:
        raise ValueError("labels must align with points")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    pad = np.where(span > 0, 0.05 * span, 0.5)
    lo = lo - pad
    hi = hi + pad

    def to_px(p):
        x = (p[0] - lo[0]) / (hi[0] - lo[0]) * width
        y = height - (p[1] - lo[1]) / (hi[1] - lo[1]) * height
        return x, y

    color_of = {}
    if labels is not None:
        for i, name in enumerate(sorted(set(labels))):
            color_of[name] = PALETTE[i] if i < len(PALETTE) else OTHER_COLOR

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0.5" y="0.5" width="{width - 1}" height="{height - 1}" '
        f'fill="white" stroke="#333333"/>',
    ]
    for i, p in enumerate(pts):
        x, y = to_px(p)
        fill = color_of[labels[i]] if labels is not None else PALETTE[0]
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{fill}" fill-opacity="0.75"/>')
    if labels is not None:
        for i, name in enumerate(sorted(color_of)):
            ly = 20 + 18 * i
            lines.append(f'<rect x="12" y="{ly - 9}" width="10" height="10" fill="{color_of[name]}"/>')
            lines.append(f'<text x="28" y="{ly}" font-family="sans-serif" font-size="12">{_xml_escape(name)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --- parser ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="regexfeat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"regexfeat {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="GROUP")

    corpus_p = groups.add_parser("corpus", help="corpus cleaning and import")
    corpus_sub = corpus_p.add_subparsers(dest="action", metavar="ACTION")

    clean = corpus_sub.add_parser("clean", help="filter and dedupe a raw corpus")
    clean.add_argument("--in", dest="input", required=True)
    clean.add_argument("--out", required=True)
    clean.add_argument("--format", choices=["jsonl", "regex101_export"], default="jsonl")
    clean.add_argument("--min-len", type=int, default=5)
    clean.add_argument("--max-len", type=int, default=1000)
    clean.add_argument("--dialects", default="pcre", help="comma-separated allow list")
    clean.add_argument("--no-dedupe", action="store_true")
    clean.set_defaults(handler=_cmd_corpus_clean)

    fetch = corpus_sub.add_parser("fetch", help="import a recorded regex101 export")
    fetch.add_argument("--transport", default="file", help="only 'file' ships")
    fetch.add_argument("--source", required=True)
    fetch.add_argument("--out", required=True)
    fetch.set_defaults(handler=_cmd_corpus_fetch)

    synth_p = groups.add_parser("synth", help="synthetic datasets")
    synth_sub = synth_p.add_subparsers(dest="action", metavar="ACTION")
    generate = synth_sub.add_parser("generate", help="write a synthetic labeled dataset")
    generate.add_argument("--out", required=True)
    generate.add_argument("--classes", default=",".join(GENERATORS))
    generate.add_argument("--columns-per-class", type=int, default=200)
    generate.add_argument("--values-per-column", type=int, default=20)
    generate.add_argument("--seed", type=int, default=42)
    generate.set_defaults(handler=_cmd_synth_generate)

    features_p = groups.add_parser("features", help="feature extraction")
    features_sub = features_p.add_subparsers(dest="action", metavar="ACTION")
    extract = features_sub.add_parser("extract", help="dataset x corpus -> matrix CSV")
    extract.add_argument("--corpus", required=True)
    extract.add_argument("--data", required=True)
    extract.add_argument("--out", required=True)
    extract.add_argument("--workers", type=int, default=1)
    extract.add_argument("--no-prefilter", action="store_true")
    extract.add_argument("--model", default=None,
                         help="existing model to check fingerprint compatibility against")
    extract.set_defaults(handler=_cmd_features_extract)

    model_p = groups.add_parser("model", help="train and evaluate the classifier")
    model_sub = model_p.add_subparsers(dest="action", metavar="ACTION")

    train_p = model_sub.add_parser("train", help="train on a feature matrix")
    train_p.add_argument("--features", required=True)
    train_p.add_argument("--data", required=True)
    train_p.add_argument("--out", required=True)
    train_p.add_argument("--epochs", type=int, default=200)
    train_p.add_argument("--batch-size", type=int, default=32)
    train_p.add_argument("--learning-rate", type=float, default=1e-3)
    train_p.add_argument("--l2", type=float, default=1e-4)
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--hidden", default="256,128,64,32")
    train_p.set_defaults(handler=_cmd_model_train)

    eval_p = model_sub.add_parser("eval", help="evaluate a model")
    eval_p.add_argument("--model", required=True)
    eval_p.add_argument("--features", required=True)
    eval_p.add_argument("--data", required=True)
    eval_p.add_argument("--report", required=True)
    eval_p.set_defaults(handler=_cmd_model_eval)

    cluster_p = groups.add_parser("cluster", help="unsupervised clustering")
    cluster_sub = cluster_p.add_subparsers(dest="action", metavar="ACTION")
    run = cluster_sub.add_parser("run", help="embed, cluster, score")
    run.add_argument("--features", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--eps", type=float, default=None, help="default: 5%% of bbox diagonal")
    run.add_argument("--min-pts", type=int, default=5)
    run.add_argument("--data", default=None, help="dataset with labels for accuracy scoring")
    run.add_argument("--embedding-out", default=None)
    run.set_defaults(handler=_cmd_cluster_run)

    plot_p = groups.add_parser("plot", help="plots")
    plot_sub = plot_p.add_subparsers(dest="action", metavar="ACTION")
    scatter = plot_sub.add_parser("scatter", help="embedding CSV -> SVG")
    scatter.add_argument("--embedding", required=True)
    scatter.add_argument("--out", required=True)
    scatter.set_defaults(handler=_cmd_plot_scatter)

    return parser


def dispatch(argv) -> int:
    """Run one subcommand; 0 = ok, 1 = usage error, 2 = data error."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        sys.stderr.write(exc.usage)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:  # --help / --version paths
        return int(exc.code or 0)
    if not hasattr(args, "handler"):
        sys.stderr.write(parser.format_usage())
        sys.stderr.write("error: missing subcommand\n")
        return 1
    try:
        args.handler(args, list(argv))
    except (DataError, OSError, ValueError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


def main() -> None:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    sys.exit(dispatch(sys.argv[1:]))
