"""regexfeat: match-fraction features from an uncurated regex corpus.

A large pile of user-authored regular expressions -- cleaned of junk,
compiled into an ordered pattern set -- becomes a feature extractor for
columns of string values: feature i of a column is the fraction of its
values that pattern i matches somewhere.  Those vectors feed a dense
softmax classifier for semantic type prediction and a PCA + density
clustering path for unsupervised grouping.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    CorpusStats,
    DEFAULT_PROBES,
    FilterPolicy,
    PROBES_VERSION,
    RegexEntry,
    corpus_fingerprint,
    detect_degenerate,
    filter_corpus,
    load_corpus,
    save_corpus,
)
from .matcher import (
    CompiledPatternSet,
    FeatureMatrix,
    FeatureVector,
    MatchOptions,
    compile_set,
    extract_features,
    extract_matrix,
    match_value,
    read_matrix_csv,
    required_literal,
    write_matrix_csv,
)
from .dataset import (
    ClassSpec,
    ColumnSample,
    Dataset,
    DEFINING_REGEX,
    SynthSpec,
    default_synth_spec,
    generate_synthetic,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .model import (
    EvalReport,
    MLPModel,
    TrainConfig,
    evaluate,
    forward,
    init_model,
    load_model,
    loss_and_gradients,
    predict,
    save_model,
    train,
)
from .cluster import (
    AssignmentResult,
    ClusterResult,
    Embedding2D,
    NOISE,
    best_match_accuracy,
    dbscan,
    default_eps,
    pca_embed,
    write_cluster_json,
    write_embedding_csv,
)

from importlib import resources as _resources


def mini_corpus_path():
    """Path to the bundled ~40-pattern demo corpus (raw, pre-cleaning)."""
    return _resources.files(__name__) / "data" / "mini_corpus.jsonl"
