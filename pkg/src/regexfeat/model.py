"""Dense feed-forward classifier over match-fraction features.

Five weight layers (four rectified hidden layers + softmax output),
cross-entropy loss with an L2 weight penalty, and adaptive-moment
mini-batch updates.  Everything runs in double precision and is fully
determined by (seed, config, data): training twice gives bit-identical
weights, and the analytic gradients are exact for the stated loss, which
the finite-difference tests exploit.

Model JSON schema::

    {"layer_dims": [...], "weights": [[[...]]], "biases": [[...]],
     "labels": [...], "input_pattern_ids": [...],
     "corpus_fingerprint": str, "seed": int}

Floats serialize via Python's shortest round-trip repr, so save -> load
-> save is byte-identical.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, FingerprintMismatchError
from .matcher import FeatureMatrix

log = logging.getLogger(__name__)

DEFAULT_HIDDEN_DIMS = (256, 128, 64, 32)


@dataclass(eq=False)
class MLPModel:
    weights: list[np.ndarray]  # 5 matrices, each (fan_out, fan_in)
    biases: list[np.ndarray]  # matching (fan_out,) vectors
    label_names: tuple[str, ...]
    input_pattern_ids: tuple[str, ...]
    corpus_fingerprint: str
    seed: int

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1], *(w.shape[0] for w in self.weights)]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[0]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size, learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")


def init_model(
    input_dim: int,
    labels,
    hidden_dims=DEFAULT_HIDDEN_DIMS,
    seed: int = 0,
    pattern_ids=None,
    corpus_fingerprint: str = "",
) -> MLPModel:
    """Fresh model with He-scaled weights (variance 2/fan_in), zero biases.

    `pattern_ids` names the feature columns; when omitted, placeholder
    ids are used and the model binds to a fingerprint at first training.
    """
    labels = tuple(labels)
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    if len(set(labels)) < 2:
        raise ValueError("need at least 2 distinct labels")
    if len(hidden_dims) != 4:
        raise ValueError("this classifier has exactly four hidden layers")
    if pattern_ids is None:
        pattern_ids = tuple(f"f{i}" for i in range(input_dim))
    pattern_ids = tuple(pattern_ids)
    if len(pattern_ids) != input_dim:
        raise ValueError("pattern_ids length must equal input_dim")
    dims = [input_dim, *hidden_dims, len(labels)]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPModel(
        weights=weights,
        biases=biases,
        label_names=labels,
        input_pattern_ids=pattern_ids,
        corpus_fingerprint=corpus_fingerprint,
        seed=seed,
    )


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)  # large logits must not overflow
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_input(model: MLPModel, features: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(expected=model.input_dim, got=x.shape[1])
    return x


def _forward_pass(model: MLPModel, x: np.ndarray):
    """Returns (activations, pre_activations, logits); a[0] is the input."""
    activations = [x]
    pre = []
    a = x
    last = len(model.weights) - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pre.append(z)
        if layer < last:
            a = _relu(z)
            activations.append(a)
    return activations, pre, pre[-1]


def forward(model: MLPModel, features) -> np.ndarray:
    """Class probability rows; each sums to 1 and stays finite for any
    logit magnitude."""
    x = _check_input(model, features)
    _, _, logits = _forward_pass(model, x)
    return _softmax(logits)


def loss_and_gradients(model: MLPModel, features, labels, l2_penalty: float = 0.0):
    """Mean cross-entropy + l2_penalty * (squared weight norm), with exact
    gradients congruent to (weights, biases).

    `labels` are integer class indices in [0, k).
    """
    x = _check_input(model, features)
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError("labels must be a vector aligned with the batch")
    if y.size == 0:
        raise ValueError("batch is empty")
    k = model.n_classes
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"label out of range: valid classes are 0..{k - 1}")
    n = x.shape[0]
    activations, pre, logits = _forward_pass(model, x)
    # stable log-softmax for the loss
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    ce = float(np.mean(log_z - shifted[np.arange(n), y]))
    loss = ce + l2_penalty * sum(float(np.sum(w * w)) for w in model.weights)

    probs = _softmax(logits)
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ activations[layer] + 2.0 * l2_penalty * model.weights[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer]) * (pre[layer - 1] > 0)
    return loss, (grad_w, grad_b)


def train(
    model: MLPModel,
    matrix: FeatureMatrix,
    labels,
    config: TrainConfig = TrainConfig(),
) -> tuple[MLPModel, list[float]]:
    """Mini-batch adaptive-moment training (beta1=0.9, beta2=0.999,
    eps=1e-8); shuffling comes from PCG64(config.seed).

    Returns a new model (the input is untouched) and the per-epoch mean
    loss history.  The matrix must carry the fingerprint the model is
    bound to; an unbound (freshly initialized) model adopts it.
    """
    labels = list(labels)
    if matrix.values.shape[0] != len(labels):
        raise ValueError(
            f"matrix has {matrix.values.shape[0]} rows but {len(labels)} labels"
        )
    if model.corpus_fingerprint and matrix.corpus_fingerprint != model.corpus_fingerprint:
        raise FingerprintMismatchError(model.corpus_fingerprint, matrix.corpus_fingerprint)
    if matrix.values.shape[1] != model.input_dim:
        raise DimensionMismatchError(expected=model.input_dim, got=matrix.values.shape[1])
    index_of = {name: i for i, name in enumerate(model.label_names)}
    try:
        y = np.array([index_of[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not among model labels") from None

    x = np.asarray(matrix.values, dtype=np.float64)
    n = x.shape[0]
    out = MLPModel(
        weights=[w.copy() for w in model.weights],
        biases=[b.copy() for b in model.biases],
        label_names=model.label_names,
        input_pattern_ids=model.input_pattern_ids,
        corpus_fingerprint=model.corpus_fingerprint or matrix.corpus_fingerprint,
        seed=model.seed,
    )
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    params = out.weights + out.biases
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    step = 0
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, (grad_w, grad_b) = loss_and_gradients(
                out, x[batch], y[batch], l2_penalty=config.l2_penalty
            )
            epoch_loss += loss * len(batch)
            step += 1
            for p, g, m, v in zip(params, grad_w + grad_b, m_state, v_state):
                m *= beta1
                m += (1 - beta1) * g
                v *= beta2
                v += (1 - beta2) * g * g
                m_hat = m / (1 - beta1**step)
                v_hat = v / (1 - beta2**step)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        history.append(epoch_loss / n)
    return out, history


def predict(model: MLPModel, features) -> list[str]:
    probs = forward(model, features)
    return [model.label_names[i] for i in probs.argmax(axis=1)]


# --- evaluation --------------------------------------------------------------


@dataclass(eq=False)
class EvalReport:
    labels: tuple[str, ...]  # sorted
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    weighted_f1: float
    confusion: np.ndarray  # (k, k) counts, rows = gold, cols = predicted

    def as_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "per_class": {
                name: {
                    "precision": self.precision[name],
                    "recall": self.recall[name],
                    "f1": self.f1[name],
                    "support": self.support[name],
                }
                for name in self.labels
            },
            "weighted_f1": self.weighted_f1,
            "confusion_matrix": self.confusion.tolist(),
        }

    def render_table(self) -> str:
        """Fixed-width table, classes sorted by name, aggregate last."""
        width = max([len("class"), *(len(n) for n in self.labels)])
        lines = [f"{'class':<{width}}  precision  recall  f1      support"]
        for name in self.labels:
            lines.append(
                f"{name:<{width}}  {self.precision[name]:9.4f}  "
                f"{self.recall[name]:6.4f}  {self.f1[name]:6.4f}  {self.support[name]:7d}"
            )
        total = sum(self.support.values())
        lines.append(
            f"{'weighted':<{width}}  {'':9}  {'':6}  {self.weighted_f1:6.4f}  {total:7d}"
        )
        return "\n".join(lines) + "\n"


def evaluate(predicted, gold) -> EvalReport:
    """Per-class precision/recall/F1 with support-weighted aggregate F1.

    Zero denominators score 0 rather than raising: a class that is never
    predicted has precision 0, one absent from gold has recall 0.
    """
    predicted = list(predicted)
    gold = list(gold)
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold")
    if not gold:
        raise ValueError("nothing to evaluate")
    labels = tuple(sorted(set(gold) | set(predicted)))
    index = {name: i for i, name in enumerate(labels)}
    k = len(labels)
    confusion = np.zeros((k, k), dtype=np.int64)
    for g, p in zip(gold, predicted):
        confusion[index[g], index[p]] += 1
    precision, recall, f1, support = {}, {}, {}, {}
    for name in labels:
        i = index[name]
        tp = int(confusion[i, i])
        pred_total = int(confusion[:, i].sum())
        gold_total = int(confusion[i, :].sum())
        p = tp / pred_total if pred_total else 0.0
        r = tp / gold_total if gold_total else 0.0
        precision[name] = p
        recall[name] = r
        f1[name] = 2 * p * r / (p + r) if (p + r) else 0.0
        support[name] = gold_total
    total = sum(support.values())
    weighted = sum(f1[n] * support[n] for n in labels) / total
    return EvalReport(
        labels=labels,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        weighted_f1=weighted,
        confusion=confusion,
    )


# --- persistence -------------------------------------------------------------


def save_model(model: MLPModel, path: str | Path) -> None:
    doc = {
        "layer_dims": model.layer_dims,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "labels": list(model.label_names),
        "input_pattern_ids": list(model.input_pattern_ids),
        "corpus_fingerprint": model.corpus_fingerprint,
        "seed": model.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str | Path) -> MLPModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    model = MLPModel(
        weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
        label_names=tuple(doc["labels"]),
        input_pattern_ids=tuple(doc["input_pattern_ids"]),
        corpus_fingerprint=doc["corpus_fingerprint"],
        seed=int(doc["seed"]),
    )
    if model.layer_dims != list(doc["layer_dims"]):
        raise ValueError(f"{path}: layer_dims disagree with weight shapes")
    return model
