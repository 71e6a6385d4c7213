"""Classifier heads: a ridge-regression linear readout and a dropout MLP.

Class labels are integer indices ``0 .. C-1`` here; mapping class symbols to
indices is the pipeline's job.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DivergenceError, InputError, ParameterError, ShapeError
from .tensor_math import STREAM_MLP_INIT, STREAM_MLP_TRAIN, seeded_rng, solve_ridge

Mode = Literal["train", "eval"]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"labels must lie in [0, {n_classes})")
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


# --------------------------------------------------------------------------
# Ridge readout
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RidgeReadout:
    """Linear map from ``[h, 1]`` to one score per class.

    ``weights`` has shape ``(D + 1) x C``; its last row multiplies the constant
    bias feature and is regularised like the others.
    """

    weights: np.ndarray
    lam: float

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0] - 1

    def scores(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        if h.ndim == 1:
            h = h[None, :]
        if h.shape[1] != self.input_dim:
            raise ShapeError(f"expected {self.input_dim} features, got {h.shape[1]}")
        return _with_bias(h) @ self.weights

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "lam": self.lam}

    @classmethod
    def from_dict(cls, data: dict) -> "RidgeReadout":
        return cls(weights=np.asarray(data["weights"], dtype=np.float64), lam=data["lam"])


def _with_bias(h: np.ndarray) -> np.ndarray:
    return np.hstack([h, np.ones((h.shape[0], 1))])


def ridge_fit(h: np.ndarray, labels, lam: float, n_classes: int | None = None) -> RidgeReadout:
    """Fit one-hot targets on bias-augmented features by ridge regression."""
    h = np.asarray(h, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if h.ndim != 2 or h.shape[0] != labels.shape[0]:
        raise ShapeError(f"h has shape {h.shape} but there are {labels.shape[0]} labels")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if h.shape[0] < n_classes:
        raise InputError(f"need at least {n_classes} samples, got {h.shape[0]}")
    weights = solve_ridge(_with_bias(h), one_hot(labels, n_classes), lam)
    return RidgeReadout(weights=weights, lam=float(lam))


def predict_linear(r: RidgeReadout, h: np.ndarray) -> np.ndarray:
    """Argmax decode; ties go to the lowest class index."""
    return np.argmax(r.scores(h), axis=1)


# --------------------------------------------------------------------------
# MLP
# --------------------------------------------------------------------------


@dataclass(eq=False)
class MlpModel:
    """Fully connected network ``layer_sizes[0] -> ... -> layer_sizes[-1]``.

    Hidden layers use ReLU followed by inverted dropout (train mode only); the
    last layer produces logits. ``weights[i]`` has shape
    ``(layer_sizes[i], layer_sizes[i + 1])``.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout: float = 0.0
    l2: float = 0.0

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ParameterError("an MLP needs at least input and output sizes")
        if not 0 <= self.dropout < 1:
            raise ParameterError(f"dropout must lie in [0, 1), got {self.dropout}")
        if not self.l2 >= 0:
            raise ParameterError(f"l2 must be >= 0, got {self.l2}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeError(f"layer {i} parameters do not chain to {expected}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "dropout": self.dropout,
            "l2": self.l2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        sizes = data["layer_sizes"]
        weights = [
            np.asarray(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
            for i, w in enumerate(data["weights"])
        ]
        return cls(
            layer_sizes=tuple(sizes),
            weights=weights,
            biases=[np.asarray(b, dtype=np.float64) for b in data["biases"]],
            dropout=data["dropout"],
            l2=data["l2"],
        )


def init_mlp(layer_sizes, dropout: float = 0.0, l2: float = 0.0, seed: int = 0) -> MlpModel:
    """Weights uniform on ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases zero."""
    sizes = tuple(int(s) for s in layer_sizes)
    if any(s < 1 for s in sizes):
        raise ParameterError(f"layer sizes must be positive, got {sizes}")
    rng = seeded_rng(seed, STREAM_MLP_INIT)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, dropout=float(dropout), l2=float(l2))


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # input of every layer
    pre_activations: list[np.ndarray] = field(default_factory=list)  # hidden layers only
    masks: list[np.ndarray | None] = field(default_factory=list)  # scaled dropout masks


def mlp_forward(m: MlpModel, x: np.ndarray, mode: Mode = "eval", rng=None):
    """Return ``(logits, cache)``.

    In train mode with ``dropout > 0`` each hidden activation is multiplied by
    a Bernoulli(keep) mask divided by keep, drawn from ``rng``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.layer_sizes[0]:
        raise ShapeError(f"expected a batch x {m.layer_sizes[0]} input, got shape {x.shape}")
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    use_dropout = mode == "train" and m.dropout > 0
    if use_dropout and rng is None:
        raise ParameterError("train-mode dropout needs an rng")
    keep = 1.0 - m.dropout
    cache = ForwardCache()
    a = x
    for i in range(m.n_layers - 1):
        cache.inputs.append(a)
        z = a @ m.weights[i] + m.biases[i]
        cache.pre_activations.append(z)
        a = np.maximum(z, 0.0)
        if use_dropout:
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
            cache.masks.append(mask)
        else:
            cache.masks.append(None)
    cache.inputs.append(a)
    logits = a @ m.weights[-1] + m.biases[-1]
    return logits, cache


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(np.asarray(logits, dtype=np.float64)))


def cross_entropy(logits: np.ndarray, labels) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.shape[0] != labels.shape[0]:
        raise ShapeError("logits and labels disagree on batch size")
    return float(-np.mean(log_softmax(logits)[np.arange(labels.size), labels]))


def l2_penalty(m: MlpModel) -> float:
    """``l2 * sum of squared weight entries``; biases are not penalised."""
    return m.l2 * float(sum(np.sum(w * w) for w in m.weights))


def loss(logits: np.ndarray, labels, m: MlpModel) -> float:
    """Mean softmax cross-entropy plus the weight-decay penalty."""
    return cross_entropy(logits, labels) + l2_penalty(m)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def as_list(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def _backprop(m: MlpModel, x, labels, mode: Mode, rng):
    labels = np.asarray(labels, dtype=np.int64)
    logits, cache = mlp_forward(m, x, mode, rng)
    if labels.shape != (logits.shape[0],):
        raise ShapeError(f"expected {logits.shape[0]} labels, got shape {labels.shape}")
    batch = logits.shape[0]
    ce = cross_entropy(logits, labels)
    delta = softmax(logits)
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    grad_w = [None] * m.n_layers
    grad_b = [None] * m.n_layers
    for i in reversed(range(m.n_layers)):
        grad_w[i] = cache.inputs[i].T @ delta + 2.0 * m.l2 * m.weights[i]
        grad_b[i] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ m.weights[i].T
        if cache.masks[i - 1] is not None:
            delta = delta * cache.masks[i - 1]
        delta = delta * (cache.pre_activations[i - 1] > 0)
    return ce, Gradients(grad_w, grad_b)


def gradients(m: MlpModel, x, labels, mode: Mode = "eval", rng=None) -> Gradients:
    """Exact gradient of :func:`loss` with respect to every weight and bias.

    In train mode the dropout mask is drawn from ``rng`` exactly as
    :func:`mlp_forward` would draw it from the same generator state.
    """
    return _backprop(m, x, labels, mode, rng)[1]


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int | None = None  # None means full batch
    learning_rate: float = 1e-3
    seed: int = 0
    patience: int | None = None  # early stopping on validation loss; off by default

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate >= 0:
            raise ParameterError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.patience is not None and self.patience < 1:
            raise ParameterError(f"patience must be >= 1, got {self.patience}")


@dataclass
class TrainLog:
    """Per-epoch training cross-entropy (no weight-decay term) and optional validation loss."""

    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] | None = None

    def append(self, epoch: int, train_loss: float, val_loss: float | None = None):
        if self.epochs and epoch <= self.epochs[-1]:
            raise ParameterError("epochs must be strictly increasing")
        self.epochs.append(epoch)
        self.train_loss.append(train_loss)
        if val_loss is not None:
            if self.val_loss is None:
                self.val_loss = []
            self.val_loss.append(val_loss)

    def __len__(self):
        return len(self.epochs)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["epoch", "train_loss"]
            if self.val_loss is not None:
                header.append("val_loss")
            writer.writerow(header)
            for i, epoch in enumerate(self.epochs):
                row = [epoch, repr(self.train_loss[i])]
                if self.val_loss is not None:
                    row.append(repr(self.val_loss[i]))
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "TrainLog":
        log = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            for row in reader:
                val = float(row[2]) if len(header) > 2 else None
                log.append(int(row[0]), float(row[1]), val)
        return log


def train_mlp(
    m: MlpModel,
    x: np.ndarray,
    labels,
    config: TrainConfig,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[MlpModel, TrainLog]:
    """Train a copy of ``m`` with Adam on shuffled mini-batches.

    Returns the final-epoch model, or with ``config.patience`` set and a
    validation set given, the model with the lowest validation loss once
    ``patience`` epochs pass without improvement.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ShapeError(f"x has shape {x.shape} but there are {labels.shape[0]} labels")
    if x.shape[0] == 0:
        raise InputError("empty training set")
    if config.patience is not None and validation is None:
        raise ParameterError("early stopping needs a validation set")

    model = m.copy()
    params = model.parameters()
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    rng = seeded_rng(config.seed, STREAM_MLP_TRAIN)
    n = x.shape[0]
    batch_size = n if config.batch_size is None else min(config.batch_size, n)
    lr = config.learning_rate
    log = TrainLog()
    best_val, best_params, stale = np.inf, None, 0
    t = 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            ce, grads = _backprop(model, x[idx], labels[idx], "train", rng)
            if not np.isfinite(ce):
                raise DivergenceError(epoch, lr)
            total += ce * idx.size
            t += 1
            correction1 = 1.0 - ADAM_BETA1**t
            correction2 = 1.0 - ADAM_BETA2**t
            for p, g, m1, m2 in zip(params, grads.as_list(), first, second):
                m1 *= ADAM_BETA1
                m1 += (1.0 - ADAM_BETA1) * g
                m2 *= ADAM_BETA2
                m2 += (1.0 - ADAM_BETA2) * g * g
                p -= lr * (m1 / correction1) / (np.sqrt(m2 / correction2) + ADAM_EPS)
        train_loss = total / n
        if not np.isfinite(train_loss) or not all(np.all(np.isfinite(p)) for p in params):
            raise DivergenceError(epoch, lr)

        val_loss = None
        if validation is not None:
            logits, _ = mlp_forward(model, validation[0], "eval")
            val_loss = cross_entropy(logits, validation[1])
        log.append(epoch, float(train_loss), val_loss)

        if config.patience is not None:
            if val_loss < best_val:
                best_val, stale = val_loss, 0
                best_params = [p.copy() for p in params]
            else:
                stale += 1
                if stale >= config.patience:
                    break

    if best_params is not None:
        for p, best in zip(params, best_params):
            p[...] = best
    return model, log


def predict_mlp(m: MlpModel, x: np.ndarray) -> np.ndarray:
    logits, _ = mlp_forward(m, x, "eval")
    return np.argmax(logits, axis=1)
