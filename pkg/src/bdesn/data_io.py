"""Datasets of labelled multivariate series: canonical CSV I/O, imputation,
synthetic tasks and classification metrics.

Canonical CSV format (UTF-8, ``,`` delimiter, LF line endings)::

    series_id,label,t,x1,...,xV
    s0,A,0,0.25,1.5
    s0,A,1,NaN,1.25
    s1,B,0,...

One row per timestep. The rows of a series are contiguous, ``t`` counts
0, 1, 2, ..., every row has the same number of variables and
missing values are the literal ``NaN``. Values are written with 17
significant digits so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, ImputationError, InputError, ParameterError
from .tensor_math import STREAM_SYNTH, seeded_rng

HEADER_PREFIX = ["series_id", "label", "t"]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    id: str
    label: str
    values: np.ndarray  # T x V, NaN marks a missing entry

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    train: list[TimeSeries]
    test: list[TimeSeries]
    n_vars: int
    classes: list[str]
    name: str = "dataset"

    def labels(self, split: str = "train") -> list[str]:
        return [s.label for s in getattr(self, split)]


def class_order(series: Sequence[TimeSeries]) -> list[str]:
    """Distinct labels in order of first appearance."""
    return list(dict.fromkeys(s.label for s in series))


def make_dataset(train, test, name: str = "dataset") -> Dataset:
    train, test = list(train), list(test)
    if not train or not test:
        raise InputError("both train and test splits must be non-empty")
    n_vars = {s.n_vars for s in train + test}
    if len(n_vars) != 1:
        raise InputError(f"series disagree on the number of variables: {sorted(n_vars)}")
    classes = class_order(train)
    unseen = [c for c in class_order(test) if c not in classes]
    if unseen:
        raise InputError(f"test labels absent from the training split: {unseen}")
    return Dataset(train=train, test=test, n_vars=n_vars.pop(), classes=classes, name=name)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def _format_value(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if not math.isfinite(v):
        raise InputError(f"cannot serialise non-finite value {v}")
    return format(v, ".17g")


def save_split(series: Sequence[TimeSeries], path) -> None:
    series = list(series)
    if not series:
        raise InputError("refusing to write an empty split")
    n_vars = series[0].n_vars
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(HEADER_PREFIX + [f"x{j + 1}" for j in range(n_vars)]) + "\n")
        for s in series:
            if s.n_vars != n_vars:
                raise InputError(f"series {s.id!r} has {s.n_vars} variables, expected {n_vars}")
            for t, row in enumerate(s.values):
                cells = [s.id, s.label, str(t)] + [_format_value(v) for v in row]
                fh.write(",".join(cells) + "\n")


def save_dataset(ds: Dataset, train_path, test_path) -> None:
    save_split(ds.train, train_path)
    save_split(ds.test, test_path)


def _parse_float(text: str, line: int, path) -> float:
    if text == "NaN":
        return math.nan
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}", line=line, path=path) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite value {text!r} (use NaN for missing)", line=line, path=path)
    return v


def load_split(path) -> list[TimeSeries]:
    """Read one split in the canonical CSV format."""
    path = Path(path)
    series: list[TimeSeries] = []
    seen: set[str] = set()
    current_id = current_label = None
    rows: list[list[float]] = []
    last_t = -1
    n_vars = None

    def flush():
        if current_id is not None:
            series.append(TimeSeries(current_id, current_label, np.array(rows, dtype=np.float64)))

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if header[:3] != HEADER_PREFIX or len(header) < 4:
            raise FormatError("header must be series_id,label,t,x1,...,xV", line=1, path=path)
        n_vars = len(header) - 3
        if header[3:] != [f"x{j + 1}" for j in range(n_vars)]:
            raise FormatError("variable columns must be named x1..xV", line=1, path=path)
        for line, record in enumerate(reader, start=2):
            if len(record) != n_vars + 3:
                raise FormatError(
                    f"expected {n_vars} variables, found {len(record) - 3}", line=line, path=path
                )
            sid, label, t_text = record[:3]
            try:
                t = int(t_text)
            except ValueError:
                raise FormatError(f"bad timestep {t_text!r}", line=line, path=path) from None
            if sid != current_id:
                if sid in seen:
                    raise FormatError(f"rows of series {sid!r} are not contiguous", line=line, path=path)
                if t != 0:
                    raise FormatError(f"series {sid!r} must start at t=0", line=line, path=path)
                flush()
                seen.add(sid)
                current_id, current_label, rows = sid, label, []
            else:
                # the saver numbers steps 0, 1, 2, ...; gaps could not round-trip
                if t != last_t + 1:
                    raise FormatError(
                        f"t must increase by 1 within {sid!r}, got {t} after {last_t}",
                        line=line, path=path,
                    )
                if label != current_label:
                    raise FormatError(f"label changes within series {sid!r}", line=line, path=path)
            last_t = t
            rows.append([_parse_float(v, line, path) for v in record[3:]])
    flush()
    if not series:
        raise InputError(f"{path}: split contains no series")
    return series


def load_dataset(train_path, test_path, name: str | None = None) -> Dataset:
    train = load_split(train_path)
    test = load_split(test_path)
    if train[0].n_vars != test[0].n_vars:
        raise FormatError(
            f"train has {train[0].n_vars} variables but test has {test[0].n_vars}", path=test_path
        )
    if name is None:
        name = Path(train_path).stem.removesuffix("_TRAIN")
    return make_dataset(train, test, name=name)


# --------------------------------------------------------------------------
# Imputation
# --------------------------------------------------------------------------


def training_means(series: Sequence[TimeSeries]) -> np.ndarray:
    """Per-variable mean over every observed training timestep."""
    stacked = np.vstack([s.values for s in series])
    observed = ~np.isnan(stacked)
    counts = observed.sum(axis=0)
    missing_vars = np.flatnonzero(counts == 0)
    if missing_vars.size:
        names = ", ".join(f"x{j + 1}" for j in missing_vars)
        raise ImputationError(f"no observed training values for variable(s) {names}")
    return np.where(observed, stacked, 0.0).sum(axis=0) / counts


def _fill(series: Sequence[TimeSeries], means: np.ndarray) -> list[TimeSeries]:
    out = []
    for s in series:
        mask = np.isnan(s.values)
        if mask.any():
            s = replace(s, values=np.where(mask, means, s.values))
        out.append(s)
    return out


def impute_mean(ds: Dataset) -> Dataset:
    """Replace missing entries in both splits by the pooled training mean of their variable."""
    if not any(np.isnan(s.values).any() for s in ds.train + ds.test):
        return ds
    means = training_means(ds.train)
    return replace(ds, train=_fill(ds.train, means), test=_fill(ds.test, means))


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Metrics:
    """Accuracy, F1 and confusion counts (rows actual, columns predicted)."""

    accuracy: float
    f1: float
    confusion: np.ndarray
    classes: list
    positive_class: object = None


def metrics(predicted, actual, classes=None, positive_class=None) -> Metrics:
    """Score predictions against true labels.

    F1 is the positive-class F1 when ``positive_class`` is given or there are
    exactly two classes (positive defaults to the second class of the
    alphabet); otherwise it is the macro average of per-class F1 over the
    classes that occur in ``actual`` or ``predicted``. A class with no true
    positives has F1 0.
    """
    predicted, actual = list(predicted), list(actual)
    if len(predicted) != len(actual):
        raise InputError(f"{len(predicted)} predictions for {len(actual)} labels")
    if not actual:
        raise InputError("cannot score an empty prediction set")
    if classes is None:
        classes = list(dict.fromkeys(actual + predicted))
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    unknown = [v for v in dict.fromkeys(actual + predicted) if v not in index]
    if unknown:
        raise InputError(f"labels outside the class alphabet: {unknown}")
    if positive_class is not None and positive_class not in index:
        raise InputError(f"positive class {positive_class!r} not in the class alphabet")

    k = len(classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, ([index[a] for a in actual], [index[p] for p in predicted]), 1)
    tp = np.diag(confusion).astype(np.float64)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    per_class = np.divide(2 * tp, denom, out=np.zeros(k), where=denom > 0)

    if positive_class is None and k == 2:
        positive_class = classes[1]
    if positive_class is not None:
        f1 = float(per_class[index[positive_class]])
    else:
        present = denom > 0
        f1 = float(per_class[present].mean())
    accuracy = float(tp.sum() / len(actual))
    return Metrics(accuracy, f1, confusion, classes, positive_class)


# --------------------------------------------------------------------------
# Synthetic tasks
# --------------------------------------------------------------------------

SYNTH_KINDS = ("two-freq-sinusoid", "first-step-memory")
TWO_FREQ = (2.0, 5.0)


def _balanced_labels(rng, n: int) -> np.ndarray:
    labels = rng.permutation(np.arange(n) % 2)
    # class "0" leads so the first-appearance class order is stable across seeds
    first_zero = int(np.argmax(labels == 0))
    labels[[0, first_zero]] = labels[[first_zero, 0]]
    return labels


def synth_task(
    kind: str,
    n_train: int = 200,
    n_test: int = 200,
    length: int = 100,
    noise: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Generate a two-class univariate task.

    ``two-freq-sinusoid``: class ``k`` is ``sin(2 pi f_k t / length)`` plus
    Gaussian noise, with ``f = (2, 5)``.

    ``first-step-memory``: ``x_0`` is ``-1`` for class 0 and ``+1`` for class 1;
    every later step is pure Gaussian noise, so only the first input carries
    the label. Each split is balanced (``n // 2`` per class when ``n`` is even).
    """
    if kind not in SYNTH_KINDS:
        raise ParameterError(f"unknown synthetic task {kind!r}; expected one of {SYNTH_KINDS}")
    if n_train < 2 or n_test < 1 or length < 1:
        raise ParameterError("n_train >= 2, n_test >= 1 and length >= 1 are required")
    if noise < 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    rng = seeded_rng(seed, STREAM_SYNTH)
    t = np.arange(length)

    def make(split: str, n: int) -> list[TimeSeries]:
        out = []
        for i, k in enumerate(_balanced_labels(rng, n)):
            eps = noise * rng.standard_normal(length)
            if kind == "two-freq-sinusoid":
                x = np.sin(2 * np.pi * TWO_FREQ[k] * t / length) + eps
            else:
                x = eps
                x[0] = 1.0 if k == 1 else -1.0
            out.append(TimeSeries(f"{split}{i}", str(k), x[:, None]))
        return out

    return make_dataset(make("train", n_train), make("test", n_test), name=kind)
