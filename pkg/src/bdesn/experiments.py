"""Random hyperparameter search and repeated benchmark runs."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .configfile import CONFIG_TYPES, coerce_field, parse_scalar, read_pairs
from .data_io import Dataset, TimeSeries, class_order, impute_mean, metrics
from .errors import BdesnError, FormatError, InputError, ParameterError, StratificationError
from .pipeline import Config, fit, predict
from .readout import TrainLog
from .tensor_math import STREAM_SEARCH, STREAM_SPLIT, seeded_rng

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Search space
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ParameterError(f"empty uniform range [{self.low}, {self.high}]")

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise ParameterError(f"log-uniform bounds must satisfy 0 < low <= high, got [{self.low}, {self.high}]")

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))


@dataclass(frozen=True)
class Choice:
    """Categorical set. A member that is a dict contributes several parameters at once."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ParameterError("empty choice set")

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class Fixed:
    value: object

    def sample(self, rng):
        return self.value


@dataclass(frozen=True)
class SearchSpace:
    params: dict = field(default_factory=dict)

    @classmethod
    def default(cls) -> "SearchSpace":
        return cls({
            "rho": LogUniform(0.5, 1.5),
            "omega": LogUniform(0.01, 1.0),
            "n_units": Choice((300, 500, 800)),
            "density": Choice((0.05, 0.1, 0.25)),
            "ridge": LogUniform(1e-4, 10.0),
            "n_components": Choice((20, 50, 75)),
            "n_hidden": Choice((1, 2, 3)),
            "hidden_width": Choice((32, 64, 128)),
            "dropout": Uniform(0.0, 0.5),
            "l2": LogUniform(1e-5, 1e-2),
            "learning_rate": LogUniform(1e-4, 1e-2),
            "epochs": Choice((100, 250, 500, 1000, 2000)),
            "batch_size": Choice((25, 50, None)),
        })

    def sample(self, rng) -> dict:
        """Draw one value per key, in key order."""
        out = {}
        for name, dist in self.params.items():
            value = dist.sample(rng)
            if isinstance(value, dict):
                out.update(value)
            else:
                out[name] = value
        return out

    def with_overrides(self, other: "SearchSpace") -> "SearchSpace":
        return SearchSpace({**self.params, **other.params})


def parse_distribution(text: str):
    head, *rest = text.split()
    head = head.lower()
    try:
        if head == "uniform":
            low, high = (float(v) for v in rest)
            return Uniform(low, high)
        if head == "loguniform":
            low, high = (float(v) for v in rest)
            return LogUniform(low, high)
    except ValueError:
        raise FormatError(f"{head} needs two numeric bounds, got {text!r}") from None
    if head == "choice":
        return Choice(tuple(parse_scalar(v) for v in rest))
    if rest:
        raise FormatError(f"unrecognised distribution {text!r}")
    return Fixed(parse_scalar(text))


def read_space(path, base: SearchSpace | None = None) -> SearchSpace:
    """Read a search-space file; keys it omits keep the values of ``base`` (default ranges)."""
    base = SearchSpace.default() if base is None else base
    params = {}
    for key, value in read_pairs(path).items():
        try:
            params[key] = parse_distribution(value)
        except (FormatError, ParameterError) as exc:
            raise FormatError(f"{key}: {exc}", path=path) from None
    return base.with_overrides(SearchSpace(params))


def make_config(kind: str, params: dict, seed: int) -> Config:
    """Build a config of ``kind`` from sampled parameters, ignoring keys it does not use."""
    if kind not in CONFIG_TYPES:
        raise ParameterError(f"unknown model kind {kind!r}")
    cls = CONFIG_TYPES[kind]
    names = {f.name for f in dataclasses.fields(cls)}
    params = dict(params)
    if "hidden" in names and ("n_hidden" in params or "hidden_width" in params):
        params["hidden"] = (int(params.pop("hidden_width", 64)),) * int(params.pop("n_hidden", 1))
    defaults = {f.name: f.default for f in dataclasses.fields(cls)}
    values = {}
    for k, v in params.items():
        if k not in names:
            continue
        if isinstance(v, float) and (k in ("batch_size", "patience") or type(defaults[k]) is int):
            v = int(round(v))
        values[k] = coerce_field(cls, k, v)
    values["seed"] = seed
    return cls(**values)


# --------------------------------------------------------------------------
# Random search
# --------------------------------------------------------------------------


def stratified_split(series: Sequence[TimeSeries], val_fraction: float, seed: int):
    """Seeded per-class split into ``(train, validation)``; order within each part follows the input."""
    series = list(series)
    rng = seeded_rng(seed, STREAM_SPLIT)
    val_idx = []
    for label in class_order(series):
        members = [i for i, s in enumerate(series) if s.label == label]
        n_val = int(round(val_fraction * len(members)))
        if n_val < 1 or n_val >= len(members):
            raise StratificationError(
                f"class {label!r} has {len(members)} series; cannot place it in both "
                f"splits at validation fraction {val_fraction}"
            )
        val_idx.extend(rng.choice(members, size=n_val, replace=False).tolist())
    chosen = set(val_idx)
    train = [s for i, s in enumerate(series) if i not in chosen]
    val = [s for i, s in enumerate(series) if i in chosen]
    return train, val


@dataclass
class TrialResult:
    index: int
    config: Config
    score: float
    train_seconds: float
    seed: int
    error: str | None = None


@dataclass
class SearchResult:
    best: Config
    trials: list[TrialResult]

    @property
    def best_trial(self) -> TrialResult:
        return max(self.trials, key=lambda t: (t.score, -t.index))


def score(model, series, classes, positive_class=None) -> float:
    m = metrics(predict(model, series), [s.label for s in series], classes, positive_class)
    return m.f1 if positive_class is not None else m.accuracy


def random_search(
    space: SearchSpace,
    n_trials: int,
    train: Sequence[TimeSeries],
    kind: str,
    seed: int = 0,
    classes=None,
    positive_class=None,
    val_fraction: float = 0.2,
) -> SearchResult:
    """Sample ``n_trials`` configs and keep the best on a stratified validation split.

    Only the training series are an input. Validation score is accuracy, or
    the positive-class F1 when ``positive_class`` is set. Ties go to the
    earliest trial; trials that fail to fit score ``-inf`` and are kept in the
    record with their error.
    """
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    train = list(train)
    classes = class_order(train) if classes is None else list(classes)
    inner, val = stratified_split(train, val_fraction, seed)
    rng = seeded_rng(seed, STREAM_SEARCH)
    trials = []
    for i in range(n_trials):
        params = space.sample(rng)
        trial_seed = seed + i
        try:
            cfg = make_config(kind, params, trial_seed)
        except (BdesnError, TypeError, ValueError) as exc:
            raise FormatError(f"search space produced an invalid {kind} config: {exc}") from None
        start = time.perf_counter()
        try:
            model, _ = fit(inner, cfg, classes)
            elapsed = time.perf_counter() - start
            value = score(model, val, classes, positive_class)
            error = None
        except BdesnError as exc:
            elapsed = time.perf_counter() - start
            value, error = -math.inf, f"{type(exc).__name__}: {exc}"
        trials.append(TrialResult(i, cfg, value, elapsed, trial_seed, error))
        log.info("trial %d/%d score=%.4f %s", i + 1, n_trials, value, error or "")
    result = SearchResult(best=None, trials=trials)
    best = result.best_trial
    if best.error is not None:
        raise InputError(f"all {n_trials} search trials failed; last error: {best.error}")
    result.best = best.config
    return result


# --------------------------------------------------------------------------
# Benchmarks
# --------------------------------------------------------------------------


@dataclass
class RunResult:
    run: int
    seed: int
    accuracy: float | None
    f1: float | None
    train_seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _mean_std(values) -> tuple[float, float]:
    """Mean and unbiased (n-1) standard deviation; std is 0.0 for a single value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return math.nan, math.nan
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), std


@dataclass
class BenchmarkReport:
    kind: str
    dataset: str
    config: Config
    runs: list[RunResult]
    train_logs: dict[int, TrainLog] = field(default_factory=dict)

    @property
    def ok_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.ok]

    @property
    def accuracy(self) -> tuple[float, float]:
        return _mean_std([r.accuracy for r in self.ok_runs])

    @property
    def f1(self) -> tuple[float, float]:
        return _mean_std([r.f1 for r in self.ok_runs])

    @property
    def mean_train_minutes(self) -> float:
        return _mean_std([r.train_seconds / 60.0 for r in self.ok_runs])[0]


def run_benchmark(
    dataset: Dataset,
    config: Config,
    n_runs: int = 10,
    base_seed: int = 0,
    positive_class=None,
    log_dir=None,
) -> BenchmarkReport:
    """Fit and score ``config`` ``n_runs`` times; run ``i`` uses seed ``base_seed + i``.

    Timing covers the fit call only. Failed runs are kept with their error.
    BDESN training logs are written to ``log_dir`` as
    ``<dataset>_<kind>_run<i>.csv`` when a directory is given.
    """
    if n_runs < 1:
        raise ParameterError(f"n_runs must be >= 1, got {n_runs}")
    ds = impute_mean(dataset)
    actual = [s.label for s in ds.test]
    report = BenchmarkReport(config.kind, ds.name, config, runs=[])
    for i in range(n_runs):
        seed = base_seed + i
        cfg = dataclasses.replace(config, seed=seed)
        start = time.perf_counter()
        try:
            model, train_log = fit(ds.train, cfg, ds.classes)
        except BdesnError as exc:
            elapsed = time.perf_counter() - start
            report.runs.append(RunResult(i, seed, None, None, elapsed, f"{type(exc).__name__}: {exc}"))
            log.warning("run %d failed: %s", i, exc)
            continue
        elapsed = time.perf_counter() - start
        m = metrics(predict(model, ds.test), actual, ds.classes, positive_class)
        report.runs.append(RunResult(i, seed, m.accuracy, m.f1, elapsed))
        if train_log is not None:
            report.train_logs[i] = train_log
            if log_dir is not None:
                Path(log_dir).mkdir(parents=True, exist_ok=True)
                train_log.to_csv(Path(log_dir) / f"{ds.name}_{config.kind}_run{i}.csv")
    return report


RUN_COLUMNS = ["model", "dataset", "run", "seed", "status", "accuracy", "f1", "train_seconds"]


def write_runs_csv(reports: Sequence[BenchmarkReport], path) -> None:
    """One row per run; ``train_seconds`` is the only non-deterministic column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
        for rep in reports:
            for r in rep.runs:
                writer.writerow([
                    rep.kind, rep.dataset, r.run, r.seed,
                    "ok" if r.ok else f"failed: {r.error}",
                    "" if r.accuracy is None else repr(r.accuracy),
                    "" if r.f1 is None else repr(r.f1),
                    f"{r.train_seconds:.6f}",
                ])


def format_table(reports: Sequence[BenchmarkReport]) -> str:
    """Aligned text summary: accuracy and F1 in percent (mean +- std), time in minutes."""
    header = ["Dataset", "Model", "Runs", "Accuracy", "F1", "Time (min)"]
    rows = [header]
    for rep in reports:
        acc, acc_sd = rep.accuracy
        f1, f1_sd = rep.f1
        runs = f"{len(rep.ok_runs)}/{len(rep.runs)}"
        rows.append([
            rep.dataset, rep.kind.upper(), runs,
            f"{100 * acc:.2f} ± {100 * acc_sd:.2f}",
            f"{f1:.3f} ± {f1_sd:.3f}",
            f"{rep.mean_train_minutes:.3f}",
        ])
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
