"""End-to-end classifiers.

``EsnModel``: standardise -> reservoir final state -> ridge readout.
``BdesnModel``: standardise -> bidirectional final states -> PCA -> MLP.

Fitting only ever sees the training series; the frozen models are then
applied unchanged to new data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import reservoir as rsv
from .data_io import TimeSeries, class_order
from .dimred import PcaModel, numerical_rank, pca_fit
from .errors import InputError, ParameterError, ShapeError
from .readout import (
    MlpModel,
    RidgeReadout,
    TrainConfig,
    TrainLog,
    init_mlp,
    predict_linear,
    predict_mlp,
    ridge_fit,
    train_mlp,
)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EsnConfig:
    n_units: int = 200
    rho: float = 0.9
    omega: float = 0.5
    density: float = 0.1
    ridge: float = 1e-2
    seed: int = 0
    bidirectional: bool = False

    kind = "esn"


@dataclass(frozen=True)
class BdesnConfig:
    n_units: int = 200
    rho: float = 0.9
    omega: float = 0.5
    density: float = 0.1
    n_components: int = 20
    hidden: tuple[int, ...] = (64,)
    dropout: float = 0.1
    l2: float = 1e-4
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int | None = 25
    seed: int = 0
    patience: int | None = None

    kind = "bdesn"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


Config = Union[EsnConfig, BdesnConfig]


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    """Per-variable training mean and standard deviation (1 for constant variables)."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, series: Sequence[TimeSeries]) -> "StandardizationStats":
        stacked = np.vstack([s.values for s in series])
        mean = np.nanmean(stacked, axis=0)
        std = np.nanstd(stacked, axis=0)
        if not np.all(np.isfinite(mean)):
            raise InputError("a variable has no observed training values")
        std = np.where(std > 0, std, 1.0)
        return cls(mean=mean, std=std)

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Z-score one series; a missing entry becomes the training mean, i.e. 0."""
        values = np.asarray(values, dtype=np.float64)
        z = (values - self.mean) / self.std
        return np.where(np.isnan(z), 0.0, z)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data) -> "StandardizationStats":
        return cls(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class EsnModel:
    config: EsnConfig
    classes: list[str]
    stats: StandardizationStats
    reservoir: rsv.Reservoir
    readout: RidgeReadout

    def features(self, series: Sequence[TimeSeries]) -> np.ndarray:
        return rsv.embed(self.reservoir, _standardized(self, series), self.config.bidirectional)


@dataclass(frozen=True, eq=False)
class BdesnModel:
    config: BdesnConfig
    classes: list[str]
    stats: StandardizationStats
    reservoir: rsv.Reservoir
    pca: PcaModel
    mlp: MlpModel

    def embedding(self, series: Sequence[TimeSeries]) -> np.ndarray:
        """``n x 2N`` bidirectional embeddings ``[h_T, h'_T]`` before PCA."""
        return rsv.embed(self.reservoir, _standardized(self, series), bidirectional=True)

    def features(self, series: Sequence[TimeSeries]) -> np.ndarray:
        return self.pca.transform(self.embedding(series))


Model = Union[EsnModel, BdesnModel]


def _standardized(model, series) -> list[np.ndarray]:
    n_vars = model.stats.mean.shape[0]
    out = []
    for s in series:
        values = np.asarray(getattr(s, "values", s), dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] != n_vars:
            raise InputError(f"series has shape {values.shape}; the model expects {n_vars} variables")
        out.append(model.stats.transform(values))
    return out


def _label_indices(train, classes):
    if classes is None:
        classes = class_order(train)
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    missing = [s.label for s in train if s.label not in index]
    if missing:
        raise InputError(f"training labels absent from the class list: {sorted(set(missing))}")
    return classes, np.array([index[s.label] for s in train], dtype=np.int64)


def _check_train(train) -> list[TimeSeries]:
    train = list(train)
    if not train:
        raise InputError("training split is empty")
    if len({s.label for s in train}) < 2:
        raise InputError("training split needs at least two classes")
    return train


def fit_esn(train: Sequence[TimeSeries], cfg: EsnConfig, classes=None) -> EsnModel:
    """Fit the ridge-readout baseline on the training series only."""
    train = _check_train(train)
    classes, y = _label_indices(train, classes)
    stats = StandardizationStats.fit(train)
    res = rsv.build_reservoir(cfg.n_units, cfg.rho, cfg.omega, cfg.density, stats.mean.shape[0], cfg.seed)
    partial = EsnModel(cfg, classes, stats, res, readout=None)
    readout = ridge_fit(partial.features(train), y, cfg.ridge, n_classes=len(classes))
    return EsnModel(cfg, classes, stats, res, readout)


def fit_bdesn(
    train: Sequence[TimeSeries],
    cfg: BdesnConfig,
    classes=None,
    validation: Sequence[TimeSeries] | None = None,
) -> tuple[BdesnModel, TrainLog]:
    """Fit reservoir -> PCA -> MLP on the training series.

    ``validation`` series, if given, only feed the per-epoch validation loss
    (and early stopping when ``cfg.patience`` is set).
    """
    train = _check_train(train)
    classes, y = _label_indices(train, classes)
    if cfg.n_components > 2 * cfg.n_units:
        raise ParameterError(
            f"n_components={cfg.n_components} exceeds the embedding width 2N={2 * cfg.n_units}"
        )
    if cfg.n_components > len(train):
        raise ParameterError(
            f"n_components={cfg.n_components} exceeds the training count {len(train)}"
        )
    stats = StandardizationStats.fit(train)
    res = rsv.build_reservoir(cfg.n_units, cfg.rho, cfg.omega, cfg.density, stats.mean.shape[0], cfg.seed)
    shell = BdesnModel(cfg, classes, stats, res, pca=None, mlp=None)
    emb = shell.embedding(train)
    rank = numerical_rank(emb)
    if cfg.n_components > rank:
        raise ParameterError(
            f"n_components={cfg.n_components} exceeds the numerical rank {rank} "
            "of the training embeddings"
        )
    pca = pca_fit(emb, cfg.n_components)
    z = pca.transform(emb)

    val = None
    if validation is not None:
        validation = list(validation)
        _, y_val = _label_indices(validation, classes)
        val = (pca.transform(shell.embedding(validation)), y_val)

    mlp = init_mlp(
        (cfg.n_components, *cfg.hidden, len(classes)), cfg.dropout, cfg.l2, seed=cfg.seed
    )
    train_cfg = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        patience=cfg.patience,
    )
    mlp, log = train_mlp(mlp, z, y, train_cfg, validation=val)
    return BdesnModel(cfg, classes, stats, res, pca, mlp), log


def fit(train: Sequence[TimeSeries], cfg: Config, classes=None):
    """Fit either model kind; returns ``(model, TrainLog or None)``."""
    if isinstance(cfg, EsnConfig):
        return fit_esn(train, cfg, classes), None
    if isinstance(cfg, BdesnConfig):
        return fit_bdesn(train, cfg, classes)
    raise ParameterError(f"unknown config type {type(cfg).__name__}")


def predict(model: Model, series) -> list[str]:
    """Class labels for one series or a sequence of series."""
    single = isinstance(series, TimeSeries) or (
        isinstance(series, np.ndarray) and series.ndim <= 2 and series.dtype != object
    )
    batch = [series] if single else list(series)
    if isinstance(model, EsnModel):
        idx = predict_linear(model.readout, model.features(batch))
    elif isinstance(model, BdesnModel):
        idx = predict_mlp(model.mlp, model.features(batch))
    else:
        raise ShapeError(f"not a fitted model: {type(model).__name__}")
    labels = [model.classes[i] for i in idx]
    return labels[0] if single else labels


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    data = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.config.kind,
        "config": asdict(model.config),
        "classes": list(model.classes),
        "standardization": model.stats.to_dict(),
        "reservoir": model.reservoir.to_dict(),
    }
    if isinstance(model, EsnModel):
        data["readout"] = model.readout.to_dict()
    else:
        data["pca"] = model.pca.to_dict()
        data["mlp"] = model.mlp.to_dict()
    return data


def model_from_dict(data: dict) -> Model:
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InputError(f"unsupported model format version {version!r}")
    stats = StandardizationStats.from_dict(data["standardization"])
    res = rsv.Reservoir.from_dict(data["reservoir"])
    if data["kind"] == "esn":
        return EsnModel(
            EsnConfig(**data["config"]), data["classes"], stats, res,
            RidgeReadout.from_dict(data["readout"]),
        )
    if data["kind"] == "bdesn":
        cfg = BdesnConfig(**data["config"])
        return BdesnModel(
            cfg, data["classes"], stats, res,
            PcaModel.from_dict(data["pca"]), MlpModel.from_dict(data["mlp"]),
        )
    raise InputError(f"unknown model kind {data['kind']!r}")


def save_model(model: Model, path) -> None:
    """Write a model as JSON; floats round-trip exactly, reservoir weights are regenerated from the seed."""
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path) -> Model:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not a model file ({exc})") from None
    return model_from_dict(data)
