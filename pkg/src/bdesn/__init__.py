"""Bidirectional deep-readout echo state networks for time-series classification.

Pipeline: an untrained reservoir embeds each series by its final state over
the series and over its time reversal, PCA compresses the concatenated
states, and a dropout MLP classifies them. A unidirectional ESN with a ridge
readout is included as the baseline.
"""

from .data_io import Dataset, Metrics, TimeSeries, impute_mean, load_dataset, metrics, synth_task
from .dimred import PcaModel, pca_fit, pca_transform
from .errors import BdesnError
from .pipeline import (
    BdesnConfig,
    BdesnModel,
    EsnConfig,
    EsnModel,
    fit_bdesn,
    fit_esn,
    load_model,
    predict,
    save_model,
)
from .reservoir import Reservoir, build_reservoir, embed_bidirectional, run, step

__version__ = "0.1.0"

__all__ = [
    "BdesnConfig",
    "BdesnError",
    "BdesnModel",
    "Dataset",
    "EsnConfig",
    "EsnModel",
    "Metrics",
    "PcaModel",
    "Reservoir",
    "TimeSeries",
    "build_reservoir",
    "embed_bidirectional",
    "fit_bdesn",
    "fit_esn",
    "impute_mean",
    "load_dataset",
    "load_model",
    "metrics",
    "pca_fit",
    "pca_transform",
    "predict",
    "run",
    "save_model",
    "step",
    "synth_task",
]
