"""Principal component analysis on embedding matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import InputError, ParameterError, ShapeError
from .tensor_math import sym_eig


class Reducer(Protocol):
    """Fit/transform interface shared by dimensionality reducers.

    PCA is the only implementation; a kernel variant would plug in here.
    """

    def fit(self, x: np.ndarray) -> "Reducer": ...

    def transform(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Column mean, top-``d`` covariance eigenvectors (as columns) and their eigenvalues."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def d(self) -> int:
        return self.components.shape[1]

    @property
    def input_dim(self) -> int:
        return self.components.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        return pca_transform(self, x)

    def reconstruct(self, z: np.ndarray) -> np.ndarray:
        """Map projected coordinates back to the input space."""
        z = np.asarray(z, dtype=np.float64)
        return z @ self.components.T + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            components=np.asarray(data["components"], dtype=np.float64).reshape(
                len(data["mean"]), -1
            ),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=np.float64),
        )


def pca_fit(x: np.ndarray, d: int) -> PcaModel:
    """Fit PCA with ``d`` components on the rows of ``x``.

    The covariance uses the unbiased ``1/(n-1)`` normalisation. Component signs
    follow :func:`~bdesn.tensor_math.sym_eig` (largest-magnitude entry positive).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"pca_fit expects an n x D matrix, got shape {x.shape}")
    n, dim = x.shape
    if n < 2:
        raise InputError(f"pca_fit needs at least 2 samples, got {n}")
    if not 1 <= d <= min(n, dim):
        raise ParameterError(f"d must lie in [1, min(n, D)] = [1, {min(n, dim)}], got {d}")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (n - 1)
    values, vectors = sym_eig(cov)
    return PcaModel(mean=mean, components=vectors[:, :d].copy(), eigenvalues=values[:d].copy())


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeError(
            f"expected an m x {model.input_dim} matrix, got shape {x.shape}"
        )
    return (x - model.mean) @ model.components


def numerical_rank(x: np.ndarray, rtol: float = 1e-10) -> int:
    """Rank of the centred data: count of covariance eigenvalues above ``rtol`` times the largest."""
    x = np.asarray(x, dtype=np.float64)
    centred = x - x.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s**2 > rtol * s[0] ** 2))


class Pca:
    """Estimator wrapper around :func:`pca_fit` satisfying :class:`Reducer`."""

    def __init__(self, n_components: int):
        self.n_components = n_components
        self.model_: PcaModel | None = None

    def fit(self, x):
        self.model_ = pca_fit(x, self.n_components)
        return self

    def transform(self, x):
        if self.model_ is None:
            raise InputError("Pca.transform called before fit")
        return pca_transform(self.model_, x)
