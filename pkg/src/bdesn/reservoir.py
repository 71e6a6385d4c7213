"""Fixed random reservoirs and their final-state embeddings.

The state update is ``h_t = f(W_rec h_{t-1} + W_in x_t)`` with no bias and
``h_0 = 0``. A sequence is embedded by its last state; the bidirectional
embedding concatenates the last state of the sequence with the last state of
its time reversal, both computed with the same weights.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDrawError, InputError, ParameterError, ShapeError
from .tensor_math import (
    STREAM_W_IN,
    STREAM_W_REC,
    SparseMatrix,
    random_dense,
    random_sparse,
    seeded_rng,
    spectral_radius,
)

RESERVOIR_FORMAT_VERSION = 1
MAX_REDRAWS = 100

ACTIVATIONS = {
    "tanh": np.tanh,
    "identity": lambda z: z,
}


@dataclass(frozen=True, eq=False)
class Reservoir:
    """Untrained recurrent system. Weights are a pure function of the hyperparameters and seed."""

    n_units: int
    input_dim: int
    rho: float
    omega: float
    density: float
    seed: int
    activation: str
    w_rec: SparseMatrix
    w_in: np.ndarray

    @property
    def f(self):
        return ACTIVATIONS[self.activation]

    def to_dict(self) -> dict:
        return {
            "format_version": RESERVOIR_FORMAT_VERSION,
            "n_units": self.n_units,
            "input_dim": self.input_dim,
            "rho": self.rho,
            "omega": self.omega,
            "density": self.density,
            "seed": self.seed,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Reservoir":
        version = data.get("format_version")
        if version != RESERVOIR_FORMAT_VERSION:
            raise InputError(f"unsupported reservoir format version {version!r}")
        return build_reservoir(
            n_units=data["n_units"],
            rho=data["rho"],
            omega=data["omega"],
            density=data["density"],
            input_dim=data["input_dim"],
            seed=data["seed"],
            activation=data["activation"],
        )


@dataclass(frozen=True, eq=False)
class BiEmbedding:
    forward: np.ndarray
    backward: np.ndarray

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.forward, self.backward])


def build_reservoir(
    n_units: int,
    rho: float,
    omega: float,
    density: float,
    input_dim: int,
    seed: int,
    activation: str = "tanh",
) -> Reservoir:
    """Draw a reservoir and rescale its recurrent matrix to spectral radius ``rho``.

    Input weights are uniform on ``[-omega, omega]``. Recurrent weights are a
    sparse uniform ``[-1, 1]`` draw; a draw whose spectral radius is zero (only
    possible for tiny or very sparse matrices) is replaced by the next
    substream draw.
    """
    if n_units < 1:
        raise ParameterError(f"n_units must be >= 1, got {n_units}")
    if input_dim < 1:
        raise ParameterError(f"input_dim must be >= 1, got {input_dim}")
    if not rho >= 0:
        raise ParameterError(f"rho must be >= 0, got {rho}")
    if not omega > 0:
        raise ParameterError(f"omega must be > 0, got {omega}")
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if activation not in ACTIVATIONS:
        raise ParameterError(
            f"unknown activation {activation!r}; expected one of {sorted(ACTIVATIONS)}"
        )

    w_in = random_dense(seeded_rng(seed, STREAM_W_IN), n_units, input_dim, omega)

    for attempt in range(MAX_REDRAWS):
        raw = random_sparse(seeded_rng(seed, STREAM_W_REC, attempt), n_units, density)
        if rho == 0:
            w_rec = raw.scaled(0.0)
            break
        measured = spectral_radius(raw)
        if measured > 0:
            w_rec = raw.scaled(rho / measured)
            break
    else:
        raise DegenerateDrawError(
            f"recurrent matrix had zero spectral radius on {MAX_REDRAWS} draws "
            f"(n_units={n_units}, density={density}); increase density"
        )

    return Reservoir(
        n_units=int(n_units),
        input_dim=int(input_dim),
        rho=float(rho),
        omega=float(omega),
        density=float(density),
        seed=int(seed),
        activation=activation,
        w_rec=w_rec,
        w_in=w_in,
    )


def _as_values(series) -> np.ndarray:
    values = getattr(series, "values", series)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise ShapeError(f"series must be a T x V array, got shape {values.shape}")
    return values


def step(res: Reservoir, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One state update ``f(W_rec h_prev + W_in x)``."""
    h_prev = np.asarray(h_prev, dtype=np.float64)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if h_prev.shape != (res.n_units,):
        raise ShapeError(f"state must have shape ({res.n_units},), got {h_prev.shape}")
    if x.shape != (res.input_dim,):
        raise ShapeError(f"input must have shape ({res.input_dim},), got {x.shape}")
    return res.f(res.w_rec @ h_prev + res.w_in @ x)


def run(res: Reservoir, series, h0: np.ndarray | None = None) -> np.ndarray:
    """Drive the reservoir with a series and return the ``T x N`` state trajectory."""
    values = _as_values(series)
    if values.shape[0] < 1:
        raise InputError("cannot run a reservoir on an empty series")
    if values.shape[1] != res.input_dim:
        raise ShapeError(
            f"series has {values.shape[1]} variables, reservoir expects {res.input_dim}"
        )
    h = np.zeros(res.n_units) if h0 is None else np.asarray(h0, dtype=np.float64)
    if h.shape != (res.n_units,):
        raise ShapeError(f"h0 must have shape ({res.n_units},), got {h.shape}")
    states = np.empty((values.shape[0], res.n_units))
    for t, x in enumerate(values):
        h = res.f(res.w_rec @ h + res.w_in @ x)
        states[t] = h
    return states


def embed_bidirectional(res: Reservoir, series) -> BiEmbedding:
    values = _as_values(series)
    forward = run(res, values)[-1]
    backward = run(res, values[::-1])[-1]
    return BiEmbedding(forward=forward, backward=backward)


def final_states(res: Reservoir, sequences: Sequence, reverse: bool = False) -> np.ndarray:
    """Last reservoir state for each sequence, as an ``n x N`` matrix.

    Sequences of equal length are driven together as one batch; each keeps its
    own length, nothing is padded.
    """
    arrays = [_as_values(s) for s in sequences]
    out = np.empty((len(arrays), res.n_units))
    groups = defaultdict(list)
    for i, values in enumerate(arrays):
        if values.shape[0] < 1:
            raise InputError(f"sequence {i} is empty")
        if values.shape[1] != res.input_dim:
            raise ShapeError(
                f"sequence {i} has {values.shape[1]} variables, reservoir expects {res.input_dim}"
            )
        groups[values.shape[0]].append(i)
    for length, idx in groups.items():
        # (T, V, B) so each time slice is a V x B block
        block = np.stack([arrays[i] for i in idx], axis=2)
        if reverse:
            block = block[::-1]
        h = np.zeros((res.n_units, len(idx)))
        for t in range(length):
            h = res.f(res.w_rec @ h + res.w_in @ block[t])
        out[idx] = h.T
    return out


def embed(res: Reservoir, sequences: Sequence, bidirectional: bool = True) -> np.ndarray:
    """Embedding matrix: ``n x 2N`` ``[h_T, h'_T]`` rows, or ``n x N`` when unidirectional."""
    forward = final_states(res, sequences)
    if not bidirectional:
        return forward
    backward = final_states(res, sequences, reverse=True)
    return np.hstack([forward, backward])
