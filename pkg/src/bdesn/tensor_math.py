"""Seeded random matrices and the few linear-algebra kernels the models need.

Dense matrices are plain ``float64`` numpy arrays. Recurrent reservoir
weights use :class:`SparseMatrix`, a coordinate-list container that converts
to CSR for products.

Random numbers come from :func:`seeded_rng`, a numpy ``Generator`` on the
counter-based Philox bit generator. The entropy is the tuple
``(seed, *stream)``, so every consumer draws from its own named substream and
equal seeds reproduce bit-identical draws on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ConvergenceError, ParameterError, ShapeError, SingularityError

# Substream identifiers. Kept numeric because SeedSequence entropy is integral.
STREAM_W_IN = 1
STREAM_W_REC = 2
STREAM_POWER_ITERATION = 3
STREAM_MLP_INIT = 10
STREAM_MLP_TRAIN = 11
STREAM_SPLIT = 20
STREAM_SEARCH = 21
STREAM_SYNTH = 30

_POWER_ITERATION_SEED = 0x5EED


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox-backed generator for ``seed`` and an optional substream path."""
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    entropy = [int(seed), *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square sparse matrix stored as unique ``(row, col, value)`` triplets."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    density: float
    _csr: scipy.sparse.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rows.shape != self.cols.shape or self.rows.shape != self.values.shape:
            raise ShapeError("rows, cols and values must have equal length")
        if self.rows.size and (self.rows.max() >= self.dim or self.cols.max() >= self.dim):
            raise ShapeError(f"entry index out of range for dim={self.dim}")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("sparse values must be finite")
        csr = scipy.sparse.csr_matrix(
            (self.values, (self.rows, self.cols)), shape=(self.dim, self.dim)
        )
        if csr.nnz != self.rows.size:
            raise ShapeError("duplicate (row, col) entries")
        csr.sort_indices()
        object.__setattr__(self, "_csr", csr)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def csr(self) -> scipy.sparse.csr_matrix:
        return self._csr

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def scaled(self, factor: float) -> "SparseMatrix":
        return SparseMatrix(
            self.dim, self.rows, self.cols, self.values * float(factor), self.density
        )

    def __matmul__(self, other):
        return self._csr @ other


def random_dense(rng: np.random.Generator, rows: int, cols: int, scale: float) -> np.ndarray:
    """Dense ``rows x cols`` matrix with entries i.i.d. uniform on ``[-scale, scale]``."""
    if not scale > 0:
        raise ParameterError(f"scale must be > 0, got {scale}")
    if rows < 0 or cols < 0:
        raise ParameterError("matrix dimensions must be non-negative")
    return rng.uniform(-scale, scale, size=(rows, cols))


def random_sparse(rng: np.random.Generator, dim: int, density: float) -> SparseMatrix:
    """Sparse ``dim x dim`` matrix with ``round(density * dim**2)`` (at least one)
    nonzeros at positions drawn without replacement, values uniform on ``[-1, 1]``.
    """
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    total = dim * dim
    count = min(total, max(1, int(round(density * total))))
    flat = np.sort(rng.choice(total, size=count, replace=False))
    values = rng.uniform(-1.0, 1.0, size=count)
    return SparseMatrix(dim, flat // dim, flat % dim, values, float(density))


def _as_operator(m):
    if isinstance(m, SparseMatrix):
        return m.csr
    if scipy.sparse.issparse(m):
        return m.tocsr()
    arr = np.asarray(m, dtype=np.float64)
    return arr


def spectral_radius(
    m,
    tol: float = 1e-12,
    max_iter: int = 50_000,
    block_size: int = 8,
) -> float:
    """Estimate the largest absolute eigenvalue of a square matrix.

    Runs orthogonal (block power) iteration from a seeded random block and
    takes the largest Ritz-value modulus of the projected matrix. A block is
    needed because the dominant eigenvalues of a random real matrix are
    frequently a complex-conjugate pair, on which single-vector power
    iteration oscillates instead of converging.

    Args:
        m: dense array, :class:`SparseMatrix` or scipy sparse matrix.
        tol: relative change of the estimate between checks that counts as
            converged (must hold on two consecutive checks).
        max_iter: iteration budget.
        block_size: number of simultaneously iterated vectors.

    Raises:
        ShapeError: ``m`` is not square.
        ConvergenceError: no convergence within ``max_iter``; carries the last estimate.
    """
    op = _as_operator(m)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ShapeError(f"spectral_radius needs a square matrix, got shape {op.shape}")
    if not tol > 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    n = op.shape[0]
    if n == 0:
        raise ShapeError("empty matrix")
    data = op.data if scipy.sparse.issparse(op) else op
    if not np.all(np.isfinite(data)):
        raise ParameterError("matrix has non-finite entries")

    # Ritz moduli below this are round-off from re-orthogonalising a collapsed block.
    if scipy.sparse.issparse(op):
        fro = float(np.sqrt(np.sum(op.data**2)))
    else:
        fro = float(np.linalg.norm(op))
    zero_level = n * np.finfo(float).eps * fro

    p = min(block_size, n)
    rng = seeded_rng(_POWER_ITERATION_SEED, STREAM_POWER_ITERATION)
    q, _ = np.linalg.qr(rng.uniform(-1.0, 1.0, size=(n, p)))
    check_every = 1 if p == n else 10
    previous = None
    stable = 0
    restarts = 0
    for it in range(1, max_iter + 1):
        z = op @ q
        if not np.any(z):
            # A generic block annihilated by powers of m means every eigenvalue is 0.
            if restarts >= 2:
                return 0.0
            restarts += 1
            q, _ = np.linalg.qr(rng.uniform(-1.0, 1.0, size=(n, p)))
            previous, stable = None, 0
            continue
        if it % check_every == 0:
            ritz = np.linalg.eigvals(q.T @ z)
            estimate = float(np.max(np.abs(ritz)))
            if estimate <= zero_level:
                if previous is not None and previous <= zero_level:
                    return 0.0
                previous, stable = estimate, 0
                q, _ = np.linalg.qr(z)
                continue
            if previous is not None and abs(estimate - previous) <= tol * estimate:
                stable += 1
                if stable >= 2 or p == n:
                    return estimate
            else:
                stable = 0
            previous = estimate
        q, _ = np.linalg.qr(z)
    raise ConvergenceError(
        f"spectral_radius did not converge in {max_iter} iterations", estimate=previous
    )


def sym_eig(s: np.ndarray, symmetry_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns. Each eigenvector is signed so that its
    largest-magnitude entry is positive, which makes results reproducible.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"sym_eig needs a square matrix, got shape {s.shape}")
    asym = np.max(np.abs(s - s.T)) if s.size else 0.0
    if asym > symmetry_tol:
        raise ShapeError(f"matrix is not symmetric (max |s - s.T| = {asym:.3g})")
    values, vectors = np.linalg.eigh(0.5 * (s + s.T))
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    if vectors.size:
        pivot = np.argmax(np.abs(vectors), axis=0)
        signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
        signs[signs == 0] = 1.0
        vectors *= signs
    return values, vectors


def solve_ridge(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Solve ``min_W ||a W - b||^2 + lam ||W||^2`` through a Cholesky factorisation
    of ``a.T a + lam I``.

    Raises:
        SingularityError: the regularised normal matrix is not positive definite
            or the solution misses the normal-equation residual bound.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"incompatible shapes a={a.shape}, b={b.shape}")
    if not lam >= 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    gram = a.T @ a
    gram[np.diag_indices_from(gram)] += lam
    rhs = a.T @ b
    try:
        factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(
            "normal equations are singular; use a ridge lambda > 0"
        ) from exc
    w = scipy.linalg.cho_solve(factor, rhs)
    residual = np.linalg.norm(gram @ w - rhs)
    scale = np.linalg.norm(rhs)
    if not np.all(np.isfinite(w)) or residual > 1e-8 * max(scale, np.finfo(float).tiny):
        raise SingularityError(
            f"ridge system is numerically singular (residual {residual:.3g}); "
            "use a ridge lambda > 0"
        )
    return w[:, 0] if squeeze else w
