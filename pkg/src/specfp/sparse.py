"""CSR sparse matrices, matvec, symmetrization, norms, and spectral transforms.

Matrices are stored in CSR with sorted column indices and summed duplicates.
Symmetry is a *validated* property, not a construction invariant: containers
may temporarily hold nonsymmetric entries (e.g. after a general similarity
transform) and downstream code decides how to route them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class DimensionError(ValueError):
    """Shapes of operands do not match."""


class SymmetryError(ValueError):
    """Matrix failed the symmetry validation."""


class TransformError(ValueError):
    """Invalid or ill-conditioned spectral transform."""


SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class SparseSymMatrix:
    """Square sparse matrix in CSR form.

    ``row_ptr`` has length n+1 with row_ptr[0] == 0 and row_ptr[n] == nnz;
    column indices are strictly increasing within each row.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n)
        )

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_scipy(cls, m) -> "SparseSymMatrix":
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"matrix is not square: {m.shape}")
        c = sp.csr_matrix(m)
        c.sum_duplicates()
        c.sort_indices()
        c.eliminate_zeros()
        return cls(
            n=c.shape[0],
            row_ptr=np.asarray(c.indptr, dtype=np.int64),
            col_idx=np.asarray(c.indices, dtype=np.int64),
            values=np.asarray(c.data, dtype=np.float64),
        )

    @classmethod
    def from_triplets(cls, n, rows, cols, vals) -> "SparseSymMatrix":
        """Build from COO triplets; duplicate entries are summed."""
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
        )
        return cls.from_scipy(m)

    @classmethod
    def from_dense(cls, a) -> "SparseSymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"dense array is not square: {a.shape}")
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def identity(cls, n) -> "SparseSymMatrix":
        return cls.from_scipy(sp.identity(n, format="csr"))

    @classmethod
    def diagonal(cls, d) -> "SparseSymMatrix":
        return cls.from_scipy(sp.diags(np.asarray(d, dtype=np.float64)).tocsr())

    # -- basic ops ----------------------------------------------------------

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n:
            raise DimensionError(
                f"matvec dimension mismatch: matrix is {self.n}x{self.n}, "
                f"vector has length {x.shape[0]}"
            )
        return self._csr @ x

    def matmat(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.n:
            raise DimensionError(
                f"matmat dimension mismatch: matrix is {self.n}x{self.n}, "
                f"operand has {x.shape[0]} rows"
            )
        return self._csr @ x

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def diag(self) -> np.ndarray:
        return self._csr.diagonal()

    def transpose(self) -> "SparseSymMatrix":
        return SparseSymMatrix.from_scipy(self._csr.T)

    def is_symmetric(self, rtol: float = SYMMETRY_RTOL) -> bool:
        d = self._csr - self._csr.T
        if d.nnz == 0:
            return True
        vmax = np.abs(self.values).max() if self.nnz else 0.0
        return np.abs(d.data).max() <= rtol * max(vmax, 1.0)

    def validate_symmetry(self, rtol: float = SYMMETRY_RTOL) -> None:
        if not self.is_symmetric(rtol):
            raise SymmetryError(
                "matrix is not symmetric within tolerance; apply symmetrize() first"
            )


@dataclass(frozen=True)
class DenseSymMatrix:
    """Dense symmetric matrix used for desk-scale oracle computations."""

    n: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.float64)
        if a.shape != (self.n, self.n):
            raise DimensionError(f"expected ({self.n},{self.n}), got {a.shape}")
        object.__setattr__(self, "entries", 0.5 * (a + a.T))

    def matvec(self, x):
        return self.entries @ x

    def to_sparse(self) -> SparseSymMatrix:
        return SparseSymMatrix.from_dense(self.entries)


def symmetrize(a: SparseSymMatrix, mode: str = "half_sum") -> SparseSymMatrix:
    """Return (A+A^T)/2 ('half_sum') or A^T A ('gram')."""
    if mode == "half_sum":
        m = a.to_scipy()
        return SparseSymMatrix.from_scipy(0.5 * (m + m.T))
    if mode == "gram":
        m = a.to_scipy()
        return SparseSymMatrix.from_scipy(m.T @ m)
    raise ValueError(f"unknown symmetrize mode: {mode!r}")


def frobenius_norm(a: SparseSymMatrix) -> float:
    return float(np.sqrt(np.sum(a.values**2)))


def spectral_norm_est(a: SparseSymMatrix, tol: float = 1e-6, max_steps: int = 500) -> float:
    """Estimate ||A||_2.

    Dense eigenvalues for n <= 512; otherwise power iteration on A (symmetric
    case) run for at least 30 steps and until the Rayleigh quotient settles to
    ``tol`` relative accuracy.
    """
    if a.n <= 512:
        w = np.linalg.eigvalsh(0.5 * (a.to_dense() + a.to_dense().T))
        return float(np.max(np.abs(w)))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(a.n)
    x /= np.linalg.norm(x)
    prev = 0.0
    for step in range(max_steps):
        y = a.matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if step >= 30 and abs(ny - prev) <= tol * max(ny, 1e-300):
            return float(ny)
        prev = ny
    return float(prev)


# -- spectral transforms (E0) ----------------------------------------------

PERMUTATION = "Permutation"
DIAGONAL_SIMILARITY = "DiagonalSimilarity"
GENERAL_SIMILARITY = "GeneralSimilarity"
POSITIVE_SCALE = "PositiveScale"

_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class Transform:
    """Spectrum-preserving (or spectrum-scaling) transform of a matrix."""

    kind: str
    payload: object

    def __post_init__(self):
        if self.kind == PERMUTATION:
            p = np.asarray(self.payload, dtype=np.int64)
            if sorted(p.tolist()) != list(range(len(p))):
                raise TransformError("permutation payload is not a bijection")
            object.__setattr__(self, "payload", p)
        elif self.kind == DIAGONAL_SIMILARITY:
            d = np.asarray(self.payload, dtype=np.float64)
            if np.any(d <= 0):
                raise TransformError("diagonal similarity entries must be positive")
            object.__setattr__(self, "payload", d)
        elif self.kind == GENERAL_SIMILARITY:
            s = np.asarray(self.payload, dtype=np.float64)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise TransformError("similarity factor must be square")
            if not np.all(np.isfinite(s)) or np.linalg.cond(s) > _CONDITION_LIMIT:
                raise TransformError("similarity factor is singular or ill-conditioned")
            object.__setattr__(self, "payload", s)
        elif self.kind == POSITIVE_SCALE:
            alpha = float(self.payload)
            if not alpha > 0:
                raise TransformError("scale factor must be positive")
            object.__setattr__(self, "payload", alpha)
        else:
            raise TransformError(f"unknown transform kind: {self.kind!r}")


def apply_transform(a: SparseSymMatrix, t: Transform) -> SparseSymMatrix:
    """Apply P^T A P, D^-1 A D, S^-1 A S, or alpha*A.

    Similarity outputs may be nonsymmetric; callers route them through the
    radius-scaling / symmetrization path downstream. GeneralSimilarity
    materializes densely (no sparse structure is preserved).
    """
    if t.kind == PERMUTATION:
        p = t.payload
        if len(p) != a.n:
            raise DimensionError("permutation length does not match matrix size")
        m = a.to_scipy()[p][:, p]
        return SparseSymMatrix.from_scipy(m)
    if t.kind == DIAGONAL_SIMILARITY:
        d = t.payload
        if len(d) != a.n:
            raise DimensionError("diagonal length does not match matrix size")
        dinv = sp.diags(1.0 / d)
        return SparseSymMatrix.from_scipy(dinv @ a.to_scipy() @ sp.diags(d))
    if t.kind == GENERAL_SIMILARITY:
        s = t.payload
        if s.shape[0] != a.n:
            raise DimensionError("similarity factor does not match matrix size")
        dense = np.linalg.solve(s, a.to_dense() @ s)
        return SparseSymMatrix.from_dense(dense)
    if t.kind == POSITIVE_SCALE:
        return SparseSymMatrix(
            n=a.n,
            row_ptr=a.row_ptr,
            col_idx=a.col_idx,
            values=a.values * t.payload,
        )
    raise TransformError(f"unknown transform kind: {t.kind!r}")
