"""Matrix Market coordinate I/O with symmetrization metadata.

Supports real / integer / pattern fields, general / symmetric symmetry,
and gzip-compressed files. General matrices are symmetrized as (A+A^T)/2
and flagged in the returned metadata.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sparse import SparseSymMatrix, symmetrize


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MatrixMarketResult:
    matrix: SparseSymMatrix
    symmetry: str            # header symmetry declaration
    field: str               # real / integer / pattern
    symmetrized: bool        # True when a general matrix was averaged with its transpose


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path, "rt")


def read_matrix_market(path) -> MatrixMarketResult:
    """Parse a coordinate-format Matrix Market file into CSR storage.

    1-based indices become 0-based; a declared-symmetric file with one stored
    triangle is mirrored; pattern entries get value 1.0.
    """
    with _open_text(path) as fh:
        header = fh.readline()
        lineno = 1
        parts = header.strip().split()
        if len(parts) < 5 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
            raise MatrixMarketError("missing or malformed %%MatrixMarket header", lineno)
        fmt, fld, symm = (p.lower() for p in parts[2:5])
        if fmt != "coordinate":
            raise MatrixMarketError(f"unsupported format {fmt!r} (coordinate only)", lineno)
        if fld == "complex":
            raise MatrixMarketError("complex field is not supported", lineno)
        if fld not in ("real", "integer", "pattern"):
            raise MatrixMarketError(f"unsupported field {fld!r}", lineno)
        if symm not in ("general", "symmetric"):
            raise MatrixMarketError(f"unsupported symmetry {symm!r}", lineno)

        size_line = None
        for line in fh:
            lineno += 1
            if line.startswith("%") or not line.strip():
                continue
            size_line = line
            break
        if size_line is None:
            raise MatrixMarketError("missing size line", lineno)
        toks = size_line.split()
        if len(toks) != 3:
            raise MatrixMarketError("size line must have 3 integers", lineno)
        try:
            nrows, ncols, nnz_decl = (int(t) for t in toks)
        except ValueError:
            raise MatrixMarketError("non-integer size line", lineno) from None
        if nrows != ncols:
            raise MatrixMarketError(f"matrix is not square: {nrows}x{ncols}", lineno)

        rows, cols, vals = [], [], []
        for line in fh:
            lineno += 1
            if line.startswith("%") or not line.strip():
                continue
            toks = line.split()
            want = 2 if fld == "pattern" else 3
            if len(toks) < want:
                raise MatrixMarketError(f"entry needs {want} tokens", lineno)
            try:
                i = int(toks[0])
                j = int(toks[1])
                v = 1.0 if fld == "pattern" else float(toks[2])
            except ValueError:
                raise MatrixMarketError("malformed entry", lineno) from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError("index out of range", lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)

    if len(rows) != nnz_decl:
        raise MatrixMarketError(
            f"declared {nnz_decl} entries but found {len(rows)}", lineno
        )

    if symm == "symmetric":
        # Mirror off-diagonal entries; the diagonal is stored once.
        r = np.asarray(rows)
        c = np.asarray(cols)
        v = np.asarray(vals)
        off = r != c
        rows = np.concatenate([r, c[off]])
        cols = np.concatenate([c, r[off]])
        vals = np.concatenate([v, v[off]])

    mat = SparseSymMatrix.from_triplets(nrows, rows, cols, vals)
    symmetrized = False
    if symm == "general" and not mat.is_symmetric():
        mat = symmetrize(mat, "half_sum")
        symmetrized = True
    return MatrixMarketResult(matrix=mat, symmetry=symm, field=fld, symmetrized=symmetrized)


def load_matrix(path) -> SparseSymMatrix:
    return read_matrix_market(path).matrix


def write_matrix_market(a: SparseSymMatrix, path, symmetric: bool | None = None) -> None:
    """Write CSR storage as coordinate real Matrix Market.

    Symmetric matrices store the lower triangle only; round-trips through
    :func:`read_matrix_market` recover identical triplets.
    """
    if symmetric is None:
        symmetric = a.is_symmetric()
    coo = a.to_scipy().tocoo()
    r, c, v = coo.row, coo.col, coo.data
    if symmetric:
        keep = r >= c
        r, c, v = r[keep], c[keep], v[keep]
        symm = "symmetric"
    else:
        symm = "general"
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wt") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symm}\n")
        fh.write(f"{a.n} {a.n} {len(v)}\n")
        for i, j, x in zip(r, c, v):
            fh.write(f"{i + 1} {j + 1} {x:.17g}\n")
