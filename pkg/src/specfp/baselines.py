"""Competitor descriptors and distances for head-to-head comparisons.

All eigenvalue-based baselines run densely and are restricted to desk scale
(n <= 2048); the fingerprint pipeline exists precisely to avoid this cost.
"""

from __future__ import annotations

import numpy as np

from .scaling import make_scaled
from .sparse import DimensionError, SparseSymMatrix, frobenius_norm, spectral_norm_est

FROBENIUS_DIRECT = "FrobeniusDirect"
SPECTRAL_NORM_SCALAR = "SpectralNormScalar"
TOP_M_EIGS = "TopMEigs"
HEAT_TRACE = "HeatTrace"
POWER_MOMENTS = "PowerMoments"
EIGEN_HIST_W1 = "EigenHistW1"

DEFAULT_TOP_M = 16
DEFAULT_T_GRID = (0.1, 0.5, 1.0, 2.0, 5.0)
DEFAULT_POWER_M = 10
DEFAULT_BINS = 64

_EIG_LIMIT = 2048


def _dense_eigs(a: SparseSymMatrix) -> np.ndarray:
    if a.n > _EIG_LIMIT:
        raise ValueError(f"dense eigen baseline limited to n <= {_EIG_LIMIT}")
    return np.linalg.eigvalsh(a.to_dense())


def normalized_spectrum(a: SparseSymMatrix) -> np.ndarray:
    """Eigenvalues of the normalized operator, all inside [-1,1]."""
    op = make_scaled(a)
    return op.scale_eigenvalues(_dense_eigs(a))


def descriptor(a: SparseSymMatrix, kind: str, **opts):
    """Extract the baseline feature for one matrix (scalar or vector)."""
    if kind == SPECTRAL_NORM_SCALAR:
        return float(spectral_norm_est(a))
    if kind == TOP_M_EIGS:
        m = int(opts.get("m", DEFAULT_TOP_M))
        lam = np.sort(_dense_eigs(a))[::-1]
        out = np.zeros(m)
        out[: min(m, len(lam))] = lam[:m]
        return out
    if kind == HEAT_TRACE:
        t_grid = np.asarray(opts.get("t_grid", DEFAULT_T_GRID), dtype=np.float64)
        lam = normalized_spectrum(a)
        return np.array([np.sum(np.exp(-t * lam)) for t in t_grid])
    if kind == POWER_MOMENTS:
        m = int(opts.get("m", DEFAULT_POWER_M))
        lam = normalized_spectrum(a)
        v = np.array([np.sum(lam**k) for k in range(1, m + 1)])
        nrm = np.linalg.norm(v)
        return v / nrm if nrm > 0 else v
    if kind == EIGEN_HIST_W1:
        bins = int(opts.get("bins", DEFAULT_BINS))
        lam = np.clip(normalized_spectrum(a), -1.0, 1.0)
        hist, _ = np.histogram(lam, bins=bins, range=(-1.0, 1.0))
        return hist / hist.sum()
    raise ValueError(f"no per-matrix descriptor for kind {kind!r}")


def wasserstein1_hist(p: np.ndarray, q: np.ndarray, support_width: float = 2.0) -> float:
    """W1 between histograms on a shared uniform grid: L1 of CDFs x bin width."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError("histograms must share the bin grid")
    width = support_width / len(p)
    return float(np.sum(np.abs(np.cumsum(p) - np.cumsum(q))) * width)


def baseline_distance(a: SparseSymMatrix, b: SparseSymMatrix, kind: str, **opts) -> float:
    """Distance between two matrices under one baseline family."""
    if kind == FROBENIUS_DIRECT:
        if a.n != b.n:
            raise DimensionError(
                f"Frobenius distance undefined across sizes {a.n} vs {b.n}"
            )
        return float(np.linalg.norm(a.to_dense() - b.to_dense()))
    if kind == SPECTRAL_NORM_SCALAR:
        return abs(descriptor(a, kind) - descriptor(b, kind))
    if kind in (TOP_M_EIGS, HEAT_TRACE, POWER_MOMENTS):
        va = descriptor(a, kind, **opts)
        vb = descriptor(b, kind, **opts)
        return float(np.linalg.norm(va - vb))
    if kind == EIGEN_HIST_W1:
        return wasserstein1_hist(descriptor(a, kind, **opts), descriptor(b, kind, **opts))
    raise ValueError(f"unknown baseline kind: {kind!r}")


def baseline_distance_matrix(mats: list[SparseSymMatrix], kind: str, **opts) -> np.ndarray:
    """Full pairwise distance matrix; descriptors are extracted once."""
    m = len(mats)
    d = np.zeros((m, m))
    if kind == FROBENIUS_DIRECT:
        dense = [x.to_dense() for x in mats]
        for i in range(m):
            for j in range(i + 1, m):
                d[i, j] = d[j, i] = np.linalg.norm(dense[i] - dense[j])
        return d
    descs = [descriptor(x, kind, **opts) for x in mats]
    for i in range(m):
        for j in range(i + 1, m):
            if kind == EIGEN_HIST_W1:
                v = wasserstein1_hist(descs[i], descs[j])
            elif kind == SPECTRAL_NORM_SCALAR:
                v = abs(descs[i] - descs[j])
            else:
                v = float(np.linalg.norm(descs[i] - descs[j]))
            d[i, j] = d[j, i] = v
    return d


def feature_dimension(kind: str, **opts) -> int:
    """Reported feature dimension per baseline family."""
    if kind in (FROBENIUS_DIRECT,):
        return -1  # operates on raw entries, no fixed descriptor
    if kind == SPECTRAL_NORM_SCALAR:
        return 1
    if kind == TOP_M_EIGS:
        return int(opts.get("m", DEFAULT_TOP_M))
    if kind == HEAT_TRACE:
        return len(opts.get("t_grid", DEFAULT_T_GRID))
    if kind == POWER_MOMENTS:
        return int(opts.get("m", DEFAULT_POWER_M))
    if kind == EIGEN_HIST_W1:
        return int(opts.get("bins", DEFAULT_BINS))
    raise ValueError(f"unknown baseline kind: {kind!r}")
