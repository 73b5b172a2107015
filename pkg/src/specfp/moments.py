"""Damped Chebyshev trace moments d_k = exp(-eta*k) * tr(T_k(Atilde)).

Two exact desk-scale paths (eigenvalue sums and basis-vector recurrences)
plus a Hutchinson sketch with per-order standard errors. T_k is the Chebyshev
polynomial of the first kind, evaluated by the three-term recurrence
T_{k+1}(x) = 2x T_k(x) - T_{k-1}(x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scaling import DEGENERATE, ScaledOperator

EXACT_EIGEN = "ExactEigen"
EXACT_BASIS = "ExactBasis"
HUTCHINSON = "Hutchinson"

RADEMACHER = "Rademacher"
GAUSSIAN = "Gaussian"

DEFAULT_ETA = 0.06
DEFAULT_PROBES = 64
_BATCH = 32  # micro-batch size for streaming probes


@dataclass(frozen=True)
class MomentSeries:
    d: np.ndarray
    eta: float
    w0: float
    estimator: str
    se: np.ndarray | None = None

    @property
    def K(self) -> int:
        return len(self.d)


@dataclass(frozen=True)
class ProbeSet:
    p: int
    kind: str = RADEMACHER
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("probe count must be >= 1")
        if self.kind not in (RADEMACHER, GAUSSIAN):
            raise ValueError(f"unknown probe kind: {self.kind!r}")


def chebyshev_values(x: np.ndarray, K: int) -> np.ndarray:
    """T_k(x) for k = 0..K-1 at the given points, shape (K, len(x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((K, len(x)))
    out[0] = 1.0
    if K > 1:
        out[1] = x
    for k in range(2, K):
        out[k] = 2.0 * x * out[k - 1] - out[k - 2]
    return out


def _damping(K: int, eta: float) -> np.ndarray:
    return np.exp(-eta * np.arange(K))


def scaled_eigenvalues(op: ScaledOperator) -> np.ndarray:
    """Eigenvalues of the normalized operator, via a dense solve.

    Symmetric sources use eigvalsh; nonsymmetric sources (similarity images)
    have real spectra up to roundoff, so the real parts of the dense
    eigenvalues are taken.
    """
    a = op.matrix
    if a.n > 2048:
        raise ValueError("exact eigenvalue path requires n <= 2048")
    dense = a.to_dense()
    if a.is_symmetric(rtol=1e-10):
        lam = np.linalg.eigvalsh(dense)
    else:
        lam = np.linalg.eigvals(dense)
        scale = max(np.max(np.abs(lam)), 1e-300)
        if np.max(np.abs(lam.imag)) > 1e-6 * scale:
            raise ValueError(
                "spectrum has a significant imaginary part; use the radius path"
            )
        lam = np.sort(lam.real)
    return op.scale_eigenvalues(lam)


def exact_moments(
    op: ScaledOperator,
    K: int,
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    method: str = EXACT_EIGEN,
) -> MomentSeries:
    """d_0 = w0 and d_k = exp(-eta*k) * sum_i T_k(lambda_i) for k >= 1."""
    if K < 1:
        raise ValueError("K must be >= 1")
    n = op.n
    if w0 is None:
        w0 = float(n)
    damp = _damping(K, eta)

    if op.params.mode == DEGENERATE:
        # tr T_k(0) = n * cos(k*pi/2)
        traces = n * np.cos(np.arange(K) * np.pi / 2.0)
        traces = np.round(traces)  # exact integers: n, 0, -n, 0, ...
    elif method == EXACT_EIGEN:
        lam = scaled_eigenvalues(op)
        traces = chebyshev_values(lam, K).sum(axis=1)
    elif method == EXACT_BASIS:
        # Three-term recurrence on the full identity; tr T_k = trace of U_k.
        u_prev = np.eye(n)
        traces = np.empty(K)
        traces[0] = n
        if K > 1:
            u_curr = op.matmat(u_prev)
            traces[1] = np.trace(u_curr)
            for k in range(2, K):
                u_next = 2.0 * op.matmat(u_curr) - u_prev
                traces[k] = np.trace(u_next)
                u_prev, u_curr = u_curr, u_next
    else:
        raise ValueError(f"unknown exact method: {method!r}")

    d = damp * traces
    d[0] = w0
    return MomentSeries(d=d, eta=eta, w0=float(w0), estimator=method)


def _draw_probes(rng, n, count, kind):
    if kind == RADEMACHER:
        return rng.integers(0, 2, size=(n, count)).astype(np.float64) * 2.0 - 1.0
    return rng.standard_normal((n, count))


def hutchinson_moments(
    op: ScaledOperator,
    K: int,
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    probes: ProbeSet = ProbeSet(DEFAULT_PROBES),
    with_se: bool = True,
) -> MomentSeries:
    """Sketched moments d_k = exp(-eta*k) * (1/p) sum_i <z_i, u_k^(i)>.

    d_0 is fixed to w0 by convention, never estimated. Standard errors are the
    per-probe sample standard deviation of the quadratic forms over sqrt(p).
    Probes are streamed in micro-batches with per-probe RNG streams derived
    from (seed, probe index), so results do not depend on batching.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if with_se and probes.p < 2:
        raise ValueError("standard errors require p >= 2 probes")
    n = op.n
    if w0 is None:
        w0 = float(n)
    p = probes.p
    quad = np.empty((p, K))  # per-probe quadratic forms z^T u_k
    for start in range(0, p, _BATCH):
        stop = min(start + _BATCH, p)
        cols = stop - start
        z = np.empty((n, cols))
        for j in range(cols):
            rng = np.random.default_rng([probes.seed, start + j])
            z[:, j] = _draw_probes(rng, n, 1, probes.kind)[:, 0]
        u_prev = z
        quad[start:stop, 0] = np.einsum("ij,ij->j", z, u_prev)
        if K > 1:
            u_curr = op.matmat(z)
            quad[start:stop, 1] = np.einsum("ij,ij->j", z, u_curr)
            for k in range(2, K):
                u_next = 2.0 * op.matmat(u_curr) - u_prev
                quad[start:stop, k] = np.einsum("ij,ij->j", z, u_next)
                u_prev, u_curr = u_curr, u_next

    damp = _damping(K, eta)
    d = damp * quad.mean(axis=0)
    d[0] = w0
    se = None
    if with_se:
        se = damp * quad.std(axis=0, ddof=1) / np.sqrt(p)
        se[0] = 0.0
    return MomentSeries(d=d, eta=eta, w0=float(w0), estimator=HUTCHINSON, se=se)
