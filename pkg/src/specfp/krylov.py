"""Preconditioned conjugate gradients and a small preconditioner portfolio.

Portfolio members: Identity, Jacobi, SSOR(1.0), SSOR(1.5), and zero-fill
incomplete Cholesky. The portfolio is intentionally small and standard; it
produces genuinely different winners across matrix families, which is what
makes adversarial "trap" instances possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .sparse import SparseSymMatrix, frobenius_norm

IDENTITY = "Identity"
JACOBI = "Jacobi"
SSOR = "SSOR"
IC0 = "IC0"


@dataclass(frozen=True)
class PreconditionerSpec:
    kind: str
    omega: float | None = None

    def __post_init__(self):
        if self.kind not in (IDENTITY, JACOBI, SSOR, IC0):
            raise ValueError(f"unknown preconditioner kind: {self.kind!r}")
        if self.kind == SSOR:
            if self.omega is None or not (0.0 < self.omega < 2.0):
                raise ValueError("SSOR omega must lie in (0,2)")

    @property
    def name(self) -> str:
        if self.kind == SSOR:
            return f"SSOR({self.omega:g})"
        return self.kind


DEFAULT_PORTFOLIO = (
    PreconditionerSpec(IDENTITY),
    PreconditionerSpec(JACOBI),
    PreconditionerSpec(SSOR, 1.0),
    PreconditionerSpec(SSOR, 1.5),
    PreconditionerSpec(IC0),
)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    converged: bool
    final_relative_residual: float
    residual_history: np.ndarray
    preconditioner: PreconditionerSpec
    matrix_id: str | None = None
    breakdown: bool = False


class PreconditionerError(ValueError):
    """Preconditioner could not be built (zero diagonal, IC0 breakdown)."""


def _ic0_factor(a_dense: np.ndarray, pattern: np.ndarray) -> np.ndarray:
    """Zero-fill incomplete Cholesky restricted to the lower-triangular pattern.

    Returns L with A ~= L L^T on the pattern; raises on a nonpositive pivot.
    """
    n = a_dense.shape[0]
    lower = np.tril(pattern)
    lfac = np.zeros((n, n))
    for j in range(n):
        pivot = a_dense[j, j] - lfac[j, :j] @ lfac[j, :j]
        if pivot <= 0.0:
            raise PreconditionerError(f"IC0 pivot breakdown at column {j}")
        lfac[j, j] = np.sqrt(pivot)
        col_mask = lower[j + 1 :, j]
        if col_mask.any():
            rows = np.nonzero(col_mask)[0] + j + 1
            vals = a_dense[rows, j] - lfac[rows, :j] @ lfac[j, :j]
            lfac[rows, j] = vals / lfac[j, j]
    return lfac


def build_preconditioner(a: SparseSymMatrix, spec: PreconditionerSpec):
    """Return a callable applying M^-1 v for the requested preconditioner.

    IC0 pivot breakdown retries with a shifted matrix A + beta*I,
    beta = 1e-8 * ||A||_F, doubling up to 3 times before failing.
    """
    if spec.kind == IDENTITY:
        return lambda v: v
    diag = a.diag()
    if spec.kind == JACOBI:
        if np.any(diag == 0.0):
            raise PreconditionerError("Jacobi requires a nonzero diagonal")
        inv = 1.0 / diag
        return lambda v: inv * v
    if spec.kind == SSOR:
        if np.any(diag == 0.0):
            raise PreconditionerError("SSOR requires a nonzero diagonal")
        omega = spec.omega
        m = a.to_scipy()
        low = sp.tril(m, k=-1, format="csr")
        d = sp.diags(diag).tocsr()
        lower = (d / omega + low).tocsr()
        upper = lower.T.tocsr()
        scale = omega * (2.0 - omega)
        dvec = diag.copy()

        def apply_ssor(v):
            y = spsolve_triangular(lower, v, lower=True)
            y = dvec * y
            y = spsolve_triangular(upper, y, lower=False)
            return y / scale

        return apply_ssor
    if spec.kind == IC0:
        dense = a.to_dense()
        pattern = dense != 0.0
        beta = 1e-8 * max(frobenius_norm(a), 1e-300)
        shift = 0.0
        last_err = None
        for _ in range(4):
            try:
                lfac = _ic0_factor(dense + shift * np.eye(a.n), pattern)
                break
            except PreconditionerError as err:
                last_err = err
                shift = beta if shift == 0.0 else 2.0 * shift
        else:
            raise PreconditionerError(f"IC0 failed even with diagonal shift: {last_err}")
        lcsr = sp.csr_matrix(lfac)
        ucsr = sp.csr_matrix(lfac.T)

        def apply_ic0(v):
            y = spsolve_triangular(lcsr, v, lower=True)
            return spsolve_triangular(ucsr, y, lower=False)

        return apply_ic0
    raise ValueError(f"unknown preconditioner kind: {spec.kind!r}")


def cg_solve(
    a: SparseSymMatrix,
    b: np.ndarray,
    m_spec: PreconditionerSpec = PreconditionerSpec(IDENTITY),
    tol: float = 1e-8,
    maxit: int | None = None,
    x0: np.ndarray | None = None,
    matrix_id: str | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Standard preconditioned CG; converges when ||r||_2 / ||b||_2 <= tol.

    An indefinite preconditioner application (<r, M^-1 r> <= 0) is flagged as
    a breakdown and reported with converged=False.
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite values")
    if maxit is None:
        maxit = 10 * a.n
    apply_m = build_preconditioner(a, m_spec)
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    nb = np.linalg.norm(b)
    if nb == 0.0:
        report = SolveReport(0, True, 0.0, np.zeros(1), m_spec, matrix_id)
        return x, report
    r = b - a.matvec(x)
    history = [np.linalg.norm(r) / nb]
    if history[0] <= tol:
        return x, SolveReport(0, True, history[0], np.asarray(history), m_spec, matrix_id)
    z = apply_m(r)
    rz = float(r @ z)
    if rz <= 0.0:
        return x, SolveReport(0, False, history[0], np.asarray(history), m_spec, matrix_id, breakdown=True)
    p = z.copy()
    it = 0
    converged = False
    breakdown = False
    while it < maxit:
        ap = a.matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            breakdown = True
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        it += 1
        rel = np.linalg.norm(r) / nb
        history.append(rel)
        if rel <= tol:
            converged = True
            break
        z = apply_m(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            breakdown = True
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolveReport(
        iterations=it,
        converged=converged,
        final_relative_residual=float(history[-1]),
        residual_history=np.asarray(history),
        preconditioner=m_spec,
        matrix_id=matrix_id,
        breakdown=breakdown,
    )


def default_rhs(a: SparseSymMatrix) -> np.ndarray:
    """b = A*1, so the exact solution is the all-ones vector."""
    return a.matvec(np.ones(a.n))


def random_rhs(a: SparseSymMatrix, seed: int = 0) -> np.ndarray:
    """Seeded unit-norm Gaussian right-hand side.

    Unlike b = A*1 this excites every eigendirection, so ill-conditioned
    matrices are actually hard to solve -- which is what the adversarial
    benchmark needs.
    """
    rng = np.random.default_rng([seed, a.n])
    b = rng.standard_normal(a.n)
    return b / np.linalg.norm(b)


def run_portfolio(
    a: SparseSymMatrix,
    portfolio=DEFAULT_PORTFOLIO,
    b: np.ndarray | None = None,
    tol: float = 1e-8,
    maxit: int | None = None,
    matrix_id: str | None = None,
) -> dict[str, SolveReport]:
    """Solve with every portfolio member; breakdowns become non-converged reports."""
    if b is None:
        b = default_rhs(a)
    reports = {}
    for spec in portfolio:
        try:
            _, rep = cg_solve(a, b, spec, tol=tol, maxit=maxit, matrix_id=matrix_id)
        except PreconditionerError:
            rep = SolveReport(
                iterations=maxit if maxit is not None else 10 * a.n,
                converged=False,
                final_relative_residual=np.inf,
                residual_history=np.asarray([np.inf]),
                preconditioner=spec,
                matrix_id=matrix_id,
                breakdown=True,
            )
        reports[spec.name] = rep
    return reports


def oracle_best(a: SparseSymMatrix, portfolio=DEFAULT_PORTFOLIO, **kwargs) -> str:
    """Portfolio member with the fewest converged iterations.

    Ties resolve in portfolio order; if nothing converged, the least final
    residual wins.
    """
    reports = run_portfolio(a, portfolio, **kwargs)
    return select_best(reports, portfolio)


def select_best(reports: dict[str, SolveReport], portfolio=DEFAULT_PORTFOLIO) -> str:
    converged = [s for s in portfolio if reports[s.name].converged]
    if converged:
        return min(converged, key=lambda s: reports[s.name].iterations).name
    return min(portfolio, key=lambda s: reports[s.name].final_relative_residual).name
