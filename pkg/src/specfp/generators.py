"""Seeded generators: synthetic matrix families, noise perturbations, and the
adversarial trap corpus for the preconditioner-recommendation stress test.

Everything is a pure function of (spec, seed); the same spec always yields a
bit-identical matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sparse import SparseSymMatrix, frobenius_norm

COVARIANCE = "Covariance"
KERNEL_RBF = "KernelRBF"
GOE = "GOE"
ADJACENCY_BA = "AdjacencyBA"
ADJACENCY_ER = "AdjacencyER"
SPD_LAPLACIAN = "SPDLaplacianLike"

FAMILIES = (COVARIANCE, KERNEL_RBF, GOE, ADJACENCY_BA, ADJACENCY_ER, SPD_LAPLACIAN)


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family: {self.family!r}")
        if self.n < 4:
            raise ValueError("n must be >= 4")
        for key in ("p_edge",):
            if key in self.params and not (0.0 < self.params[key] < 1.0):
                raise ValueError(f"{key} must lie in (0,1)")


def _er_adjacency(n, p_edge, rng) -> np.ndarray:
    upper = rng.random((n, n)) < p_edge
    a = np.triu(upper, k=1).astype(np.float64)
    return a + a.T


def _ba_adjacency(n, m_attach, rng) -> np.ndarray:
    """Preferential attachment; starts from a complete graph on m_attach nodes."""
    m0 = m_attach
    if m0 >= n:
        raise ValueError("m_attach must be smaller than n")
    a = np.zeros((n, n))
    a[:m0, :m0] = 1.0
    np.fill_diagonal(a, 0.0)
    # endpoint pool repeats nodes proportionally to degree
    pool = [i for i in range(m0) for _ in range(m0 - 1)]
    for v in range(m0, n):
        targets: set[int] = set()
        while len(targets) < m_attach:
            targets.add(int(pool[rng.integers(len(pool))]))
        for t in targets:
            a[v, t] = a[t, v] = 1.0
            pool.extend([v, t])
    return a


def generate(spec: FamilySpec) -> SparseSymMatrix:
    """Draw one matrix of the requested family."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    fam = spec.family
    if fam == COVARIANCE:
        s = int(spec.params.get("samples", 2 * n))
        x = rng.standard_normal((n, s))
        return SparseSymMatrix.from_dense(x @ x.T / s)
    if fam == KERNEL_RBF:
        dim = int(spec.params.get("dim", 3))
        gamma = float(spec.params.get("gamma", 1.0))
        pts = rng.standard_normal((n, dim))
        sq = np.sum(pts**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2 * pts @ pts.T
        return SparseSymMatrix.from_dense(np.exp(-gamma * np.maximum(d2, 0.0)))
    if fam == GOE:
        g = rng.standard_normal((n, n))
        return SparseSymMatrix.from_dense((g + g.T) / np.sqrt(2.0 * n))
    if fam == ADJACENCY_BA:
        m_attach = int(spec.params.get("m_attach", 3))
        return SparseSymMatrix.from_dense(_ba_adjacency(n, m_attach, rng))
    if fam == ADJACENCY_ER:
        p_edge = float(spec.params.get("p_edge", 0.1))
        return SparseSymMatrix.from_dense(_er_adjacency(n, p_edge, rng))
    if fam == SPD_LAPLACIAN:
        p_edge = float(spec.params.get("p_edge", 0.1))
        ridge = float(spec.params.get("ridge", 1e-2))
        a = _er_adjacency(n, p_edge, rng)
        lap = np.diag(a.sum(axis=1)) - a
        return SparseSymMatrix.from_dense(lap + ridge * np.eye(n))
    raise ValueError(f"unknown family: {fam!r}")


def add_noise(a: SparseSymMatrix, eps: float, seed: int) -> SparseSymMatrix:
    """A + eps*E with E symmetric Gaussian rescaled to ||E||_F = ||A||_F.

    The noise level is relative by construction:
    ||(A + eps*E) - A||_F / ||A||_F == eps.
    """
    if eps < 0:
        raise ValueError("noise level must be >= 0")
    if eps == 0.0:
        return a
    rng = np.random.default_rng(seed)
    n = a.n
    g = rng.standard_normal((n, n))
    e = 0.5 * (g + g.T)
    nf = np.linalg.norm(e)
    if nf > 0:
        e *= frobenius_norm(a) / nf
    return SparseSymMatrix.from_dense(a.to_dense() + eps * e)


# -- adversarial trap corpus -------------------------------------------------

@dataclass(frozen=True)
class TrapCaseSpec:
    """One trap group: a diagonal decoy, a coupled twin, and a coupled query.

    The query is diag(d) + coupling * L with L a bandwidth-2 chain Laplacian;
    the decoy is exactly the query's diagonal (entrywise nearest, but its best
    preconditioner is Jacobi, which the chain coupling defeats), while the twin
    repeats the construction on a permuted diagonal (entrywise far, but
    spectrally near — its best preconditioner transfers to the query).
    """

    n: int = 64
    delta_f: float = 24.0     # Frobenius budget for the query-decoy gap
    coupling: float = 1.25    # chain coupling strength (spectral difficulty)
    seed: int = 0

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("trap matrices need n >= 8")
        if self.coupling <= 0:
            raise ValueError("coupling must be positive")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")


def _diag_base(n, rng) -> np.ndarray:
    return rng.uniform(1.0, 10.0, size=n)


def _chain_laplacian(n: int, band: int = 2) -> np.ndarray:
    """SPSD banded Laplacian: -1 off-diagonals within the band, zero row sums."""
    lap = np.zeros((n, n))
    for k in range(1, band + 1):
        lap -= np.eye(n, k=k) + np.eye(n, k=-k)
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap


def make_trap_case(spec: TrapCaseSpec, attempt: int = 0):
    """Build (decoy, twin, query) dense arrays plus achieved Frobenius gap."""
    rng = np.random.default_rng([spec.seed, attempt])
    d = _diag_base(spec.n, rng)
    lap = spec.coupling * _chain_laplacian(spec.n)
    query = np.diag(d) + lap
    decoy = np.diag(np.diag(query))
    twin = np.diag(d[rng.permutation(spec.n)]) + lap
    gap = float(np.linalg.norm(query - decoy))
    return decoy, twin, query, gap


def generate_trap_corpus(
    specs: list[TrapCaseSpec],
    max_retries: int = 5,
    fingerprint_k: int = 5,
) -> list[tuple[SparseSymMatrix, dict]]:
    """Verified adversarial corpus.

    For every spec the emitted triple satisfies: the query's Frobenius-nearest
    neighbor (the decoy) carries a different oracle-best preconditioner than
    the query, while the fingerprint-nearest neighbor (the twin) carries the
    right one. Failing draws are regenerated up to ``max_retries`` times.
    """
    from .fingerprint import csf
    from .krylov import DEFAULT_PORTFOLIO, oracle_best, random_rhs

    out = []
    for gi, spec in enumerate(specs):
        ok = False
        for attempt in range(max_retries):
            decoy_a, twin_a, query_a, gap = make_trap_case(spec, attempt)
            if gap == 0.0 or gap > spec.delta_f + 1e-9:
                continue
            decoy = SparseSymMatrix.from_dense(decoy_a)
            twin = SparseSymMatrix.from_dense(twin_a)
            query = SparseSymMatrix.from_dense(query_a)
            lab = {
                name: oracle_best(mat, DEFAULT_PORTFOLIO, b=random_rhs(mat))
                for name, mat in (("decoy", decoy), ("twin", twin), ("query", query))
            }
            if lab["query"] != lab["twin"] or lab["query"] == lab["decoy"]:
                continue
            fro_decoy = np.linalg.norm(query_a - decoy_a)
            fro_twin = np.linalg.norm(query_a - twin_a)
            if not fro_decoy < fro_twin:
                continue
            fq = csf(query, fingerprint_k).phi
            fd = csf(decoy, fingerprint_k).phi
            ft = csf(twin, fingerprint_k).phi
            if not (1 - fq @ ft) < (1 - fq @ fd):  # cosine distance
                continue
            base_meta = {
                "group": gi, "seed": spec.seed, "coupling": spec.coupling, "gap": gap,
            }
            out.append((decoy, {**base_meta, "role": "decoy", "best": lab["decoy"]}))
            out.append((twin, {**base_meta, "role": "twin", "best": lab["twin"]}))
            out.append((query, {**base_meta, "role": "query", "best": lab["query"]}))
            ok = True
            break
        if not ok:
            raise RuntimeError(f"trap generation failed after {max_retries} attempts: {spec}")
    return out
