"""Eigendecomposition-free spectral fingerprints for sparse symmetric matrices.

Damped Chebyshev trace moments give a cheap, transform-invariant summary of a
matrix's spectral density; on top of that sit matrix-family clustering,
competitor baselines, and fingerprint-driven Krylov preconditioner
recommendation with probe-and-switch execution.
"""

from .baselines import baseline_distance, baseline_distance_matrix, wasserstein1_hist
from .experiments import ExperimentConfig, ResultRow, run_experiment
from .fingerprint import (
    Fingerprint,
    StopDiagnostics,
    StoppingConfig,
    asf,
    asf_h,
    csf,
    load_fingerprints,
    multi_view_fingerprint,
    save_fingerprints,
)
from .generators import FamilySpec, TrapCaseSpec, add_noise, generate, generate_trap_corpus
from .krylov import (
    DEFAULT_PORTFOLIO,
    PreconditionerSpec,
    SolveReport,
    cg_solve,
    oracle_best,
    run_portfolio,
)
from .mmio import MatrixMarketError, load_matrix, read_matrix_market, write_matrix_market
from .moments import MomentSeries, ProbeSet, exact_moments, hutchinson_moments
from .phylogeny import (
    ClusteringResult,
    DistanceMatrix,
    ari,
    dendrogram_newick,
    hierarchical_cluster,
    pairwise_distance,
    silhouette,
)
from .recommender import (
    build_portfolio,
    probe_and_switch,
    recommend,
    regret_metrics,
)
from .scaling import ScaledOperator, estimate_endpoints, make_scaled
from .sparse import (
    DimensionError,
    SparseSymMatrix,
    SymmetryError,
    Transform,
    TransformError,
    apply_transform,
    symmetrize,
)
from .suitesparse import FetchError, fetch_suitesparse

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "FamilySpec",
    "FetchError",
    "Fingerprint",
    "MatrixMarketError",
    "MomentSeries",
    "PreconditionerSpec",
    "ProbeSet",
    "ResultRow",
    "ScaledOperator",
    "SolveReport",
    "SparseSymMatrix",
    "StopDiagnostics",
    "StoppingConfig",
    "SymmetryError",
    "TrapCaseSpec",
    "Transform",
    "TransformError",
    "DimensionError",
    "DistanceMatrix",
    "ClusteringResult",
    "DEFAULT_PORTFOLIO",
    "add_noise",
    "apply_transform",
    "ari",
    "asf",
    "asf_h",
    "baseline_distance",
    "baseline_distance_matrix",
    "build_portfolio",
    "cg_solve",
    "csf",
    "dendrogram_newick",
    "estimate_endpoints",
    "exact_moments",
    "fetch_suitesparse",
    "generate",
    "generate_trap_corpus",
    "hierarchical_cluster",
    "hutchinson_moments",
    "load_fingerprints",
    "load_matrix",
    "make_scaled",
    "multi_view_fingerprint",
    "oracle_best",
    "pairwise_distance",
    "probe_and_switch",
    "read_matrix_market",
    "recommend",
    "regret_metrics",
    "run_experiment",
    "run_portfolio",
    "save_fingerprints",
    "silhouette",
    "symmetrize",
    "write_matrix_market",
]
