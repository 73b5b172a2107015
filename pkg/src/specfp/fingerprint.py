"""L2-normalized spectral fingerprints.

Three variants: a fixed-length fingerprint from the first K damped Chebyshev
trace moments; an adaptive variant that picks the length with a dual stopping
rule (energy-tail + Hankel low-rank); and the adaptive variant on Hutchinson
sketches, where the energy rule is inflated by a standard-error guard.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .moments import (
    DEFAULT_ETA,
    EXACT_EIGEN,
    MomentSeries,
    ProbeSet,
    exact_moments,
    hutchinson_moments,
)
from .scaling import RADIUS, ScaledOperator, ScaleParams, make_scaled
from .sparse import SparseSymMatrix

CSF = "CSF"
ASF = "ASF"
ASF_H = "ASF_H"


@dataclass(frozen=True)
class Fingerprint:
    phi: np.ndarray
    method: str
    eta: float
    w0: float
    p: int | None = None
    matrix_id: str | None = None

    @property
    def K(self) -> int:
        return len(self.phi)


@dataclass(frozen=True)
class StoppingConfig:
    K_min: int = 3
    K_max: int = 64
    tau_e: float = 1e-3
    tau_h: float = 1e-3
    w: int = 2
    gamma: float = 2.0
    eps: float = 1e-12
    lambda_tik: float = 1e-10

    def __post_init__(self):
        if not (1 <= self.K_min <= self.K_max):
            raise ValueError("need 1 <= K_min <= K_max")
        if not (0.0 < self.tau_e < 1.0):
            raise ValueError("tau_e must be in (0,1)")
        if self.w < 1 or self.gamma < 0 or self.lambda_tik < 0:
            raise ValueError("invalid stopping config")


@dataclass(frozen=True)
class StopDiagnostics:
    K_star: int
    energy_ratios: dict = field(default_factory=dict)   # k -> rho_k
    hankel_ratios: dict = field(default_factory=dict)   # k -> r_H
    rule_fired: dict = field(default_factory=dict)      # k -> "energy"/"hankel"/both/None
    hit_trace: dict = field(default_factory=dict)       # k -> consecutive-hit counter


def _normalize(d: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(d)
    if nrm == 0.0:
        raise ValueError("cannot normalize an all-zero moment vector (set w0 != 0)")
    return d / nrm


def scaled_operator_for(a: SparseSymMatrix, scale: bool = True) -> ScaledOperator:
    """Normalization policy for fingerprinting.

    Symmetric inputs use the affine map. Nonsymmetric inputs with a (near-)real
    spectrum take the affine map on dense endpoints at desk scale; otherwise
    the radius fallback. ``scale=False`` is the diagnostic mode that skips
    normalization entirely (the operator is A itself).
    """
    if not scale:
        return ScaledOperator(a, ScaleParams(RADIUS, 0.0, 1.0))
    if a.is_symmetric():
        return make_scaled(a)
    if a.n <= 2048:
        try:
            return make_scaled(a, mode_hint="affine")
        except ValueError:
            pass
    return make_scaled(a, mode_hint="radius")


def _moments_for(
    op: ScaledOperator,
    K: int,
    eta: float,
    w0: float | None,
    estimator: str,
    p: int,
    seed: int,
    with_se: bool = False,
) -> MomentSeries:
    if estimator == "exact":
        return exact_moments(op, K, eta, w0, method=EXACT_EIGEN)
    if estimator == "hutchinson":
        return hutchinson_moments(op, K, eta, w0, ProbeSet(p, seed=seed), with_se=with_se)
    raise ValueError(f"unknown estimator: {estimator!r}")


def csf(
    a: SparseSymMatrix,
    K: int,
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    estimator: str = "exact",
    p: int = 64,
    seed: int = 0,
    scale: bool = True,
    matrix_id: str | None = None,
) -> Fingerprint:
    """Fixed-K fingerprint: the first K damped moments, L2-normalized."""
    if K < 1:
        raise ValueError("K must be >= 1")
    op = scaled_operator_for(a, scale)
    series = _moments_for(op, K, eta, w0, estimator, p, seed)
    return Fingerprint(
        phi=_normalize(series.d),
        method=CSF,
        eta=eta,
        w0=series.w0,
        p=p if estimator == "hutchinson" else None,
        matrix_id=matrix_id,
    )


def energy_ratio(d: np.ndarray, eps: float = 1e-12) -> float:
    """rho_k = d_k^2 / (sum_{j<=k} d_j^2 + eps) for the last entry of d."""
    d = np.asarray(d, dtype=np.float64)
    return float(d[-1] ** 2 / (np.sum(d**2) + eps))


def hankel_ratio(d: np.ndarray, lambda_tik: float = 1e-10) -> float:
    """sigma_min/sigma_max of the Tikhonov-stabilized Hankel of the sequence.

    The sequence is L2-normalized first; the Hankel side is floor((k+1)/2)
    with H_ij = d_{i+j}, and sqrt(lambda)*I is stacked below before the SVD.
    """
    d = np.asarray(d, dtype=np.float64)
    nrm = np.linalg.norm(d)
    if nrm > 0:
        d = d / nrm
    n_h = max(len(d) // 2, 1)
    h = np.empty((n_h, n_h))
    for i in range(n_h):
        h[i] = d[i : i + n_h]
    stacked = np.vstack([h, np.sqrt(lambda_tik) * np.eye(n_h)])
    s = np.linalg.svd(stacked, compute_uv=False)
    if s[0] == 0.0:
        return 1.0
    return float(s[-1] / s[0])


def _run_stopping(
    d_full: np.ndarray,
    cfg: StoppingConfig,
    se: np.ndarray | None = None,
) -> StopDiagnostics:
    """Dual stopping rule over a precomputed moment sequence.

    The hit at step k is (rho_k < tau_e or r_H < tau_h) and k+1 >= K_min; with
    sketched moments the energy threshold is inflated to
    tau_e * (1 + gamma * relSE_k). The first k with w consecutive hits stops
    at K* = k+1; otherwise K* = K_max.
    """
    K_max = min(cfg.K_max, len(d_full))
    energy_ratios: dict = {}
    hankel_ratios: dict = {}
    rule_fired: dict = {}
    hit_trace: dict = {}
    h = 0
    k_star = K_max
    for k in range(2, K_max):
        dk = d_full[: k + 1]
        e_k = float(np.sum(dk**2))
        rho_k = dk[-1] ** 2 / (e_k + cfg.eps)
        r_h = hankel_ratio(dk, cfg.lambda_tik)
        energy_ratios[k] = float(rho_k)
        hankel_ratios[k] = r_h
        tau = cfg.tau_e
        if se is not None:
            rel_se = se[k] / (abs(d_full[k]) + cfg.eps)
            tau = cfg.tau_e * (1.0 + cfg.gamma * rel_se)
        energy_hit = rho_k < tau
        hankel_hit = r_h < cfg.tau_h
        hit = (energy_hit or hankel_hit) and (k + 1 >= cfg.K_min)
        if hit:
            fired = []
            if energy_hit:
                fired.append("energy")
            if hankel_hit:
                fired.append("hankel")
            rule_fired[k] = "+".join(fired)
            h += 1
        else:
            rule_fired[k] = None
            h = 0
        hit_trace[k] = h
        if h >= cfg.w:
            k_star = k + 1
            break
    k_star = max(k_star, cfg.K_min)
    return StopDiagnostics(
        K_star=k_star,
        energy_ratios=energy_ratios,
        hankel_ratios=hankel_ratios,
        rule_fired=rule_fired,
        hit_trace=hit_trace,
    )


def asf(
    a: SparseSymMatrix,
    cfg: StoppingConfig = StoppingConfig(),
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    scale: bool = True,
    matrix_id: str | None = None,
) -> tuple[Fingerprint, StopDiagnostics]:
    """Adaptive fingerprint with exact traces."""
    op = scaled_operator_for(a, scale)
    series = exact_moments(op, cfg.K_max, eta, w0)
    diag = _run_stopping(series.d, cfg)
    phi = _normalize(series.d[: diag.K_star])
    return (
        Fingerprint(phi=phi, method=ASF, eta=eta, w0=series.w0, matrix_id=matrix_id),
        diag,
    )


def asf_h(
    a: SparseSymMatrix,
    cfg: StoppingConfig = StoppingConfig(),
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    probes: ProbeSet = ProbeSet(64),
    scale: bool = True,
    matrix_id: str | None = None,
) -> tuple[Fingerprint, StopDiagnostics]:
    """Adaptive fingerprint with Hutchinson sketches and the SE guard."""
    if probes.p < 2:
        raise ValueError("adaptive sketched fingerprints require p >= 2")
    op = scaled_operator_for(a, scale)
    series = hutchinson_moments(op, cfg.K_max, eta, w0, probes, with_se=True)
    diag = _run_stopping(series.d, cfg, se=series.se)
    phi = _normalize(series.d[: diag.K_star])
    return (
        Fingerprint(
            phi=phi, method=ASF_H, eta=eta, w0=series.w0, p=probes.p, matrix_id=matrix_id
        ),
        diag,
    )


def multi_view_fingerprint(
    views: list[SparseSymMatrix],
    method: str = CSF,
    K: int = 5,
    cfg: StoppingConfig = StoppingConfig(),
    eta: float = DEFAULT_ETA,
    w0: float | None = None,
    mode: str = "concat",
    matrix_id: str | None = None,
):
    """Fuse fingerprints of several views of the same object.

    'concat' concatenates per-view fingerprints and re-normalizes; 'late'
    returns the per-view fingerprints for downstream distance averaging.
    """
    if not views:
        raise ValueError("need at least one view")
    per_view = []
    for v in views:
        if method == CSF:
            per_view.append(csf(v, K, eta, w0, matrix_id=matrix_id))
        elif method == ASF:
            per_view.append(asf(v, cfg, eta, w0, matrix_id=matrix_id)[0])
        else:
            raise ValueError(f"unsupported multi-view method: {method!r}")
    if mode == "late":
        return per_view
    if mode != "concat":
        raise ValueError(f"unknown fusion mode: {mode!r}")
    phi = _normalize(np.concatenate([fp.phi for fp in per_view]))
    return Fingerprint(phi=phi, method=method, eta=eta, w0=per_view[0].w0, matrix_id=matrix_id)


# -- serialization ----------------------------------------------------------

def to_record(fp: Fingerprint) -> str:
    """One-line JSON record with a stable field order, for diffable files."""
    rec = {
        "matrix_id": fp.matrix_id,
        "method": fp.method,
        "K": fp.K,
        "eta": fp.eta,
        "w0": fp.w0,
        "p": fp.p,
        "phi": [float(x) for x in fp.phi],
    }
    return json.dumps(rec, sort_keys=False)


def from_record(line: str) -> Fingerprint:
    rec = json.loads(line)
    return Fingerprint(
        phi=np.asarray(rec["phi"], dtype=np.float64),
        method=rec["method"],
        eta=rec["eta"],
        w0=rec["w0"],
        p=rec["p"],
        matrix_id=rec["matrix_id"],
    )


def save_fingerprints(fps, path) -> None:
    with open(path, "w") as fh:
        for fp in fps:
            fh.write(to_record(fp) + "\n")


def load_fingerprints(path) -> list[Fingerprint]:
    with open(path) as fh:
        return [from_record(line) for line in fh if line.strip()]
