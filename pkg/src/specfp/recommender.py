"""Preconditioner recommendation: portfolio database, nearest-neighbor
policies, probe-and-switch execution, and regret metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .fingerprint import Fingerprint, csf, from_record, to_record
from .krylov import (
    DEFAULT_PORTFOLIO,
    PreconditionerError,
    PreconditionerSpec,
    SolveReport,
    cg_solve,
    default_rhs,
    random_rhs,
    run_portfolio,
    select_best,
)
from .sparse import DimensionError, SparseSymMatrix

PHYLO_KNN = "phylo_knn"
FROBENIUS_1NN = "frobenius_1nn"
FROBENIUS_KNN = "frobenius_knn"

DEFAULT_FINGERPRINT_K = 5


@dataclass(frozen=True)
class PortfolioRecord:
    matrix_id: str
    fingerprint: Fingerprint
    reports: dict              # preconditioner name -> SolveReport
    oracle_best: str
    matrix: SparseSymMatrix | None = None


@dataclass(frozen=True)
class RegretSummary:
    policy: str
    success_rate: float
    extra_median: float
    extra_mean: float
    extra_p90: float


def build_portfolio(
    corpus: list[tuple[str, SparseSymMatrix]],
    portfolio=DEFAULT_PORTFOLIO,
    fingerprint_k: int = DEFAULT_FINGERPRINT_K,
    tol: float = 1e-8,
    maxit: int | None = None,
    keep_matrices: bool = True,
    rhs: str = "ones",
) -> list[PortfolioRecord]:
    """Run every portfolio member on every matrix and fingerprint each one.

    ``rhs`` picks the solve right-hand side: 'ones' (b = A*1) or 'random'
    (seeded unit Gaussian).
    """
    if rhs not in ("ones", "random"):
        raise ValueError(f"unknown rhs protocol: {rhs!r}")
    records = []
    for mid, mat in corpus:
        b = default_rhs(mat) if rhs == "ones" else random_rhs(mat)
        reports = run_portfolio(mat, portfolio, b=b, tol=tol, maxit=maxit, matrix_id=mid)
        fp = csf(mat, fingerprint_k, matrix_id=mid)
        records.append(
            PortfolioRecord(
                matrix_id=mid,
                fingerprint=fp,
                reports=reports,
                oracle_best=select_best(reports, portfolio),
                matrix=mat if keep_matrices else None,
            )
        )
    return records


def _vote_ranking(neighbors, distances, db_portfolio, records) -> list[str]:
    """Inverse-distance-weighted vote over neighbor oracle labels.

    Ties break by portfolio order; the remaining portfolio is appended by
    global win-rate over the whole database.
    """
    votes = {spec.name: 0.0 for spec in db_portfolio}
    for idx, dist in zip(neighbors, distances):
        votes[records[idx].oracle_best] += 1.0 / (dist + 1e-12)
    order = {spec.name: i for i, spec in enumerate(db_portfolio)}
    voted = sorted(
        [nm for nm, v in votes.items() if v > 0],
        key=lambda nm: (-votes[nm], order[nm]),
    )
    wins = {spec.name: 0 for spec in db_portfolio}
    for rec in records:
        wins[rec.oracle_best] += 1
    rest = sorted(
        [nm for nm in votes if votes[nm] == 0],
        key=lambda nm: (-wins[nm], order[nm]),
    )
    return voted + rest


def recommend(
    query: SparseSymMatrix,
    db: list[PortfolioRecord],
    policy: str = PHYLO_KNN,
    k: int = 3,
    portfolio=DEFAULT_PORTFOLIO,
    fingerprint_k: int = DEFAULT_FINGERPRINT_K,
) -> list[PreconditionerSpec]:
    """Ranked preconditioner list for a query matrix.

    The phylogenetic policy votes over cosine-nearest fingerprints; the
    Frobenius policies do the same with entrywise distance on the raw
    matrices (and therefore require matching sizes).
    """
    if not db:
        raise ValueError("empty portfolio database")
    if policy == PHYLO_KNN:
        q = csf(query, fingerprint_k).phi
        dists = np.array([1.0 - float(q @ rec.fingerprint.phi) for rec in db])
        kk = min(k, len(db))
    elif policy in (FROBENIUS_1NN, FROBENIUS_KNN):
        qd = query.to_dense()
        dists = []
        for rec in db:
            if rec.matrix is None:
                raise ValueError("Frobenius policies need stored matrices in the database")
            if rec.matrix.n != query.n:
                raise DimensionError(
                    f"Frobenius policy requires matching sizes: query {query.n}, "
                    f"database entry {rec.matrix.n}"
                )
            dists.append(np.linalg.norm(qd - rec.matrix.to_dense()))
        dists = np.asarray(dists)
        kk = 1 if policy == FROBENIUS_1NN else min(k, len(db))
    else:
        raise ValueError(f"unknown policy: {policy!r}")
    neighbors = np.argsort(dists, kind="stable")[:kk]
    ranking = _vote_ranking(neighbors, dists[neighbors], portfolio, db)
    by_name = {spec.name: spec for spec in portfolio}
    return [by_name[nm] for nm in ranking]


@dataclass(frozen=True)
class ProbeDecision:
    preconditioner: str
    rate: float
    switched: bool
    probe_iterations: int


@dataclass(frozen=True)
class SwitchTrace:
    decisions: list = field(default_factory=list)
    total_iterations: int = 0
    switches: int = 0


def probe_and_switch(
    a: SparseSymMatrix,
    b: np.ndarray,
    ranked: list[PreconditionerSpec],
    probe_iters: int = 10,
    switch_factor: float = 0.9,
    tol: float = 1e-8,
    maxit: int | None = None,
) -> tuple[SolveReport, SwitchTrace]:
    """Probe candidates in ranked order, switching away from slow ones.

    A probe of ``probe_iters`` CG steps measures the geometric residual
    reduction rate (||r_probe||/||r_0||)^(1/probe_iters); a rate above
    ``switch_factor`` declares a trap and moves to the next candidate with a
    fresh solve. Abandoned probe iterations count toward the cumulative total.
    """
    if not ranked:
        raise ValueError("ranked candidate list is empty")
    if maxit is None:
        maxit = 10 * a.n
    decisions = []
    wasted = 0
    for pos, spec in enumerate(ranked):
        try:
            _, probe = cg_solve(a, b, spec, tol=tol, maxit=probe_iters)
        except PreconditionerError:
            # unbuildable preconditioner: treat as an immediate trap
            decisions.append(ProbeDecision(spec.name, np.inf, True, 0))
            if pos == len(ranked) - 1:
                report = SolveReport(
                    iterations=wasted, converged=False,
                    final_relative_residual=np.inf,
                    residual_history=np.asarray([np.inf]),
                    preconditioner=spec, breakdown=True,
                )
                return report, SwitchTrace(decisions, wasted,
                                           sum(d.switched for d in decisions))
            continue
        if probe.converged:
            decisions.append(ProbeDecision(spec.name, 0.0, False, probe.iterations))
            total = wasted + probe.iterations
            trace = SwitchTrace(decisions, total, sum(d.switched for d in decisions))
            return probe, trace
        r0 = probe.residual_history[0]
        rp = probe.residual_history[-1]
        rate = (rp / r0) ** (1.0 / max(probe.iterations, 1)) if r0 > 0 else 0.0
        is_last = pos == len(ranked) - 1
        # switch_factor >= 1.0 disables switching entirely (plain CG on ranked[0])
        if rate > switch_factor and switch_factor < 1.0 and not is_last:
            decisions.append(ProbeDecision(spec.name, float(rate), True, probe.iterations))
            wasted += probe.iterations
            continue
        # commit: continue this candidate to completion (deterministic CG,
        # so a fresh full solve reproduces the probe's first steps)
        _, full = cg_solve(a, b, spec, tol=tol, maxit=maxit)
        decisions.append(ProbeDecision(spec.name, float(rate), False, probe.iterations))
        total = wasted + full.iterations
        trace = SwitchTrace(decisions, total, sum(d.switched for d in decisions))
        return full, trace
    # unreachable: the last candidate always commits
    raise AssertionError("probe loop exited without committing")


def regret_metrics(
    policy_iters: dict[str, int],
    policy_converged: dict[str, bool],
    oracle_iters: dict[str, int],
    policy: str = "",
) -> RegretSummary:
    """Success rate and extra-iteration statistics for one policy.

    extra = max(policy - oracle, 0) per matrix; p90 is the nearest-rank 90th
    percentile. Entries must align by matrix id.
    """
    if set(policy_iters) != set(oracle_iters):
        raise ValueError("policy and oracle reports are not aligned by matrix id")
    ids = sorted(policy_iters)
    extras = np.array(
        [max(policy_iters[i] - oracle_iters[i], 0) for i in ids], dtype=np.float64
    )
    success = np.mean([bool(policy_converged[i]) for i in ids])
    rank = max(int(np.ceil(0.9 * len(ids))) - 1, 0)
    p90 = float(np.sort(extras)[rank])
    return RegretSummary(
        policy=policy,
        success_rate=float(success),
        extra_median=float(np.median(extras)),
        extra_mean=float(extras.mean()),
        extra_p90=p90,
    )


# -- persistence -------------------------------------------------------------

def save_portfolio(records: list[PortfolioRecord], path) -> None:
    """Database as JSON lines; fingerprints inline, matrices omitted."""
    with open(path, "w") as fh:
        for rec in records:
            row = {
                "matrix_id": rec.matrix_id,
                "oracle_best": rec.oracle_best,
                "fingerprint": json.loads(to_record(rec.fingerprint)),
                "reports": {
                    nm: {
                        "iterations": int(r.iterations),
                        "converged": bool(r.converged),
                        "final_res": float(r.final_relative_residual),
                    }
                    for nm, r in rec.reports.items()
                },
            }
            fh.write(json.dumps(row) + "\n")


def load_portfolio(path) -> list[PortfolioRecord]:
    """Load a persisted database (without matrices; Frobenius policies need
    the original matrices re-attached by the caller)."""
    records = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            fp = from_record(json.dumps(row["fingerprint"]))
            reports = {
                nm: SolveReport(
                    iterations=r["iterations"],
                    converged=r["converged"],
                    final_relative_residual=r["final_res"],
                    residual_history=np.asarray([r["final_res"]]),
                    preconditioner=None,
                    matrix_id=row["matrix_id"],
                )
                for nm, r in row["reports"].items()
            }
            records.append(
                PortfolioRecord(
                    matrix_id=row["matrix_id"],
                    fingerprint=fp,
                    reports=reports,
                    oracle_best=row["oracle_best"],
                )
            )
    return records


def solve_report_csv(reports: list[SolveReport]) -> str:
    lines = ["matrix_id,pc,iters,converged,final_res"]
    for r in reports:
        pc = r.preconditioner.name if r.preconditioner else ""
        lines.append(
            f"{r.matrix_id},{pc},{r.iterations},{int(r.converged)},"
            f"{r.final_relative_residual:.6g}"
        )
    return "\n".join(lines) + "\n"
