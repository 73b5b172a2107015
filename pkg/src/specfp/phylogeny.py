"""Pairwise fingerprint distances, agglomerative clustering, and quality metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fingerprint import Fingerprint


@dataclass(frozen=True)
class DistanceMatrix:
    ids: list
    d: np.ndarray
    metric: str

    def __post_init__(self):
        m = np.asarray(self.d, dtype=np.float64)
        if m.shape != (len(self.ids), len(self.ids)):
            raise ValueError("distance matrix shape does not match ids")
        if np.any(np.isnan(m)):
            raise ValueError("distance matrix contains NaN")
        # clamp tiny negative roundoff
        m = np.where(m < 0, np.where(m > -1e-15, 0.0, m), m)
        if np.any(m < 0):
            raise ValueError("negative distances")
        object.__setattr__(self, "d", m)


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    k: int
    merges: list = field(default_factory=list)  # (height, members_a, members_b) in merge order
    ids: list = field(default_factory=list)


def _padded_matrix(fps: list[Fingerprint], pad_mode: str) -> np.ndarray:
    ks = [fp.K for fp in fps]
    if pad_mode == "zero":
        kmax = max(ks)
        rows = []
        for fp in fps:
            v = np.zeros(kmax)
            v[: fp.K] = fp.phi
            nrm = np.linalg.norm(v)
            rows.append(v / nrm if nrm > 0 else v)
        return np.vstack(rows)
    if pad_mode == "truncate":
        kmin = min(ks)
        rows = []
        for fp in fps:
            v = fp.phi[:kmin]
            nrm = np.linalg.norm(v)
            rows.append(v / nrm if nrm > 0 else v)
        return np.vstack(rows)
    raise ValueError(f"unknown pad mode: {pad_mode!r}")


def pairwise_distance(
    fps: list[Fingerprint],
    metric: str = "euclidean",
    pad_mode: str = "zero",
    labels=None,
    ridge: float = 1e-8,
) -> DistanceMatrix:
    """Distance matrix over fingerprints.

    Unequal lengths are zero-padded to the maximum K and re-normalized
    (default) or truncated to the minimum K. The whitened metric needs class
    labels to pool a within-class covariance (training-time only).
    """
    if len(fps) < 2:
        raise ValueError("need at least two fingerprints")
    x = _padded_matrix(fps, pad_mode)
    if np.any(np.isnan(x)):
        raise ValueError("NaN in fingerprints")
    ids = [fp.matrix_id if fp.matrix_id is not None else str(i) for i, fp in enumerate(fps)]
    if metric == "euclidean":
        g = x @ x.T
        sq = np.diag(g)
        d2 = sq[:, None] + sq[None, :] - 2 * g
        d = np.sqrt(np.maximum(d2, 0.0))
    elif metric == "cosine":
        d = 1.0 - x @ x.T
    elif metric == "whitened":
        if labels is None:
            raise ValueError("whitened metric requires class labels")
        labels = np.asarray(labels)
        dim = x.shape[1]
        cov = np.zeros((dim, dim))
        count = 0
        for lab in np.unique(labels):
            xi = x[labels == lab]
            if len(xi) > 1:
                cov += (len(xi) - 1) * np.cov(xi, rowvar=False)
                count += len(xi) - 1
        cov = cov / max(count, 1) + ridge * np.eye(dim)
        w = np.linalg.cholesky(np.linalg.inv(cov))
        xw = x @ w
        g = xw @ xw.T
        sq = np.diag(g)
        d = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * g, 0.0))
    else:
        raise ValueError(f"unknown metric: {metric!r}")
    np.fill_diagonal(d, 0.0)
    d = 0.5 * (d + d.T)
    return DistanceMatrix(ids=ids, d=d, metric=metric)


def average_distance(mats: list[DistanceMatrix]) -> DistanceMatrix:
    """Late fusion: elementwise mean of per-view distance matrices."""
    base = mats[0]
    acc = np.mean([m.d for m in mats], axis=0)
    return DistanceMatrix(ids=base.ids, d=acc, metric=f"avg[{base.metric}]")


def hierarchical_cluster(
    dm: DistanceMatrix, k: int, linkage: str = "average"
) -> ClusteringResult:
    """Agglomerative clustering cut at k clusters.

    Merge ties are broken by the lowest (i, j) index pair over the original
    item order, which makes the result deterministic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = len(dm.ids)
    if k > m:
        raise ValueError("k exceeds the number of items")
    if linkage not in ("average", "single", "complete"):
        raise ValueError(f"unknown linkage: {linkage!r}")

    # active clusters: id -> sorted member list; distances between clusters
    clusters: dict[int, list[int]] = {i: [i] for i in range(m)}
    dist: dict[tuple[int, int], float] = {}
    for i in range(m):
        for j in range(i + 1, m):
            dist[(i, j)] = dm.d[i, j]
    merges = []
    next_id = m
    node_of: dict[int, int] = {i: i for i in range(m)}  # cluster id -> tree node id
    while len(clusters) > max(k, 1):
        # pick the closest pair; ties by smallest (min-member, min-member)
        best = None
        best_key = None
        for (i, j), v in dist.items():
            mi, mj = clusters[i][0], clusters[j][0]
            key = (v, min(mi, mj), max(mi, mj))
            if best_key is None or key < best_key:
                best_key = key
                best = (i, j)
        i, j = best
        h = dist[(i, j)]
        merges.append((h, list(clusters[i]), list(clusters[j])))
        merged = sorted(clusters[i] + clusters[j])
        ni, nj = len(clusters[i]), len(clusters[j])
        del clusters[i], clusters[j]
        new_dists = {}
        for c in clusters:
            a, b = (min(c, i), max(c, i)), (min(c, j), max(c, j))
            di, dj = dist[a], dist[b]
            if linkage == "single":
                nd = min(di, dj)
            elif linkage == "complete":
                nd = max(di, dj)
            else:
                nc_i, nc_j = ni, nj
                nd = (nc_i * di + nc_j * dj) / (nc_i + nc_j)
            new_dists[c] = nd
        dist = {
            (a, b): v
            for (a, b), v in dist.items()
            if a not in (i, j) and b not in (i, j)
        }
        cid = next_id
        next_id += 1
        clusters[cid] = merged
        for c, v in new_dists.items():
            dist[(min(c, cid), max(c, cid))] = v

    labels = np.empty(m, dtype=np.int64)
    for rank, cid in enumerate(sorted(clusters, key=lambda c: clusters[c][0])):
        for member in clusters[cid]:
            labels[member] = rank
    return ClusteringResult(labels=labels, k=len(clusters), merges=merges, ids=list(dm.ids))


def dendrogram_newick(result: ClusteringResult) -> str:
    """Newick tree of the full merge history, heights as branch lengths."""
    ids = result.ids or [str(i) for i in range(len(result.labels))]
    node: dict[tuple, tuple] = {}  # frozen member tuple -> (newick, height)
    for i, name in enumerate(ids):
        node[(i,)] = (str(name), 0.0)
    for h, mem_a, mem_b in result.merges:
        ka, kb = tuple(sorted(mem_a)), tuple(sorted(mem_b))
        (sa, ha), (sb, hb) = node.pop(ka), node.pop(kb)
        half = h / 2.0
        s = f"({sa}:{max(half - ha, 0.0):.10g},{sb}:{max(half - hb, 0.0):.10g})"
        node[tuple(sorted(mem_a + mem_b))] = (s, half)
    parts = [s for s, _ in node.values()]
    if len(parts) == 1:
        return parts[0] + ";"
    return "(" + ",".join(parts) + ");"


def ari(labels_true, labels_pred) -> float:
    """Adjusted Rand index by the pair-counting contingency formula."""
    a = np.asarray(labels_true)
    b = np.asarray(labels_pred)
    if a.shape != b.shape:
        raise ValueError(f"label length mismatch: {a.shape} vs {b.shape}")
    n = len(a)
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    cont = np.zeros((len(ua), len(ub)), dtype=np.int64)
    np.add.at(cont, (ia, ib), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(cont).sum()
    sum_a = comb2(cont.sum(axis=1)).sum()
    sum_b = comb2(cont.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def silhouette(dm: DistanceMatrix, labels) -> float:
    """Mean silhouette from a precomputed distance matrix.

    Singleton clusters score 0 by convention; requires at least 2 clusters.
    """
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise ValueError("silhouette requires at least 2 clusters")
    d = dm.d
    scores = np.zeros(len(labels))
    for i in range(len(labels)):
        same = labels == labels[i]
        n_same = same.sum()
        if n_same <= 1:
            scores[i] = 0.0
            continue
        a_i = d[i, same].sum() / (n_same - 1)
        b_i = np.inf
        for lab in uniq:
            if lab == labels[i]:
                continue
            mask = labels == lab
            b_i = min(b_i, d[i, mask].mean())
        denom = max(a_i, b_i)
        scores[i] = 0.0 if denom == 0 else (b_i - a_i) / denom
    return float(scores.mean())


def distance_matrix_csv(dm: DistanceMatrix) -> str:
    lines = ["," + ",".join(str(i) for i in dm.ids)]
    for i, row_id in enumerate(dm.ids):
        lines.append(str(row_id) + "," + ",".join(f"{v:.12g}" for v in dm.d[i]))
    return "\n".join(lines) + "\n"
