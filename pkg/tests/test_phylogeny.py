import numpy as np
import pytest
from sklearn.cluster import AgglomerativeClustering
from sklearn.metrics import adjusted_rand_score, silhouette_score

from specfp.fingerprint import Fingerprint
from specfp.phylogeny import (
    DistanceMatrix,
    ari,
    average_distance,
    dendrogram_newick,
    distance_matrix_csv,
    hierarchical_cluster,
    pairwise_distance,
    silhouette,
)


def fp(vec, mid=None):
    v = np.asarray(vec, dtype=np.float64)
    return Fingerprint(phi=v / np.linalg.norm(v), method="CSF", eta=0.06, w0=1.0,
                       matrix_id=mid)


def random_fps(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    return [fp(rng.standard_normal(dim), f"m{i}") for i in range(n)]


class TestDistances:
    def test_identical_zero(self):
        d = pairwise_distance([fp([1, 2]), fp([1, 2])]).d
        assert d[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_orthonormal_geometry(self):
        fps = [fp([1, 0]), fp([0, 1])]
        assert pairwise_distance(fps, "euclidean").d[0, 1] == pytest.approx(np.sqrt(2))
        assert pairwise_distance(fps, "cosine").d[0, 1] == pytest.approx(1.0)

    def test_zero_pad_renormalizes(self):
        fps = [fp([1.0, 1.0]), fp([1.0, 1.0, 1.0])]
        dm = pairwise_distance(fps)
        a = np.array([1, 1, 0]) / np.sqrt(2)
        b = np.ones(3) / np.sqrt(3)
        assert dm.d[0, 1] == pytest.approx(np.linalg.norm(a - b))

    def test_truncate_mode(self):
        fps = [fp([1.0, 0.0]), fp([1.0, 0.0, 5.0])]
        dm = pairwise_distance(fps, pad_mode="truncate")
        assert dm.d[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_whitened_needs_labels(self):
        with pytest.raises(ValueError):
            pairwise_distance(random_fps(4, 3), metric="whitened")

    def test_whitened_shrinks_within_class_axis(self):
        # within-class scatter lies along e3 for both classes while the class
        # separation is e1 vs e2, so whitening should shrink within distances
        # relative to across distances
        rng = np.random.default_rng(0)
        labels = [0] * 10 + [1] * 10
        fps = []
        for lab in labels:
            base = np.array([1.0, 0, 0]) if lab == 0 else np.array([0, 1.0, 0])
            fps.append(fp(base + np.array([0, 0, rng.normal(0, 0.1)])))
        plain = pairwise_distance(fps, "euclidean")
        white = pairwise_distance(fps, "whitened", labels=labels)
        def ratio(dm):
            within = dm.d[:10, :10][np.triu_indices(10, 1)].mean()
            across = dm.d[:10, 10:].mean()
            return across / within
        assert ratio(white) > ratio(plain)

    def test_average_distance(self):
        a = pairwise_distance(random_fps(4, 3, 1))
        b = pairwise_distance(random_fps(4, 3, 2))
        np.testing.assert_allclose(average_distance([a, b]).d, (a.d + b.d) / 2)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            DistanceMatrix(ids=["a"], d=np.zeros((2, 2)), metric="euclidean")
        with pytest.raises(ValueError):
            DistanceMatrix(ids=["a", "b"], d=np.full((2, 2), np.nan), metric="x")


class TestClustering:
    def test_matches_sklearn_average_linkage(self):
        for seed in range(5):
            fps = random_fps(14, 4, seed)
            dm = pairwise_distance(fps)
            ours = hierarchical_cluster(dm, 3).labels
            ref = AgglomerativeClustering(
                n_clusters=3, metric="precomputed", linkage="average"
            ).fit_predict(dm.d)
            assert ari(ours, ref) == pytest.approx(1.0)

    @pytest.mark.parametrize("linkage", ["single", "complete"])
    def test_other_linkages_match_sklearn(self, linkage):
        fps = random_fps(12, 3, 7)
        dm = pairwise_distance(fps)
        ours = hierarchical_cluster(dm, 4, linkage=linkage).labels
        ref = AgglomerativeClustering(
            n_clusters=4, metric="precomputed", linkage=linkage
        ).fit_predict(dm.d)
        assert ari(ours, ref) == pytest.approx(1.0)

    def test_deterministic_under_ties(self):
        # all-equal distances: ties break on (height, min member, max member),
        # so item 0's cluster keeps absorbing the lowest-index remainder
        dm = DistanceMatrix(ids=list("abcd"), d=np.ones((4, 4)) - np.eye(4), metric="x")
        res = hierarchical_cluster(dm, 2)
        assert res.merges[0][1:] == ([0], [1])
        assert sorted(res.merges[1][1] + res.merges[1][2]) == [0, 1, 2]
        assert hierarchical_cluster(dm, 2).merges == res.merges

    def test_k_bounds(self):
        dm = pairwise_distance(random_fps(5, 2))
        with pytest.raises(ValueError):
            hierarchical_cluster(dm, 0)
        with pytest.raises(ValueError):
            hierarchical_cluster(dm, 6)

    def test_newick_well_formed(self):
        dm = pairwise_distance(random_fps(6, 3, 3))
        tree = dendrogram_newick(hierarchical_cluster(dm, 1))
        assert tree.endswith(";")
        assert tree.count("(") == tree.count(")") == 5
        for mid in dm.ids:
            assert mid in tree


class TestMetrics:
    def test_ari_hand_values(self):
        assert ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
        assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
        assert ari([0, 1, 2, 3], [0, 0, 0, 0]) == pytest.approx(0.0)

    def test_ari_matches_sklearn(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            a = rng.integers(0, 4, 30)
            b = rng.integers(0, 3, 30)
            assert ari(a, b) == pytest.approx(adjusted_rand_score(a, b))

    def test_ari_length_mismatch(self):
        with pytest.raises(ValueError):
            ari([0, 1], [0, 1, 2])

    def test_silhouette_matches_sklearn(self):
        fps = random_fps(20, 3, 5)
        dm = pairwise_distance(fps)
        labels = np.random.default_rng(1).integers(0, 3, 20)
        ref = silhouette_score(dm.d, labels, metric="precomputed")
        assert silhouette(dm, labels) == pytest.approx(ref)

    def test_silhouette_singleton_zero(self):
        dm = pairwise_distance(random_fps(4, 2, 6))
        labels = [0, 0, 0, 1]
        scores_ref = silhouette(dm, labels)
        assert np.isfinite(scores_ref)

    def test_silhouette_needs_two_clusters(self):
        dm = pairwise_distance(random_fps(4, 2))
        with pytest.raises(ValueError):
            silhouette(dm, [0, 0, 0, 0])

    def test_csv_output(self):
        dm = pairwise_distance(random_fps(3, 2, 8))
        csv = distance_matrix_csv(dm)
        lines = csv.strip().splitlines()
        assert len(lines) == 4
        assert lines[0].startswith(",m0,m1,m2")
